from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_banded

from conftest import table1_scenarios, tone_trajectory
from ptrs_lab.allocation import NrDistributed, UniformInterleaved, build_index_map
from ptrs_lab.harness import run_chain
from ptrs_lab.metrics import evm_db, rms_phase_error
from ptrs_lab.modem import (Anchors, apply_channel, block_anchor_positions, correct_phase,
                            group_anchor_values, interpolate_sinc, interpolate_spline,
                            ptrs_sequence, qam_demap, qam_map, qam_max_magnitude, random_symbols,
                            rx_block, rx_nr, tx_block, tx_nr)
from ptrs_lab.phase_noise import PhaseTrajectory
from ptrs_lab.signal import FrameConfig, remove_cp


def natural_spline_oracle(x, y, t):
    """Natural cubic spline by an explicit tridiagonal solve for the knot second derivatives."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    n = x.size
    h = np.diff(x)
    ab = np.zeros((3, n))
    rhs = np.zeros(n)
    ab[1, 0] = ab[1, -1] = 1.0
    for i in range(1, n - 1):
        ab[0, i + 1] = h[i] / 6
        ab[1, i] = (h[i - 1] + h[i]) / 3
        ab[2, i - 1] = h[i - 1] / 6
        rhs[i] = (y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]
    M = solve_banded((1, 1), ab, rhs)
    j = np.clip(np.searchsorted(x, t, side="right") - 1, 0, n - 2)
    a, b = x[j + 1] - t, t - x[j]
    hj = h[j]
    return (M[j] * a ** 3 / (6 * hj) + M[j + 1] * b ** 3 / (6 * hj)
            + (y[j] / hj - M[j] * hj / 6) * a + (y[j + 1] / hj - M[j + 1] * hj / 6) * b)


def rng_bits(seed, n):
    return np.random.default_rng(seed).integers(0, 2, n)


class TestQam:
    def test_qpsk_corner(self):
        assert qam_map([0, 0], 4)[0] == pytest.approx((1 + 1j) / np.sqrt(2))

    @pytest.mark.parametrize("order", [4, 16, 64])
    def test_roundtrip(self, order):
        bits = rng_bits(order, 6 * 200)
        np.testing.assert_array_equal(qam_demap(qam_map(bits, order), order), bits)

    @pytest.mark.parametrize("order", [4, 16, 64])
    def test_unit_power_exhaustive(self, order):
        k = int(np.log2(order))
        bits = ((np.arange(order)[:, None] >> np.arange(k)[None, :]) & 1).ravel()
        pts = qam_map(bits, order)
        assert np.unique(np.round(pts, 12)).size == order
        assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("order", [16, 64])
    def test_gray_neighbours(self, order):
        # adjacent points along an axis differ in exactly one bit
        k = int(np.log2(order))
        L = int(np.sqrt(order))
        bits = ((np.arange(order)[:, None] >> np.arange(k)[None, :]) & 1)
        pts = qam_map(bits.ravel(), order)
        step = 2 / np.sqrt(2 * (L * L - 1) / 3)
        for i in range(order):
            for j in range(order):
                if abs(abs(pts[i] - pts[j]) - step) < 1e-9:
                    assert np.sum(bits[i] != bits[j]) == 1

    def test_bad_bit_count(self):
        with pytest.raises(ValueError):
            qam_map([0, 1, 1], 16)

    def test_max_magnitude(self):
        assert qam_max_magnitude(4) == pytest.approx(1.0)
        assert qam_max_magnitude(64) == pytest.approx(7 * np.sqrt(2 / 42))


class TestTxNr:
    cfg = FrameConfig(256, 12, 4)

    def test_single_pulse(self):
        imap = build_index_map(UniformInterleaved(3, 16))
        ptrs = np.zeros(4, complex)
        ptrs[1] = 1.0
        x = tx_nr(np.zeros(12), ptrs, imap, self.cfg).time_signal.samples
        k = imap.ptrs_slots[1]
        n, m = 256, 16
        assert np.argmax(np.abs(x)) == k * n // m
        # circularly shifted periodic sinc (Dirichlet kernel) of the occupied band
        grid = np.zeros(n, complex)
        grid[:m] = np.exp(-2j * np.pi * np.arange(m) * k / m) / np.sqrt(m)
        ref = np.fft.ifft(grid, norm="ortho")
        np.testing.assert_allclose(x, ref, atol=1e-14)

    def test_superposition(self):
        imap = build_index_map(UniformInterleaved(3, 16))
        rng = np.random.default_rng(0)
        d, p = random_symbols(rng, 12, 16), ptrs_sequence(rng, 4, 1.0)
        a = tx_nr(d, np.zeros(4), imap, self.cfg).time_signal.samples
        b = tx_nr(np.zeros(12), p, imap, self.cfg).time_signal.samples
        np.testing.assert_allclose(a + b, tx_nr(d, p, imap, self.cfg).time_signal.samples, atol=1e-12)

    def test_table2_energy(self):
        cfg = FrameConfig(1024, 88, 32, cp_len=72, ptrs_amp_scale=2 ** -0.5)
        imap = build_index_map(NrDistributed(8, 4, 120))
        rng = np.random.default_rng(1)
        d, p = random_symbols(rng, 88, 64), ptrs_sequence(rng, 32, 0.8)
        f = tx_nr(d, p, imap, cfg)
        assert len(f.time_signal) == 1024 + 72
        e_in = np.sum(np.abs(d) ** 2) + np.sum(np.abs(p) ** 2)
        assert remove_cp(f.time_signal, 72).energy == pytest.approx(e_in, abs=1e-10)

    def test_size_mismatch(self):
        imap = build_index_map(UniformInterleaved(3, 16))
        with pytest.raises(ValueError):
            tx_nr(np.zeros(11), np.zeros(4), imap, self.cfg)


class TestTxBlock:
    cfg = FrameConfig(1024, 88, 32, cp_len=72)

    def test_zero_ptrs_is_data_only(self):
        d = random_symbols(np.random.default_rng(2), 88, 4)
        x = tx_block(d, np.zeros(32), self.cfg).time_signal.samples
        grid = np.zeros(1024, complex)
        grid[:88] = np.fft.fft(d, norm="ortho")
        ref = np.fft.ifft(grid, norm="ortho")
        np.testing.assert_allclose(x[72:], ref, atol=1e-15)

    def test_energy_split(self):
        rng = np.random.default_rng(3)
        d, p = random_symbols(rng, 88, 16), ptrs_sequence(rng, 32, 0.7)
        X = np.fft.fft(remove_cp(tx_block(d, p, self.cfg).time_signal, 72).samples, norm="ortho")
        frac = np.sum(np.abs(X[88:120]) ** 2) / np.sum(np.abs(X) ** 2)
        assert frac == pytest.approx(np.sum(np.abs(p) ** 2) / (np.sum(np.abs(d) ** 2) + np.sum(np.abs(p) ** 2)), abs=1e-12)

    def test_overflow(self):
        with pytest.raises(ValueError):
            tx_block(np.zeros(88), np.zeros(32), FrameConfig(128, 88, 32, g_f=16))
        with pytest.raises(ValueError):
            tx_block(np.zeros(88), np.zeros(32), FrameConfig(128, 88, 32), rc=True)

    @pytest.mark.parametrize("rc", [False, True])
    def test_roundtrip(self, rc):
        rng = np.random.default_rng(4)
        d, p = random_symbols(rng, 88, 64), ptrs_sequence(rng, 32, 1.0)
        cfg = replace(self.cfg, g_f=4, ptrs_guard_bins=2)
        out = rx_block(apply_channel(tx_block(d, p, cfg, rc=rc)), cfg, p, rc=rc)
        np.testing.assert_allclose(out.data_slots, d, atol=1e-10)
        np.testing.assert_allclose(out.ptrs_slots, p, atol=1e-9)
        np.testing.assert_allclose(out.anchors.values, 0, atol=1e-10)

    def test_band_separation(self):
        rng = np.random.default_rng(5)
        cfg = FrameConfig(1024, 88, 32, g_f=8, ptrs_guard_bins=4)
        d, p = random_symbols(rng, 88, 4), ptrs_sequence(rng, 32, 1.0)
        a = rx_block(apply_channel(tx_block(d, p, cfg)), cfg, p).data_slots
        b = rx_block(apply_channel(tx_block(d, 3 * p[::-1], cfg)), cfg, p).data_slots
        np.testing.assert_allclose(a, b, atol=1e-10)


class TestChannel:
    def _frame(self, cfg=FrameConfig(64, 16, cp_len=4)):
        d = random_symbols(np.random.default_rng(6), cfg.m_data, 4)
        return tx_block(d, [], cfg)

    def test_identity(self):
        f = self._frame()
        np.testing.assert_array_equal(apply_channel(f, None, None, None).samples, f.time_signal.samples)
        np.testing.assert_array_equal(apply_channel(f, snr_db=np.inf).samples, f.time_signal.samples)

    def test_constant_phases_consolidate(self):
        f = self._frame()
        n = len(f.time_signal)
        y = apply_channel(f, PhaseTrajectory(np.full(n, 0.2), 1.0), PhaseTrajectory(np.full(n, -0.5), 1.0))
        np.testing.assert_allclose(y.samples, f.time_signal.samples * np.exp(-0.3j), atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            apply_channel(self._frame(), PhaseTrajectory(np.zeros(3), 1.0))

    def test_measured_snr(self):
        # fully occupied grid: time-domain signal power equals data-symbol power
        n = 2 ** 17
        f = self._frame(FrameConfig(n, n))
        y = apply_channel(f, snr_db=10.0, rng_seed=9).samples
        x = f.time_signal.samples
        snr = 10 * np.log10(np.mean(np.abs(x) ** 2) / np.mean(np.abs(y - x) ** 2))
        assert snr == pytest.approx(10.0, abs=0.2)


class TestRxNr:
    def test_zero_and_constant_pn(self):
        cfg = FrameConfig(1024, 88, 32, cp_len=72)
        imap = build_index_map(NrDistributed(8, 4, 120))
        rng = np.random.default_rng(7)
        d, p = random_symbols(rng, 88, 16), ptrs_sequence(rng, 32, 0.7)
        f = tx_nr(d, p, imap, cfg)
        out = rx_nr(apply_channel(f), imap, cfg, p)
        np.testing.assert_allclose(out.anchors.values, 0, atol=1e-10)
        th = PhaseTrajectory(np.full(1096, 0.3), 1.0)
        out = rx_nr(apply_channel(f, th), imap, cfg, p)
        np.testing.assert_allclose(out.anchors.values, 0.3, atol=1e-10)
        np.testing.assert_allclose(out.anchors.positions, 15 * np.arange(8) + 6.5)

    def test_group_mean(self):
        assert group_anchor_values(np.array([0.1, 0.2, 0.3, 0.4]), 4)[0] == pytest.approx(0.25, abs=1e-12)

    def test_group_mean_across_branch_cut(self):
        v = group_anchor_values(np.array([np.pi - 0.05, -np.pi + 0.05]), 2)[0]
        assert abs(abs(v) - np.pi) < 1e-12

    def test_anchor_noise_variance(self):
        # Var[anchor] ~ sigma^2 / (2 A^2 group_size) at high SNR
        cfg = FrameConfig(1024, 88, 32)
        imap = build_index_map(NrDistributed(8, 4, 120))
        A, snr_db = 0.8, 25.0
        vals = []
        for s in range(300):
            rng = np.random.default_rng(s)
            d, p = random_symbols(rng, 88, 4), ptrs_sequence(rng, 32, A)
            f = tx_nr(d, p, imap, cfg)
            vals.append(rx_nr(apply_channel(f, snr_db=snr_db, rng_seed=s), imap, cfg, p).anchors.values)
        sigma2 = 10 ** (-snr_db / 10)
        assert np.var(np.array(vals)) == pytest.approx(sigma2 / (2 * A * A * 4), rel=0.5)


class TestAnchorAlignment:
    def test_positions(self):
        np.testing.assert_allclose(block_anchor_positions(128, 32), 4 * np.arange(32))
        np.testing.assert_allclose(block_anchor_positions(88, 32), 2.75 * np.arange(32))

    def test_linear_ramp_unbiased(self):
        # a slow ramp in time is read back at the anchor times without offset
        cfg = FrameConfig(2048, 128, 32, g_f=8, ptrs_guard_bins=4)
        rng = np.random.default_rng(8)
        d, p = random_symbols(rng, 128, 4), ptrs_sequence(rng, 32, 1.0)
        c = 1e-3  # rad per data slot
        # periodic triangle so the ramp is smooth over the circular symbol interior
        t = np.arange(2048) / 16.0
        th = PhaseTrajectory(c * (t - 64.0), cfg.sample_rate_hz)
        out = rx_block(apply_channel(tx_block(d, p, cfg), th), cfg, p)
        pos = out.anchors.positions
        inner = (pos > 16) & (pos < 112)
        resid = out.anchors.values[inner] - c * (pos[inner] - 64.0)
        assert abs(np.mean(resid)) < 0.05 * c * 4


class TestSinc:
    def test_constant(self):
        a = Anchors(3 + 4.0 * np.arange(32), np.full(32, -0.7))
        np.testing.assert_allclose(interpolate_sinc(a, 128), -0.7, atol=1e-10)

    def test_cosine_k8(self):
        m, K = 128, 8
        pos = np.arange(K) * (m / K)
        a = Anchors(pos, np.cos(2 * np.pi * pos / m))
        np.testing.assert_allclose(interpolate_sinc(a, m), np.cos(2 * np.pi * np.arange(m) / m), atol=1e-9)

    def test_single_anchor_dirichlet(self):
        K, m = 4, 16
        vals = np.array([0.0, 1.0, 0.0, 0.0])
        pos = np.arange(K) * 4.0
        got = interpolate_sinc(Anchors(pos, vals), m)
        # dense evaluation of the band-limited interpolant, Nyquist line split in half
        t = np.arange(m)
        k = np.array([-2, -1, 0, 1, 2])
        c = np.array([0.5, 1, 1, 1, 0.5])
        V = np.array([np.sum(vals * np.exp(-2j * np.pi * kk * np.arange(K) / K)) for kk in k])
        ref = np.real(np.exp(2j * np.pi * np.outer(t, k) / m) @ (c * V)) / K
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_fractional_spacing_matches_integer_route(self):
        # 32 anchors over 88 slots: evaluate the same polynomial both ways
        rng = np.random.default_rng(9)
        vals = rng.standard_normal(32)
        got = interpolate_sinc(Anchors(2.75 * np.arange(32), vals), 88)
        ref = interpolate_sinc(Anchors(4.0 * np.arange(32), vals), 128)
        np.testing.assert_allclose(got[np.arange(0, 88, 11)], ref[np.arange(0, 128, 16)], atol=1e-12)

    def test_nonuniform_rejected(self):
        with pytest.raises(ValueError):
            interpolate_sinc(Anchors(np.array([0.0, 1.0, 5.0, 6.0]), np.zeros(4)), 16)

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([(8, 128), (32, 128), (16, 128), (8, 120), (32, 88)]),
           st.floats(0, 0.99), st.integers(0, 10**6))
    def test_bandlimited_exact(self, km, frac, seed):
        K, m = km
        s = m / K
        rng = np.random.default_rng(seed)
        off = frac * s
        n_tones = (K - 1) // 2
        cyc = np.arange(1, n_tones + 1)
        amp, ph = rng.standard_normal(n_tones), rng.uniform(0, 2 * np.pi, n_tones)
        f = lambda t: 0.3 + np.sum(amp[:, None] * np.cos(2 * np.pi * cyc[:, None] * t / m + ph[:, None]), 0)
        pos = off + s * np.arange(K)
        got = interpolate_sinc(Anchors(pos, f(pos)), m)
        np.testing.assert_allclose(got, f(np.arange(m)), atol=1e-9)


class TestSpline:
    def test_two_anchors_linear(self):
        a = Anchors(np.array([2.0, 10.0]), np.array([1.0, 3.0]))
        y = interpolate_spline(a, 12)
        np.testing.assert_allclose(y[2:11], 1 + 0.25 * (np.arange(2, 11) - 2), atol=1e-12)

    def test_constant_extrapolation(self):
        a = Anchors(np.array([2.0, 5.0, 9.0]), np.array([1.0, -1.0, 4.0]))
        y = interpolate_spline(a, 12)
        assert y[0] == y[1] == 1.0
        assert y[10] == y[11] == 4.0

    def test_linear_reproduced(self):
        pos = np.array([0.5, 3.0, 4.0, 9.0, 15.0])
        a = Anchors(pos, 2 - 0.3 * pos)
        y = interpolate_spline(a, 16)
        t = np.arange(1, 16)
        np.testing.assert_allclose(y[t], 2 - 0.3 * t, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        pos = np.sort(rng.choice(np.arange(1, 119), 8, replace=False)).astype(float)
        vals = rng.standard_normal(8)
        y = interpolate_spline(Anchors(pos, vals), 120)
        t = np.arange(120.0)
        inside = (t >= pos[0]) & (t <= pos[-1])
        np.testing.assert_allclose(y[inside], natural_spline_oracle(pos, vals, t[inside]), atol=1e-10)

    def test_single_and_empty(self):
        np.testing.assert_array_equal(interpolate_spline(Anchors(np.array([3.0]), np.array([0.4])), 5), 0.4)
        with pytest.raises(ValueError):
            interpolate_spline(Anchors(np.array([]), np.array([])), 5)


class TestCorrect:
    def test_identity_and_inverse(self):
        rng = np.random.default_rng(10)
        d = random_symbols(rng, 50, 64)
        th = rng.uniform(-1, 1, 50)
        np.testing.assert_array_equal(correct_phase(d, np.zeros(50)), d)
        back = correct_phase(d * np.exp(1j * th), th)
        np.testing.assert_allclose(back, d, atol=1e-12)
        np.testing.assert_allclose(np.abs(correct_phase(d, th)), np.abs(d), rtol=1e-14)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            correct_phase(np.ones(3), np.zeros(2))


class TestChainProperties:
    @pytest.mark.parametrize("name", ["nr", "blk", "rc", "nr_grouped"])
    @pytest.mark.parametrize("interp", ["sinc", "spline"])
    def test_lossless(self, name, interp):
        s = replace(table1_scenarios()[name], interpolator=interp)
        n = s.frame.n_ifft + s.frame.cp_len
        c = run_chain(s, PhaseTrajectory(np.zeros(n), s.frame.sample_rate_hz), 3)
        np.testing.assert_allclose(c.corrected, c.frame.tx_data, atol=1e-9)
        assert rms_phase_error(c.truth, c.estimate.interpolated) < 1e-9
        assert evm_db(c.frame.tx_data, c.corrected) <= -200

    @pytest.mark.parametrize("name", ["nr", "blk", "rc", "nr_grouped"])
    @pytest.mark.parametrize("interp", ["sinc", "spline"])
    def test_constant_offset(self, name, interp):
        s = replace(table1_scenarios()[name], interpolator=interp)
        n = s.frame.n_ifft + s.frame.cp_len
        c = run_chain(s, PhaseTrajectory(np.full(n, 0.4), s.frame.sample_rate_hz), 4)
        np.testing.assert_allclose(c.estimate.interpolated, 0.4, atol=1e-9)
        np.testing.assert_allclose(c.corrected, c.frame.tx_data, atol=1e-9)

    def test_nyquist_fidelity_block(self):
        # tones inside the folded guard width pass through the receive filter untouched
        s = table1_scenarios()["blk"]
        cfg = s.frame
        rng = np.random.default_rng(11)
        for trial in range(5):
            cyc = rng.choice(np.arange(1, cfg.ptrs_guard_bins + 1), 3, replace=False)
            th = tone_trajectory(cfg, cyc, rng.uniform(0.01, 0.05, 3), rng.uniform(0, 6.3, 3))
            c = run_chain(s, th, trial)
            assert np.max(np.abs(c.estimate.interpolated - c.truth)) < 0.01

    def test_block_transfer_rolls_off_above_guard(self):
        # beyond the guard, tone power shifts out of the folded band and into the data
        # band, so the estimate is attenuated even though f < f_s / 2
        s = table1_scenarios()["blk"]
        gain = []
        for f in range(1, 16):
            c = run_chain(s, tone_trajectory(s.frame, [f], [1e-3]), 0)
            gain.append(abs(np.fft.rfft(c.estimate.interpolated)[f] / np.fft.rfft(c.truth)[f]))
        gain = np.array(gain)
        np.testing.assert_allclose(gain[:4], 1.0, atol=1e-3)
        assert 0.5 < gain.min() < 0.9

    def test_aliasing_fold_nr(self):
        # f_s = 32/T, W = 64/T: a tone at 21/T folds to |21 - 32| = 11/T in the NR estimate
        s = table1_scenarios()["nr"]
        th = tone_trajectory(s.frame, [21], [0.05])
        c = run_chain(s, th, 0)
        # the estimate lives on data slots only: rebuild the dense band-limited curve
        dense = interpolate_sinc(Anchors(c.estimate.anchor_positions, c.estimate.anchor_values), 128)
        mag = np.abs(np.fft.rfft(dense))
        assert np.argmax(mag[1:]) + 1 == 11

    def test_no_fold_block(self):
        s = table1_scenarios()["blk"]
        th = tone_trajectory(s.frame, [11], [0.05])
        c = run_chain(s, th, 0)
        mag = np.abs(np.fft.rfft(c.estimate.interpolated))
        assert np.argmax(mag[1:]) + 1 == 11
