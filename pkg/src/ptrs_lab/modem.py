"""Transmit, channel, receive, phase estimation, interpolation and correction.

Two chains share the primitives here:

* single-DFT (NR style): data and PTRS interleaved before one m_total-point DFT;
* block: data and PTRS spread by separate DFTs onto disjoint bands of one IFFT.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .allocation import (AllocationScheme, BlockRaisedCosine, BlockSinc, IndexMap,
                         build_index_map, rc_spectral_weights)
from .phase_noise import PhaseTrajectory
from .signal import ComplexSignal, FrameConfig, add_cp, remove_cp

_ORDERS = {4: 2, 16: 4, 64: 6}
MODULATIONS = {"qpsk": 4, "16qam": 16, "64qam": 64}


# ---------------------------------------------------------------- constellations

def _pam_levels(order: int) -> tuple[int, float]:
    if order not in _ORDERS:
        raise ValueError(f"unsupported QAM order {order}")
    L = int(round(np.sqrt(order)))
    norm = np.sqrt(2.0 * (L * L - 1) / 3.0)
    return L, norm


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def qam_map(bits, order: int) -> np.ndarray:
    """Gray-mapped square QAM at unit average power. Even bits drive I, odd bits drive Q."""
    L, norm = _pam_levels(order)
    k = _ORDERS[order]
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} not divisible by {k}")
    b = bits.reshape(-1, k // 2, 2)
    weights = 1 << np.arange(k // 2 - 1, -1, -1)
    gi = b[:, :, 0] @ weights
    gq = b[:, :, 1] @ weights
    ai = (L - 1) - 2 * _gray_to_binary(gi)
    aq = (L - 1) - 2 * _gray_to_binary(gq)
    return (ai + 1j * aq) / norm


def qam_demap(symbols, order: int) -> np.ndarray:
    """Nearest-neighbour hard decisions back to bits."""
    L, norm = _pam_levels(order)
    k = _ORDERS[order]
    s = np.asarray(symbols, dtype=np.complex128) * norm

    def axis_bits(x):
        idx = np.clip(np.rint(((L - 1) - x) / 2.0), 0, L - 1).astype(np.int64)
        g = idx ^ (idx >> 1)
        return (g[:, None] >> np.arange(k // 2 - 1, -1, -1)[None, :]) & 1

    out = np.empty((s.size, k // 2, 2), dtype=np.int64)
    out[:, :, 0] = axis_bits(s.real)
    out[:, :, 1] = axis_bits(s.imag)
    return out.reshape(-1)


def qam_max_magnitude(order: int) -> float:
    L, norm = _pam_levels(order)
    return float(np.sqrt(2.0) * (L - 1) / norm)


def random_symbols(rng: np.random.Generator, n: int, order: int) -> np.ndarray:
    return qam_map(rng.integers(0, 2, n * _ORDERS[order]), order)


def ptrs_sequence(rng: np.random.Generator, n: int, amplitude: float) -> np.ndarray:
    """Known PTRS symbols: seeded QPSK with magnitude ``amplitude``."""
    return amplitude * random_symbols(rng, n, 4)


# ---------------------------------------------------------------- transmitter

@dataclass(frozen=True)
class TxFrame:
    time_signal: ComplexSignal
    tx_data: np.ndarray
    tx_ptrs: np.ndarray
    scheme: AllocationScheme
    config: FrameConfig
    index_map: IndexMap

    @property
    def ref_power(self) -> float:
        """Mean data-symbol power, the reference for SNR and EVM."""
        return float(np.mean(np.abs(self.tx_data) ** 2))


def _unitary_dft(x):
    return np.fft.fft(x, norm="ortho")


def _unitary_idft(x):
    return np.fft.ifft(x, norm="ortho")


def _finish(grid: np.ndarray, cfg: FrameConfig) -> ComplexSignal:
    x = ComplexSignal(_unitary_idft(grid), cfg.sample_rate_hz)
    return add_cp(x, cfg.cp_len)


def tx_nr(data, ptrs, imap: IndexMap, cfg: FrameConfig, scheme: AllocationScheme | None = None) -> TxFrame:
    data = np.asarray(data, dtype=np.complex128)
    ptrs = np.asarray(ptrs, dtype=np.complex128)
    m = cfg.m_total
    if data.size != imap.data_slots.size or ptrs.size != imap.ptrs_slots.size:
        raise ValueError("data/PTRS sizes do not match the index map")
    if data.size + ptrs.size != m:
        raise ValueError(f"|data| + |ptrs| must equal the DFT size {m}")
    x = np.zeros(m, dtype=np.complex128)
    x[imap.data_slots] = data
    x[imap.ptrs_slots] = ptrs
    grid = np.zeros(cfg.n_ifft, dtype=np.complex128)
    grid[:m] = _unitary_dft(x)
    return TxFrame(_finish(grid, cfg), data, ptrs, scheme, cfg, imap)


def _ptrs_band(ptrs: np.ndarray, rc: bool) -> np.ndarray:
    P = _unitary_dft(ptrs)
    if not rc:
        return P
    m = ptrs.size
    return rc_spectral_weights(m) * P[np.arange(2 * m) % m]


def tx_block(data, ptrs, cfg: FrameConfig, rc: bool = False) -> TxFrame:
    data = np.asarray(data, dtype=np.complex128)
    ptrs = np.asarray(ptrs, dtype=np.complex128)
    if data.size != cfg.m_data or ptrs.size != cfg.m_ptrs:
        raise ValueError("data/PTRS sizes do not match the frame config")
    n_bins = (2 if rc else 1) * cfg.m_ptrs
    if not cfg.fits_block(n_bins):
        raise ValueError("data band, gap and PTRS band overflow the IFFT")
    grid = np.zeros(cfg.n_ifft, dtype=np.complex128)
    grid[:cfg.m_data] = _unitary_dft(data)
    s = cfg.ptrs_band_start
    if cfg.m_ptrs:
        grid[s:s + n_bins] = _ptrs_band(ptrs, rc)
    scheme = BlockRaisedCosine(cfg.m_ptrs) if rc else BlockSinc(max(cfg.m_ptrs, 1))
    return TxFrame(_finish(grid, cfg), data, ptrs, scheme, cfg, build_index_map(scheme))


# ---------------------------------------------------------------- channel

def apply_channel(frame: TxFrame, theta_tx: PhaseTrajectory | None = None,
                  theta_rx: PhaseTrajectory | None = None, snr_db: float | None = None,
                  rng_seed=0) -> ComplexSignal:
    """x * e^{j theta_tx} * h * e^{j theta_rx} + w with a single unit tap.

    The noise variance per time sample equals the per-subcarrier noise power under
    unitary transforms, and is set to mean|d|^2 / SNR, so the SNR is per occupied
    data subcarrier. ``snr_db`` of None or +inf disables noise.
    """
    x = frame.time_signal.samples
    theta = np.zeros(x.size)
    for th in (theta_tx, theta_rx):
        if th is None:
            continue
        if len(th) != x.size:
            raise ValueError(f"trajectory length {len(th)} != signal length {x.size}")
        theta = theta + th.theta
    y = x * np.exp(1j * theta)
    if snr_db is not None and np.isfinite(snr_db):
        sigma2 = frame.ref_power / 10.0 ** (snr_db / 10.0)
        rng = np.random.default_rng(rng_seed)
        w = rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
        y = y + np.sqrt(sigma2 / 2.0) * w
    return ComplexSignal(y, frame.time_signal.sample_rate_hz)


# ---------------------------------------------------------------- receiver

@dataclass(frozen=True)
class Anchors:
    positions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.positions.size != self.values.size:
            raise ValueError("anchor positions and values differ in length")
        if np.any(np.diff(self.positions) <= 0):
            raise ValueError("anchor positions must be strictly increasing")


@dataclass(frozen=True)
class PhaseEstimate:
    anchor_positions: np.ndarray
    anchor_values: np.ndarray
    interpolated: np.ndarray


@dataclass(frozen=True)
class RxResult:
    data_slots: np.ndarray
    ptrs_slots: np.ndarray
    anchors: Anchors


def _front_end(y: ComplexSignal, cfg: FrameConfig, channel_response=None) -> np.ndarray:
    if len(y) != cfg.n_ifft + cfg.cp_len:
        raise ValueError(f"expected {cfg.n_ifft + cfg.cp_len} samples, got {len(y)}")
    Y = _unitary_dft(remove_cp(y, cfg.cp_len).samples)
    if channel_response is not None:
        # single-tap zero-forcing FDE
        Y = Y / np.asarray(channel_response)
    return Y


def slot_phases(r, known) -> np.ndarray:
    return np.angle(np.asarray(r) * np.conj(known))


def group_anchor_values(phases: np.ndarray, group_size: int) -> np.ndarray:
    """Circular mean per contiguous group, then unwrapped across groups."""
    ph = np.asarray(phases, dtype=float).reshape(-1, group_size)
    return np.unwrap(np.angle(np.exp(1j * ph).sum(axis=1)))


def rx_nr(y: ComplexSignal, imap: IndexMap, cfg: FrameConfig, known_ptrs,
          channel_response=None) -> RxResult:
    Y = _front_end(y, cfg, channel_response)
    r = _unitary_idft(Y[:cfg.m_total])
    phases = slot_phases(r[imap.ptrs_slots], known_ptrs)
    anchors = Anchors(np.asarray(imap.group_centers, dtype=float),
                      group_anchor_values(phases, imap.group_size))
    return RxResult(r[imap.data_slots], r[imap.ptrs_slots], anchors)


def _fold_band(Y: np.ndarray, start: int, m: int, guard: int) -> np.ndarray:
    idx = np.arange(start - guard, start + m + guard)
    folded = np.zeros(m, dtype=np.complex128)
    np.add.at(folded, (idx - start) % m, Y[idx])
    return folded


def _rc_deshape(Y: np.ndarray, start: int, m: int) -> np.ndarray:
    """Least-squares inverse of the RC shaping: matched-filter fold of the two aliases."""
    w = rc_spectral_weights(m)
    k = np.arange(2 * m) % m
    num = np.zeros(m, dtype=np.complex128)
    den = np.zeros(m)
    np.add.at(num, k, w * Y[start:start + 2 * m])
    np.add.at(den, k, w * w)
    return num / den


def block_anchor_positions(m_data: int, m_ptrs: int) -> np.ndarray:
    """PTRS pulse i is centered on data index i * m_data / m_ptrs."""
    return np.arange(m_ptrs) * (m_data / m_ptrs)


def rx_block(y: ComplexSignal, cfg: FrameConfig, known_ptrs, rc: bool = False,
             channel_response=None) -> RxResult:
    Y = _front_end(y, cfg, channel_response)
    m = cfg.m_ptrs
    s = cfg.ptrs_band_start
    if not cfg.fits_block((2 if rc else 1) * m):
        raise ValueError("PTRS band overflows the IFFT")
    data = _unitary_idft(Y[:cfg.m_data])
    P = _rc_deshape(Y, s, m) if rc else _fold_band(Y, s, m, cfg.ptrs_guard_bins)
    rp = _unitary_idft(P)
    anchors = Anchors(block_anchor_positions(cfg.m_data, m),
                      np.unwrap(slot_phases(rp, known_ptrs)))
    return RxResult(data, rp, anchors)


# ---------------------------------------------------------------- interpolation

def _uniform_spacing(positions: np.ndarray, n_out: int) -> float:
    K = positions.size
    spacing = n_out / K
    expected = positions[0] + spacing * np.arange(K)
    if not np.allclose(positions, expected, rtol=0, atol=1e-9):
        raise ValueError("sinc interpolation needs uniformly spaced anchors covering the grid period")
    return spacing


def _lowpass_spectrum(V: np.ndarray, n_out: int) -> np.ndarray:
    """Embed a K-point spectrum into n_out bins, splitting an even-K Nyquist bin."""
    K = V.size
    H = np.zeros(n_out, dtype=np.complex128)
    k = np.fft.fftfreq(K, 1.0 / K).astype(int)
    for kk, v in zip(k, V):
        if K % 2 == 0 and kk == -K // 2:
            H[kk % n_out] += v / 2
            H[(kk + K) % n_out] += v / 2
        else:
            H[kk % n_out] += v
    return H


def interpolate_sinc(anchors: Anchors, n_out: int) -> np.ndarray:
    """Band-limited (periodic) reconstruction of the anchors on the grid 0..n_out-1.

    Anchors must sit at o + i*n_out/K. With integer spacing this is zero-stuffing, an
    n_out-point FFT, a K-bin rectangular low-pass scaled by n_out/K and an IFFT; the
    anchor offset o enters as a linear phase. Fractional spacing evaluates the same
    trigonometric polynomial directly.
    """
    pos = np.asarray(anchors.positions, dtype=float)
    vals = np.asarray(anchors.values, dtype=float)
    K = vals.size
    if K < 1:
        raise ValueError("need at least one anchor")
    spacing = _uniform_spacing(pos, n_out)
    offset = pos[0]
    if float(spacing).is_integer():
        s = int(spacing)
        stuffed = np.zeros(n_out)
        stuffed[::s] = vals
        kk = np.fft.fftfreq(n_out, 1.0 / n_out)
        # rectangular window of K bins; an even-K Nyquist line is split over +-K/2
        rect = np.where(np.abs(kk) < K / 2, 1.0, np.where(np.abs(kk) == K / 2, 0.5, 0.0))
        X = np.fft.fft(stuffed) * rect * np.exp(-2j * np.pi * kk * offset / n_out)
        return np.real(np.fft.ifft(X)) * n_out / K
    H = _lowpass_spectrum(np.fft.fft(vals), n_out)
    kk = np.fft.fftfreq(n_out, 1.0 / n_out)
    t = np.arange(n_out) - offset
    return np.real(np.exp(2j * np.pi * np.outer(t, kk) / n_out) @ H) / K


def interpolate_spline(anchors: Anchors, n_out: int) -> np.ndarray:
    """Natural cubic spline through the anchors, held constant outside their span."""
    pos = np.asarray(anchors.positions, dtype=float)
    vals = np.asarray(anchors.values, dtype=float)
    if vals.size == 0:
        raise ValueError("need at least one anchor")
    if vals.size == 1:
        return np.full(n_out, vals[0])
    t = np.clip(np.arange(n_out, dtype=float), pos[0], pos[-1])
    return CubicSpline(pos, vals, bc_type="natural")(t)


INTERPOLATORS = {"sinc": interpolate_sinc, "spline": interpolate_spline}


def estimate_phase(anchors: Anchors, n_grid: int, data_slots, method: str = "sinc") -> PhaseEstimate:
    """Interpolate anchors over an n_grid-slot axis and keep the data slots."""
    try:
        fn = INTERPOLATORS[method]
    except KeyError:
        raise ValueError(f"unknown interpolator {method!r}") from None
    full = fn(anchors, n_grid)
    return PhaseEstimate(anchors.positions, anchors.values, full[np.asarray(data_slots)])


def correct_phase(data_slots, theta_hat) -> np.ndarray:
    d = np.asarray(data_slots, dtype=np.complex128)
    th = np.asarray(theta_hat, dtype=float)
    if d.shape != th.shape:
        raise ValueError("data and phase estimate lengths differ")
    return d * np.exp(-1j * th)
