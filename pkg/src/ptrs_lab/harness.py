"""Scenario configuration, Monte Carlo execution and experiment recipes.

Every trial derives its random streams from ``SeedSequence(base_seed + trial_idx)``,
spawned into fixed children (data, ptrs, phase noise, awgn). Two scenarios that share
a base seed therefore see identical phase-noise and noise realizations, which is what
makes per-cell gain ratios paired comparisons.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import metrics as mt
from .allocation import (AllocationScheme, BlockRaisedCosine, build_index_map, scheme_from_dict,
                         scheme_to_dict)
from .modem import (MODULATIONS, apply_channel, correct_phase, estimate_phase, ptrs_sequence,
                    qam_max_magnitude, random_symbols, rx_block, rx_nr, tx_block, tx_nr)
from .phase_noise import (NoPhaseNoise, PhaseNoisePsd, PowerLaw, model_from_dict, model_params,
                          synthesize)
from .signal import FrameConfig, normal_cp_len, remove_cp

DATA_DIR = Path(__file__).parent / "data"

CSV_COLUMNS = ("scheme", "a", "nf", "carrier_hz", "snr_db", "n_trials", "eps_rms_mean",
               "eps_rms_se", "mae_mean", "evm_db_mean", "evm_db_se")


@dataclass(frozen=True)
class Scenario:
    frame: FrameConfig
    scheme: AllocationScheme
    pn: PhaseNoisePsd = NoPhaseNoise()
    carrier_hz: float = 0.0
    snr_db: float | None = None
    interpolator: str = "sinc"
    n_trials: int = 100
    base_seed: int = 0
    modulation: str = "qpsk"
    name: str = ""

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.modulation not in MODULATIONS:
            raise ValueError(f"unknown modulation {self.modulation!r}")
        if self.interpolator not in ("sinc", "spline"):
            raise ValueError(f"unknown interpolator {self.interpolator!r}")
        if self.scheme.in_band:
            if self.scheme.m_total != self.frame.m_total or self.scheme.n_ptrs != self.frame.m_ptrs:
                raise ValueError("in-band scheme does not match the frame's data/PTRS split")
        elif self.scheme.m_ptrs != self.frame.m_ptrs or not self.frame.fits_block(self.scheme.n_bins):
            raise ValueError("block scheme does not match or fit the frame")

    @property
    def scheme_id(self) -> str:
        return self.name or self.scheme.kind

    @property
    def order(self) -> int:
        return MODULATIONS[self.modulation]


# ---------------------------------------------------------------- one trial

def _streams(seed: int):
    data, ptrs, pn, noise = np.random.SeedSequence(seed).spawn(4)
    return np.random.default_rng(data), np.random.default_rng(ptrs), pn, noise


@dataclass(frozen=True)
class ChainResult:
    frame: object
    theta: object
    truth: np.ndarray
    estimate: object
    corrected: np.ndarray


def run_chain(s: Scenario, theta, seed: int) -> ChainResult:
    """One symbol through tx, channel, rx, estimation and correction with a given trajectory.

    ``theta`` is a PhaseTrajectory of n_ifft + cp_len samples, or None to synthesize
    one from the scenario's model with the trial's phase-noise stream.
    """
    rng_data, rng_ptrs, pn_seed, noise_seed = _streams(seed)
    cfg = s.frame
    amp = cfg.ptrs_amp_scale * qam_max_magnitude(s.order)
    n, cp = cfg.n_ifft, cfg.cp_len

    if s.scheme.in_band:
        imap = build_index_map(s.scheme)
        data = random_symbols(rng_data, imap.data_slots.size, s.order)
        ptrs = ptrs_sequence(rng_ptrs, imap.ptrs_slots.size, amp)
        frame = tx_nr(data, ptrs, imap, cfg, s.scheme)
        grid_len, data_slots = cfg.m_total, imap.data_slots
    else:
        rc = isinstance(s.scheme, BlockRaisedCosine)
        data = random_symbols(rng_data, cfg.m_data, s.order)
        ptrs = ptrs_sequence(rng_ptrs, cfg.m_ptrs, amp)
        frame = tx_block(data, ptrs, cfg, rc=rc)
        grid_len, data_slots = cfg.m_data, np.arange(cfg.m_data)

    if theta is None:
        theta = synthesize(s.pn, n + cp, cfg.sample_rate_hz, s.carrier_hz, pn_seed)
    y = apply_channel(frame, theta, None, s.snr_db, noise_seed)

    if s.scheme.in_band:
        rx = rx_nr(y, imap, cfg, ptrs)
    else:
        rx = rx_block(y, cfg, ptrs, rc=rc)
    est = estimate_phase(rx.anchors, grid_len, data_slots, s.interpolator)
    corrected = correct_phase(rx.data_slots, est.interpolated)

    # reference phase at each data pulse center
    centers = cp + np.asarray(data_slots) * (n / grid_len)
    truth = np.interp(centers, np.arange(n + cp), theta.theta)
    return ChainResult(frame, theta, truth, est, corrected)


def run_trial(s: Scenario, trial_idx: int, keep_trajectories: bool = False,
              with_papr: bool = True) -> mt.TrialReport:
    seed = s.base_seed + trial_idx
    c = run_chain(s, None, seed)
    est = c.estimate.interpolated
    papr = (mt.papr_db(remove_cp(c.frame.time_signal, s.frame.cp_len)),) if with_papr else ()
    return mt.TrialReport(
        eps_rms=mt.rms_phase_error(c.truth, est),
        evm_db=mt.evm_db(c.frame.tx_data, c.corrected),
        papr_db_samples=papr,
        scheme_id=s.scheme_id,
        pn_params=model_params(s.pn),
        snr_db=s.snr_db,
        seed=seed,
        mae=mt.mean_abs_phase_error(c.truth, est),
        theta_true=c.truth if keep_trajectories else None,
        theta_hat=est if keep_trajectories else None,
    )


def _run_chunk(args):
    s, idxs, with_papr = args
    return [run_trial(s, i, with_papr=with_papr) for i in idxs]


def run_trials(s: Scenario, workers: int = 1, with_papr: bool = False) -> list[mt.TrialReport]:
    """All trials of a scenario, ordered by trial index whatever the worker count."""
    idx = list(range(s.n_trials))
    if workers <= 1:
        return _run_chunk((s, idx, with_papr))
    chunks = [idx[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(s, c, with_papr) for c in chunks]))
    reports = [r for part in parts for r in part]
    return sorted(reports, key=lambda r: r.seed)


def summarize(reports: Sequence[mt.TrialReport]) -> dict:
    eps_m, eps_se = mt.mean_and_se([r.eps_rms for r in reports])
    evm_m, evm_se = mt.mean_and_se([r.evm_db for r in reports])
    return {"n_trials": len(reports), "eps_rms_mean": eps_m, "eps_rms_se": eps_se,
            "mae_mean": float(np.mean([r.mae for r in reports])),
            "evm_db_mean": evm_m, "evm_db_se": evm_se}


def _row(s: Scenario, reports, a=None, nf=None) -> dict:
    row = {"scheme": s.scheme_id, "a": a, "nf": nf, "carrier_hz": s.carrier_hz,
           "snr_db": "off" if s.snr_db is None else s.snr_db}
    row.update(summarize(reports))
    return row


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepGrid:
    """Cartesian (a, n_f) grid evaluated for every scheme template.

    ``pn`` supplies the PowerLaw exponent, scale and bin spacing; a and n_f are set
    per cell. ``reference`` names the template that gains are measured against.
    """

    a_values: tuple[float, ...]
    nf_values: tuple[float, ...]
    schemes: dict = field(default_factory=dict)
    pn: PowerLaw = PowerLaw(0.0, 0.0)
    reference: str = "nr"

    def __post_init__(self):
        if not self.a_values or not self.nf_values:
            raise ValueError("sweep axes must be non-empty")
        if self.reference not in self.schemes:
            raise ValueError(f"reference scheme {self.reference!r} not in grid")

    def cell(self, name: str, a: float, nf: float) -> Scenario:
        s = self.schemes[name]
        pn = replace(self.pn, a=float(a), n_f=float(nf), bin_hz=s.frame.scs_hz)
        return replace(s, pn=pn, name=name)


@dataclass
class SweepResult:
    rows: list
    gains: dict  # (a, nf) -> {scheme: gain}

    def gain(self, a, nf, scheme) -> float:
        return self.gains[(a, nf)][scheme]


def run_sweep(grid: SweepGrid, workers: int = 1) -> SweepResult:
    rows, gains = [], {}
    for nf in grid.nf_values:
        for a in grid.a_values:
            eps = {}
            for name in grid.schemes:
                s = grid.cell(name, a, nf)
                row = _row(s, run_trials(s, workers), a=a, nf=nf)
                rows.append(row)
                eps[name] = row["eps_rms_mean"]
            ref = eps[grid.reference]
            gains[(a, nf)] = {k: ref / v for k, v in eps.items() if k != grid.reference}
    return SweepResult(rows, gains)


def run_nr_comparison(templates: dict, pn: PhaseNoisePsd, carriers: Sequence[float],
                      snr_range: Sequence[float | None], n_trials: int | None = None,
                      workers: int = 1) -> list[dict]:
    """EVM-vs-SNR rows for each template at each carrier, spline interpolation."""
    if pn is None:
        raise ValueError("a phase-noise model is required")
    rows = []
    for fc in carriers:
        for snr in snr_range:
            for name, s in templates.items():
                cell = replace(s, pn=pn, carrier_hz=float(fc), snr_db=snr, name=name,
                               interpolator="spline",
                               n_trials=n_trials or s.n_trials)
                rows.append(_row(cell, run_trials(cell, workers)))
    return rows


def run_papr(block: Scenario, mods: Sequence[str], n_symbols: int,
             thresholds_db=None, oversampling: int = 4) -> dict:
    """PAPR samples and CCDFs: data-only single-band DFT-s-OFDM vs the block frame.

    The data-only reference occupies the same m_data + m_ptrs subcarriers with data.
    """
    if n_symbols < 1000:
        raise ValueError("n_symbols must be >= 1000")
    if thresholds_db is None:
        thresholds_db = np.round(np.arange(0.0, 12.0001, 0.1), 1)
    cfg = block.frame
    ref_cfg = FrameConfig(n_ifft=cfg.n_ifft, m_data=cfg.m_total, scs_hz=cfg.scs_hz)
    out = {}
    for mod in mods:
        order = MODULATIONS[mod]
        amp = cfg.ptrs_amp_scale * qam_max_magnitude(order)
        rc = isinstance(block.scheme, BlockRaisedCosine)
        ref, blk = [], []
        for i in range(n_symbols):
            rng_data, rng_ptrs, _, _ = _streams(block.base_seed + i)
            d = random_symbols(rng_data, cfg.m_total, order)
            ref.append(mt.papr_db(tx_block(d, [], ref_cfg).time_signal, oversampling))
            p = ptrs_sequence(rng_ptrs, cfg.m_ptrs, amp)
            blk.append(mt.papr_db(remove_cp(tx_block(d[:cfg.m_data], p, cfg, rc=rc).time_signal,
                                            cfg.cp_len), oversampling))
        out[mod] = {
            "data_only": np.array(ref), "block": np.array(blk),
            "ccdf_data_only": mt.papr_ccdf(ref, thresholds_db),
            "ccdf_block": mt.papr_ccdf(blk, thresholds_db),
            "papr_1e-2_data_only": mt.papr_at_ccdf(ref),
            "papr_1e-2_block": mt.papr_at_ccdf(blk),
        }
        out[mod]["delta_db"] = out[mod]["papr_1e-2_block"] - out[mod]["papr_1e-2_data_only"]
    return out


# ---------------------------------------------------------------- persistence

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def rows_to_csv(rows: Sequence[dict], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(rows, path, columns=CSV_COLUMNS) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows, columns))
    return path


def scenario_to_dict(s: Scenario) -> dict:
    f = s.frame
    return {
        "name": s.name, "ifft_size": f.n_ifft, "data_symbols": f.m_data,
        "ptrs_symbols": f.m_ptrs, "band_gap": f.g_f, "ptrs_guard_bins": f.ptrs_guard_bins,
        "subcarrier_spacing_hz": f.scs_hz, "cp_length": f.cp_len,
        "ptrs_amplitude": f.ptrs_amp_scale, "modulation": s.modulation,
        "scheme": scheme_to_dict(s.scheme), "phase_noise": model_params(s.pn),
        "carrier_hz": s.carrier_hz, "snr_db": "off" if s.snr_db is None else s.snr_db,
        "interpolation": s.interpolator, "trials": s.n_trials, "seed": s.base_seed,
    }


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def trajectory_csv(report: mt.TrialReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("data_index", "theta_true", "theta_hat"))
    for i, (t, h) in enumerate(zip(report.theta_true, report.theta_hat)):
        w.writerow((i, repr(float(t)), repr(float(h))))
    return buf.getvalue()


# ---------------------------------------------------------------- config documents

def _snr(v):
    # YAML reads a bare ``off`` as False
    if v is None or v is False or (isinstance(v, str) and v.lower() == "off"):
        return None
    return float(v)


def scenario_from_dict(d: dict, base_dir: Path | None = None) -> Scenario:
    """Scenario from a mapping whose keys mirror the simulation-parameter table rows."""
    n = int(d["ifft_size"])
    cp = d.get("cp_length", 0)
    cp = normal_cp_len(n) if str(cp).lower() == "normal" else int(cp)
    frame = FrameConfig(
        n_ifft=n, m_data=int(d["data_symbols"]), m_ptrs=int(d.get("ptrs_symbols", 0)),
        g_f=int(d.get("band_gap", 0)), scs_hz=float(d.get("subcarrier_spacing_hz", 15e3)),
        cp_len=cp, ptrs_amp_scale=float(d.get("ptrs_amplitude", 1.0)),
        ptrs_guard_bins=int(d.get("ptrs_guard_bins", 0)))
    scheme = scheme_from_dict(d["scheme"], m_total=frame.m_total)
    pn_d = dict(d.get("phase_noise") or {"kind": "none"})
    pn = model_from_dict(pn_d, base_dir)
    if isinstance(pn, PowerLaw):
        pn = replace(pn, bin_hz=frame.scs_hz)
    return Scenario(frame=frame, scheme=scheme, pn=pn,
                    carrier_hz=float(d.get("carrier_hz", 0.0)), snr_db=_snr(d.get("snr_db")),
                    interpolator=d.get("interpolation", "sinc"), n_trials=int(d.get("trials", 100)),
                    base_seed=int(d.get("seed", 0)), modulation=str(d.get("modulation", "qpsk")).lower(),
                    name=str(d.get("name", "")))


def load_yaml(path) -> dict:
    with Path(path).open() as fh:
        return yaml.safe_load(fh)


def load_scenario(path) -> Scenario:
    path = Path(path)
    return scenario_from_dict(load_yaml(path), path.parent)


def _templates(d: dict, base_dir, shared: dict) -> dict:
    out = {}
    for name, sd in d.items():
        merged = {**shared, **sd, "name": name}
        out[name] = scenario_from_dict(merged, base_dir)
    return out


def grid_from_dict(d: dict, base_dir: Path | None = None) -> SweepGrid:
    shared = d.get("common", {})
    schemes = _templates(d["schemes"], base_dir, shared)
    pn_d = {"kind": "power_law", "a": 0.0, "nf": 0.0, **d.get("phase_noise", {})}
    pn = model_from_dict(pn_d)
    return SweepGrid(tuple(float(a) for a in d["a_values"]), tuple(float(v) for v in d["nf_values"]),
                     schemes, pn, d.get("reference", "nr"))


def load_grid(path) -> SweepGrid:
    path = Path(path)
    return grid_from_dict(load_yaml(path), path.parent)


def load_comparison(path=None) -> tuple[dict, dict]:
    """Templates and run settings for the NR-vs-block EVM comparison."""
    path = Path(path) if path else DATA_DIR / "nr_compare.yaml"
    d = load_yaml(path)
    shared = {**d.get("common", {}), "phase_noise": d.get("phase_noise")}
    return _templates(d["schemes"], path.parent, shared), d


def builtin(name: str) -> Path:
    return DATA_DIR / name
