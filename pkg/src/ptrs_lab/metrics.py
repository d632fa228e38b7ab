"""RMS phase error, EVM and PAPR statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal import ComplexSignal

EVM_FLOOR_DB = -200.0


@dataclass(frozen=True)
class TrialReport:
    eps_rms: float
    evm_db: float
    papr_db_samples: tuple[float, ...]
    scheme_id: str
    pn_params: dict
    snr_db: float | None
    seed: int
    mae: float = 0.0
    theta_true: np.ndarray | None = field(default=None, compare=False, repr=False)
    theta_hat: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.eps_rms >= 0:
            raise ValueError("eps_rms must be non-negative")
        if any(p < 0 for p in self.papr_db_samples):
            raise ValueError("PAPR samples must be >= 0 dB")


def _pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
    return a, b


def rms_phase_error(theta_true, theta_hat) -> float:
    t, h = _pair(theta_true, theta_hat)
    return float(np.sqrt(np.mean((t - h) ** 2)))


def mean_abs_phase_error(theta_true, theta_hat) -> float:
    t, h = _pair(theta_true, theta_hat)
    return float(np.mean(np.abs(t - h)))


def evm_db(tx, rx) -> float:
    """10*log10(sum|s - s_hat|^2 / sum|s|^2), floored at -200 dB."""
    s, r = _pair(tx, rx)
    ref = np.sum(np.abs(s) ** 2)
    if ref == 0:
        raise ValueError("reference symbols are all zero")
    err = np.sum(np.abs(s - r) ** 2)
    if err == 0:
        return EVM_FLOOR_DB
    return float(max(10.0 * np.log10(err / ref), EVM_FLOOR_DB))


def oversample(x, factor: int = 4) -> np.ndarray:
    """Band-limited upsampling by zero-padding the middle of the spectrum."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.size
    if factor == 1:
        return x
    X = np.fft.fft(x)
    half = (n + 1) // 2
    Z = np.zeros(n * factor, dtype=np.complex128)
    Z[:half] = X[:half]
    Z[n * factor - (n - half):] = X[half:]
    return np.fft.ifft(Z) * factor


def papr_db(symbol, oversampling: int = 4) -> float:
    """Per-symbol PAPR, max|x|^2 / mean|x|^2 of the CP-free symbol after oversampling."""
    x = symbol.samples if isinstance(symbol, ComplexSignal) else np.asarray(symbol)
    p = np.abs(oversample(x, oversampling)) ** 2
    return float(max(10.0 * np.log10(p.max() / p.mean()), 0.0))


def papr_ccdf(signals, thresholds_db, oversampling: int = 4) -> np.ndarray:
    """Rows of (threshold, P(PAPR > threshold)). ``signals`` may also be PAPR values in dB."""
    vals = np.array([s if np.isscalar(s) else papr_db(s, oversampling) for s in signals], dtype=float)
    if vals.size == 0:
        raise ValueError("need at least one signal")
    th = np.asarray(thresholds_db, dtype=float)
    prob = (vals[None, :] > th[:, None]).mean(axis=1)
    return np.column_stack([th, prob])


def papr_at_ccdf(papr_values, prob: float = 1e-2) -> float:
    """PAPR level exceeded with probability ``prob`` (empirical upper quantile)."""
    return float(np.quantile(np.asarray(papr_values, dtype=float), 1.0 - prob))


def mean_and_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else float("nan")
    return float(v.mean()), se
