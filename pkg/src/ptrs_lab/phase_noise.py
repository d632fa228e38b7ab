"""Parametric phase-noise PSDs and time-domain phase trajectory synthesis.

Two model families are supported:

* ``PowerLaw``: S(f) = scale * (a/|f| + n_f) ** exponent with f normalized to the
  subcarrier (bin) spacing. ``exponent=1, scale=1`` is the plain a/|f| + n_f law.
* ``MultiPoleZero``: a dBc/Hz mask built from first-order pole/zero factors, shifted
  by 20*log10(carrier/ref_carrier).

PSDs are one-sided and interpreted as rad^2/Hz of the phase process theta.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml
from scipy import signal as sps


@dataclass(frozen=True)
class PowerLaw:
    a: float
    n_f: float
    exponent: float = 1.0
    scale: float = 1.0
    # Hz per normalized frequency unit (the subcarrier spacing 1/T)
    bin_hz: float = 1.0

    def __post_init__(self):
        if self.a < 0 or self.n_f < 0 or self.scale < 0:
            raise ValueError("PowerLaw a, n_f and scale must be non-negative")
        if not self.bin_hz > 0:
            raise ValueError("bin_hz must be positive")

    kind = "power_law"


@dataclass(frozen=True)
class MultiPoleZero:
    psd0_dbchz: float
    zeros: tuple[tuple[float, float], ...] = ()
    poles: tuple[tuple[float, float], ...] = ()
    ref_carrier_hz: float = 30e9
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple((float(f), float(o)) for f, o in self.zeros))
        object.__setattr__(self, "poles", tuple((float(f), float(o)) for f, o in self.poles))
        if not self.ref_carrier_hz > 0:
            raise ValueError("ref_carrier_hz must be positive")
        if any(f <= 0 for f, _ in self.zeros + self.poles):
            raise ValueError("pole/zero frequencies must be positive")

    kind = "multi_pole_zero"


@dataclass(frozen=True)
class NoPhaseNoise:
    """PSD identically zero; synthesizes the all-zero trajectory."""

    kind = "none"


PhaseNoisePsd = PowerLaw | MultiPoleZero | NoPhaseNoise


@dataclass(frozen=True)
class PhaseTrajectory:
    theta: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 1 or not np.all(np.isfinite(th)):
            raise ValueError("theta must be a finite 1-D real array")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    def __len__(self) -> int:
        return self.theta.size

    def __add__(self, other: "PhaseTrajectory") -> "PhaseTrajectory":
        if len(self) != len(other):
            raise ValueError("trajectory lengths differ")
        return PhaseTrajectory(self.theta + other.theta, self.sample_rate_hz)

    @classmethod
    def zeros(cls, length: int, sample_rate_hz: float) -> "PhaseTrajectory":
        return cls(np.zeros(length), sample_rate_hz)


def psd_linear(model: PhaseNoisePsd, f_hz, carrier_hz: float = 0.0) -> np.ndarray:
    """One-sided PSD in rad^2/Hz at absolute frequencies ``f_hz`` (all nonzero)."""
    f = np.abs(np.asarray(f_hz, dtype=float))
    if np.any(f == 0):
        raise ValueError("PSD is undefined at f = 0")
    if isinstance(model, NoPhaseNoise):
        return np.zeros_like(f)
    if isinstance(model, PowerLaw):
        fn = f / model.bin_hz
        return model.scale * (model.a / fn + model.n_f) ** model.exponent / model.bin_hz
    if isinstance(model, MultiPoleZero):
        return 10.0 ** (_mpz_db(model, f, carrier_hz) / 10.0)
    raise TypeError(f"unknown phase-noise model {model!r}")


def _mpz_db(model: MultiPoleZero, f: np.ndarray, carrier_hz: float) -> np.ndarray:
    if not carrier_hz > 0:
        raise ValueError("MultiPoleZero needs a positive carrier frequency")
    db = np.full_like(f, model.psd0_dbchz)
    for fz, order in model.zeros:
        db += 10.0 * order * np.log10(1.0 + (f / fz) ** 2)
    for fp, order in model.poles:
        db -= 10.0 * order * np.log10(1.0 + (f / fp) ** 2)
    return db + 20.0 * np.log10(carrier_hz / model.ref_carrier_hz)


def eval_psd(model: PhaseNoisePsd, f, carrier_hz: float = 0.0):
    """PSD in dB. PowerLaw takes normalized f and ignores the carrier; MultiPoleZero takes Hz."""
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr == 0):
        raise ValueError("PSD is undefined at f = 0")
    if isinstance(model, PowerLaw):
        fn = np.abs(f_arr)
        out = 10.0 * np.log10(model.scale * (model.a / fn + model.n_f) ** model.exponent)
    elif isinstance(model, MultiPoleZero):
        out = _mpz_db(model, np.abs(f_arr), carrier_hz)
    elif isinstance(model, NoPhaseNoise):
        out = np.full_like(f_arr, -np.inf)
    else:
        raise TypeError(f"unknown phase-noise model {model!r}")
    return float(out) if out.ndim == 0 else out


def synthesize(model: PhaseNoisePsd, length: int, sample_rate_hz: float,
               carrier_hz: float = 0.0, rng_seed=0) -> PhaseTrajectory:
    """Real, mean-free trajectory whose expected periodogram equals the model PSD.

    Each positive-frequency bin k gets an independent complex Gaussian with
    E|X_k|^2 = L^2 * S(f_k) * df / 2 (the Nyquist bin is real with twice that),
    so the per-bin variance contribution of theta is exactly S(f_k) * df.
    """
    if length < 2:
        raise ValueError("length must be at least 2")
    rng = np.random.default_rng(rng_seed)
    n_pos = length // 2
    df = sample_rate_hz / length
    f = np.arange(1, n_pos + 1) * df
    var = psd_linear(model, f, carrier_hz) * df
    amp = length * np.sqrt(var) / 2.0
    X = np.zeros(n_pos + 1, dtype=np.complex128)
    X[1:] = amp * (rng.standard_normal(n_pos) + 1j * rng.standard_normal(n_pos))
    if length % 2 == 0:
        X[-1] = length * np.sqrt(var[-1]) * rng.standard_normal()
    theta = np.fft.irfft(X, n=length)
    return PhaseTrajectory(theta, sample_rate_hz)


def estimate_psd(theta: PhaseTrajectory, n_segments: int = 8, window: str = "hann"):
    """Averaged windowed periodogram (Welch). Returns (f_hz, psd_db) with DC dropped."""
    n = len(theta)
    if n_segments < 1 or n < 2 * n_segments:
        raise ValueError("need at least 2 samples per segment")
    nperseg = n // n_segments
    f, p = sps.welch(theta.theta, fs=theta.sample_rate_hz, window=window, nperseg=nperseg,
                     noverlap=0, detrend=False, scaling="density", return_onesided=True)
    with np.errstate(divide="ignore"):
        return f[1:], 10.0 * np.log10(p[1:])


def fit_power_law(f_norm, psd_lin) -> tuple[float, float]:
    """Least-squares (a, n_f) for S = a/f + n_f, linear in the unknowns."""
    f_norm = np.asarray(f_norm, dtype=float)
    y = np.asarray(psd_lin, dtype=float)
    # relative weighting so both ends of the spectrum count
    A = np.column_stack([1.0 / f_norm, np.ones_like(f_norm)]) / y[:, None]
    coef, *_ = np.linalg.lstsq(A, np.ones_like(y), rcond=None)
    return float(coef[0]), float(coef[1])


def model_from_dict(d: dict, base_dir: Path | None = None) -> PhaseNoisePsd:
    """Build a model from a config mapping. ``file`` points to a MultiPoleZero document."""
    kind = d.get("kind", d.get("model", "power_law"))
    if kind in ("none", "off", None):
        return NoPhaseNoise()
    if kind == "power_law":
        return PowerLaw(a=float(d["a"]), n_f=float(d.get("nf", d.get("n_f", 0.0))),
                        exponent=float(d.get("exponent", 1.0)), scale=float(d.get("scale", 1.0)),
                        bin_hz=float(d.get("bin_hz", 1.0)))
    if kind == "multi_pole_zero":
        if "file" in d:
            path = Path(d["file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return load_multi_pole_zero(path)
        return _mpz_from_mapping(d)
    raise ValueError(f"unknown phase-noise kind {kind!r}")


def _mpz_from_mapping(d: dict) -> MultiPoleZero:
    def pairs(key):
        return tuple((float(e["freq_hz"]), float(e["order"])) for e in d.get(key, []) or [])
    return MultiPoleZero(psd0_dbchz=float(d["psd0_dbchz"]), zeros=pairs("zeros"),
                         poles=pairs("poles"), ref_carrier_hz=float(d["ref_carrier_hz"]),
                         label=str(d.get("label", "")))


def load_multi_pole_zero(path) -> MultiPoleZero:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"phase-noise parameter file not found: {path}")
    with path.open() as fh:
        d = yaml.safe_load(fh)
    return _mpz_from_mapping(d)


def default_mpz_path() -> Path:
    return Path(__file__).parent / "data" / "mpz_approx.yaml"


def model_params(model: PhaseNoisePsd) -> dict:
    """Flat record of a model's parameters, for reports."""
    if isinstance(model, PowerLaw):
        return {"kind": model.kind, "a": model.a, "nf": model.n_f,
                "exponent": model.exponent, "scale": model.scale}
    if isinstance(model, MultiPoleZero):
        return {"kind": model.kind, "psd0_dbchz": model.psd0_dbchz,
                "zeros": [list(z) for z in model.zeros], "poles": [list(p) for p in model.poles],
                "ref_carrier_hz": model.ref_carrier_hz, "label": model.label}
    return {"kind": "none"}
