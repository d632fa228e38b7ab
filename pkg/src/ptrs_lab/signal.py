"""Complex baseband containers and the transform primitives used by every chain step.

All transforms are unitary (1/sqrt(L) on both directions) so that energy is
preserved through any chain of DFTs, IFFTs and band mappings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComplexSignal:
    """A finite run of complex baseband samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate_hz: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.complex128)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("ComplexSignal needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(x)):
            raise ValueError("ComplexSignal samples must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)

    def with_samples(self, samples) -> "ComplexSignal":
        return ComplexSignal(samples, self.sample_rate_hz)


@dataclass(frozen=True)
class FrameConfig:
    """Dimensioning of one DFT-s-OFDM symbol.

    ``m_data``/``m_ptrs`` are the data and PTRS DFT sizes in block mode. In the
    single-DFT (NR) mode the DFT size is ``m_data + m_ptrs``.
    """

    n_ifft: int
    m_data: int
    m_ptrs: int = 0
    g_f: int = 0
    scs_hz: float = 15e3
    cp_len: int = 0
    ptrs_amp_scale: float = 1.0
    # receiver folds this many bins on each side of the block PTRS band
    ptrs_guard_bins: int = 0

    def __post_init__(self):
        if self.n_ifft < 1 or self.m_data < 1:
            raise ValueError("n_ifft and m_data must be positive")
        if self.m_ptrs < 0 or self.g_f < 0 or self.cp_len < 0:
            raise ValueError("m_ptrs, g_f and cp_len must be non-negative")
        if self.m_data + self.m_ptrs > self.n_ifft:
            raise ValueError("m_data + m_ptrs exceeds n_ifft")
        if not self.scs_hz > 0 or not self.ptrs_amp_scale > 0:
            raise ValueError("scs_hz and ptrs_amp_scale must be positive")
        if not 0 <= self.ptrs_guard_bins <= self.g_f:
            raise ValueError("ptrs_guard_bins must lie in [0, g_f] so data bins are never folded")

    @property
    def symbol_duration(self) -> float:
        return 1.0 / self.scs_hz

    @property
    def sample_rate_hz(self) -> float:
        return self.n_ifft * self.scs_hz

    @property
    def m_total(self) -> int:
        return self.m_data + self.m_ptrs

    def fits_block(self, ptrs_bins: int | None = None) -> bool:
        bins = self.m_ptrs if ptrs_bins is None else ptrs_bins
        return self.m_data + self.g_f + bins + self.ptrs_guard_bins <= self.n_ifft

    @property
    def ptrs_band_start(self) -> int:
        return self.m_data + self.g_f

    @classmethod
    def with_normal_cp(cls, n_ifft: int, m_data: int, **kw) -> "FrameConfig":
        """Config with the normal CP mapped to round(N*144/2048) samples."""
        return cls(n_ifft=n_ifft, m_data=m_data, cp_len=normal_cp_len(n_ifft), **kw)


def normal_cp_len(n_ifft: int) -> int:
    return int(round(n_ifft * 144 / 2048))


def _as_signal(x) -> ComplexSignal:
    return x if isinstance(x, ComplexSignal) else ComplexSignal(x)


def fft(x: ComplexSignal) -> ComplexSignal:
    """Unitary forward DFT. Arbitrary lengths (mixed radix / Bluestein inside pocketfft)."""
    x = _as_signal(x)
    return x.with_samples(np.fft.fft(x.samples, norm="ortho"))


def ifft(x: ComplexSignal) -> ComplexSignal:
    """Unitary inverse DFT, the exact inverse of :func:`fft`."""
    x = _as_signal(x)
    return x.with_samples(np.fft.ifft(x.samples, norm="ortho"))


def dft_spread(symbols: ComplexSignal, n_ifft: int, band_start: int) -> ComplexSignal:
    """Place the m-point DFT of ``symbols`` on bins [band_start, band_start + m) of an n_ifft grid."""
    symbols = _as_signal(symbols)
    m = len(symbols)
    if band_start < 0 or band_start + m > n_ifft:
        raise ValueError(f"band [{band_start}, {band_start + m}) overflows a {n_ifft}-bin grid")
    grid = np.zeros(n_ifft, dtype=np.complex128)
    grid[band_start:band_start + m] = np.fft.fft(symbols.samples, norm="ortho")
    # the grid lives at the oversampled rate
    return ComplexSignal(grid, symbols.sample_rate_hz * n_ifft / m)


def add_cp(x: ComplexSignal, cp_len: int) -> ComplexSignal:
    x = _as_signal(x)
    if not 0 <= cp_len < len(x):
        raise ValueError(f"cp_len={cp_len} must be in [0, {len(x)})")
    if cp_len == 0:
        return x
    return x.with_samples(np.concatenate([x.samples[-cp_len:], x.samples]))


def remove_cp(x: ComplexSignal, cp_len: int) -> ComplexSignal:
    x = _as_signal(x)
    if not 0 <= cp_len < len(x):
        raise ValueError(f"cp_len={cp_len} must be in [0, {len(x)})")
    return x.with_samples(x.samples[cp_len:])
