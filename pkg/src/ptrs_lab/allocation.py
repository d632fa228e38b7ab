"""PTRS allocation schemes, their slot index maps, and the aliasing predicate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NrDistributed:
    """Groups of contiguous PTRS slots, one group centered in each equal partition."""

    n_groups: int
    samples_per_group: int
    m_total: int

    def __post_init__(self):
        if self.n_groups < 1 or self.samples_per_group < 1:
            raise ValueError("n_groups and samples_per_group must be positive")
        if self.samples_per_group > self.m_total // self.n_groups:
            raise ValueError("groups do not fit their partitions")

    kind = "nr_distributed"
    in_band = True

    @property
    def n_ptrs(self) -> int:
        return self.n_groups * self.samples_per_group


@dataclass(frozen=True)
class UniformInterleaved:
    """One PTRS after every ``g`` data slots."""

    g: int
    m_total: int

    def __post_init__(self):
        if self.g < 0 or self.m_total < self.g + 1:
            raise ValueError("UniformInterleaved needs 0 <= g < m_total")

    kind = "uniform"
    in_band = True

    @property
    def n_ptrs(self) -> int:
        return self.m_total // (self.g + 1)


@dataclass(frozen=True)
class BlockSinc:
    m_ptrs: int

    def __post_init__(self):
        if self.m_ptrs < 1:
            raise ValueError("m_ptrs must be positive")

    kind = "block_sinc"
    in_band = False

    @property
    def n_ptrs(self) -> int:
        return self.m_ptrs

    @property
    def n_bins(self) -> int:
        return self.m_ptrs


@dataclass(frozen=True)
class BlockRaisedCosine:
    m_ptrs: int
    rolloff: float = 1.0

    def __post_init__(self):
        if self.m_ptrs < 1:
            raise ValueError("m_ptrs must be positive")
        if self.rolloff != 1.0:
            raise ValueError("only unit roll-off is supported")

    kind = "block_rc"
    in_band = False

    @property
    def n_ptrs(self) -> int:
        return self.m_ptrs

    @property
    def n_bins(self) -> int:
        return 2 * self.m_ptrs


AllocationScheme = NrDistributed | UniformInterleaved | BlockSinc | BlockRaisedCosine


@dataclass(frozen=True)
class IndexMap:
    ptrs_slots: np.ndarray
    data_slots: np.ndarray
    # estimation anchor position of each group, in slot units
    group_centers: np.ndarray
    group_size: int = 1

    @property
    def n_groups(self) -> int:
        return self.group_centers.size

    def groups(self) -> np.ndarray:
        """PTRS slots reshaped to (n_groups, group_size)."""
        return self.ptrs_slots.reshape(self.n_groups, self.group_size)


def _ro(a) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


def build_index_map(scheme: AllocationScheme, m_total: int | None = None) -> IndexMap:
    if m_total is None:
        m_total = getattr(scheme, "m_total", scheme.n_ptrs)
    if isinstance(scheme, NrDistributed):
        if m_total != scheme.m_total:
            raise ValueError("m_total disagrees with the scheme")
        n, s = scheme.n_groups, scheme.samples_per_group
        starts = np.array([(i * m_total) // n + ((m_total // n) - s) // 2 for i in range(n)])
        ptrs = (starts[:, None] + np.arange(s)[None, :]).ravel()
        centers = starts + (s - 1) / 2.0
        group_size = s
    elif isinstance(scheme, UniformInterleaved):
        if m_total != scheme.m_total:
            raise ValueError("m_total disagrees with the scheme")
        g = scheme.g
        ptrs = g + (g + 1) * np.arange(scheme.n_ptrs)
        centers = ptrs.astype(float)
        group_size = 1
    elif isinstance(scheme, (BlockSinc, BlockRaisedCosine)):
        if scheme.m_ptrs > m_total:
            raise ValueError("block does not fit")
        ptrs = np.arange(scheme.m_ptrs)
        return IndexMap(_ro(ptrs), _ro(np.array([], dtype=int)), _ro(ptrs.astype(float)), 1)
    else:
        raise TypeError(f"unknown scheme {scheme!r}")
    if ptrs.size and ptrs[-1] >= m_total:
        raise ValueError("scheme does not fit in m_total slots")
    data = np.setdiff1d(np.arange(m_total), ptrs)
    return IndexMap(_ro(ptrs), _ro(data), _ro(centers), group_size)


@dataclass(frozen=True)
class AliasingResult:
    window_hz: float
    rep_rate_hz: float
    aliased: bool


def aliasing_check(m_occupied_bins: int, n_pulses: int, T: float) -> AliasingResult:
    """W = one-sided occupied window, f_s = pulse repetition rate; aliasing iff W > f_s."""
    if m_occupied_bins < 1 or n_pulses < 1 or not T > 0:
        raise ValueError("bins and pulses must be >= 1 and T > 0")
    W = m_occupied_bins / (2.0 * T)
    fs = n_pulses / T
    return AliasingResult(W, fs, bool(W > fs))


def rc_spectral_weights(m_ptrs: int, normalize: bool = True) -> np.ndarray:
    """Unit roll-off raised-cosine response on the doubled band of 2*m_ptrs bins.

    Bin j of the band sits at offset f = j - m_ptrs from the band center, where the
    response is cos^2(pi f / (2 m_ptrs)). With ``normalize`` the weights are scaled so
    a flat m_ptrs-point spectrum carries the same energy as the unshaped sinc block.
    """
    if m_ptrs < 1:
        raise ValueError("m_ptrs must be positive")
    f = np.arange(-m_ptrs, m_ptrs)
    w = np.cos(np.pi * f / (2 * m_ptrs)) ** 2
    if normalize:
        w = w * np.sqrt(m_ptrs / np.sum(w ** 2))
    return w


def scheme_from_dict(d: dict, m_total: int | None = None) -> AllocationScheme:
    kind = d["type"]
    if kind == "nr_distributed":
        return NrDistributed(int(d["n_groups"]), int(d["samples_per_group"]),
                             int(d.get("m_total", m_total)))
    if kind == "uniform":
        return UniformInterleaved(int(d["g"]), int(d.get("m_total", m_total)))
    if kind == "block_sinc":
        return BlockSinc(int(d["m_ptrs"]))
    if kind == "block_rc":
        return BlockRaisedCosine(int(d["m_ptrs"]), float(d.get("rolloff", 1.0)))
    raise ValueError(f"unknown scheme type {kind!r}")


def scheme_to_dict(s: AllocationScheme) -> dict:
    out = {"type": s.kind}
    out.update({k: getattr(s, k) for k in s.__dataclass_fields__})
    return out
