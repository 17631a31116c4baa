"""Closed-form FPGA resource estimates for the decoders.

Counts flip-flops, LUTs, BRAM and URAM blocks per architectural component
(no synthesis).  BRAM blocks hold 36Kb configured as 36x1024 (or 1-bit
wide and deep); URAM blocks hold 288Kb as 72x4096.  The decoding matrix
lives in BRAM unless the design's total BRAM demand would not fit the
device, in which case it moves to URAM.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "DeviceProfile",
    "ResourceCounts",
    "ResourceEstimate",
    "VU19P",
    "RELAY_GROSS_UTILIZATION",
    "STANDARD_OSD_GROSS_UTILIZATION",
    "estimate_osd_resources",
    "estimate_cluster_resources",
    "utilization",
]

BRAM_BITS = 36 * 1024


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class DeviceProfile:
    ffs: int
    luts: int
    brams: int
    urams: int

    def __post_init__(self):
        if min(self.ffs, self.luts, self.brams, self.urams) <= 0:
            raise ValueError("device resources must be positive")


VU19P = DeviceProfile(ffs=8_171_520, luts=4_085_760, brams=2_160, urams=320)

# published figures for decoders whose gateware is external to this package;
# both are gross-code rows, no two-gross figures were reported
RELAY_GROSS_UTILIZATION = {"ffs": 7, "luts": 52, "brams": 1, "urams": 0}
STANDARD_OSD_GROSS_UTILIZATION = {"ffs": 25, "luts": 39, "brams": 25, "urams": 0}


@dataclass(frozen=True)
class ResourceCounts:
    ffs: int = 0
    luts: int = 0
    brams: int = 0
    urams: int = 0

    def __add__(self, other: "ResourceCounts") -> "ResourceCounts":
        return ResourceCounts(self.ffs + other.ffs, self.luts + other.luts,
                              self.brams + other.brams,
                              self.urams + other.urams)


@dataclass(frozen=True)
class ResourceEstimate:
    ffs: int
    luts: int
    brams: int
    urams: int
    breakdown: dict[str, ResourceCounts] = field(compare=False)

    def __post_init__(self):
        total = sum(self.breakdown.values(), ResourceCounts())
        if (total.ffs, total.luts, total.brams, total.urams) != \
                (self.ffs, self.luts, self.brams, self.urams):
            raise ValueError("breakdown does not sum to totals")


def _from_breakdown(parts: dict[str, ResourceCounts]) -> ResourceEstimate:
    total = sum(parts.values(), ResourceCounts())
    return ResourceEstimate(total.ffs, total.luts, total.brams, total.urams,
                            dict(parts))


def h_storage_options(m: int, n: int) -> tuple[int, int]:
    """(BRAM count, URAM count) for the column-major decoding matrix."""
    brams = _ceil_div(m, 36) * _ceil_div(n, 1024)
    urams = _ceil_div(m, 72) * _ceil_div(n, 4096)
    return brams, urams


def _place_h(parts: dict[str, ResourceCounts], m: int, n: int,
             profile: DeviceProfile) -> None:
    h_bram, h_uram = h_storage_options(m, n)
    other_brams = sum(p.brams for p in parts.values())
    if h_bram + other_brams > profile.brams:
        parts["h_storage"] = ResourceCounts(urams=h_uram)
    else:
        parts["h_storage"] = ResourceCounts(brams=h_bram)


def estimate_osd_resources(m: int, n: int, r_max: int = 500, banking: int = 8,
                           zero_filter_blocks: int = 9,
                           profile: DeviceProfile = VU19P) -> ResourceEstimate:
    """Filtered-OSD datapath: banked LLR store, broadcast sorter, permuted
    submatrix registers, zero-row filter, systolic solver, output buffer."""
    if min(m, n, r_max, banking, zero_filter_blocks) < 1:
        raise ValueError("dimensions must be positive")
    parts = {
        "llr_store": ResourceCounts(
            brams=_ceil_div(banking * 32 * n, BRAM_BITS) + 2),
        "sorter": ResourceCounts(ffs=r_max * 48, luts=r_max * 16),
        "submatrix": ResourceCounts(ffs=m * r_max),
        "zero_filter": ResourceCounts(luts=zero_filter_blocks * r_max,
                                      brams=zero_filter_blocks),
        "solver": ResourceCounts(ffs=r_max * (r_max + 1),
                                 luts=3 * r_max * (r_max + 1)),
        "output": ResourceCounts(brams=1),
    }
    _place_h(parts, m, n, profile)
    return _from_breakdown(parts)


def estimate_cluster_resources(m: int, n: int, n_clus: int = 50,
                               solver_sizes: Sequence[tuple[int, int]] = (
                                   (18, 18), (18, 36), (36, 72), (72, 144),
                                   (144, 288)),
                               profile: DeviceProfile = VU19P
                               ) -> ResourceEstimate:
    """Cluster decoder datapath: bitmap registers, shared grow/merge
    bitwise networks, one systolic solver per provisioned size with its
    staging registers, index buckets, and per-row intermediate matrix."""
    if min(m, n, n_clus) < 1 or not solver_sizes:
        raise ValueError("dimensions must be positive")
    k = m + n
    parts = {
        "cluster_store": ResourceCounts(ffs=n_clus * k),
        # AND and OR networks plus the reused 6-ary OR-reduction tree
        "grow_merge": ResourceCounts(luts=2 * k + _ceil_div(k, 6)),
        # 32-bit buckets of 16-bit indices, provisioned for N/4 of them
        "index_buckets": ResourceCounts(brams=_ceil_div(4 * n, BRAM_BITS)),
        "intermediate": ResourceCounts(
            brams=sum(r for r, _ in solver_sizes)),
    }
    for r, c in solver_sizes:
        parts[f"solver_{r}x{c}"] = ResourceCounts(
            ffs=c * (c + 1) + r * c, luts=3 * c * (c + 1))
    _place_h(parts, m, n, profile)
    return _from_breakdown(parts)


def utilization(estimate: ResourceEstimate, profile: DeviceProfile
                ) -> dict[str, int]:
    """Each resource as an integer percentage of the device."""
    return {
        "ffs": round(100 * estimate.ffs / profile.ffs),
        "luts": round(100 * estimate.luts / profile.luts),
        "brams": round(100 * estimate.brams / profile.brams),
        "urams": round(100 * estimate.urams / profile.urams),
    }
