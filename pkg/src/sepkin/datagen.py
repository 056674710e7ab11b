"""Synthetic time-resolved measurements: ``M = W H`` with optional band
crowding and additive half-normal noise."""

from dataclasses import dataclass, field, replace

import numpy as np

from .kinetics import TimeGrid, discretize_kinetics
from .spectra import Fingerprint, FrequencyGrid, assemble_W

__all__ = [
    "MeasurementSet",
    "NoiseSpec",
    "InterferenceSpec",
    "synthesize",
    "apply_interference",
    "add_noise",
    "make_rng",
]


def make_rng(seed):
    """Seeded PCG64 generator; the stream is fixed by numpy's documented algorithm."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class NoiseSpec:
    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError(f"noise level delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class InterferenceSpec:
    focal_points: tuple
    pull: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "focal_points", tuple(float(f) for f in self.focal_points))
        if not self.focal_points:
            raise ValueError("need at least one focal point")
        if not 0.0 <= self.pull <= 1.0:
            raise ValueError(f"pull must lie in [0, 1], got {self.pull}")

    def check_grid(self, grid):
        for f in self.focal_points:
            if not grid.contains(f):
                raise ValueError(f"focal point {f} outside [{grid.f_l}, {grid.f_u}]")


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Data matrix ``M`` (frequencies x times) with its grids and provenance."""

    frequencies: np.ndarray
    times: np.ndarray
    M: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        M = np.asarray(self.M, dtype=np.float64)
        if M.shape != (len(self.frequencies), len(self.times)):
            raise ValueError(
                f"M has shape {M.shape}, grids give {(len(self.frequencies), len(self.times))}"
            )
        if np.any(M < 0) or not np.all(np.isfinite(M)):
            raise ValueError("measurement matrix must be finite and non-negative")
        object.__setattr__(self, "M", M)


def synthesize(fingerprints, net, fgrid, tgrid, provenance=None):
    """Noise-free measurement ``W @ H`` for the given species and network."""
    fingerprints = list(fingerprints)
    if len(fingerprints) != net.r:
        raise ValueError(f"{len(fingerprints)} fingerprints but the network has {net.r} species")
    W = assemble_W(fingerprints, fgrid)
    kin = discretize_kinetics(net, tgrid)
    freqs = fgrid.points if isinstance(fgrid, FrequencyGrid) else np.asarray(fgrid, float)
    return MeasurementSet(freqs, kin.times, W @ kin.H, dict(provenance or {}))


def apply_interference(fingerprints, spec):
    """Move every peak base toward its nearest focal point by fraction ``pull``.

    Ties between two equidistant focal points go to the lower one.
    """
    # sorted, so argmin's first hit on a tie is the lower focal point
    focal = np.sort(np.asarray(spec.focal_points))
    out = []
    for w in fingerprints:
        peaks = []
        for p in w.peaks:
            target = focal[np.argmin(np.abs(focal - p.base))]
            if spec.pull == 1.0:
                new = target
            else:
                new = p.base + spec.pull * (target - p.base)
            peaks.append(p.moved_to(new))
        out.append(Fingerprint(w.label, tuple(peaks)))
    return out


def add_noise(ms, spec):
    """``M + delta * |N|`` with ``N`` i.i.d. standard normal from the seeded stream."""
    prov = dict(ms.provenance, delta=spec.delta, seed=spec.seed)
    if spec.delta == 0:
        return replace(ms, M=ms.M.copy(), provenance=prov)
    N = make_rng(spec.seed).standard_normal(ms.M.shape)
    return replace(ms, M=ms.M + spec.delta * np.abs(N), provenance=prov)
