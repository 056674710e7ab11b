"""Peak functions, species fingerprints and their discretisation on a
frequency grid."""

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "Peak",
    "Fingerprint",
    "FrequencyGrid",
    "peak_eval",
    "fingerprint_eval",
    "assemble_W",
]

_LN2 = np.log(2.0)
SHAPES = ("lorentzian", "gaussian")


@dataclass(frozen=True)
class Peak:
    """A single band. ``width`` is the half-width at half-maximum for both shapes."""

    base: float
    width: float
    intensity: float
    shape: str = "lorentzian"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown peak shape {self.shape!r}; expected one of {SHAPES}")
        if not np.isfinite(self.base):
            raise ValueError("peak base must be finite")
        if not self.width > 0:
            raise ValueError(f"peak width must be > 0, got {self.width}")
        if not self.intensity > 0:
            raise ValueError(f"peak intensity must be > 0, got {self.intensity}")

    def moved_to(self, base):
        return replace(self, base=float(base))


@dataclass(frozen=True)
class Fingerprint:
    label: str
    peaks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        if not self.peaks:
            raise ValueError(f"fingerprint {self.label!r} needs at least one peak")

    @property
    def dominant(self):
        """The tallest peak (first one on ties)."""
        return max(self.peaks, key=lambda p: p.intensity)


@dataclass(frozen=True)
class FrequencyGrid:
    """Equidistant grid ``f_l = x_1 < ... < x_m = f_u``."""

    f_l: float
    f_u: float
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"frequency grid needs m >= 2 points, got {self.m}")
        if not self.f_l < self.f_u:
            raise ValueError(f"need f_l < f_u, got [{self.f_l}, {self.f_u}]")

    @property
    def points(self):
        return np.linspace(self.f_l, self.f_u, int(self.m))

    @property
    def step(self):
        return (self.f_u - self.f_l) / (self.m - 1)

    def contains(self, x):
        return self.f_l <= x <= self.f_u


def peak_eval(p, x):
    """Evaluate peak ``p`` at frequency (or array of frequencies) ``x``.

    Lorentzian: ``I * g**2 / ((x - x0)**2 + g**2)``.
    Gaussian: ``I * exp(-ln2 * (x - x0)**2 / g**2)``, which shares the
    maximum and the half-height crossings at ``x0 +- g``.
    """
    x = np.asarray(x, dtype=np.float64)
    d2 = (x - p.base) ** 2
    g2 = p.width * p.width
    if p.shape == "lorentzian":
        # this form hits exactly I/2 at x0 +- g
        return p.intensity / (1.0 + d2 / g2)
    return p.intensity * np.exp(-_LN2 * d2 / g2)


def fingerprint_eval(w, grid):
    """Component spectrum of ``w`` sampled on ``grid`` (length ``m``)."""
    x = grid.points if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=np.float64)
    out = np.zeros(x.shape)
    for p in w.peaks:
        out += peak_eval(p, x)
    return out


def assemble_W(fingerprints: Sequence[Fingerprint], grid):
    """Stack fingerprints as the columns of the spectra matrix, shape ``(m, r)``."""
    if len(fingerprints) < 1:
        raise ValueError("need at least one fingerprint")
    return np.column_stack([fingerprint_eval(w, grid) for w in fingerprints])
