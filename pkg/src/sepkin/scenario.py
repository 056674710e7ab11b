"""Scenario configuration: JSON schema, validation and data generation."""

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .datagen import InterferenceSpec, NoiseSpec, add_noise, apply_interference, synthesize
from .kinetics import ReactionNetwork, TimeGrid, discretize_kinetics, validate_rate_matrix
from .spectra import Fingerprint, FrequencyGrid, Peak, assemble_W

__all__ = ["ScenarioConfig", "GeneratedScenario", "load_scenario", "canonical_scenario", "bundled_scenario",
           "BUNDLED_SCENARIOS", "config_hash"]


def config_hash(d):
    """SHA-256 of the canonical JSON encoding of a config dict."""
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


@dataclass(eq=False)
class GeneratedScenario:
    measurement: object  # MeasurementSet (noisy if delta > 0)
    W: np.ndarray
    H: np.ndarray
    K: np.ndarray
    h0: np.ndarray
    fingerprints: list


@dataclass(eq=False)
class ScenarioConfig:
    name: str
    fingerprints: list
    rate_matrix: np.ndarray
    h0: np.ndarray
    frequency_grid: FrequencyGrid
    time_grid: TimeGrid
    noise: NoiseSpec
    interference: InterferenceSpec

    @classmethod
    def from_dict(cls, d):
        """Build and validate a config; raises ``ValueError`` naming the failing field."""
        try:
            fg = d["frequency_grid"]
            tg = d["time_grid"]
            fgrid = FrequencyGrid(float(fg["f_l"]), float(fg["f_u"]), int(fg["m"]))
            tgrid = TimeGrid(float(tg["T"]), int(tg["n"]))
            fps = []
            for sp in d["species"]:
                peaks = [Peak(float(p["base"]), float(p["width"]), float(p["intensity"]),
                              p.get("shape", "lorentzian")) for p in sp["peaks"]]
                fps.append(Fingerprint(str(sp["label"]), tuple(peaks)))
            rates = validate_rate_matrix(np.asarray(d["rate_matrix"], dtype=float))
            net = ReactionNetwork(rates, np.asarray(d["h0"], dtype=float))
            noise = NoiseSpec(float(d.get("noise", {}).get("delta", 0.0)),
                              int(d.get("noise", {}).get("seed", 0)))
            inter = d.get("interference") or {}
            interference = InterferenceSpec(tuple(inter.get("focal_points", (fgrid.f_l,))),
                                            float(inter.get("pull", 0.0)))
        except KeyError as exc:
            raise ValueError(f"scenario is missing field {exc}") from None
        if len(fps) != net.r:
            raise ValueError(f"{len(fps)} species given but rate matrix is {net.r}x{net.r}")
        for w in fps:
            for p in w.peaks:
                if not fgrid.contains(p.base):
                    raise ValueError(f"species {w.label}: peak base {p.base} outside "
                                     f"[{fgrid.f_l}, {fgrid.f_u}]")
        interference.check_grid(fgrid)
        return cls(d.get("name", "scenario"), fps, rates.K, net.h0, fgrid, tgrid, noise, interference)

    def to_dict(self):
        return {
            "name": self.name,
            "frequency_grid": {"f_l": self.frequency_grid.f_l, "f_u": self.frequency_grid.f_u,
                               "m": self.frequency_grid.m},
            "time_grid": {"T": self.time_grid.T, "n": self.time_grid.n},
            "rate_matrix": np.asarray(self.rate_matrix).tolist(),
            "h0": np.asarray(self.h0).tolist(),
            "species": [
                {"label": w.label,
                 "peaks": [{"base": p.base, "width": p.width, "intensity": p.intensity,
                            "shape": p.shape} for p in w.peaks]}
                for w in self.fingerprints
            ],
            "noise": {"delta": self.noise.delta, "seed": self.noise.seed},
            "interference": {"focal_points": list(self.interference.focal_points),
                             "pull": self.interference.pull},
        }

    def with_(self, pull=None, delta=None, seed=None):
        """Copy with a different interference pull, noise level or seed."""
        new = copy.copy(self)
        if pull is not None:
            new.interference = InterferenceSpec(self.interference.focal_points, float(pull))
        if delta is not None or seed is not None:
            new.noise = NoiseSpec(self.noise.delta if delta is None else float(delta),
                                  self.noise.seed if seed is None else int(seed))
        return new

    @property
    def network(self):
        return ReactionNetwork(validate_rate_matrix(self.rate_matrix), self.h0)

    def moved_fingerprints(self):
        return apply_interference(self.fingerprints, self.interference)

    def generate(self):
        fps = self.moved_fingerprints()
        net = self.network
        ms = synthesize(fps, net, self.frequency_grid, self.time_grid,
                        provenance={"scenario": self.name, "pull": self.interference.pull,
                                    "config_sha256": config_hash(self.to_dict())})
        ms = add_noise(ms, self.noise)
        W = assemble_W(fps, self.frequency_grid)
        H = discretize_kinetics(net, self.time_grid).H
        return GeneratedScenario(ms, W, H, net.rates.K.copy(), net.h0.copy(), fps)


def load_scenario(path):
    with open(path) as fh:
        return ScenarioConfig.from_dict(json.load(fh))


BUNDLED_SCENARIOS = ("canonical", "interference", "noisy")


def bundled_scenario(name):
    """One of the scenarios shipped with the package.

    ``canonical``: well separated and noiseless. ``interference``: the same
    species crowded until two dominant bands sit two widths apart.
    ``noisy``: moderate crowding plus half-normal noise with ``delta = 0.4``.
    """
    if name not in BUNDLED_SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(BUNDLED_SCENARIOS)}")
    text = resources.files("sepkin").joinpath(f"data/{name}.json").read_text()
    return ScenarioConfig.from_dict(json.loads(text))


def canonical_scenario():
    """The bundled five-species scenario (well separated, noiseless)."""
    return bundled_scenario("canonical")
