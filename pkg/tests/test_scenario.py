import copy
import json

import numpy as np
import pytest

from sepkin.scenario import (BUNDLED_SCENARIOS, ScenarioConfig, bundled_scenario, config_hash,
                             load_scenario)

from conftest import EQ_H0, EQ_K


def test_canonical_defaults(canonical):
    assert len(canonical.fingerprints) == 5
    np.testing.assert_array_equal(canonical.rate_matrix, EQ_K)
    np.testing.assert_array_equal(canonical.h0, EQ_H0)
    fg, tg = canonical.frequency_grid, canonical.time_grid
    assert (fg.f_l, fg.f_u, fg.m, tg.T, tg.n) == (400.0, 1800.0, 700, 20.0, 100)
    assert all(3 <= len(w.peaks) <= 5 for w in canonical.fingerprints)
    assert canonical.noise.delta == 0.0 and canonical.interference.pull == 0.0


@pytest.mark.parametrize("name", BUNDLED_SCENARIOS)
def test_round_trip(name):
    cfg = bundled_scenario(name)
    d = cfg.to_dict()
    assert ScenarioConfig.from_dict(json.loads(json.dumps(d))).to_dict() == d


def test_unknown_bundled():
    with pytest.raises(ValueError, match="unknown scenario"):
        bundled_scenario("nope")


def test_generation_is_deterministic():
    cfg = bundled_scenario("noisy")
    a, b = cfg.generate(), cfg.generate()
    np.testing.assert_array_equal(a.measurement.M, b.measurement.M)
    assert a.measurement.provenance["config_sha256"] == config_hash(cfg.to_dict())


def test_with_overrides(canonical):
    cfg = canonical.with_(pull=0.3, delta=0.2, seed=9)
    assert (cfg.interference.pull, cfg.noise.delta, cfg.noise.seed) == (0.3, 0.2, 9)
    assert canonical.interference.pull == 0.0


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.pop("rate_matrix"), "rate_matrix"),
    (lambda d: d["species"].pop(), "species"),
    (lambda d: d["species"][0]["peaks"][0].update(base=100.0), "outside"),
    (lambda d: d["species"][0]["peaks"][0].update(width=0.0), "width"),
    (lambda d: d["interference"].update(focal_points=[5000.0]), "focal point"),
    (lambda d: d["interference"].update(pull=2.0), "pull"),
    (lambda d: d.update(h0=[0.5, 0, 0, 0, 0]), "h0"),
    (lambda d: d["rate_matrix"][1].__setitem__(0, -0.53), r"negative off-diagonal \(2,1\)"),
])
def test_invalid_configs_name_the_problem(canonical, mutate, field):
    d = copy.deepcopy(canonical.to_dict())
    mutate(d)
    with pytest.raises(ValueError, match=field):
        ScenarioConfig.from_dict(d)


def test_load_from_file(tmp_path, canonical):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(canonical.to_dict()))
    assert load_scenario(p).to_dict() == canonical.to_dict()
