import warnings

import numpy as np
import pytest

from sepkin.pipeline import analyze
from sepkin.ratefit import fit_rates, score_recovery
from sepkin.scenario import bundled_scenario

EQ_K = np.array([
    [-0.53, 0.02, 0.0, 0.0, 0.0],
    [0.53, -0.66, 0.25, 0.0, 0.0],
    [0.0, 0.43, -0.36, 0.0, 0.1],
    [0.0, 0.21, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.11, 0.0, -0.1],
])
EQ_H0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0])


def run_pipeline(cfg, r=5, window=1, fit=False):
    """Generate, analyse, score and optionally fit one scenario."""
    g = cfg.generate()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = analyze(g.measurement.M, r=r, window=window)
    out = {"gen": g, "res": res}
    if res.r == g.H.shape[0]:
        sc = score_recovery(g.W, g.H, res.W, res.H)
        out.update(sc)
        if fit:
            perm = np.asarray(sc["perm"])
            out["fit"] = fit_rates(res.H[perm], g.measurement.times, h0=g.h0)
    return out


@pytest.fixture(scope="session")
def canonical():
    return bundled_scenario("canonical")


@pytest.fixture(scope="session")
def canonical_data(canonical):
    return canonical.generate()


@pytest.fixture(scope="session")
def noiseless_run(canonical):
    return run_pipeline(canonical, fit=True)


@pytest.fixture(scope="session")
def noisy_data():
    return bundled_scenario("noisy").generate()


# ------------------------------------------------------------------ acceptance report

ACCEPTANCE = {}
_SESSION = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_sessionstart(session):
    import time
    _SESSION["t0"] = time.perf_counter()


def pytest_collection_modifyitems(items):
    _SESSION["property_ids"] = {
        item.nodeid for item in items
        if getattr(getattr(item, "obj", None), "is_hypothesis_test", False)
    }


def pytest_terminal_summary(terminalreporter):
    import time
    elapsed = time.perf_counter() - _SESSION.get("t0", time.perf_counter())
    prop_ids = _SESSION.get("property_ids", set())
    if prop_ids:
        failed = {r.nodeid for key in ("failed", "error")
                  for r in terminalreporter.stats.get(key, []) if r.nodeid in prop_ids}
        passed = {r.nodeid for r in terminalreporter.stats.get("passed", [])
                  if r.nodeid in prop_ids and r.when == "call"}
        ok = not failed and len(passed) == len(prop_ids) and elapsed <= 300
        record(7, ok, f"{len(passed)}/{len(prop_ids)} property suites passed (>= 100 cases each), "
                      f"suite runtime {elapsed:.0f} s (limit 300 s)")
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
