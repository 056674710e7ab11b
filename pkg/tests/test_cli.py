import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from sepkin.cli import cell_seed, main
from sepkin.io import read_labeled_csv
from sepkin.sepnmf import align_species


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run("synth", "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def analyzed(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("analyze")
    assert run("analyze", synth_dir / "M.csv", "-r", 5, "--window", 1, "--out", out) == 0
    return out


def test_synth_outputs_and_byte_stability(synth_dir, tmp_path):
    for name in ("M.csv", "W_true.csv", "H_true.csv", "K_true.json", "fingerprints.json",
                 "config.json", "provenance.json"):
        assert (synth_dir / name).exists()
    M, f, t = read_labeled_csv(synth_dir / "M.csv")
    assert M.shape == (700, 100)
    assert run("synth", "--out", tmp_path) == 0
    assert (tmp_path / "M.csv").read_bytes() == (synth_dir / "M.csv").read_bytes()


def test_synth_noisy_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("synth", "--noise", 0.4, "--seed", 3, "--out", d) == 0
    assert (a / "M.csv").read_bytes() == (b / "M.csv").read_bytes()
    prov = json.loads((a / "provenance.json").read_text())
    assert prov["delta"] == 0.4 and prov["seed"] == 3 and len(prov["config_sha256"]) == 64


def test_synth_pull_moves_bases(tmp_path, canonical):
    assert run("synth", "--pull", 0.6, "--out", tmp_path) == 0
    fp = json.loads((tmp_path / "fingerprints.json").read_text())
    focal = np.array(canonical.interference.focal_points)
    for w0, w in zip(canonical.fingerprints, fp["species"]):
        for p0, p in zip(w0.peaks, w["peaks"]):
            target = focal[np.argmin(np.abs(focal - p0.base))]
            assert p["base"] == pytest.approx(p0.base + 0.6 * (target - p0.base), abs=1e-9)


def test_synth_invalid_config(tmp_path, canonical):
    d = canonical.to_dict()
    d["rate_matrix"][1][0] = -0.53
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(d))
    assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 1


def test_analyze_report(analyzed, synth_dir):
    rep = json.loads((analyzed / "report.json").read_text())
    assert rep["r"] == 5 and len(rep["characteristic_frequencies"]) == 5
    assert rep["source_provenance"]["config_sha256"]
    assert rep["flags"]["window"] == 1
    assert rep["input"]["sha256"]
    W, _, labels = read_labeled_csv(analyzed / "W.csv")
    assert W.shape == (700, 5) and labels == ["S1", "S2", "S3", "S4", "S5"]
    for name in ["kinetics.txt"] + [f"spectrum_S{i}.txt" for i in range(1, 6)]:
        data = np.loadtxt(analyzed / "plot_data" / name)
        assert data.ndim == 2 and np.all(np.isfinite(data))


def test_analyze_noiseless_residual(analyzed):
    rep = json.loads((analyzed / "report.json").read_text())
    assert rep["relative_residual"] <= 1e-6


def test_analyze_auto_rank(synth_dir, tmp_path):
    assert run("analyze", synth_dir / "M.csv", "--auto-rank", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["r"] == 5 and rep["auto_rank"] is True


@pytest.mark.parametrize("argv", [["-r", "0"], []])
def test_analyze_usage_errors(synth_dir, tmp_path, argv):
    with pytest.raises(SystemExit) as exc:
        run("analyze", synth_dir / "M.csv", *argv, "--out", tmp_path)
    assert exc.value.code == 2


def test_analyze_bad_input(tmp_path):
    bad = tmp_path / "M.csv"
    bad.write_text(",0,1\n400,1,-1\n")
    assert run("analyze", bad, "-r", 1, "--out", tmp_path / "o") == 1
    assert run("analyze", tmp_path / "missing.csv", "-r", 1, "--out", tmp_path / "o") == 1


def test_fit_rates_on_true_kinetics(synth_dir, tmp_path, canonical):
    out = tmp_path / "K.json"
    assert run("fit-rates", synth_dir / "H_true.csv", "--h0", synth_dir / "K_true.json",
               "--out", out) == 0
    K = np.array(json.loads(out.read_text())["K"])
    assert np.abs(K - canonical.rate_matrix).max() <= 1e-4


def test_fit_rates_on_recovered_kinetics(analyzed, tmp_path, canonical):
    out = tmp_path / "K.json"
    assert run("fit-rates", analyzed / "H.csv", "--h0-from-first-column", "--out", out) == 0
    payload = json.loads(out.read_text())
    K = np.array(payload["K"])
    # recovered species come in selection order; align them to the true spectra
    W, _, _ = read_labeled_csv(analyzed / "W.csv")
    p = align_species(canonical.generate().W, W)
    assert np.abs(K[np.ix_(p, p)] - canonical.rate_matrix).max() <= 0.03


def test_fit_rates_single_species(tmp_path):
    H = tmp_path / "H.csv"
    H.write_text(",0,1,2,3\nS1,1,1,1,1\n")
    out = tmp_path / "K.json"
    assert run("fit-rates", H, "--h0-from-first-column", "--out", out) == 0
    assert json.loads(out.read_text())["K"] == [[0.0]]


def test_fit_rates_usage(tmp_path):
    with pytest.raises(SystemExit):
        run("fit-rates", tmp_path / "H.csv", "--out", tmp_path / "K.json")


def test_cell_seeds_are_deterministic_and_distinct():
    seeds = [cell_seed(0, i) for i in range(50)]
    assert seeds == [cell_seed(0, i) for i in range(50)]
    assert len(set(seeds)) == 50


def read_bench(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench") / "bench.csv"
    assert run("benchmark", "--pull-sweep", "0,0.5,0.75,1", "--delta-sweep", "0",
               "--window", 1, "--workers", 1, "--out", out) == 0
    return read_bench(out)


def test_benchmark_golden_cell(sweep, noiseless_run):
    row = sweep[0]
    assert row["status"] == "ok"
    assert float(row["kinetics_error"]) == pytest.approx(noiseless_run["kinetics_error"], rel=1e-9)
    assert float(row["spectra_error"]) == pytest.approx(noiseless_run["spectra_error"], rel=1e-9)


def test_benchmark_degrades_with_pull(sweep):
    # without noise the seed does not enter, so one replicate per pull is the median
    ke = [float(r["kinetics_error"]) for r in sweep]
    se = [float(r["spectra_error"]) for r in sweep]
    assert ke == sorted(ke) and se == sorted(se)
    assert ke[-1] > 0.25


def test_benchmark_noisy_row_and_pool(tmp_path):
    out = tmp_path / "b.csv"
    assert run("benchmark", "--scenario", "noisy", "--pull-sweep", "0.5", "--delta-sweep", "0.4",
               "--seeds", 2, "--workers", 2, "--out", out) == 0
    rows = read_bench(out)
    assert len(rows) == 2
    for row in rows:
        assert row["status"] == "ok"
        for key in ("kinetics_error", "spectra_error", "max_K_error"):
            assert np.isfinite(float(row[key]))
    serial = tmp_path / "s.csv"
    assert run("benchmark", "--scenario", "noisy", "--pull-sweep", "0.5", "--delta-sweep", "0.4",
               "--seeds", 2, "--workers", 1, "--out", serial) == 0
    strip = lambda rs: [{k: v for k, v in r.items() if k != "runtime_s"} for r in rs]
    assert strip(read_bench(serial)) == strip(rows)


def test_benchmark_records_failures_in_row(tmp_path, canonical):
    d = canonical.to_dict()
    d["time_grid"]["n"] = 3  # fewer time points than species: the rate fit refuses
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(d))
    out = tmp_path / "b.csv"
    assert run("benchmark", "--config", cfg, "--workers", 1, "--window", 1, "--out", out) == 0
    row = read_bench(out)[0]
    assert row["status"] == "error" and "time points" in row["detail"]


def test_console_exit_codes_and_log_env(tmp_path):
    env = dict(os.environ, SEPKIN_LOG_LEVEL="INFO")
    ok = subprocess.run([sys.executable, "-m", "sepkin.cli", "synth", "--out", str(tmp_path)],
                        env=env, capture_output=True, text=True)
    assert ok.returncode == 0 and "INFO" in ok.stderr
    bad = subprocess.run([sys.executable, "-m", "sepkin.cli", "analyze", str(tmp_path / "x.csv"),
                          "-r", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert bad.returncode == 1 and "error" in bad.stderr
