import csv
import json
import math

import numpy as np
import pytest
from scipy import stats

from kpzlab.errors import DomainError
from kpzlab.harness.cli import main
from kpzlab.harness.config import read_config, resolve, split_run_keys
from kpzlab.harness.runner import chunks, ordered_map
from kpzlab.harness.stats import ks_test, log_linear_fit, wilson_ci
from kpzlab.harness.streams import derive_stream


# streams

def test_same_triple_same_stream():
    a = derive_stream(7, "demo", 3).random(1000)
    b = derive_stream(7, "demo", 3).random(1000)
    assert np.array_equal(a, b)


def test_streams_differ_across_keys():
    base = derive_stream(7, "demo", 3).random(10)
    for other in (derive_stream(8, "demo", 3), derive_stream(7, "demo2", 3), derive_stream(7, "demo", 4),
                  derive_stream(7 + 2 ** 32, "demo", 3)):
        assert not np.array_equal(base, other.random(10))


def test_replications_uncorrelated():
    a = derive_stream(0, "probe", 0).standard_normal(10 ** 6)
    b = derive_stream(0, "probe", 1).standard_normal(10 ** 6)
    assert abs(np.corrcoef(a, b)[0, 1]) < 3e-3


# statistics

def test_ks_against_own_ecdf():
    # the midpoint empirical CDF, (i - 1/2) / N at the i-th order statistic
    x = np.sort(derive_stream(0, "ks", 0).normal(size=500))
    stat, _ = ks_test(x, lambda t: (np.searchsorted(x, t, side="right") - 0.5) / len(x))
    assert stat <= 1 / (2 * len(x)) + 1e-12


def test_ks_normal_sample():
    x = derive_stream(0, "ks", 1).standard_normal(10 ** 5)
    stat, p = ks_test(x, stats.norm.cdf)
    assert p > 1e-3 and (stat, p) == ks_test(x, stats.norm.cdf)


def test_ks_disjoint_samples():
    assert ks_test([0.0, 1.0, 2.0], [5.0, 6.0])[0] == 1.0


def test_wilson_interval():
    assert wilson_ci(0, 40)[0] == 0.0
    assert wilson_ci(40, 40)[1] == 1.0
    lo, hi = wilson_ci(50, 100, 0.95)
    assert lo == pytest.approx(0.403831530366, abs=1e-10)
    assert hi == pytest.approx(0.596168469634, abs=1e-10)


def test_log_linear_fit_exact_line():
    levels = np.arange(1, 8)
    slope, intercept, r2 = log_linear_fit(levels, np.exp(-0.7 * levels + 0.2))
    assert slope == pytest.approx(-0.7) and intercept == pytest.approx(0.2) and r2 == pytest.approx(1.0)


# configuration and scheduling

def test_config_parsing(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\ndraws = 20\n\nseed=5  # trailing\nn = 2, 5\n")
    cfg = read_config(p)
    run, rest = split_run_keys(cfg)
    assert run == {"seed": "5"}
    params = resolve({"draws": 1, "n": (1, 2)}, rest)
    assert params == {"draws": 20, "n": (2, 5)}


@pytest.mark.parametrize("text", ["draws 20\n", "= 3\n", "a = 1\na = 2\n"])
def test_config_errors(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(DomainError):
        read_config(p)


def test_resolve_rejects_unknown_and_bad_values():
    with pytest.raises(DomainError):
        resolve({"draws": 1}, {"drawz": "3"})
    with pytest.raises(DomainError):
        resolve({"draws": 1}, {"draws": "many"})


def test_chunks_cover_total():
    assert chunks(10, 4) == [(0, 4), (1, 4), (2, 2)]
    assert chunks(0, 4) == []


def _square(x):
    return x * x


def test_ordered_map_keeps_order():
    assert ordered_map(_square, range(6), workers=3) == [x * x for x in range(6)]


# command line

def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "nt-arcsine" in out and "analytic-lemmas" in out and len(out.strip().splitlines()) == 19


def test_cli_zero_draws_is_vacuous(tmp_path, capsys):
    assert main(["run", "bridge-sup", "--draws", "0", "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "bridge-sup.csv")
    assert len(rows) == 1 and rows[0]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "bridge-sup" in manifest["experiments"]


def test_cli_draws_rejected_without_parameter(tmp_path, capsys):
    assert main(["run", "meander-bounds", "--draws", "5", "--out", str(tmp_path)]) == 2
    assert main(["run", "bridge-sup", "--draws", "-1", "--out", str(tmp_path)]) == 2
    assert main(["run", "no-such-experiment", "--out", str(tmp_path)]) == 2


def test_cli_nt_arcsine_columns(tmp_path, capsys):
    cfg = tmp_path / "nt.cfg"
    cfg.write_text("a = 0.1\neta = 0.05\n")
    code = main(["run", "nt-arcsine", "--config", str(cfg), "--draws", "200", "--tier", "fast",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    header = _read_csv(tmp_path / "o" / "nt-arcsine.csv")[0]
    assert {"bound", "empirical", "ci_low", "ci_high"} <= set(header)


def test_cli_repeated_runs_identical(tmp_path, capsys):
    for d in ("a", "b"):
        assert main(["run", "bridge-sup", "--draws", "300", "--seed", "4", "--out", str(tmp_path / d)]) == 0
    for name in ("bridge-sup.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_worker_count_does_not_change_output(tmp_path, capsys):
    for w in ("1", "4"):
        assert main(["run", "nt-arcsine", "--draws", "3000", "--workers", w, "--tier", "fast",
                     "--out", str(tmp_path / w)]) == 0
    assert (tmp_path / "1" / "nt-arcsine.csv").read_bytes() == (tmp_path / "4" / "nt-arcsine.csv").read_bytes()


def test_cli_output_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KPZLAB_OUT", str(tmp_path / "env"))
    assert main(["run", "pole-oracle"]) == 0
    assert (tmp_path / "env" / "pole-oracle.csv").exists()


def test_cli_timing_recorded_only_on_request(tmp_path, capsys):
    main(["run", "pole-oracle", "--out", str(tmp_path / "p")])
    main(["run", "pole-oracle", "--timing", "--out", str(tmp_path / "t")])
    plain = json.loads((tmp_path / "p" / "manifest.json").read_text())["experiments"]["pole-oracle"]
    timed = json.loads((tmp_path / "t" / "manifest.json").read_text())["experiments"]["pole-oracle"]
    assert "wall_time" not in plain or plain["wall_time"] is None
    assert timed["wall_time"] > 0 and math.isfinite(timed["wall_time"])
