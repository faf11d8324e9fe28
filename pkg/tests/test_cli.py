import csv
import json
from pathlib import Path

import pytest

from modcorr.cli import COMMANDS, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = {
    "points": "family = sqrt\nalpha = sqrt3\nN = 500\n",
    "correlate": "family = quadratic\nalpha = sqrt2\nm = 2\ntau = 0.5\nfn_kind = bump\nN_grid = 1e3, 3e3\n",
    "moments": "family = quadratic\nalpha = sqrt2\nm = 3\ntau = 0.5\nN_grid = 100, 1000\n",
    "weyl": "family = sqrt\nalpha = sqrt3\nN = 5000\nk_max = 50\n",
    "bprocess": "alpha = sqrt2\nN_grid = 1e4\nk_list = 10, 100\ncompare_direct = true\n",
    "thresholds": "family = sqrt\nalpha = 1\nm = 3\ntau_list = 0.5, 0.7\nN_grid = 300, 3000\n",
    "spi-sweep": "alpha = sqrt2\nN = 1e3\nk_min = 10\nk_max = 30\nn_cases = 4\nrng_seed = 1\n",
}


def _run(tmp_path, command, text, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    cfg = tmp_path / f"{command}.cfg"
    cfg.write_text(text)
    out = tmp_path / f"out_{command}"
    rc = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return rc, out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_runs(tmp_path, command):
    rc, out = _run(tmp_path, command, SMALL[command])
    assert rc == 0
    csv_name = f"{command}.csv"
    assert _rows(out / csv_name)
    assert (out / f"{command}.gp").exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == command and man["csv"] == csv_name
    assert man["alpha"]["name"]
    assert man["rows"] == len(_rows(out / csv_name))


def test_manifest_names_alpha(tmp_path):
    rc, out = _run(tmp_path, "points", SMALL["points"])
    man = json.loads((out / "manifest.json").read_text())
    assert man["alpha"]["name"] == "sqrt3"
    assert man["alpha"]["hi"] == pytest.approx(3**0.5)
    assert "sqrt" in man["sequence"]


def test_thresholds_flags(tmp_path):
    rc, out = _run(tmp_path, "thresholds", SMALL["thresholds"])
    rows = _rows(out / "thresholds.csv")
    assert {r["inside"] for r in rows if float(r["tau"]) == 0.5} == {"1"}
    assert {r["inside"] for r in rows if float(r["tau"]) == 0.7} == {"0"}
    assert float(rows[0]["threshold"]) == pytest.approx(9 / 14)
    man = json.loads((out / "manifest.json").read_text())
    assert man["threshold"] == pytest.approx(9 / 14)


def test_bprocess_within_bound(tmp_path):
    rc, out = _run(tmp_path, "bprocess", SMALL["bprocess"])
    for r in _rows(out / "bprocess.csv"):
        assert r["within"] == "1"
        assert float(r["abs_diff"]) <= float(r["criterion_bound"])


def test_correlate_ratio_near_one(tmp_path):
    rc, out = _run(tmp_path, "correlate", SMALL["correlate"])
    rows = _rows(out / "correlate.csv")
    assert all(r["status"] == "ok" for r in rows)
    assert abs(float(rows[-1]["ratio"]) - 1) < 0.05


@pytest.mark.parametrize(
    "command,text,code",
    [
        ("points", "family = sqrt\nalpha = sqrt3\nN = 100\nbogus = 1\n", 2),
        ("points", "family = sqrt\nalpha = sqrt3\n", 2),
        ("points", "family = sqrt\nalpha = sqrt3\nN = ten\n", 2),
        ("points", "family = cubic\nalpha = sqrt3\nN = 10\n", 2),
        ("moments", "family = sqrt\nalpha = 1\nm = 2\ntau = 1.5\nN_grid = 100\n", 3),
        ("thresholds", "family = sqrt\nalpha = 1\nm = 5\ntau_list = 0.5\nN_grid = 100\n", 3),
        ("bprocess", "family = quadratic\nalpha = 1\nN_grid = 100\nk_list = 3\n", 3),
        ("correlate", "family = sqrt\nalpha = 1\nm = 2\ntau = 0.2\nN_grid = 1e9\n", 4),
        ("weyl", "family = quadratic\nalpha = sqrt2\nN = 1e8\nk_max = 1e9\n", 5),
    ],
)
def test_exit_codes(tmp_path, command, text, code):
    rc, out = _run(tmp_path, command, text)
    assert rc == code
    # validation runs before anything is written
    assert not (out / f"{command}.csv").exists()


def test_unknown_command_is_config_error(tmp_path):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("N = 1\n")
    assert main(["frobnicate", "--config", str(cfg)]) == 2
    assert main(["points", "--config", str(tmp_path / "missing.cfg")]) == 2


@pytest.mark.parametrize("command", ["correlate", "weyl", "bprocess", "moments"])
def test_csv_independent_of_threads(tmp_path, command):
    outs = []
    for t in (1, 8):
        rc, out = _run(tmp_path / f"t{t}", command, SMALL[command], "--threads", str(t))
        assert rc == 0
        outs.append((out / f"{command}.csv").read_bytes())
    assert outs[0] == outs[1]


def test_shipped_configs_parse():
    from modcorr.cli import load_config, validate

    for path in CONFIGS.glob("*.cfg"):
        command = {
            "points_sqrt": "points",
            "correlate_quadratic": "correlate",
            "moments_quadratic": "moments",
            "weyl_sqrt": "weyl",
            "bprocess": "bprocess",
            "thresholds_sqrt_m3": "thresholds",
            "spi_sweep": "spi-sweep",
        }[path.stem]
        validate(load_config(str(path), command))
