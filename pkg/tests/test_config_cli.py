import csv
import json
import math

import numpy as np
import pytest

from wprobe import config as cfgmod
from wprobe import cli
from wprobe.cli import main
from wprobe.errors import ConfigError, QuadratureError
from wprobe.response import excitation_probability

SMALL = {
    "detector": {"gap": 2.0, "lambda": 0.01},
    "trajectory": {"kind": "uniformly_accelerated", "a": 1.0},
    "comb": {"shape": "smooth_bump", "eta": 0.05, "zeta": 0.7, "teeth": 3},
    "protocol": {"zeta_grid": [0.5, 1.0]},
    "sweep": {"etas": [0.1, 0.05, 0.025]},
    "scaling": {"dims": [2, 3], "etas": [0.1, 0.07, 0.05, 0.035, 0.025, 0.018]},
    "output": {"stem": "t"},
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def outputs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())
            if not p.name.endswith("_manifest.json")}


def test_defaults_resolve():
    cfg = cfgmod.resolve({})
    assert cfg["detector"]["gap"] == 1.0 and cfg["comb"]["teeth"] == 2


@pytest.mark.parametrize("user,key", [
    ({"detecter": {"gap": 1.0}}, "detecter"),
    ({"detector": {"gapp": 1.0}}, "detector.gapp"),
    ({"detector": {"gap": "one"}}, "detector.gap"),
    ({"comb": {"teeth": True}}, "comb.teeth"),
    ({"comb": {"shape": "boxcar"}}, "comb.shape"),
    ({"protocol": {"zeta_grid": []}}, "protocol.zeta_grid"),
    ({"sweep": {"etas": [0.1, "x"]}}, "sweep.etas"),
    ({"detector": {"gap": None}}, "detector.gap"),
])
def test_validation_names_the_key(user, key):
    with pytest.raises(ConfigError) as info:
        cfgmod.resolve(user)
    assert info.value.key == key and str(info.value).startswith(key)


def test_builders_wrap_model_errors():
    cfg = cfgmod.resolve({"comb": {"eta": -1.0}})
    with pytest.raises(ConfigError, match="comb.eta"):
        cfgmod.make_comb(cfg)
    cfg = cfgmod.resolve({"state": {"kind": "thermal"}})
    with pytest.raises(ConfigError, match="state"):
        cfgmod.make_correlator(cfg)


@pytest.mark.parametrize("name", cfgmod.DEMOS)
def test_demos_load(name):
    cfg = cfgmod.load(f"demo:{name}")
    assert cfg["output"]["stem"] == name
    cfgmod.make_correlator(cfg)


def test_unknown_key_exits_2(tmp_path, capsys):
    code = main(["respond", "--config", write(tmp_path, {"detecter": {"gap": 1.0}}), "--out", str(tmp_path)])
    assert code == 2
    assert "detecter" in capsys.readouterr().err


@pytest.mark.parametrize("argv_extra,cfg,needle", [
    ([], {"protocol": {"zeta_grid": []}}, "zeta"),
    ([], {"scaling": {"dims": [1]}}, "infrared"),
    (["--threads", "0"], {}, "threads"),
])
def test_validation_failures_exit_2(tmp_path, capsys, argv_extra, cfg, needle):
    cmd = "scaling" if "scaling" in cfg else "reconstruct"
    code = main([cmd, "--config", write(tmp_path, cfg), "--out", str(tmp_path)] + argv_extra)
    assert code == 2
    assert needle in capsys.readouterr().err


def test_missing_file_and_bad_demo_exit_2(tmp_path):
    assert main(["respond", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["respond", "--config", "demo:nope", "--out", str(tmp_path)]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys, monkeypatch):
    def fail(*args, **kwargs):
        raise QuadratureError("did not converge", estimate=0.0, residual=1.0)

    monkeypatch.setattr(cli, "excitation_probability", fail)
    assert main(["respond", "--config", write(tmp_path, SMALL), "--out", str(tmp_path)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_respond_matches_library(tmp_path):
    assert main(["respond", "--config", write(tmp_path, SMALL), "--out", str(tmp_path)]) == 0
    cfg = cfgmod.resolve(SMALL)
    out = excitation_probability(cfgmod.make_comb(cfg), cfgmod.make_detector(cfg), cfgmod.make_correlator(cfg),
                                 quad=cfgmod.make_quad(cfg))
    with open(tmp_path / "t_respond.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["local_term"]) for r in rows[:-1]] == list(out.local_terms)
    summary = rows[-1]
    assert summary["n"] == "summary" and summary["flag"] == ""
    assert float(summary["p_total"]) == out.total
    assert complex(float(summary["re_c"]), float(summary["im_c"])) == out.nonlocal_c


@pytest.mark.parametrize("command", ["respond", "reconstruct", "sweep", "scaling"])
def test_determinism_and_round_trip(tmp_path, command):
    first, second, third = (tmp_path / d for d in ("a", "b", "c"))
    cfg_path = write(tmp_path, SMALL)
    assert main([command, "--config", cfg_path, "--out", str(first), "--threads", "1"]) == 0
    assert main([command, "--config", cfg_path, "--out", str(second), "--threads", "4"]) == 0
    assert outputs(first) == outputs(second)
    echo = str(first / "t_config.json")
    assert main([command, "--config", echo, "--out", str(third)]) == 0
    assert outputs(third) == outputs(first)
    manifest = json.loads((first / f"t_{command}_manifest.json").read_text())
    assert manifest["command"] == command and manifest["threads"] == 1
    assert set(manifest["files"]) >= set(outputs(first))


@pytest.mark.parametrize("command", ["respond", "reconstruct", "sweep"])
def test_csv_numbers_finite_or_flagged(tmp_path, command):
    assert main([command, "--config", write(tmp_path, SMALL), "--out", str(tmp_path)]) == 0
    for path in tmp_path.glob("t_*.csv"):
        with open(path) as fh:
            for row in csv.DictReader(fh):
                values = [v for k, v in row.items() if k not in ("flag", "n") and v != ""]
                if not all(math.isfinite(float(v)) for v in values):
                    assert row["flag"]


def test_reconstruct_demo(tmp_path):
    assert main(["reconstruct", "--config", "demo:accelerated_unruh", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "accelerated_unruh_reconstruct.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["zeta"]) for r in rows] == [0.5, 1.0, 2.0]
    assert max(float(r["rel_err"]) for r in rows) < 0.02
    report = json.loads((tmp_path / "accelerated_unruh_convergence.json").read_text())
    assert len(report["points"][0]["even"]["S"]) == 4


def test_scaling_report(tmp_path):
    assert main(["scaling", "--config", "demo:scaling_3d", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "scaling_3d_scaling.json").read_text())["reports"][0]
    assert report["slope"] == pytest.approx(-2.0, abs=0.05)
    assert report["coefficient"] == pytest.approx(1 / (64 * np.pi**2), rel=0.01)


def test_single_tooth_respond(tmp_path):
    cfg = dict(SMALL, comb={"shape": "gaussian", "eta": 0.1, "teeth": 1})
    assert main(["respond", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "t_respond.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 and float(rows[1]["re_c"]) == 0.0 and float(rows[1]["im_c"]) == 0.0
    assert float(rows[1]["p_total"]) == float(rows[0]["local_term"])


def test_routes_agree_through_cli(tmp_path):
    result = {}
    for route in ("measured", "direct"):
        cfg = dict(SMALL, protocol={"zeta_grid": [0.5, 1.0], "route": route}, output={"stem": route})
        assert main(["reconstruct", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 0
        with open(tmp_path / f"{route}_reconstruct.csv") as fh:
            result[route] = [complex(float(r["re_w"]), float(r["im_w"])) for r in csv.DictReader(fh)]
        report = json.loads((tmp_path / f"{route}_convergence.json").read_text())
        result[route + "_err"] = [p["error"] for p in report["points"]]
    for a, b, ea, eb in zip(result["measured"], result["direct"], result["measured_err"], result["direct_err"]):
        assert abs(a - b) <= ea + eb
