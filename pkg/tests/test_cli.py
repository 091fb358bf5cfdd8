import json
import os

import numpy as np
import pytest

from admmtrack import cli

CONFIG_DIR = os.path.join(os.path.dirname(cli.__file__), "configs")


def _write(tmp_path, payload):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(payload))
    return str(path)


def _small_config(**overrides):
    cfg = {
        "problem": {
            "kind": "quadratic",
            "N": 5,
            "n": 2,
            "eig_range": [1.0, 5.0],
            "r_range": [-10.0, 20.0],
            "seed": 1,
        },
        "graph": {"kind": "ring"},
        "algorithms": [{"name": "ATG", "gamma": 0.3, "delta": 0.3,
                        "alpha": 0.3, "rho": 1.0}],
        "T": 50,
        "init_seed": 0,
    }
    cfg.update(overrides)
    return cfg


def test_run_writes_csv_and_manifest(tmp_path):
    path = _write(tmp_path, _small_config())
    out = tmp_path / "out"
    rc = cli.main(["run", "--config", path, "--out", str(out)])
    assert rc == 0
    assert (out / "ATG_base.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["T"] == 50
    assert len(manifest["x_star"]) == 2
    assert manifest["cells"][0]["csv"] == "ATG_base.csv"


def test_run_is_byte_deterministic(tmp_path):
    path = _write(tmp_path, _small_config())
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", path, "--out", str(a)]) == 0
    assert cli.main(["run", "--config", path, "--out", str(b)]) == 0
    assert (a / "ATG_base.csv").read_bytes() == (b / "ATG_base.csv").read_bytes()


def test_run_svg_emission(tmp_path):
    path = _write(tmp_path, _small_config())
    out = tmp_path / "out"
    assert cli.main(["run", "--config", path, "--out", str(out), "--svg"]) == 0
    svg = (out / "ATG_base.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg


def test_run_rejects_bad_config(tmp_path):
    path = _write(tmp_path, _small_config(T=0))
    assert cli.main(["run", "--config", path]) == 2
    path = _write(tmp_path, _small_config(algorithms=[]))
    assert cli.main(["run", "--config", path]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 2


def test_run_schedule_required_for_ratg(tmp_path):
    cfg = _small_config(algorithms=[{"name": "RATG", "gamma": 0.3, "delta": 0.3}])
    path = _write(tmp_path, cfg)
    assert cli.main(["run", "--config", path]) == 2


def test_verify_passes_on_ring(capsys):
    rc = cli.main([
        "verify", "--graph", "ring", "--n-agents", "5", "--dim", "1",
        "--rho", "0.3",
    ])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] is True
    assert len(report["reports"]) == 3


def test_verify_er_graph(capsys):
    rc = cli.main([
        "verify", "--graph", "er", "--n-agents", "6", "--p", "0.4",
        "--seed", "3", "--dim", "2", "--rho", "1.0",
    ])
    assert rc == 0


def test_verify_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "--graph", "hypercube", "--n-agents", "5",
                  "--rho", "0.3"])
    assert exc.value.code == 2


def test_tune_writes_tuned_json(tmp_path):
    cfg = _small_config(
        algorithms=[
            {"name": "ATG", "gamma": 0.3, "delta": 0.3, "alpha": 0.3, "rho": 1.0},
            {"name": "GT", "gamma": 0.3, "delta": 0.3},
        ],
        tune={"step": 0.2, "rho_grid": [0.5, 1.0], "delta_grid": [0.25, 0.5]},
    )
    path = _write(tmp_path, cfg)
    out = tmp_path / "out"
    assert cli.main(["tune", "--config", path, "--out", str(out)]) == 0
    tuned = json.loads((out / "tuned.json").read_text())
    assert set(tuned) == {"ATG", "GT"}
    assert 0 < tuned["ATG"]["rate"] < 1


def test_tune_rejects_logistic(tmp_path):
    cfg = _small_config(
        problem={"kind": "logistic", "N": 4, "n": 2, "m_per_agent": 2,
                 "C": 1.0, "seed": 0},
    )
    path = _write(tmp_path, cfg)
    assert cli.main(["tune", "--config", path]) == 2


def test_bundled_configs_parse():
    for name in ("quadratic_fig2.json", "logistic_fig3.json", "inexact_fig4.json"):
        cfg = cli.ExperimentConfig.load(os.path.join(CONFIG_DIR, name))
        assert cfg.T >= 1 and cfg.algorithms


def test_bundled_quadratic_ordering(tmp_path):
    # ADMM tracker reaches 1e-8 in fewer iterations than the GT baseline
    out = tmp_path / "fig2"
    cfg = os.path.join(CONFIG_DIR, "quadratic_fig2.json")
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0

    def first_below(path, tol):
        data = np.genfromtxt(path, delimiter=",", names=True)
        hit = np.flatnonzero(data["err_max_agent"] <= tol)
        return int(hit[0]) if hit.size else None

    atg = first_below(out / "ATG_sync.csv", 1e-8)
    gt = first_below(out / "GT_sync.csv", 1e-8)
    assert atg is not None and gt is not None and atg < gt
