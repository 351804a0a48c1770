import json
import os

import numpy as np
import pytest

from shapelab.cli import ExperimentConfig, compatibility_probe, list_experiments, main, run
from shapelab.errors import ConfigError, PreconditionError
from shapelab.experiments import REGISTRY
from shapelab.functions import Polynomial, constant
from shapelab.grid import Extension, Grid, GridFunction, sample
from shapelab.report import Verdict
from shapelab.semigroups import LeftShift
from shapelab.shape import CONVEX

REQUIRED = ["monotone-levy", "feynman-kac-limit", "stopped-bm-halfline", "shift-convexity",
            "wentzell-interval-convexity", "dirichlet-negative-convex",
            "dirichlet-convexity-counterexample", "neumann-convexity-counterexample",
            "hessian-2d-membership", "splitting-orders", "chernoff-euler",
            "trotter-kato-feynman-kac", "bounded-perturbation-monotone",
            "dyson-phillips-closed-form", "miyadera-estimate", "delay-transport", "delay-diffusion",
            "appendix-monotone-approx", "appendix-convex-approx", "lp-closure-convexity",
            "compatibility-probe"]


def test_registry_contents():
    listing = list_experiments()
    names = [n for n, _, _ in listing]
    assert len(listing) >= 21
    assert set(REQUIRED) <= set(names)
    assert all(desc and anchor for _, desc, anchor in listing)


def test_unknown_experiment_is_config_error():
    with pytest.raises(ConfigError):
        ExperimentConfig("no-such-experiment")


def test_override_type_checking():
    cfg = ExperimentConfig("shift-convexity", {"count": "5"})
    assert cfg.params["count"] == 5
    with pytest.raises(ConfigError):
        ExperimentConfig("shift-convexity", {"count": 2.5})
    with pytest.raises(ConfigError):
        ExperimentConfig("shift-convexity", {"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig("shift-convexity", seed=-1)


def test_dirichlet_counterexample_passes():
    assert run(ExperimentConfig("dirichlet-convexity-counterexample")).verdict is Verdict.PASS


def test_zero_horizon_delay_is_informational():
    report = run(ExperimentConfig("delay-transport", {"horizon": 0.0}))
    assert report.verdict is Verdict.INFORMATIONAL


def test_same_seed_gives_identical_csvs(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        run(ExperimentConfig("shift-convexity", {"count": 5}, str(out), seed=11))
        outs.append({name: (out / name).read_bytes() for name in sorted(os.listdir(out))})
    assert outs[0] == outs[1]
    assert "summary.json" in outs[0] and "membership.csv" in outs[0]
    summary = json.loads(outs[0]["summary.json"])
    assert summary["verdict"] == "Pass" and summary["params"]["seed"] == 11


def test_main_exit_codes(tmp_path, capsys):
    assert main(["--list"]) == 0
    assert "delay-diffusion" in capsys.readouterr().out
    assert main(["--experiment", "nope"]) == 2
    assert main(["--experiment", "shift-convexity", "--set", "count=abc"]) == 2
    assert main(["--experiment", "shift-convexity", "--set", "count"]) == 2
    assert main([]) == 2
    assert main(["--experiment", "dirichlet-convexity-counterexample", "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "witness.csv").exists()
    # a threshold no flow can reach turns the verdict into Fail
    assert main(["--experiment", "dirichlet-convexity-counterexample", "--set", "threshold=-1e9"]) == 1


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "miyadera-estimate", "params": {"t0": 0.25}, "seed": 3}))
    assert main(["--config", str(cfg), "--set", "beta_max=0.4", "--out", str(tmp_path / "m")]) == 0
    summary = json.loads((tmp_path / "m" / "summary.json").read_text())
    assert summary["params"] == {"beta_max": 0.4, "n": 101, "seed": 3, "t0": 0.25}
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["--config", str(bad)]) == 2
    assert main(["--config", str(tmp_path / "missing.json")]) == 2


def test_list_values_parse_as_json():
    cfg = ExperimentConfig("monotone-levy", {"times": [0.5]})
    assert cfg.params["times"] == [0.5]


def test_compatibility_probe_examples(rng):
    from shapelab.corpus import random_convex_pl
    g = Grid(0.0, 1.0, 401)
    corpus = [random_convex_pl(rng, g, zero_ends=False)[0] for _ in range(5)]
    corpus.append(sample(constant(2.0), g, Extension.CONSTANT))
    report = compatibility_probe(CONVEX, LeftShift(), corpus, eps=0.05)
    assert report.verdict is Verdict.INFORMATIONAL
    rows = [line.split(",") for line in report.tables["distances"].splitlines()[1:]]
    assert all(float(r[1]) < 0.05 for r in rows)
    assert float(rows[-1][1]) == 0.0
    with pytest.raises(PreconditionError) as exc:
        compatibility_probe(CONVEX, LeftShift(), [GridFunction(g, np.sin(np.pi * g.x))])
    assert exc.value.report.witness is not None
