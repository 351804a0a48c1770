"""Command-line surface: list experiments, run one, write its report.

Exit status is 0 for Pass or Informational, 1 for Fail and 2 for a
configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .experiments import REGISTRY, compatibility_probe, validate_params
from .report import ExperimentReport

__all__ = ["ExperimentConfig", "compatibility_probe", "list_experiments", "load_config",
           "main", "run"]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run request; ``params`` holds overrides of the defaults."""

    name: str
    params: dict = field(default_factory=dict)
    output_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.name not in REGISTRY:
            raise ConfigError(f"unknown experiment {self.name!r}; use --list")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        object.__setattr__(self, "params", validate_params(REGISTRY[self.name], self.params))


def list_experiments() -> list:
    """(name, description, anchor) for every registered experiment."""
    return [(e.name, e.description, e.anchor) for e in REGISTRY.values()]


def run(config: ExperimentConfig) -> ExperimentReport:
    """Run an experiment; writes CSVs and ``summary.json`` when ``output_dir`` is set."""
    exp = REGISTRY[config.name]
    report = exp.fn(dict(config.params), np.random.default_rng(config.seed))
    report.params = {**config.params, "seed": config.seed}
    if config.output_dir is not None:
        report.write(config.output_dir)
    return report


def parse_override(text: str):
    """``key=value`` with the value read as JSON, falling back to a string."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def build_config(args) -> ExperimentConfig:
    data = load_config(args.config)
    unknown = set(data) - {"experiment", "name", "params", "seed", "out", "output_dir"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    name = args.experiment or data.get("experiment") or data.get("name")
    if name is None:
        raise ConfigError("no experiment given; use --experiment NAME or --list")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("config 'params' must be an object")
    params = dict(params)
    for item in args.set:
        key, value = parse_override(item)
        params[key] = value
    seed = args.seed if args.seed is not None else data.get("seed", 0)
    out = args.out or data.get("out") or data.get("output_dir")
    return ExperimentConfig(name, params, out, seed)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shapelab", description=__doc__.splitlines()[0])
    p.add_argument("--experiment", metavar="NAME")
    p.add_argument("--config", metavar="PATH", help="JSON file with experiment, params, seed, out")
    p.add_argument("--out", metavar="DIR", help="directory for CSV tables and summary.json")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--list", action="store_true", help="list experiments and exit")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a parameter (value parsed as JSON)")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.list:
        for name, desc, anchor in list_experiments():
            print(f"{name}\t{desc}\t[{anchor}]")
        return 0
    try:
        config = build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = run(config)
    print(f"{report.name}: {report.verdict.value}")
    for note in report.notes:
        print(f"  {note}")
    return report.verdict.exit_code
