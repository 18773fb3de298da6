"""Command-line entry point.

Exit codes: 0 success, 2 bad input (usage, parse or shape errors),
3 non-convergence or no dominant eigenvalue, 4 domain error (reducible
input where irreducible is required, irregular trust matrix), 5 fixture
self-test mismatch, 6 experiment finished with failed runs.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from maxtrust import fixtures
from maxtrust import maxplus as mp
from maxtrust import simulator as sim
from maxtrust.spectral import (
    DomainError,
    DominanceError,
    NonTerminationError,
    classify_matrix,
    dominant_eigenpair_conventional,
    normal_form,
)
from maxtrust.trust import NonConvergenceError, TrustMatrix, TrustVector, eigentrust, maxtrust

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_DOMAIN = 4
EXIT_FIXTURES = 5
EXIT_FAILED_RUNS = 6

MODES = ("eigentrust", "maxtrust", "classify", "experiment")

log = logging.getLogger("maxtrust")


@dataclass
class RunConfig:
    mode: str = "eigentrust"
    matrix: str | None = None
    config: str | None = None
    out: str = "results"
    seed: int = 1
    runs: int = 100
    steps: int = 100
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    scenarios: tuple[int, ...] = sim.SCENARIOS
    topologies: tuple[str, ...] = sim.TOPOLOGIES
    epsilon: float = 1e-6
    max_iters: int = 10000
    T: int = 100
    simulation: dict = field(default_factory=dict)


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


def read_config(path: str, base: RunConfig | None = None) -> RunConfig:
    """Load an INI-style experiment config. Unknown keys are errors."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive field names (maxtrust_T)
    with open(path) as fh:
        cp.read_file(fh)
    cfg = replace(base or RunConfig(), mode="experiment", config=path)
    sim_fields = {f.name: f.type for f in fields(sim.ScenarioConfig)}
    overrides: dict = dict(cfg.simulation)
    for section in cp.sections():
        for key, raw in cp.items(section):
            if section == "experiment":
                if key == "scenarios":
                    cfg.scenarios = tuple(int(x) for x in raw.split(","))
                elif key == "topologies":
                    cfg.topologies = tuple(x.strip() for x in raw.split(","))
                elif key in ("seed", "runs", "steps", "jobs"):
                    setattr(cfg, key, int(raw))
                elif key == "out":
                    cfg.out = raw
                else:
                    raise ValueError(f"unknown key [{section}] {key}")
            elif section in ("simulation", "algorithms"):
                if key not in sim_fields or key in ("scenario", "topology", "seed", "timesteps"):
                    raise ValueError(f"unknown key [{section}] {key}")
                default = getattr(sim.ScenarioConfig(), key)
                overrides[key] = type(default)(float(raw)) if isinstance(default, int) else float(raw)
            else:
                raise ValueError(f"unknown section [{section}]")
    cfg.simulation = overrides
    return cfg


def scenario_configs(cfg: RunConfig) -> list[sim.ScenarioConfig]:
    return [
        sim.ScenarioConfig(scenario=s, topology=t, timesteps=cfg.steps, seed=cfg.seed, **cfg.simulation)
        for s in cfg.scenarios
        for t in cfg.topologies
    ]


def _print_classification(a: np.ndarray) -> None:
    if np.all(np.isfinite(a)):
        c = classify_matrix(a)
        print(f"positive={c.positive} nonnegative={c.nonnegative} stochastic={c.stochastic} irreducible={c.irreducible}")
    nf = normal_form(a if np.isneginf(a).any() else mp.from_conventional(a))
    print(f"blocks={len(nf.blocks)} permutation={' '.join(map(str, nf.permutation))}")


def cmd_compute(cfg: RunConfig, zeros_as_eps: bool = False) -> int:
    a = np.array(mp.load(cfg.matrix))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise mp.ShapeError(f"expected a square matrix, got {a.shape}")
    if cfg.mode == "classify":
        _print_classification(a)
        return EXIT_OK
    if cfg.mode == "eigentrust":
        conv = np.where(np.isneginf(a), 0.0, a)
        _print_classification(conv)
        tv = eigentrust(conv, epsilon=cfg.epsilon, max_iters=cfg.max_iters)
        print(f"iterations={tv.iterations}")
        print(tv.to_csv(), end="")
        if not tv.dominant:
            report = dominant_eigenpair_conventional(conv, strict=False).report
            _eprint(f"no dominant eigenvalue: the fixed point depends on the start vector ({report})")
            return EXIT_NONCONVERGENCE
        return EXIT_OK
    trop = mp.from_conventional(a) if zeros_as_eps else mp.as_tropical(a)
    sol = maxtrust(trop, T=cfg.T)
    print(f"blocks={len(sol.xi)} T={sol.T}")
    print("lambda=" + " ".join(mp.format_scalar(x) for x in sol.lambdas))
    print("xi=" + " ".join(mp.format_scalar(x) for x in sol.xi))
    print(sol.t.to_csv(), end="")
    return EXIT_OK


def cmd_fixtures() -> int:
    """Self-test on the three shipped 3-agent matrices."""
    checks = []
    # the 1-norm stopping rule leaves up to ε·|λ2|/(1−|λ2|) of error
    tv = eigentrust(fixtures.TRIANGULAR, epsilon=1e-9)
    checks.append(("triangular: eigentrust -> (0,0,1)", np.allclose(tv.values, [0, 0, 1], atol=1e-6)))
    tv = eigentrust(fixtures.POSITIVE, epsilon=1e-9)
    pair = dominant_eigenpair_conventional(fixtures.POSITIVE)
    checks.append(("positive: eigentrust matches power-iteration oracle", np.allclose(tv.values, pair.vector, atol=1e-6)))
    tv = eigentrust(fixtures.DISCONNECTED)
    checks.append(("disconnected: dominance failure reported", not tv.dominant))
    sol = maxtrust(mp.from_conventional(fixtures.DISCONNECTED), T=5)
    checks.append(("disconnected: maxtrust finite in both components", bool(np.all(np.isfinite(sol.t.values)))))
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok &= bool(passed)
    return EXIT_OK if ok else EXIT_FIXTURES


def cmd_experiment(cfg: RunConfig) -> int:
    configs = scenario_configs(cfg)
    records = sim.run_conditions(configs, cfg.runs, cfg.jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for c in configs:
        recs = [r for r in records if r.config == c]
        (out / f"scenario{c.scenario}_{c.topology}.csv").write_text(sim.records_csv(recs))
        for r in recs:
            if r.error:
                _eprint(f"run {r.run_id} scenario {c.scenario} {c.topology} seed {c.seed} failed: {r.error}")
    rows = sim.aggregate(records)
    text = sim.summary_csv(rows)
    (out / "summary.csv").write_text(text)
    print(text, end="")
    failed = sum(r.error is not None for r in records)
    return EXIT_FAILED_RUNS if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxtrust", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--matrix", help="matrix file ('n m' header, rows, 'eps' for ε)")
    p.add_argument("--config", help="INI experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int)
    p.add_argument("--fixtures", action="store_true", help="run the built-in self-test and exit")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("-T", type=int, default=100, help="terminal time for maxtrust")
    p.add_argument("--zeros-as-eps", action="store_true", help="read 0 entries as ε in maxtrust mode")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    if args.fixtures:
        return cmd_fixtures()
    cfg = RunConfig(epsilon=args.epsilon, max_iters=args.max_iters, T=args.T)
    try:
        if args.config:
            cfg = read_config(args.config, cfg)
        if args.mode:
            cfg.mode = args.mode
        for key in ("matrix", "seed", "runs", "steps", "out", "jobs"):
            if getattr(args, key) is not None:
                setattr(cfg, key, getattr(args, key))
        if cfg.mode == "experiment":
            return cmd_experiment(cfg)
        if not cfg.matrix:
            _eprint(f"--matrix is required for mode {cfg.mode}")
            return EXIT_INPUT
        return cmd_compute(cfg, args.zeros_as_eps)
    except (mp.ParseError, mp.ShapeError, ValueError, OSError, configparser.Error) as exc:
        if isinstance(exc, DomainError):
            _eprint(f"domain error: {exc}")
            return EXIT_DOMAIN
        _eprint(f"input error: {exc}")
        return EXIT_INPUT
    except (NonConvergenceError, NonTerminationError, DominanceError) as exc:
        _eprint(f"no convergence: {exc}")
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
