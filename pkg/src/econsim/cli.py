"""Command-line interface: ``econsim train | evaluate | report``.

Exit status: 0 ok, 2 usage or configuration error, 3 data or schema error,
4 runtime failure.  ``ECONSIM_THREADS`` caps how many seeds run at once.
"""
from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from econsim import experiments as ex
from econsim import io, reporting
from econsim.config import ConfigError, RunConfig, dump_config, load_config
from econsim.dynamics import ContractError
from econsim.ppo import UpdateError
from econsim.training import train

log = logging.getLogger("econsim")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4
CONFIG_NAME = "config.ini"
DIAGNOSTIC_COLUMNS = ["iteration", "agent", "loss", "policy_loss", "value_loss", "entropy",
                      "approx_kl", "clip_fraction"]


class UsageError(Exception):
    pass


def max_workers() -> int:
    raw = os.environ.get("ECONSIM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"ECONSIM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"ECONSIM_THREADS must be a positive integer, got {raw!r}")
    return n


def _map(fn, jobs: list) -> list:
    workers = min(max_workers(), len(jobs))
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# --------------------------------------------------------------------------
# train


def train_seed(rc: RunConfig, seed: int, out: Path) -> Path:
    scenario = rc.scenario
    result = train(scenario, replace(rc.train, seed=seed),
                   callback=lambda it, row: log.debug("seed %d iteration %d %s", seed, it, row))
    sdir = out / f"seed_{seed}"
    for agent, params in result.policies.items():
        io.save_checkpoint(sdir / "checkpoints" / f"{agent}.json", params, agent, scenario.name,
                           rc.grids_hash, result.iteration)
    io.write_curves(sdir / "curves.csv", result.curves, scenario.learners)
    io.write_csv(sdir / "diagnostics.csv", "diagnostics", DIAGNOSTIC_COLUMNS, result.diagnostics)
    return sdir


def cmd_train(args) -> int:
    rc = load_config(args.config, args.scenario)
    if args.iterations is not None:
        rc = replace(rc, train=replace(rc.train, iterations=args.iterations))
    if args.seed:
        rc = replace(rc, seeds=tuple(dict.fromkeys(args.seed)))
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / CONFIG_NAME).write_text(dump_config(rc))
    except OSError as exc:
        raise UsageError(f"cannot write to output directory {out}: {exc}") from None
    log.info("training scenario %s, seeds %s, %d iterations", rc.scenario.name, rc.seeds,
             rc.train.iterations)
    for sdir in _map(train_seed, [(rc, s, out) for s in rc.seeds]):
        print(f"wrote {sdir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# evaluate

_SEED_DIR = re.compile(r"^seed_(-?\d+)$")


def locate_checkpoints(path: Path) -> tuple[Path, dict]:
    """Resolve a run, seed or checkpoints directory to (run dir, {seed: checkpoints dir})."""
    path = Path(path)
    if not path.is_dir():
        raise io.SchemaError(f"checkpoint directory not found: {path}")
    if path.name == "checkpoints" and _SEED_DIR.match(path.parent.name):
        return path.parent.parent, {int(_SEED_DIR.match(path.parent.name).group(1)): path}
    if _SEED_DIR.match(path.name) and (path / "checkpoints").is_dir():
        return path.parent, {int(_SEED_DIR.match(path.name).group(1)): path / "checkpoints"}
    seeds = {}
    for child in sorted(path.iterdir()):
        m = _SEED_DIR.match(child.name)
        if m and (child / "checkpoints").is_dir():
            seeds[int(m.group(1))] = child / "checkpoints"
    if not seeds:
        raise io.SchemaError(f"{path}: no seed_<k>/checkpoints directories found")
    return path, dict(sorted(seeds.items()))


def evaluate_seed(rc: RunConfig, seed: int, ckpt_dir: Path, episodes: int,
                  credits: Sequence[Optional[float]]) -> tuple[ex.SeedRun, int]:
    scenario = rc.scenario
    policies, iteration = io.load_checkpoints(ckpt_dir, scenario.learners, rc.grids_hash, scenario.name)
    arms = {ex.arm_name(k): ex.evaluate(scenario, policies, episodes, rc.evaluation.eval_seed + seed, k)
            for k in credits}
    curves_path = ckpt_dir.parent / "curves.csv"
    curves = io.read_curves(curves_path)[1] if curves_path.exists() else []
    return ex.SeedRun(seed, arms, curves), iteration


def cmd_evaluate(args) -> int:
    run_dir, seeds = locate_checkpoints(Path(args.checkpoint_dir))
    config_path = Path(args.config) if args.config else run_dir / CONFIG_NAME
    if not config_path.is_file() and not args.config:
        raise io.SchemaError(f"{run_dir}: missing {CONFIG_NAME}; pass --config")
    rc = load_config(config_path)
    episodes = rc.evaluation.episodes if args.episodes is None else args.episodes
    if episodes < 0:
        raise UsageError("--episodes must be >= 0")
    if args.credit_override is not None:
        credits = [args.credit_override]
    elif rc.scenario.name == "A":
        credits = [0.0, rc.evaluation.credit]
    else:
        credits = [None]
    results = _map(evaluate_seed, [(rc, s, d, episodes, credits) for s, d in seeds.items()])
    runs = [r for r, _ in results]
    meta = {
        "scenario": rc.scenario.name,
        "n_households": rc.n_households,
        "grids_hash": rc.grids_hash,
        "learners": list(rc.scenario.learners),
        "seeds": list(seeds),
        "iterations": [it for _, it in results],
        "episodes": episodes,
        "eval_seed": rc.evaluation.eval_seed,
        "credit": rc.evaluation.credit,
        "arms": [ex.arm_name(k) for k in credits],
        "arm_credits": {ex.arm_name(k): k for k in credits},
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_NAME).write_text(dump_config(rc))
    report = reporting.write_evaluation(out, meta, runs)
    _print_verdicts({"scenarios": {rc.scenario.name: {"study": report["study"]}}})
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


# --------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    if not args.runs:
        raise UsageError("report needs at least one evaluation directory (--runs DIR ...)")
    try:
        report, tables = reporting.aggregate([Path(r) for r in args.runs])
    except reporting.IncompatibleRuns as exc:
        raise UsageError(str(exc)) from None
    written = reporting.write_outputs(Path(args.out), report, tables, figures=not args.no_figures)
    _print_verdicts(report)
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _print_verdicts(report: dict) -> None:
    for name, entry in sorted(report["scenarios"].items()):
        res = entry.get("study")
        if not res:
            continue
        for h in res["hypotheses"]:
            seeds = " ".join(f"{s['seed']}:{'ordered' if s['ordered'] else 'reversed'}" for s in h["per_seed"])
            print(f"[{name}] {h['name']}: {h['status']}  ({seeds})")


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the learning agents of a scenario")
    p.add_argument("--scenario", help="A, B or C (overrides [run] scenario)")
    p.add_argument("--config", help="INI file; omitted keys take their defaults")
    p.add_argument("--seed", type=int, action="append", help="training seed (repeatable)")
    p.add_argument("--iterations", type=int, help="override [train] iterations")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="play frozen policies and write episode logs and a report")
    p.add_argument("--checkpoint-dir", required=True, help="a training output, seed or checkpoints directory")
    p.add_argument("--episodes", type=int)
    p.add_argument("--credit-override", type=float,
                   help="evaluate with this fixed credit per household instead of the scenario's")
    p.add_argument("--config", help="config to evaluate under (default: the run's frozen config.ini)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="pool evaluation directories into verdicts, tables and figures")
    p.add_argument("--runs", nargs="*", default=[], help="evaluation directories")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true", help="write tables only")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"econsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except io.SchemaError as exc:
        print(f"econsim: schema error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ContractError, UpdateError, OSError, ValueError, ArithmeticError) as exc:
        print(f"econsim: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
