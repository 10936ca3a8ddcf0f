"""On-disk formats: checkpoints, episode logs, training curves, reports.

Every file starts with its kind and schema version so readers can refuse
files they do not understand.  CSV files carry a ``# econsim <kind>
schema_version=<n>`` comment line before the header; floats are written with
9 significant digits.  Checkpoints and reports are JSON with full-precision
floats.
"""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence

import numpy as np

from econsim.policy import PolicyParams

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """A file is missing, malformed or written under another schema."""


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else f"{float(value):.9g}"
    return str(value)


def episode_columns(n_households: int) -> List[str]:
    cols = ["episode", "t"]
    for i in range(n_households):
        cols += [f"n_{i}", f"c_act_{i}", f"c_{i}", f"eta_chosen_{i}", f"eta_eff_{i}",
                 f"m_{i}", f"kappa_{i}", f"kappa_next_{i}", f"reward_{i}"]
    cols += ["p", "w", "r", "tau", "Y", "y", "eps", "pi", "revenue",
             "firm_reward", "cb_reward", "gov_reward"]
    return cols


def write_csv(path, kind: str, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# econsim {kind} schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def read_csv(path, kind: str, text_columns: Sequence[str] = ()) -> tuple[List[str], List[dict]]:
    """Read a file written by :func:`write_csv`.

    Values come back as floats, except for ``text_columns`` which stay strings.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        expected = f"# econsim {kind} schema_version={SCHEMA_VERSION}"
        if first != expected:
            raise SchemaError(f"{path}: expected header {expected!r}, found {first!r}")
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: missing column header") from None
        rows = []
        for lineno, values in enumerate(reader, start=3):
            if len(values) != len(columns):
                raise SchemaError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(values)}")
            try:
                rows.append({c: (v if c in text_columns else float(v)) for c, v in zip(columns, values)})
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return columns, rows


def write_episode_log(path, rows: Sequence[dict], n_households: int) -> None:
    write_csv(path, "episode-log", episode_columns(n_households), rows)


def read_episode_log(path) -> tuple[List[str], List[dict]]:
    return read_csv(path, "episode-log")


def write_curves(path, curves: Sequence[dict], agents: Sequence[str]) -> None:
    write_csv(path, "curves", ["iteration", *agents], curves)


def read_curves(path) -> tuple[List[str], List[dict]]:
    return read_csv(path, "curves")


# --------------------------------------------------------------------------
# checkpoints

CHECKPOINT_KIND = "econsim.checkpoint"
_CHECKPOINT_FIELDS = ("kind", "schema_version", "agent", "scenario", "grids_hash", "iteration",
                      "obs_dim", "n_actions", "hidden", "params")


def save_checkpoint(path, params: PolicyParams, agent: str, scenario: str, grids_hash: str,
                    iteration: int) -> None:
    doc = {
        "kind": CHECKPOINT_KIND,
        "schema_version": SCHEMA_VERSION,
        "agent": agent,
        "scenario": scenario,
        "grids_hash": grids_hash,
        "iteration": int(iteration),
        "obs_dim": params.obs_dim,
        "n_actions": params.n_actions,
        "hidden": list(params.hidden),
        # json writes shortest round-tripping reprs, so no precision is lost.
        "params": [float(x) for x in params.flat],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1))
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[PolicyParams, dict]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise SchemaError(f"{path}: checkpoint not found") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError(f"{path}: not a checkpoint ({exc})") from None
    if not isinstance(doc, dict) or doc.get("kind") != CHECKPOINT_KIND:
        raise SchemaError(f"{path}: not an econsim checkpoint")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    missing = [k for k in _CHECKPOINT_FIELDS if k not in doc]
    if missing:
        raise SchemaError(f"{path}: missing fields {missing}")
    try:
        params = PolicyParams(int(doc["obs_dim"]), int(doc["n_actions"]), tuple(doc["hidden"]),
                              np.array(doc["params"], dtype=float))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(params.flat)):
        raise SchemaError(f"{path}: non-finite parameters")
    meta = {k: doc[k] for k in _CHECKPOINT_FIELDS if k != "params"}
    return params, meta


def load_checkpoints(directory, agents: Sequence[str], grids_hash: Optional[str] = None,
                     scenario: Optional[str] = None) -> tuple[dict, int]:
    """Load one checkpoint per agent from ``directory``; verify grids and scenario."""
    directory = Path(directory)
    policies, iteration = {}, None
    for agent in agents:
        params, meta = load_checkpoint(directory / f"{agent}.json")
        if grids_hash is not None and meta["grids_hash"] != grids_hash:
            raise SchemaError(f"{directory / agent}.json was trained on other action grids "
                              f"(hash {meta['grids_hash']} != {grids_hash})")
        if scenario is not None and meta["scenario"] != scenario:
            raise SchemaError(f"{directory / agent}.json belongs to scenario {meta['scenario']}, "
                              f"not {scenario}")
        if meta["agent"] != agent:
            raise SchemaError(f"{directory / agent}.json holds agent {meta['agent']}")
        policies[agent] = params
        iteration = meta["iteration"]
    return policies, iteration


# --------------------------------------------------------------------------
# reports

REPORT_KIND = "econsim.report"


def write_report(path, report: dict) -> None:
    doc = {"kind": REPORT_KIND, "schema_version": SCHEMA_VERSION, **report}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, default=_json_default))


def read_report(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise SchemaError(f"{path}: report not found") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed report ({exc})") from None
    if doc.get("kind") != REPORT_KIND or doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: not an econsim report (schema {SCHEMA_VERSION})")
    return doc


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
