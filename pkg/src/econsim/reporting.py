"""Evaluation directories, cross-run aggregation and plot-ready tables.

An evaluation directory holds ``report.json`` plus, per training seed,
``seed_<k>/episodes_<arm>.csv`` and (when available) ``seed_<k>/curves.csv``.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from econsim import experiments as ex
from econsim import io, plotting

log = logging.getLogger(__name__)

# Per table, the columns that hold labels rather than numbers.
TEXT_COLUMNS = {
    "training_curves": ("scenario", "agent"),
    "fig2_household_observables": ("arm",),
    "fig2_box_summary": ("arm", "metric"),
    "fig3_delta": ("metric",),
    "dispersion_b_vs_c": ("scenario", "seed"),
    "verdicts": ("scenario", "hypothesis", "scope", "status"),
}


def study(scenario: str, runs: Sequence[ex.SeedRun], n_households: int, credit: float,
          seed: int, baseline: Optional[Sequence[ex.SeedRun]] = None) -> Optional[dict]:
    """The scenario's study over ``runs``, or None when the arms needed are absent or empty."""
    if not runs:
        return None
    arms = set.intersection(*(set(r.arms) for r in runs))
    if any(not rows for r in runs for rows in r.arms.values()):
        return None
    if scenario == "A":
        if {ex.arm_name(0.0), ex.arm_name(credit)} <= arms:
            return ex.experiment_a(runs, n_households, credit=credit, seed=seed)
        return None
    if ex.arm_name(None) not in arms:
        return None
    if scenario == "B":
        return ex.experiment_b(runs, n_households, seed=seed)
    if baseline is not None and any(ex.arm_name(None) not in r.arms or not r.arms[ex.arm_name(None)]
                                    for r in baseline):
        baseline = None
    return ex.experiment_c(runs, n_households, baseline=baseline, seed=seed)


def evaluation_report(meta: dict, runs: Sequence[ex.SeedRun]) -> dict:
    """MetricReport of one evaluation: per-seed, per-arm summaries plus the study verdicts."""
    n = meta["n_households"]
    rng = np.random.default_rng(meta["eval_seed"])
    summaries = {}
    for r in runs:
        summaries[str(r.seed)] = {
            arm: ex.summarize(ex.episode_metrics(rows, n), rng) for arm, rows in r.arms.items()
        }
    return {**meta, "summaries": summaries,
            "study": study(meta["scenario"], runs, n, meta["credit"], meta["eval_seed"])}


def write_evaluation(directory, meta: dict, runs: Sequence[ex.SeedRun]) -> dict:
    directory = Path(directory)
    for r in runs:
        for arm, rows in r.arms.items():
            io.write_episode_log(directory / f"seed_{r.seed}" / f"episodes_{arm}.csv", rows,
                                 meta["n_households"])
        if r.curves:
            io.write_curves(directory / f"seed_{r.seed}" / "curves.csv", r.curves, meta["learners"])
    # Summaries come from the logs as written, so a report can always be
    # rebuilt from the directory alone.
    reread = []
    for r in runs:
        sdir = directory / f"seed_{r.seed}"
        arms = {arm: io.read_episode_log(sdir / f"episodes_{arm}.csv")[1] for arm in r.arms}
        curves = io.read_curves(sdir / "curves.csv")[1] if r.curves else []
        reread.append(ex.SeedRun(r.seed, arms, curves))
    report = evaluation_report(meta, reread)
    io.write_report(directory / "report.json", report)
    return report


def load_evaluation(directory) -> Tuple[dict, List[ex.SeedRun]]:
    directory = Path(directory)
    if not directory.is_dir():
        raise io.SchemaError(f"{directory}: evaluation directory not found")
    doc = io.read_report(directory / "report.json")
    for key in ("scenario", "seeds", "arms", "n_households", "grids_hash", "eval_seed", "credit"):
        if key not in doc:
            raise io.SchemaError(f"{directory / 'report.json'}: missing field {key!r}")
    runs = []
    for seed in doc["seeds"]:
        sdir = directory / f"seed_{seed}"
        arms = {arm: io.read_episode_log(sdir / f"episodes_{arm}.csv")[1] for arm in doc["arms"]}
        curves = io.read_curves(sdir / "curves.csv")[1] if (sdir / "curves.csv").exists() else []
        runs.append(ex.SeedRun(int(seed), arms, curves))
    return doc, runs


class IncompatibleRuns(ValueError):
    pass


def aggregate(directories: Sequence) -> Tuple[dict, Dict[str, tuple]]:
    """Pool evaluation directories by scenario.

    Returns the combined report and plot-ready tables ``name -> (columns, rows)``.
    Runs of one scenario are pooled over seeds; B and C may be combined, in
    which case C's study also compares reward dispersion against B.
    """
    if not directories:
        raise IncompatibleRuns("no runs given")
    groups: Dict[str, dict] = {}
    for d in directories:
        doc, runs = load_evaluation(d)
        g = groups.setdefault(doc["scenario"], {"meta": doc, "runs": []})
        meta = g["meta"]
        for key in ("n_households", "grids_hash", "arms", "eval_seed", "credit"):
            if doc[key] != meta[key]:
                raise IncompatibleRuns(f"{d}: {key} differs from other scenario-{doc['scenario']} runs")
        seen = {r.seed for r in g["runs"]}
        dup = seen & {r.seed for r in runs}
        if dup:
            raise IncompatibleRuns(f"{d}: seeds {sorted(dup)} already included")
        g["runs"].extend(runs)
    names = set(groups)
    if len(names) > 1 and names != {"B", "C"}:
        raise IncompatibleRuns(f"incompatible scenarios in one report: {sorted(names)} "
                               "(only B and C may be combined)")
    if len(names) > 1 and groups["B"]["meta"]["n_households"] != groups["C"]["meta"]["n_households"]:
        raise IncompatibleRuns("B and C runs differ in household count")

    report = {"scenarios": {}}
    for name in sorted(groups):
        g = groups[name]
        meta = g["meta"]
        g["runs"].sort(key=lambda r: r.seed)
        baseline = groups["B"]["runs"] if name == "C" and "B" in groups else None
        res = study(name, g["runs"], meta["n_households"], meta["credit"], meta["eval_seed"], baseline)
        report["scenarios"][name] = {
            "seeds": [r.seed for r in g["runs"]],
            "episodes": meta.get("episodes"),
            "arms": meta["arms"],
            "study": res,
        }
    return report, tables(groups, report)


def _quantiles(values) -> dict:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return {k: np.nan for k in ("q0", "q25", "q50", "q75", "q100", "mean")}
    q = np.quantile(v, [0, 0.25, 0.5, 0.75, 1])
    return {"q0": q[0], "q25": q[1], "q50": q[2], "q75": q[3], "q100": q[4], "mean": float(v.mean())}


def tables(groups: Dict[str, dict], report: dict) -> Dict[str, tuple]:
    out: Dict[str, tuple] = {}
    curve_rows = []
    for name, g in sorted(groups.items()):
        for r in g["runs"]:
            for row in r.curves:
                for agent in g["meta"]["learners"]:
                    curve_rows.append({"scenario": name, "seed": r.seed, "iteration": int(row["iteration"]),
                                       "agent": agent, "return": row[agent]})
    out["training_curves"] = (["scenario", "seed", "iteration", "agent", "return"], curve_rows)

    for name, g in groups.items():
        n = g["meta"]["n_households"]
        per = [(r.seed, {arm: ex.episode_metrics(rows, n) for arm, rows in r.arms.items()}) for r in g["runs"]]
        if name == "A":
            rows = []
            for seed, arms in per:
                for arm, m in arms.items():
                    for k, ep in enumerate(m["episodes"]):
                        for i in range(n):
                            rows.append({"seed": seed, "episode": int(ep), "household": i, "arm": arm,
                                         "savings": m["savings"][k, i], "c_act": m["c_act"][k, i],
                                         "c": m["c"][k, i]})
            out["fig2_household_observables"] = (
                ["seed", "episode", "household", "arm", "savings", "c_act", "c"], rows)
            box = []
            for arm in g["meta"]["arms"]:
                for i in range(n):
                    for metric in ("savings", "c_act", "c"):
                        vals = [x[metric] for x in rows if x["arm"] == arm and x["household"] == i]
                        box.append({"arm": arm, "household": i, "metric": metric, **_quantiles(vals)})
            out["fig2_box_summary"] = (["arm", "household", "metric", "q0", "q25", "q50", "q75", "q100",
                                        "mean"], box)
            res = report["scenarios"]["A"]["study"]
            if res:
                delta = []
                for i in range(n):
                    for metric in ("savings", "c_act", "c"):
                        s = res["deltas"][f"household_{i}"][metric]
                        delta.append({"household": i, "metric": metric, "mean": s["mean"],
                                      "ci_low": s["ci"][0], "ci_high": s["ci"][1]})
                out["fig3_delta"] = (["household", "metric", "mean", "ci_low", "ci_high"], delta)
        elif name in ("B", "C"):
            col, table = ("eta_eff", "fig5_effective_eta") if name == "B" else ("share", "fig7_credit_share")
            rows = []
            for seed, arms in per:
                m = arms.get(ex.arm_name(None))
                if m is None:
                    continue
                for k, ep in enumerate(m["episodes"]):
                    for i in range(n):
                        rows.append({"seed": seed, "episode": int(ep), "household": i, col: m[col][k, i]})
            out[table] = (["seed", "episode", "household", col], rows)

    if set(groups) == {"B", "C"}:
        rng = np.random.default_rng(0)
        rows = []
        for name in ("B", "C"):
            n = groups[name]["meta"]["n_households"]
            pooled = []
            for r in groups[name]["runs"]:
                d = ex.episode_metrics(r.arms[ex.arm_name(None)], n)["dispersion"]
                pooled.append(d)
                s = ex.mean_ci(d, rng=rng)
                rows.append({"scenario": name, "seed": str(r.seed), "mean": s["mean"],
                             "ci_low": s["ci"][0], "ci_high": s["ci"][1]})
            s = ex.mean_ci(np.concatenate(pooled), rng=rng)
            rows.append({"scenario": name, "seed": "pooled", "mean": s["mean"],
                         "ci_low": s["ci"][0], "ci_high": s["ci"][1]})
        out["dispersion_b_vs_c"] = (["scenario", "seed", "mean", "ci_low", "ci_high"], rows)

    out["verdicts"] = (["scenario", "hypothesis", "scope", "gap", "ci_low", "ci_high", "ordered", "status"],
                       verdict_rows(report))
    return out


def verdict_rows(report: dict) -> List[dict]:
    rows = []
    for name, entry in sorted(report["scenarios"].items()):
        res = entry["study"]
        if not res:
            continue
        for h in res["hypotheses"]:
            for s in h["per_seed"]:
                ci = s.get("ci", [np.nan, np.nan])
                rows.append({"scenario": name, "hypothesis": h["name"], "scope": f"seed {s['seed']}",
                             "gap": s.get("gap", np.nan), "ci_low": ci[0], "ci_high": ci[1],
                             "ordered": bool(s["ordered"]), "status": ""})
            p = h["pooled"]
            ci = p.get("ci", [np.nan, np.nan])
            rows.append({"scenario": name, "hypothesis": h["name"], "scope": "pooled",
                         "gap": p.get("gap", np.nan), "ci_low": ci[0], "ci_high": ci[1],
                         "ordered": bool(p.get("verdict", False)), "status": h["status"]})
    return rows


def write_outputs(out_dir, report: dict, tbls: Dict[str, tuple], figures: bool = True) -> List[Path]:
    out_dir = Path(out_dir)
    written = []
    io.write_report(out_dir / "report.json", report)
    written.append(out_dir / "report.json")
    for name, (cols, rows) in tbls.items():
        io.write_csv(out_dir / f"{name}.csv", name, cols, rows)
        written.append(out_dir / f"{name}.csv")
    if figures:
        written += render_figures(out_dir, tbls)
    return written


def read_table(path, name: str):
    return io.read_csv(path, name, TEXT_COLUMNS.get(name, ()))


def render_figures(out_dir, tbls: Dict[str, tuple]) -> List[Path]:
    out_dir = Path(out_dir)
    paths = []
    curves = tbls["training_curves"][1]
    for name in sorted({r["scenario"] for r in curves}):
        rows = [r for r in curves if r["scenario"] == name]
        paths.append(plotting.training_curves(rows, out_dir / f"training_curves_{name}.png",
                                              f"scenario {name}: training returns"))
    if tbls.get("fig2_household_observables", (None, []))[1]:
        rows = tbls["fig2_household_observables"][1]
        for col in ("savings", "c_act"):
            paths.append(plotting.box_by_household(rows, col, out_dir / f"fig2_{col}.png",
                                                   f"per-episode mean {col} by credit arm", group="arm"))
    if tbls.get("fig3_delta", (None, []))[1]:
        rows = [r for r in tbls["fig3_delta"][1] if r["metric"] == "c_act"]
        for r in rows:
            r["label"] = f"H{int(r['household']) + 1}"
        paths.append(plotting.bars_with_ci(rows, "label", out_dir / "fig3_consumption_delta.png",
                                           "requested consumption: credit minus no-credit", "delta"))
    if tbls.get("fig5_effective_eta", (None, []))[1]:
        paths.append(plotting.box_by_household(tbls["fig5_effective_eta"][1], "eta_eff",
                                               out_dir / "fig5_effective_eta.png",
                                               "per-episode mean effective eta"))
    if tbls.get("fig7_credit_share", (None, []))[1]:
        paths.append(plotting.box_by_household(tbls["fig7_credit_share"][1], "share",
                                               out_dir / "fig7_credit_share.png",
                                               "per-episode mean credit share"))
    if "dispersion_b_vs_c" in tbls:
        rows = [dict(r, label=r["scenario"]) for r in tbls["dispersion_b_vs_c"][1] if r["seed"] == "pooled"]
        paths.append(plotting.bars_with_ci(rows, "label", out_dir / "dispersion_b_vs_c.png",
                                           "cross-household reward dispersion", "std of cumulative reward"))
    return paths
