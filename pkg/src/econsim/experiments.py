"""Evaluation of trained policies and the three tax-credit studies.

Each study takes, per training seed, the episode logs of one or more
evaluation *arms* (e.g. with and without credits) and returns a JSON-ready
report with per-household summaries and one verdict per hypothesis:

* ``pass``: the pooled (all seeds) test succeeds;
* ``weak pass``: the pooled test fails but every seed orders the quantities
  the right way (the effect may simply be small);
* ``fail``: otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from econsim.policy import PolicyParams
from econsim.scenarios import FIXED_CREDIT, Scenario
from econsim.training import final_window, rollout, scripted_indices

N_TEST_EPISODES = 100
N_RESAMPLES = 2000
CONFIDENCE = 0.95


@dataclass(frozen=True)
class Comparison:
    gap: float
    ci_low: float
    ci_high: float
    verdict: bool

    def as_dict(self) -> dict:
        return {"gap": self.gap, "ci": [self.ci_low, self.ci_high], "verdict": self.verdict}


def bootstrap_compare(a: Sequence[float], b: Sequence[float], resamples: int = N_RESAMPLES,
                      rng: Optional[np.random.Generator] = None, paired: bool = False,
                      level: float = CONFIDENCE) -> Comparison:
    """Percentile-bootstrap CI of mean(a) - mean(b); the verdict is True iff the CI excludes 0.

    With ``paired=True`` the two samples are resampled with shared indices.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("bootstrap_compare needs nonempty samples")
    if resamples < 1000:
        raise ValueError("use at least 1000 resamples")
    if paired and a.size != b.size:
        raise ValueError("paired samples must have equal length")
    rng = np.random.default_rng(0) if rng is None else rng
    gap = float(a.mean() - b.mean())
    if paired:
        idx = rng.integers(a.size, size=(resamples, a.size))
        diffs = (a[idx] - b[idx]).mean(axis=1)
    else:
        ia = rng.integers(a.size, size=(resamples, a.size))
        ib = rng.integers(b.size, size=(resamples, b.size))
        diffs = a[ia].mean(axis=1) - b[ib].mean(axis=1)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(diffs, [tail, 1.0 - tail])
    return Comparison(gap, float(lo), float(hi), bool(lo > 0 or hi < 0))


def mean_ci(x: Sequence[float], resamples: int = N_RESAMPLES,
            rng: Optional[np.random.Generator] = None, level: float = CONFIDENCE) -> dict:
    """Mean with a percentile-bootstrap CI, ignoring NaNs."""
    x = np.asarray(x, dtype=float)
    x = x[~np.isnan(x)]
    if x.size == 0:
        return {"mean": math.nan, "ci": [math.nan, math.nan], "n": 0}
    rng = np.random.default_rng(0) if rng is None else rng
    means = x[rng.integers(x.size, size=(resamples, x.size))].mean(axis=1)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [tail, 1.0 - tail])
    return {"mean": float(x.mean()), "ci": [float(lo), float(hi)], "n": int(x.size)}


# --------------------------------------------------------------------------
# per-episode metrics

METRICS = ("savings", "c_act", "c", "eta_eff", "share", "cum_reward")


def episode_metrics(rows: Sequence[Mapping], n_households: int) -> Dict[str, np.ndarray]:
    """Per-episode, per-household averages from an episode log.

    Returns arrays of shape (episodes, households) keyed by metric name plus
    ``dispersion`` of shape (episodes,): the std over households of each
    household's cumulative normalised reward.
    """
    episodes = sorted({int(r["episode"]) for r in rows})
    pos = {e: k for k, e in enumerate(episodes)}
    E, N = len(episodes), n_households
    sums = {m: np.zeros((E, N)) for m in METRICS}
    counts = np.zeros(E)
    share_counts = np.zeros((E, N))
    for r in rows:
        k = pos[int(r["episode"])]
        counts[k] += 1
        revenue = r["revenue"]
        for i in range(N):
            sums["savings"][k, i] += r[f"m_{i}"]
            sums["c_act"][k, i] += r[f"c_act_{i}"]
            sums["c"][k, i] += r[f"c_{i}"]
            sums["eta_eff"][k, i] += r[f"eta_eff_{i}"]
            sums["cum_reward"][k, i] += r[f"reward_{i}"]
            if revenue > 0:
                sums["share"][k, i] += r[f"kappa_next_{i}"] / revenue
                share_counts[k, i] += 1
    out = {}
    for m in ("savings", "c_act", "c", "eta_eff"):
        out[m] = sums[m] / np.maximum(counts, 1)[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        out["share"] = np.where(share_counts > 0, sums["share"] / share_counts, np.nan)
    out["cum_reward"] = sums["cum_reward"]
    out["dispersion"] = out["cum_reward"].std(axis=1) if E else np.zeros(0)
    out["episodes"] = np.array(episodes)
    return out


def summarize(metrics: Mapping[str, np.ndarray], rng: np.random.Generator) -> dict:
    n = metrics["savings"].shape[1]
    households = {}
    for i in range(n):
        households[f"household_{i}"] = {m: mean_ci(metrics[m][:, i], rng=rng) for m in METRICS}
    return {"households": households, "dispersion": mean_ci(metrics["dispersion"], rng=rng),
            "episodes": int(metrics["savings"].shape[0])}


# --------------------------------------------------------------------------
# evaluation


def evaluate(scenario: Scenario, policies: Mapping[str, PolicyParams], episodes: int,
             seed: int, credit_override: Optional[float] = None) -> List[dict]:
    """Episode log of frozen (sampled, not greedy) policies.

    Equal ``seed`` gives every arm the same shocks and the same per-agent
    uniforms, so arms differing only in credits are paired episode by episode.
    """
    econ = scenario.economy(credit_override=credit_override)
    learners = {a: policies[a] for a in scenario.learners}
    ro = rollout(econ, learners, scripted_indices(scenario), episodes,
                 np.random.SeedSequence([seed, 0xE7A1]), record=True)
    return ro.rows


@dataclass
class SeedRun:
    """Everything a study needs from one training seed."""

    seed: int
    arms: Dict[str, List[dict]]
    curves: List[dict] = field(default_factory=list)


def arm_name(credit: Optional[float]) -> str:
    return "default" if credit is None else f"credit_{credit:g}"


def _status(pooled_ok: bool, per_seed_ordered: Sequence[bool]) -> str:
    if pooled_ok:
        return "pass"
    if per_seed_ordered and all(per_seed_ordered):
        return "weak pass"
    return "fail"


def _hypothesis(name: str, description: str, per_seed: list, pooled: dict, pooled_ok: bool) -> dict:
    return {
        "name": name,
        "description": description,
        "per_seed": per_seed,
        "pooled": pooled,
        "status": _status(pooled_ok, [s["ordered"] for s in per_seed]),
    }


def _ordering(a, b, rng, paired, need_ci=True):
    """Test mean(a) > mean(b); returns (per-run dict, success flag)."""
    mask = ~(np.isnan(a) | np.isnan(b)) if paired else None
    if paired:
        a, b = a[mask], b[mask]
    else:
        a, b = a[~np.isnan(a)], b[~np.isnan(b)]
    if a.size == 0 or b.size == 0:
        return {"gap": math.nan, "ci": [math.nan, math.nan], "ordered": False, "n": 0}, False
    cmp = bootstrap_compare(a, b, rng=rng, paired=paired)
    ok = cmp.gap > 0 and (cmp.verdict if need_ci else True)
    return {**cmp.as_dict(), "ordered": cmp.gap > 0, "n": int(a.size)}, ok


# --------------------------------------------------------------------------
# the three studies


def experiment_a(runs: Sequence[SeedRun], n_households: int, credit: float = FIXED_CREDIT,
                 seed: int = 0) -> dict:
    """Transitory impact: credit arm minus no-credit arm, paired by episode."""
    rng = np.random.default_rng(seed)
    base, treat = arm_name(0.0), arm_name(credit)
    deltas = []
    arms_summary = {}
    for run in runs:
        m0 = episode_metrics(run.arms[base], n_households)
        m1 = episode_metrics(run.arms[treat], n_households)
        deltas.append({k: m1[k] - m0[k] for k in ("savings", "c_act", "c")})
        arms_summary[str(run.seed)] = {base: summarize(m0, rng), treat: summarize(m1, rng)}
    pooled = {k: np.concatenate([d[k] for d in deltas]) for k in ("savings", "c_act", "c")}
    last = n_households - 1
    hyps = []
    for key, label in (("savings", "savings"), ("c_act", "requested consumption")):
        per_seed = []
        for run, d in zip(runs, deltas):
            means = d[key].mean(axis=0)
            per_seed.append({"seed": run.seed, "means": means.tolist(), "ordered": bool(np.all(means > 0))})
        pooled_means = pooled[key].mean(axis=0)
        ok = bool(np.all(pooled_means > 0))
        hyps.append(_hypothesis(
            f"{key}_delta_positive",
            f"mean {label} delta with credits is positive for every household",
            per_seed, {"means": pooled_means.tolist(), "verdict": ok}, ok))
    per_seed = []
    for run, d in zip(runs, deltas):
        res, _ = _ordering(d["c_act"][:, last], d["c_act"][:, 0], rng, paired=True)
        per_seed.append({"seed": run.seed, **res})
    res, ok = _ordering(pooled["c_act"][:, last], pooled["c_act"][:, 0], rng, paired=True)
    hyps.append(_hypothesis(
        "c_act_delta_last_gt_first",
        f"requested-consumption delta of household {last + 1} exceeds household 1 (95% CI excludes 0)",
        per_seed, res, ok))
    delta_summary = {
        f"household_{i}": {k: mean_ci(pooled[k][:, i], rng=rng) for k in ("savings", "c_act", "c")}
        for i in range(n_households)
    }
    return {"experiment": "A", "credit": credit, "arms": arms_summary, "deltas": delta_summary,
            "hypotheses": hyps}


def experiment_b(runs: Sequence[SeedRun], n_households: int, seed: int = 0) -> dict:
    """Credit-spend fractions under fixed credits and training-return ordering."""
    rng = np.random.default_rng(seed)
    arm = arm_name(None)
    metrics = [episode_metrics(run.arms[arm], n_households) for run in runs]
    last = n_households - 1
    per_seed = []
    for run, m in zip(runs, metrics):
        res, _ = _ordering(m["eta_eff"][:, last], m["eta_eff"][:, 0], rng, paired=True)
        per_seed.append({"seed": run.seed, **res})
    eta = np.concatenate([m["eta_eff"] for m in metrics])
    res, ok = _ordering(eta[:, last], eta[:, 0], rng, paired=True)
    hyps = [_hypothesis("eta_last_gt_first",
                        f"mean effective eta of household {last + 1} exceeds household 1 (95% CI excludes 0)",
                        per_seed, res, ok)]
    hyps.append(_final_window_hypothesis(runs, n_households))
    return {"experiment": "B", "arms": {str(r.seed): {arm: summarize(m, rng)} for r, m in zip(runs, metrics)},
            "hypotheses": hyps, "dispersion": _dispersion(metrics, rng)}


def _final_window_hypothesis(runs, n_households) -> dict:
    first, last = "household_0", f"household_{n_households - 1}"
    per_seed = []
    for run in runs:
        if not run.curves:
            per_seed.append({"seed": run.seed, "first": math.nan, "last": math.nan, "ordered": False})
            continue
        f, l = final_window(run.curves, first), final_window(run.curves, last)
        per_seed.append({"seed": run.seed, "first": f, "last": l, "ordered": bool(f > l)})
    firsts = [s["first"] for s in per_seed]
    lasts = [s["last"] for s in per_seed]
    ok = bool(per_seed) and bool(np.mean(firsts) > np.mean(lasts))
    return _hypothesis("final_return_first_gt_last",
                       f"final-window training return of household 1 exceeds household {n_households}",
                       per_seed, {"first": float(np.mean(firsts)), "last": float(np.mean(lasts)),
                                  "verdict": ok}, ok)


def _dispersion(metrics, rng) -> dict:
    disp = np.concatenate([m["dispersion"] for m in metrics])
    return mean_ci(disp, rng=rng)


def experiment_c(runs: Sequence[SeedRun], n_households: int,
                 baseline: Optional[Sequence[SeedRun]] = None, seed: int = 0) -> dict:
    """Learned credit shares, and reward dispersion against scenario B when given."""
    rng = np.random.default_rng(seed)
    arm = arm_name(None)
    metrics = [episode_metrics(run.arms[arm], n_households) for run in runs]
    last = n_households - 1
    per_seed = []
    for run, m in zip(runs, metrics):
        res, _ = _ordering(m["share"][:, last], m["share"][:, 0], rng, paired=True)
        per_seed.append({"seed": run.seed, **res})
    share = np.concatenate([m["share"] for m in metrics])
    res, ok = _ordering(share[:, last], share[:, 0], rng, paired=True)
    hyps = [_hypothesis("share_last_gt_first",
                        f"mean credit share of household {last + 1} exceeds household 1 (95% CI excludes 0)",
                        per_seed, res, ok)]
    report = {"experiment": "C",
              "arms": {str(r.seed): {arm: summarize(m, rng)} for r, m in zip(runs, metrics)},
              "dispersion": _dispersion(metrics, rng)}
    if baseline:
        hyps.append(dispersion_comparison(baseline, runs, n_households, rng))
    report["hypotheses"] = hyps
    return report


def dispersion_comparison(runs_b: Sequence[SeedRun], runs_c: Sequence[SeedRun], n_households: int,
                          rng: np.random.Generator) -> dict:
    """Cross-household reward dispersion should be lower with the learning government."""
    arm = arm_name(None)
    disp_b = {r.seed: episode_metrics(r.arms[arm], n_households)["dispersion"] for r in runs_b}
    disp_c = {r.seed: episode_metrics(r.arms[arm], n_households)["dispersion"] for r in runs_c}
    per_seed = []
    for s in sorted(set(disp_b) & set(disp_c)):
        cmp = bootstrap_compare(disp_b[s], disp_c[s], rng=rng)
        per_seed.append({"seed": s, **cmp.as_dict(), "mean_b": float(disp_b[s].mean()),
                         "mean_c": float(disp_c[s].mean()), "ordered": cmp.gap > 0})
    pooled_b = np.concatenate(list(disp_b.values()))
    pooled_c = np.concatenate(list(disp_c.values()))
    cmp = bootstrap_compare(pooled_b, pooled_c, rng=rng)
    ok = cmp.gap > 0
    return _hypothesis("dispersion_c_lt_b",
                       "std over households of cumulative normalised reward is lower in C than in B",
                       per_seed, {**cmp.as_dict(), "mean_b": float(pooled_b.mean()),
                                  "mean_c": float(pooled_c.mean())}, ok)


# --------------------------------------------------------------------------
# convenience wrappers over trained policies


@dataclass
class TrainedRun:
    seed: int
    policies: Dict[str, PolicyParams]
    curves: List[dict] = field(default_factory=list)


def run_experiment_A(scenario: Scenario, runs: Sequence[TrainedRun], episodes: int = N_TEST_EPISODES,
                     eval_seed: int = 1000, credit: float = FIXED_CREDIT) -> dict:
    seed_runs = [
        SeedRun(r.seed, {arm_name(k): evaluate(scenario, r.policies, episodes, eval_seed + r.seed, k)
                         for k in (0.0, credit)}, r.curves)
        for r in runs
    ]
    return experiment_a(seed_runs, len(scenario.prefs), credit=credit, seed=eval_seed)


def _default_runs(scenario, runs, episodes, eval_seed):
    return [SeedRun(r.seed, {arm_name(None): evaluate(scenario, r.policies, episodes, eval_seed + r.seed)},
                    r.curves) for r in runs]


def run_experiment_B(scenario: Scenario, runs: Sequence[TrainedRun], episodes: int = N_TEST_EPISODES,
                     eval_seed: int = 1000) -> dict:
    return experiment_b(_default_runs(scenario, runs, episodes, eval_seed), len(scenario.prefs),
                        seed=eval_seed)


def run_experiment_C(scenario: Scenario, runs: Sequence[TrainedRun], episodes: int = N_TEST_EPISODES,
                     eval_seed: int = 1000, baseline: Optional[tuple] = None) -> dict:
    """``baseline`` is an optional ``(scenario_b, runs_b)`` pair for the dispersion comparison."""
    base_runs = None
    if baseline is not None:
        scen_b, runs_b = baseline
        base_runs = _default_runs(scen_b, runs_b, episodes, eval_seed)
    return experiment_c(_default_runs(scenario, runs, episodes, eval_seed), len(scenario.prefs),
                        baseline=base_runs, seed=eval_seed)
