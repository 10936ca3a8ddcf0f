"""Run configuration: an INI file with one section per agent type.

Every key is optional and defaults to the scenario's published setting, so
an empty file reproduces the reference setup.  Unknown sections or keys are
rejected with the offending line number.  :func:`dump_config` writes the fully
resolved configuration, and parsing that text gives back an equal
:class:`RunConfig`.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

from econsim.agents import BANK, FIRM, GOV, household_id, is_household
from econsim.dynamics import BankParams, FirmParams
from econsim.grids import ActionGrids
from econsim.rewards import GovPrefs, HouseholdPrefs
from econsim.scenarios import Scenario, get_scenario
from econsim.training import TrainConfig


class ConfigError(ValueError):
    """Invalid or unreadable configuration (exit status 2)."""


@dataclass(frozen=True)
class EvalSettings:
    episodes: int = 100
    eval_seed: int = 1000
    credit: float = 5000.0

    def __post_init__(self):
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    train: TrainConfig
    seeds: Tuple[int, ...] = (0, 1, 2)
    evaluation: EvalSettings = EvalSettings()

    @property
    def n_households(self) -> int:
        return len(self.scenario.prefs)

    @property
    def grids_hash(self) -> str:
        return self.scenario.grids.digest(self.n_households)


# --------------------------------------------------------------------------
# value codecs

def _floats(text: str) -> Tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _ints(text: str) -> Tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(int(p) for p in parts)


def _names(text: str) -> Tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


Parser = Callable[[str], object]

# section -> key -> parser
SCHEMA: Dict[str, Dict[str, Parser]] = {
    "run": {"scenario": str.strip, "seeds": _ints, "horizon": int, "learners": _names},
    "train": {
        "iterations": int, "episodes_per_iter": int, "epochs": int, "minibatch": int,
        "clip": float, "gae_lambda": float, "vf_coef": float, "ent_coef": float,
        "hidden": _ints, "lr_households": float, "lr_firm": float, "lr_central_bank": float,
        "lr_government": float,
    },
    "households": {"gamma": _floats, "mu": _floats, "nu": _floats, "beta": _floats},
    "firm": {"alpha": float, "rho": float, "sigma": float, "chi": float, "beta": float},
    "central_bank": {"lam": float, "pi_star": float, "beta": float},
    "government": {"theta": float, "beta": float, "iota_cap": float, "m_floor": float,
                   "fixed_tax": float, "fixed_credit": float},
    "grids": {"labor": _floats, "consumption": _floats, "eta": _floats, "price": _floats,
              "wage": _floats, "interest": _floats, "tax": _floats, "weight_granularity": int},
    "evaluation": {"episodes": int, "eval_seed": int, "credit": float},
}

_LR_KEYS = {"lr_firm": FIRM, "lr_central_bank": BANK, "lr_government": GOV}


def _line_numbers(text: str) -> Dict[Tuple[str, Optional[str]], int]:
    """Map (section, key) and (section, None) to 1-based line numbers."""
    lines: Dict[Tuple[str, Optional[str]], int] = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        m = re.match(r"^([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


def parse_config(text: str, source: str = "<config>", scenario: Optional[str] = None) -> RunConfig:
    """Parse INI ``text``; ``scenario`` (e.g. from the command line) overrides ``[run] scenario``."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text, source=source)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        what = f"option {exc.option!r}" if hasattr(exc, "option") else f"section [{exc.section}]"
        raise ConfigError(f"{source}:{exc.lineno}: duplicate {what}") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: expected a [section] header") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}: cannot parse {line}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_numbers(text)

    def where(section, key=None):
        no = lines.get((section, key)) or lines.get((section, None))
        return f"{source}:{no}" if no else source

    values: Dict[str, Dict[str, object]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{where(section)}: unknown section [{section}]; "
                              f"expected one of {sorted(SCHEMA)}")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where(section, key)}: unknown key {key!r} in [{section}]")
            try:
                values[section][key] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{where(section, key)}: bad value for {section}.{key}: {exc}") from None

    def get(section, key, default):
        return values.get(section, {}).get(key, default)

    try:
        return _build(get, scenario)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        m = re.search(r"grid '(\w+)'", msg)
        key = ("grids", m.group(1)) if m else None
        m = re.search(r"\b([a-z_]+)\.([a-z_]+)\b", msg)
        if key is None and m and m.group(1) in SCHEMA:
            key = (m.group(1), m.group(2))
        loc = where(*key) if key and (key in lines or (key[0], None) in lines) else source
        raise ConfigError(f"{loc}: {msg}") from None


def _build(get, scenario_override: Optional[str]) -> RunConfig:
    name = scenario_override or get("run", "scenario", None)
    if not name:
        raise ConfigError("no scenario given (use --scenario or [run] scenario)")
    base = get_scenario(name)

    hh = {k: get("households", k, None) for k in ("gamma", "mu", "nu", "beta")}
    n = len(hh["gamma"]) if hh["gamma"] else len(base.prefs)
    for k, v in hh.items():
        if v is None:
            v = hh[k] = tuple(getattr(p, k) for p in base.prefs)[:n]
        if len(v) == 1 and n > 1:
            hh[k] = v * n
        elif len(v) != n:
            raise ValueError(f"households.{k} has {len(v)} entries, expected {n}")
    prefs = tuple(HouseholdPrefs(gamma=g, nu=nu, mu=mu, beta=b)
                  for g, mu, nu, b in zip(hh["gamma"], hh["mu"], hh["nu"], hh["beta"]))

    default_learners = tuple(a for a in base.learners if not is_household(a))
    base_hh_learners = any(is_household(a) for a in base.learners)
    if base_hh_learners:
        default_learners = tuple(household_id(i) for i in range(n)) + default_learners
    learners = get("run", "learners", default_learners)
    valid = {household_id(i) for i in range(n)} | {FIRM, BANK, GOV}
    bad = [a for a in learners if a not in valid]
    if bad:
        raise ValueError(f"run.learners: unknown agents {bad}")
    if GOV in learners and GOV not in base.learners:
        raise ValueError(f"scenario {base.name} has no learning government")

    base_hh_lr = next((lr for a, lr in base.learning_rates.items() if is_household(a)), 0.01)
    rates = {}
    for a in learners:
        if is_household(a):
            rates[a] = get("train", "lr_households", base_hh_lr)
    for key, agent in _LR_KEYS.items():
        if agent in learners:
            rates[agent] = get("train", key, base.learning_rates.get(agent, 0.001))

    f, b, g = base.firm, base.bank, base.government
    firm = FirmParams(**{k: get("firm", k, getattr(f, k)) for k in SCHEMA["firm"]},
                      eps0=f.eps0, inventory0=f.inventory0)
    bank = BankParams(**{k: get("central_bank", k, getattr(b, k)) for k in SCHEMA["central_bank"]})
    government = GovPrefs(**{k: get("government", k, getattr(g, k))
                             for k in ("theta", "beta", "iota_cap", "m_floor")})
    grids = ActionGrids(**{k: get("grids", k, getattr(base.grids, k)) for k in SCHEMA["grids"]})
    fixed_tax = get("government", "fixed_tax", base.fixed_tax)
    if fixed_tax not in grids.tax:
        raise ValueError(f"government.fixed_tax {fixed_tax} is not on the tax grid")

    scenario = replace(
        base, prefs=prefs, learners=tuple(learners), learning_rates=rates,
        horizon=get("run", "horizon", base.horizon), firm=firm, bank=bank, government=government,
        grids=grids, fixed_tax=fixed_tax, fixed_credit=get("government", "fixed_credit", base.fixed_credit),
    )
    if scenario.horizon < 1:
        raise ValueError("run.horizon must be >= 1")
    d = TrainConfig()
    train = TrainConfig(**{k: get("train", k, getattr(d, k)) for k in (
        "iterations", "episodes_per_iter", "epochs", "minibatch", "clip", "gae_lambda",
        "vf_coef", "ent_coef", "hidden")})
    if train.epochs < 1 or train.minibatch < 1:
        raise ValueError("train.epochs and train.minibatch must be >= 1")
    seeds = get("run", "seeds", (0, 1, 2))
    if not seeds or len(set(seeds)) != len(seeds):
        raise ValueError("run.seeds must be a nonempty list of distinct integers")
    e = EvalSettings()
    evaluation = EvalSettings(**{k: get("evaluation", k, getattr(e, k)) for k in SCHEMA["evaluation"]})
    # Fail early on grids the economy cannot use.
    scenario.economy()
    return RunConfig(scenario=scenario, train=train, seeds=tuple(seeds), evaluation=evaluation)


def load_config(path, scenario: Optional[str] = None) -> RunConfig:
    """Load ``path``; ``None`` means all defaults for ``scenario``."""
    if path is None:
        return parse_config("", "<defaults>", scenario)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    return parse_config(path.read_text(), str(path), scenario)


def dump_config(rc: RunConfig) -> str:
    """Resolved configuration as INI text."""
    s, t = rc.scenario, rc.train
    sections: Dict[str, Dict[str, object]] = {
        "run": {"scenario": s.name, "seeds": rc.seeds, "horizon": s.horizon, "learners": s.learners},
        "train": {k: getattr(t, k) for k in (
            "iterations", "episodes_per_iter", "epochs", "minibatch", "clip", "gae_lambda",
            "vf_coef", "ent_coef", "hidden")},
        "households": {k: tuple(getattr(p, k) for p in s.prefs) for k in ("gamma", "mu", "nu", "beta")},
        "firm": {k: getattr(s.firm, k) for k in SCHEMA["firm"]},
        "central_bank": {k: getattr(s.bank, k) for k in SCHEMA["central_bank"]},
        "government": {**{k: getattr(s.government, k) for k in ("theta", "beta", "iota_cap", "m_floor")},
                       "fixed_tax": s.fixed_tax, "fixed_credit": s.fixed_credit},
        "grids": {k: getattr(s.grids, k) for k in SCHEMA["grids"]},
        "evaluation": {k: getattr(rc.evaluation, k) for k in SCHEMA["evaluation"]},
    }
    hh_rates = [lr for a, lr in s.learning_rates.items() if is_household(a)]
    if hh_rates:
        sections["train"]["lr_households"] = hh_rates[0]
    for key, agent in _LR_KEYS.items():
        if agent in s.learning_rates:
            sections["train"][key] = s.learning_rates[agent]
    out = []
    for name, items in sections.items():
        out.append(f"[{name}]")
        out += [f"{k} = {_fmt(v)}" for k, v in items.items()]
        out.append("")
    return "\n".join(out)
