"""Multi-period study files: a case plus load profile, renewables and wind model.

A study is a JSON document::

    {
      "case": "case3_usecase.m",            # path relative to the study file
      "horizon": 12,
      "load_profile": [...],                # system-wide multipliers f(t)
      "renewables": [{"bus": 2, "p_max": 100, "name": "wind"}],
      "forecast": [...],                    # deterministic availability rho(t)
      "transition": {"states": [...], "probabilities": [[...]],
                     "state_values": [[...]], "initial": "average"}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..caseio import load_case
from ..model import Case
from .scenarios import Profile, RenewableUnit, ScenarioSet, TransitionMatrix


@dataclass(frozen=True)
class Study:
    case: Case
    horizon: int
    load_profile: Profile
    renewables: tuple[RenewableUnit, ...]
    forecast: ScenarioSet
    transition: TransitionMatrix | None = None
    initial: str | None = None


def parse_study(doc: dict, base_dir: Path | str = ".") -> Study:
    try:
        case = load_case(Path(base_dir) / doc["case"])
        horizon = int(doc["horizon"])
        profile = Profile(tuple(doc.get("load_profile") or (1.0,) * horizon))
        if len(profile) != horizon:
            raise ValueError(f"load_profile has {len(profile)} periods, horizon is {horizon}")
        units = tuple(RenewableUnit(int(r["bus"]), float(r["p_max"]), str(r.get("name", "wind")))
                      for r in doc.get("renewables", ()))
        for u in units:
            case.index[u.bus]
        forecast = ScenarioSet.deterministic(np.asarray(doc.get("forecast") or np.ones(horizon), dtype=float))
        if forecast.horizon != horizon:
            raise ValueError(f"forecast has {forecast.horizon} periods, horizon is {horizon}")
        tm, initial = None, None
        if doc.get("transition"):
            tr = doc["transition"]
            tm = TransitionMatrix(tuple(tr["states"]), np.asarray(tr["probabilities"], dtype=float),
                                  np.asarray(tr["state_values"], dtype=float))
            tm.check_horizon(horizon)
            initial = tr.get("initial")
            tm.initial_distribution(initial)
    except KeyError as exc:
        raise ValueError(f"study is missing or references unknown entry {exc}") from None
    return Study(case, horizon, profile, units, forecast, tm, initial)


def load_study(path) -> Study:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    return parse_study(doc, path.parent)
