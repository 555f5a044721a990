"""Load profiles, renewable availability and Markov wind scenarios."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .._kernels import markov_paths

ROW_TOL = 1e-12
PROB_TOL = 1e-12
MAX_ENUMERATED = 100_000


@dataclass(frozen=True)
class Profile:
    """Per-period multipliers ``f(t)`` applied to a base quantity."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("profile must have at least one period")
        if not all(math.isfinite(v) and v >= 0 for v in vals):
            raise ValueError("profile values must be finite and nonnegative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def flat(cls, horizon: int, value: float = 1.0) -> "Profile":
        return cls((value,) * horizon)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, t):
        return self.values[t]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


@dataclass(frozen=True)
class RenewableUnit:
    """Variable source with output ``p_max * rho`` in each period; curtailable."""

    bus: int
    p_max: float  # MW
    name: str = "wind"

    def __post_init__(self):
        if not (math.isfinite(self.p_max) and self.p_max >= 0):
            raise ValueError("renewable p_max must be finite and nonnegative")


@dataclass(frozen=True)
class TransitionMatrix:
    """Markov chain over discrete availability states.

    ``probabilities`` is either one ``(n, n)`` row-stochastic matrix used for
    every step or a ``(T-1, n, n)`` stack, one matrix per transition.
    ``state_values`` holds the availability of each state, ``(n,)`` or ``(T, n)``.
    """

    states: tuple[str, ...]
    probabilities: np.ndarray
    state_values: np.ndarray

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        n = len(states)
        if n == 0:
            raise ValueError("transition matrix needs at least one state")
        if len(set(states)) != n:
            raise ValueError("state labels must be unique")
        p = np.array(self.probabilities, dtype=float)
        if p.ndim == 2:
            p = p[None]
        if p.ndim != 3 or p.shape[1:] != (n, n):
            raise ValueError(f"transition probabilities must be ({n}, {n}) or (T-1, {n}, {n})")
        if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        sums = p.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            t, i = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)[0]
            raise ValueError(f"row {states[i]!r} of transition {t + 1} sums to {sums[t, i]!r}, not 1")
        v = np.array(self.state_values, dtype=float)
        if v.ndim == 1:
            v = v[None]
        if v.ndim != 2 or v.shape[1] != n:
            raise ValueError(f"state values must be ({n},) or (T, {n})")
        if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise ValueError("state availability values must lie in [0, 1]")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "state_values", v)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def step(self, t: int) -> np.ndarray:
        """Matrix for the move from period ``t`` to ``t + 1`` (0-based)."""
        p = self.probabilities
        return p[min(t, len(p) - 1)]

    def values_at(self, t: int) -> np.ndarray:
        v = self.state_values
        return v[min(t, len(v) - 1)]

    def state_index(self, label) -> int:
        try:
            return self.states.index(str(label))
        except ValueError:
            raise KeyError(f"unknown state {label!r}; states are {list(self.states)}") from None

    def check_horizon(self, horizon: int):
        if len(self.probabilities) not in (1, horizon - 1) and horizon > 1:
            raise ValueError(f"{len(self.probabilities)} transition matrices do not fit horizon {horizon}")
        if len(self.state_values) not in (1, horizon):
            raise ValueError(f"{len(self.state_values)} state-value rows do not fit horizon {horizon}")

    def initial_distribution(self, initial=None) -> np.ndarray:
        n = self.n_states
        if initial is None:
            return np.full(n, 1.0 / n)
        if isinstance(initial, (str, np.str_)):
            dist = np.zeros(n)
            dist[self.state_index(initial)] = 1.0
            return dist
        dist = np.asarray(initial, dtype=float)
        if dist.shape != (n,) or np.any(dist < 0) or abs(math.fsum(dist) - 1.0) > PROB_TOL:
            raise ValueError("initial distribution must be a probability vector over the states")
        return dist

    @classmethod
    def identity(cls, states, state_values) -> "TransitionMatrix":
        return cls(tuple(states), np.eye(len(states)), np.asarray(state_values, dtype=float))

    @classmethod
    def uniform(cls, states, state_values) -> "TransitionMatrix":
        n = len(states)
        return cls(tuple(states), np.full((n, n), 1.0 / n), np.asarray(state_values, dtype=float))


@dataclass(frozen=True)
class Scenario:
    rho: np.ndarray                    # (T,) or (T, n_units) availability
    probability: float
    states: tuple[str, ...] | None = None

    @property
    def label(self) -> str:
        return "-".join(self.states) if self.states else ""


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        scen = tuple(self.scenarios)
        if not scen:
            raise ValueError("scenario set is empty")
        fixed = []
        for s in scen:
            rho = np.array(s.rho, dtype=float)
            if rho.ndim not in (1, 2) or len(rho) == 0:
                raise ValueError("scenario availability must be (T,) or (T, n_units)")
            if np.any(~np.isfinite(rho)) or np.any(rho < 0) or np.any(rho > 1):
                raise ValueError("availability values must lie in [0, 1]")
            if not (math.isfinite(s.probability) and s.probability >= 0):
                raise ValueError("scenario probabilities must be nonnegative")
            fixed.append(Scenario(rho, float(s.probability), s.states))
        horizons = {len(s.rho) for s in fixed}
        if len(horizons) != 1:
            raise ValueError(f"scenario paths have different lengths: {sorted(horizons)}")
        total = math.fsum(s.probability for s in fixed)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"scenario probabilities sum to {total!r}, not 1")
        names = tuple(self.names) or tuple(s.label or f"s{k + 1}" for k, s in enumerate(fixed))
        if len(names) != len(fixed):
            raise ValueError("one name per scenario is required")
        object.__setattr__(self, "scenarios", tuple(fixed))
        object.__setattr__(self, "names", names)

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __getitem__(self, k) -> Scenario:
        return self.scenarios[k]

    @property
    def horizon(self) -> int:
        return len(self.scenarios[0].rho)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    def rho(self, n_units: int = 1) -> np.ndarray:
        """Availability array ``(S, T, n_units)``."""
        out = np.empty((len(self), self.horizon, n_units))
        for k, s in enumerate(self.scenarios):
            r = s.rho if s.rho.ndim == 2 else s.rho[:, None]
            if r.shape[1] not in (1, n_units):
                raise ValueError(f"scenario {self.names[k]} has {r.shape[1]} availability columns, expected {n_units}")
            out[k] = np.broadcast_to(r, (self.horizon, n_units))
        return out

    @classmethod
    def deterministic(cls, rho, name="forecast") -> "ScenarioSet":
        return cls((Scenario(np.asarray(rho, dtype=float), 1.0),), (name,))

    def with_scenario(self, rho, probability=0.0, name=None) -> "ScenarioSet":
        """Append a scenario; the remaining mass is rescaled so the total stays 1."""
        scale = 1.0 - probability
        scen = [Scenario(s.rho, s.probability * scale, s.states) for s in self.scenarios]
        scen.append(Scenario(np.asarray(rho, dtype=float), probability))
        return ScenarioSet(tuple(scen), self.names + (name or f"s{len(scen)}",))

    def to_rows(self):
        for name, s in zip(self.names, self.scenarios):
            r = s.rho if s.rho.ndim == 2 else s.rho[:, None]
            for t in range(len(r)):
                for u in range(r.shape[1]):
                    state = s.states[t] if s.states else ""
                    yield name, t + 1, u + 1, state, float(r[t, u]), s.probability

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "period", "unit", "state", "rho", "probability"])
        for name, t, u, state, rho, p in self.to_rows():
            w.writerow([name, t, u, state, f"{rho:.12g}", f"{p:.17g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "scenarios": [
                {
                    "name": name,
                    "probability": s.probability,
                    "states": list(s.states) if s.states else None,
                    "rho": s.rho.tolist(),
                }
                for name, s in zip(self.names, self.scenarios)
            ],
        }


def _step_cdfs(tm: TransitionMatrix, horizon: int) -> np.ndarray:
    steps = np.stack([tm.step(t) for t in range(max(horizon - 1, 1))])
    return np.cumsum(steps, axis=2)


def _rho_path(tm: TransitionMatrix, path) -> np.ndarray:
    return np.array([tm.values_at(t)[s] for t, s in enumerate(path)])


def sample_paths(tm: TransitionMatrix, count: int, horizon: int, seed=None, initial=None) -> np.ndarray:
    """State-index paths ``(count, horizon)``.

    Scenario ``k`` draws its uniforms from its own Philox substream spawned
    from ``seed``, so path ``k`` does not depend on ``count`` or on the order
    in which paths are generated.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if count < 1:
        raise ValueError("count must be positive")
    tm.check_horizon(horizon)
    init = tm.initial_distribution(initial)
    children = np.random.SeedSequence(seed).spawn(count)
    u = np.empty((count, horizon))
    for k, child in enumerate(children):
        u[k] = np.random.Generator(np.random.Philox(child)).random(horizon)
    return markov_paths(np.cumsum(init), _step_cdfs(tm, horizon), u)


def enumerate_paths(tm: TransitionMatrix, horizon: int, initial=None) -> tuple[np.ndarray, np.ndarray]:
    """Every path with its exact product probability (``n**horizon`` rows)."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    tm.check_horizon(horizon)
    init = tm.initial_distribution(initial)
    n = tm.n_states
    if n ** horizon > MAX_ENUMERATED:
        raise ValueError(f"enumerating {n}^{horizon} paths exceeds the limit of {MAX_ENUMERATED}; sample instead")
    paths = np.array(list(itertools.product(range(n), repeat=horizon)), dtype=np.int64)
    probs = init[paths[:, 0]].copy()
    for t in range(1, horizon):
        probs *= tm.step(t - 1)[paths[:, t - 1], paths[:, t]]
    return paths, probs


def sample_scenarios(
    tm: TransitionMatrix,
    count: int,
    horizon: int,
    seed=None,
    initial=None,
    merge: bool = True,
) -> ScenarioSet:
    """Monte Carlo scenario set; ``count=0`` enumerates every path exactly.

    Sampled paths carry probability ``1/count``; with ``merge`` identical
    paths are combined (first-occurrence order) and their mass added.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        paths, probs = enumerate_paths(tm, horizon, initial)
        scen = [Scenario(_rho_path(tm, p), float(q), tuple(tm.states[s] for s in p)) for p, q in zip(paths, probs)]
        return ScenarioSet(tuple(scen))
    paths = sample_paths(tm, count, horizon, seed, initial)
    if not merge:
        scen = [Scenario(_rho_path(tm, p), 1.0 / count, tuple(tm.states[s] for s in p)) for p in paths]
        return ScenarioSet(tuple(scen), tuple(f"s{k + 1}" for k in range(count)))
    hits: dict[tuple, int] = {}
    for p in map(tuple, paths):
        hits[p] = hits.get(p, 0) + 1
    scen = [Scenario(_rho_path(tm, p), c / count, tuple(tm.states[s] for s in p)) for p, c in hits.items()]
    return ScenarioSet(tuple(scen), tuple(f"s{k + 1}" for k in range(len(scen))))


def persistent_scenarios(tm: TransitionMatrix, horizon: int, states: Sequence[str] | None = None,
                         probabilities=None) -> ScenarioSet:
    """One path per state that stays in that state for the whole horizon.

    Probabilities default to equal weights over the chosen states.
    """
    tm.check_horizon(horizon)
    labels = tuple(states) if states else tm.states
    idx = [tm.state_index(s) for s in labels]
    if probabilities is None:
        probs = np.full(len(idx), 1.0 / len(idx))
    else:
        probs = np.asarray(probabilities, dtype=float)
        if probs.shape != (len(idx),):
            raise ValueError("one probability per persistent state is required")
    scen = [Scenario(_rho_path(tm, [i] * horizon), float(q), (tm.states[i],) * horizon) for i, q in zip(idx, probs)]
    return ScenarioSet(tuple(scen), labels)
