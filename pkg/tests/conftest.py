from pathlib import Path

import numpy as np
import pytest

from gridflow import Branch, Bus, BusType, Case, Generator, GenCost, load_case

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
MALFORMED = Path(__file__).resolve().parent / "fixtures" / "malformed"

CORPUS = sorted(FIXTURES.glob("*.m")) + sorted(FIXTURES.glob("case*.json"))
CORPUS = [p for p in CORPUS if not p.name.endswith("_mp.json")]
# shunt-free, unity-tap, zero-shift networks
SERIES_CASES = ["case2.m", "case3_usecase.m", "case4gs_series.m", "case5pjm_series.m",
                "case9_series.m", "ring8_series.m"]


@pytest.fixture
def usecase():
    return load_case(FIXTURES / "case3_usecase.m")


def two_bus(x=0.1, r=0.0, load=0.0, qload=0.0):
    return Case(
        100.0,
        (Bus(1, BusType.SLACK), Bus(2, BusType.PQ, pd=load, qd=qload)),
        (Branch(1, 2, r=r, x=x),),
        (Generator(1, pmax=10.0),),
        name="two_bus",
    )


def linear_cost(c1):
    return GenCost(coefficients=(float(c1), 0.0))


def random_network(rng, n_bus, extra=2, shunts=False, taps=False):
    """Connected random network: a spanning tree plus ``extra`` chords."""
    buses = [Bus(1, BusType.SLACK)]
    for k in range(2, n_bus + 1):
        buses.append(Bus(k, BusType.PQ, pd=0.3 * rng.random(), qd=0.1 * rng.random(),
                         gs=0.02 * rng.random() if shunts else 0.0,
                         bs=0.05 * rng.random() if shunts else 0.0))
    pairs = [(int(rng.integers(1, k)), k) for k in range(2, n_bus + 1)]
    for _ in range(extra):
        a, b = rng.choice(np.arange(1, n_bus + 1), size=2, replace=False)
        pairs.append((int(a), int(b)))
    branches = []
    for f, t in pairs:
        branches.append(Branch(
            f, t, r=0.01 * rng.random(), x=0.05 + 0.1 * rng.random(),
            b=0.02 * rng.random() if shunts else 0.0,
            tap=(0.95 + 0.1 * rng.random()) if taps else 1.0,
            shift=(0.1 * rng.standard_normal()) if taps else 0.0,
        ))
    return Case(100.0, tuple(buses), tuple(branches), (Generator(1, pmax=100.0),), name="random")
