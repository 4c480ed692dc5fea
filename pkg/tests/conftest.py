"""Shared fixtures: the four reference problems and a session-wide solve cache."""

import numpy as np
import pytest

from qqc import (
    QueryProblem,
    build_dual,
    build_dual_relaxed,
    build_primal,
    build_primal_relaxed,
    phase_query_problem,
    solve,
)
from qqc.reconstruct import QuantumQueryAlgorithm


def _distinguish_i_x() -> QueryProblem:
    eye = np.eye(2, dtype=complex)
    flip = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return QueryProblem(
        2, ("i", "x"), np.stack([eye, flip]), ("i", "x"), {"i": "i", "x": "x"}
    )


PROBLEMS = {
    "const": phase_query_problem(2, {"00": "0", "01": "0", "10": "0", "11": "0"}),
    "deutsch": phase_query_problem(2, {"00": "0", "11": "0", "01": "1", "10": "1"}),
    "or2": phase_query_problem(2, {"00": "0", "01": "1", "10": "1", "11": "1"}),
    "ix": _distinguish_i_x(),
}

BUILDERS = {
    "primal": build_primal,
    "dual": build_dual,
    "primal_relaxed": build_primal_relaxed,
    "dual_relaxed": build_dual_relaxed,
}

# Grid cells with a feasible exact primal; reconstruction tests and the
# round-trip criterion iterate exactly these.
FEASIBLE_CELLS = tuple(
    [("const", q, eps) for q in (0, 1, 2) for eps in (0.0, 0.1)]
    + [("deutsch", q, eps) for q in (1, 2) for eps in (0.0, 0.1)]
    + [("ix", q, eps) for q in (1, 2) for eps in (0.0, 0.1)]
)


@pytest.fixture(scope="session")
def cached_solve():
    """Memoized solver outcomes keyed by (problem name, builder name, q, eps)."""
    cache = {}

    def go(pname, builder, q, eps):
        key = (pname, builder, q, eps)
        if key not in cache:
            cache[key] = solve(BUILDERS[builder](PROBLEMS[pname], q, eps))
        return cache[key]

    return go


@pytest.fixture
def const():
    return PROBLEMS["const"]


@pytest.fixture
def deutsch():
    return PROBLEMS["deutsch"]


@pytest.fixture
def or2():
    return PROBLEMS["or2"]


@pytest.fixture
def ix():
    return PROBLEMS["ix"]


def hand_deutsch_algorithm() -> QuantumQueryAlgorithm:
    """Textbook two-point parity circuit: one phase query between Hadamards."""
    h = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
    return QuantumQueryAlgorithm(
        n=2,
        w_dim=1,
        unitaries=[h, h],
        projectors={"0": np.diag([1.0, 0.0]).astype(complex),
                    "1": np.diag([0.0, 1.0]).astype(complex)},
    )


def random_valid_gamma(p: QueryProblem, rng: np.random.Generator) -> np.ndarray:
    """Random positive weights on every pair of inputs with different outputs."""
    s = p.size
    gam = np.zeros((s, s))
    for i in range(s):
        for j in range(i + 1, s):
            if p.g[p.labels[i]] != p.g[p.labels[j]]:
                w = float(rng.uniform(0.1, 2.0))
                gam[i, j] = gam[j, i] = w
    return gam
