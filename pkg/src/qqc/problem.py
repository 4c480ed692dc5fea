"""Query-problem instances: a finite set of unitary black boxes and a target map.

An instance holds n x n unitaries, one per label, a list of output labels, and
the function g assigning an output to every unitary. The block oracle is the
block-diagonal matrix with the instance unitaries as diagonal blocks, acting on
(input register, query register) with the query register fast-running.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import kron

UNITARITY_TOL = 1e-9

__all__ = [
    "QueryProblem",
    "ValidationReport",
    "DerivedConstants",
    "validate",
    "build_omega",
    "build_constants",
    "phase_query_problem",
    "problem_to_dict",
    "problem_from_dict",
]


@dataclass
class QueryProblem:
    """Immutable-by-convention description of one instance."""

    n: int
    labels: tuple[str, ...]
    unitaries: np.ndarray  # (|S|, n, n) complex
    outputs: tuple[str, ...]
    g: dict[str, str]

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def output_index(self, z: str) -> int:
        return self.outputs.index(z)

    def class_indices(self, z: str) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if self.g[lab] == z]


@dataclass
class ValidationReport:
    issues: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, code: str, message: str, residual: float | None = None) -> None:
        entry = {"code": code, "message": message}
        if residual is not None:
            entry["residual"] = float(residual)
        self.issues.append(entry)


def validate(p: QueryProblem) -> ValidationReport:
    """Check shapes, unitarity, label uniqueness, and totality of g."""
    rep = ValidationReport()
    if p.n < 1:
        rep.add("bad-n", f"query register dimension must be >= 1, got {p.n}")
    if len(p.labels) < 1:
        rep.add("empty-family", "at least one unitary is required")
    if len(set(p.labels)) != len(p.labels):
        rep.add("dup-label", "unitary labels are not unique")
    if len(p.outputs) < 1:
        rep.add("empty-outputs", "at least one output label is required")
    if len(set(p.outputs)) != len(p.outputs):
        rep.add("dup-output", "output labels are not unique")
    arr = np.asarray(p.unitaries)
    if arr.shape != (len(p.labels), p.n, p.n):
        rep.add("bad-shape", f"unitary array shape {arr.shape} != ({len(p.labels)}, {p.n}, {p.n})")
        return rep
    eye = np.eye(p.n)
    for i, lab in enumerate(p.labels):
        res = float(np.linalg.norm(arr[i].conj().T @ arr[i] - eye))
        if res > UNITARITY_TOL:
            rep.add("not-unitary", f"matrix {lab!r} is not unitary", res)
    for lab in p.labels:
        if lab not in p.g:
            rep.add("g-not-total", f"g is undefined on {lab!r}")
        elif p.g[lab] not in p.outputs:
            rep.add("g-bad-value", f"g({lab!r}) = {p.g[lab]!r} is not an output label")
    for key in p.g:
        if key not in p.labels:
            rep.add("g-extra-key", f"g defined on unknown label {key!r}")
    return rep


def _require_valid(p: QueryProblem) -> None:
    rep = validate(p)
    if not rep.ok:
        raise ValueError(f"invalid problem: {rep.issues}")


def build_omega(p: QueryProblem) -> np.ndarray:
    """Block-diagonal oracle, one n x n block per label in label order."""
    _require_valid(p)
    s, n = p.size, p.n
    omega = np.zeros((s * n, s * n), dtype=complex)
    for i in range(s):
        omega[i * n : (i + 1) * n, i * n : (i + 1) * n] = p.unitaries[i]
    return omega


@dataclass
class DerivedConstants:
    """Per-instance matrices shared by the program builders.

    pairs lists index pairs (i, j), i < j, whose labels map to different
    outputs. v_mats[(i, j)] has ones at (i, j) and (j, i); w_mats[(i, j)] has
    ones at (i, i) and (j, j).
    """

    omega: np.ndarray
    deltas: dict[str, np.ndarray]
    pairs: tuple[tuple[int, int], ...]
    v_mats: dict[tuple[int, int], np.ndarray]
    w_mats: dict[tuple[int, int], np.ndarray]


def build_constants(p: QueryProblem) -> DerivedConstants:
    _require_valid(p)
    s = p.size
    deltas = {}
    for z in p.outputs:
        d = np.zeros((s, s))
        for i in p.class_indices(z):
            d[i, i] = 1.0
        deltas[z] = d
    pairs = []
    v_mats = {}
    w_mats = {}
    for i, j in itertools.combinations(range(s), 2):
        if p.g[p.labels[i]] != p.g[p.labels[j]]:
            v = np.zeros((s, s))
            v[i, j] = v[j, i] = 1.0
            w = np.zeros((s, s))
            w[i, i] = w[j, j] = 1.0
            pairs.append((i, j))
            v_mats[(i, j)] = v
            w_mats[(i, j)] = w
    return DerivedConstants(
        omega=build_omega(p),
        deltas=deltas,
        pairs=tuple(pairs),
        v_mats=v_mats,
        w_mats=w_mats,
    )


def phase_query_problem(m: int, g_classical: dict[str, str]) -> QueryProblem:
    """Instance whose oracles phase-flip basis state i by the i-th bit of x.

    The query register has dimension m and basis index i in {1..m} picks bit
    x_i of the hidden string; U_x = diag((-1)^{x_1}, ..., (-1)^{x_m}). Labels
    are the 2^m bit strings in lexicographic order. g_classical maps every bit
    string to an output label; outputs are sorted for determinism.
    """
    if m < 1:
        raise ValueError("bit-string length must be >= 1")
    labels = ["".join(bits) for bits in itertools.product("01", repeat=m)]
    missing = [x for x in labels if x not in g_classical]
    if missing:
        raise ValueError(f"g undefined on bit strings: {missing}")
    unitaries = np.stack(
        [np.diag([(-1.0) ** int(b) for b in x]).astype(complex) for x in labels]
    )
    outputs = tuple(sorted({str(v) for v in g_classical.values()}))
    g = {x: str(g_classical[x]) for x in labels}
    return QueryProblem(n=m, labels=tuple(labels), unitaries=unitaries, outputs=outputs, g=g)


def problem_to_dict(p: QueryProblem) -> dict:
    return {
        "n": p.n,
        "unitaries": [
            {"label": lab, "re": p.unitaries[i].real.tolist(), "im": p.unitaries[i].imag.tolist()}
            for i, lab in enumerate(p.labels)
        ],
        "outputs": list(p.outputs),
        "g": dict(p.g),
    }


def problem_from_dict(data: dict) -> QueryProblem:
    """Parse the JSON problem format; raises ValueError on malformed input."""
    try:
        n = int(data["n"])
        entries = data["unitaries"]
        labels = tuple(str(e["label"]) for e in entries)
        mats = []
        for e in entries:
            re = np.asarray(e["re"], dtype=float)
            im = np.asarray(e.get("im", np.zeros_like(re)), dtype=float)
            mats.append(re + 1j * im)
        outputs = tuple(str(z) for z in data["outputs"])
        g = {str(k): str(v) for k, v in data["g"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed problem description: {exc}") from exc
    shapes = {m.shape for m in mats}
    if shapes and shapes != {(n, n)}:
        raise ValueError(f"unitary shapes {shapes} do not match n = {n}")
    unitaries = np.stack(mats) if mats else np.zeros((0, n, n), dtype=complex)
    return QueryProblem(n=n, labels=labels, unitaries=unitaries, outputs=outputs, g=g)


def extend_registers(p: QueryProblem, w_dim: int) -> np.ndarray:
    """Oracle on (input, query, workspace) with the workspace fast-running."""
    return kron(build_omega(p), np.eye(w_dim))
