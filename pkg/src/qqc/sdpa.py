"""SDPA sparse (.dat-s) export and parsing for equality-form programs.

A program {A(x) = b, x in PSD product} is written in the SDPA dual
convention: one scalar constraint tr(F_k Y) = c_k per real coordinate of
each matrix row, with Y the block-diagonal variable and F_0 = 0 (pure
feasibility). Complex Hermitian blocks of dimension > 1 are emitted at
doubled size through the real-symmetric embedding

    H -> [[Re H, -Im H], [Im H, Re H]] / 2

whose halved entries keep every tr(F_k Y) value unchanged; 1x1 blocks stay
1x1. Entry lines are "k b i j v" with i <= j and 17 significant digits, in
a fixed deterministic order, so identical programs produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .programs import Block, BlockMap, ConicFeasibilityProgram, Row
from .solver import hvec, unhvec

__all__ = ["SdpaData", "export_sdpa", "parse_sdpa", "write_sdpa", "sdpa_to_program"]


@dataclass
class SdpaData:
    """Contents of one SDPA sparse file."""

    n_constraints: int
    block_sizes: list[int]
    rhs: list[float]
    entries: list[tuple[int, int, int, int, float]]  # (k, block, i, j, value), 1-based


def _fmt(v: float) -> str:
    s = format(float(v), ".17g")
    if not any(ch in s for ch in ".eE"):
        s += ".0"
    return s


def _doubled(h: np.ndarray) -> np.ndarray:
    re, im = h.real, h.imag
    return 0.5 * np.block([[re, -im], [im, re]])


def _constraint_matrices(prog: ConicFeasibilityProgram) -> SdpaData:
    sizes = [b.dim if b.dim == 1 else 2 * b.dim for b in prog.blocks]
    rhs: list[float] = []
    entries: list[tuple[int, int, int, int, float]] = []
    k = 0
    for row in prog.rows:
        d = row.dim
        for comp in range(d * d):
            k += 1
            e = np.zeros(d * d)
            e[comp] = 1.0
            basis = unhvec(e, d)
            rhs.append(float(hvec(np.asarray(row.rhs, dtype=complex))[comp]))
            per_block: dict[int, np.ndarray] = {}
            for bj, m in row.terms:
                img = m.adjoint().apply(basis)
                per_block[bj] = per_block.get(bj, 0) + img
            for bj in sorted(per_block):
                h = per_block[bj]
                if prog.blocks[bj].dim == 1:
                    v = float(h[0, 0].real)
                    if v != 0.0:
                        entries.append((k, bj + 1, 1, 1, v))
                    continue
                f = _doubled(h)
                nz_i, nz_j = np.nonzero(np.triu(f) != 0.0)
                for i, j in zip(nz_i, nz_j):
                    entries.append((k, bj + 1, int(i) + 1, int(j) + 1, float(f[i, j])))
    return SdpaData(k, sizes, rhs, entries)


def write_sdpa(data: SdpaData, path: str) -> str:
    lines = [
        str(data.n_constraints),
        str(len(data.block_sizes)),
        " ".join(str(s) for s in data.block_sizes),
        " ".join(_fmt(v) for v in data.rhs),
    ]
    for k, b, i, j, v in data.entries:
        lines.append(f"{k} {b} {i} {j} {_fmt(v)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def export_sdpa(prog: ConicFeasibilityProgram, path: str) -> str:
    """Write an equality-sense program as an SDPA sparse feasibility file."""
    if prog.sense != "primal":
        raise ValueError("only equality-sense programs can be exported")
    for b in prog.blocks:
        if not b.psd:
            raise ValueError("exported programs must have PSD blocks only")
    return write_sdpa(_constraint_matrices(prog), path)


def _data_tokens(text: str):
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith('"') or line.startswith("*"):
            continue
        yield line.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ")


def parse_sdpa(path: str) -> SdpaData:
    with open(path) as fh:
        lines = list(_data_tokens(fh.read()))
    if len(lines) < 4:
        raise ValueError(f"{path}: truncated SDPA file")
    m = int(lines[0].split()[0])
    nblocks = int(lines[1].split()[0])
    sizes = [int(t) for t in lines[2].split()]
    if len(sizes) != nblocks:
        raise ValueError(f"{path}: {len(sizes)} block sizes for {nblocks} blocks")
    rhs = [float(t) for t in lines[3].split()]
    if len(rhs) != m:
        raise ValueError(f"{path}: {len(rhs)} rhs values for {m} constraints")
    entries = []
    for line in lines[4:]:
        toks = line.split()
        if len(toks) != 5:
            raise ValueError(f"{path}: malformed entry line {line!r}")
        k, b, i, j = (int(t) for t in toks[:4])
        v = float(toks[4])
        if not (0 <= k <= m and 1 <= b <= nblocks):
            raise ValueError(f"{path}: entry indices out of range in {line!r}")
        d = abs(sizes[b - 1])
        if not (1 <= i <= j <= d):
            raise ValueError(f"{path}: entry position out of range in {line!r}")
        entries.append((k, b, i, j, v))
    return SdpaData(m, sizes, rhs, entries)


def sdpa_to_program(data: SdpaData) -> ConicFeasibilityProgram:
    """Rebuild a feasibility program (real blocks, scalar rows) from file data."""
    blocks = [Block(f"block_{b + 1}", abs(s), True) for b, s in enumerate(data.block_sizes)]
    mats: dict[tuple[int, int], np.ndarray] = {}
    for k, b, i, j, v in data.entries:
        if k == 0:
            continue  # constant term; zero for feasibility exports
        key = (k, b)
        if key not in mats:
            mats[key] = np.zeros((abs(data.block_sizes[b - 1]),) * 2)
        mats[key][i - 1, j - 1] = v
        mats[key][j - 1, i - 1] = v
    rows = []
    for k in range(1, data.n_constraints + 1):
        terms = []
        for b in range(1, len(data.block_sizes) + 1):
            f = mats.get((k, b))
            if f is not None:
                terms.append(
                    (b - 1, BlockMap("trace_against", d_in=f.shape[0], d_out=1, mat=f.astype(complex)))
                )
        rows.append(Row(f"c_{k}", 1, terms, np.array([[data.rhs[k - 1]]], dtype=complex)))
    return ConicFeasibilityProgram(blocks, rows, "primal", meta={"kind": "sdpa_import"})
