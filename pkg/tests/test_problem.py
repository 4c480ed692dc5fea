import numpy as np
import pytest

from qqc.problem import (
    QueryProblem,
    build_constants,
    build_omega,
    extend_registers,
    phase_query_problem,
    problem_from_dict,
    problem_to_dict,
    validate,
)


def _codes(p):
    return {issue["code"] for issue in validate(p).issues}


def _ok_problem():
    eye = np.eye(2, dtype=complex)
    flip = np.array([[0, 1], [1, 0]], dtype=complex)
    return QueryProblem(2, ("a", "b"), np.stack([eye, flip]), ("0", "1"),
                        {"a": "0", "b": "1"})


def test_validate_accepts_good_problem():
    rep = validate(_ok_problem())
    assert rep.ok
    assert rep.issues == []


def test_validate_bad_n():
    p = _ok_problem()
    p.n = 0
    assert "bad-n" in _codes(p)


def test_validate_empty_family():
    p = QueryProblem(2, (), np.zeros((0, 2, 2), dtype=complex), ("0",), {})
    assert "empty-family" in _codes(p)


def test_validate_duplicate_labels():
    p = _ok_problem()
    p.labels = ("a", "a")
    codes = _codes(p)
    assert "dup-label" in codes


def test_validate_empty_and_duplicate_outputs():
    p = _ok_problem()
    p.outputs = ()
    assert "empty-outputs" in _codes(p)
    p = _ok_problem()
    p.outputs = ("0", "0")
    assert "dup-output" in _codes(p)


def test_validate_bad_shape_short_circuits():
    p = _ok_problem()
    p.unitaries = np.eye(3, dtype=complex)
    codes = _codes(p)
    assert codes == {"bad-shape"}


def test_validate_not_unitary_reports_residual():
    p = _ok_problem()
    bad = p.unitaries.copy()
    bad[1] = 2.0 * bad[1]
    p.unitaries = bad
    rep = validate(p)
    hits = [i for i in rep.issues if i["code"] == "not-unitary"]
    assert len(hits) == 1
    assert hits[0]["residual"] > 1.0


def test_validate_g_issues():
    p = _ok_problem()
    p.g = {"a": "0"}
    assert "g-not-total" in _codes(p)
    p = _ok_problem()
    p.g = {"a": "0", "b": "nope"}
    assert "g-bad-value" in _codes(p)
    p = _ok_problem()
    p.g = {"a": "0", "b": "1", "c": "0"}
    assert "g-extra-key" in _codes(p)


def test_build_omega_block_diagonal_unitary():
    p = _ok_problem()
    omega = build_omega(p)
    assert omega.shape == (4, 4)
    assert np.allclose(omega.conj().T @ omega, np.eye(4))
    assert np.allclose(omega[:2, :2], p.unitaries[0])
    assert np.allclose(omega[2:, 2:], p.unitaries[1])
    assert np.allclose(omega[:2, 2:], 0)


def test_build_omega_rejects_invalid():
    p = _ok_problem()
    p.g = {}
    with pytest.raises(ValueError):
        build_omega(p)


def test_build_constants_pairs_and_deltas():
    p = phase_query_problem(2, {"00": "0", "11": "0", "01": "1", "10": "1"})
    c = build_constants(p)
    # pairs cross the output classes only
    for i, j in c.pairs:
        assert p.g[p.labels[i]] != p.g[p.labels[j]]
        assert i < j
    assert len(c.pairs) == 4
    # class masks partition the diagonal
    acc = np.zeros((4, 4))
    for z in p.outputs:
        mask = c.deltas[z]
        assert np.array_equal(mask, mask.T)
        acc += mask
    for i, j in c.pairs:
        assert acc[i, j] == 0
    assert np.array_equal(np.diag(acc), np.ones(4))
    for (i, j), v in c.v_mats.items():
        assert v[i, j] == 1 and v[j, i] == 1 and v.sum() == 2
    for (i, j), w in c.w_mats.items():
        assert w[i, i] == 1 and w[j, j] == 1 and w.sum() == 2


def test_phase_query_problem_unitaries():
    g = {"00": "0", "11": "0", "01": "1", "10": "1"}
    p = phase_query_problem(2, g)
    assert p.labels == tuple(sorted(g))
    assert p.n == 2
    for i, lab in enumerate(p.labels):
        signs = np.array([(-1.0) ** int(ch) for ch in lab])
        assert np.allclose(p.unitaries[i], np.diag(signs))
    assert validate(p).ok


def test_phase_query_problem_rejects_partial_g():
    with pytest.raises(ValueError):
        phase_query_problem(2, {"00": "0"})


def test_problem_dict_round_trip():
    p = phase_query_problem(2, {"00": "0", "11": "0", "01": "1", "10": "1"})
    d = problem_to_dict(p)
    back = problem_from_dict(d)
    assert back.n == p.n
    assert back.labels == p.labels
    assert back.outputs == p.outputs
    assert back.g == p.g
    assert np.allclose(back.unitaries, p.unitaries)


def test_problem_from_dict_complex_entries():
    y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    p = QueryProblem(2, ("i", "y"), np.stack([np.eye(2, dtype=complex), y]),
                     ("i", "y"), {"i": "i", "y": "y"})
    back = problem_from_dict(problem_to_dict(p))
    assert np.allclose(back.unitaries[1], y)


def test_problem_from_dict_malformed():
    with pytest.raises((KeyError, ValueError, TypeError)):
        problem_from_dict({"n": 2})


def test_extend_registers_matches_kron():
    p = _ok_problem()
    wide = extend_registers(p, 3)
    assert wide.shape == (12, 12)
    assert np.allclose(wide, np.kron(build_omega(p), np.eye(3)))
    assert np.allclose(wide.conj().T @ wide, np.eye(12))


def test_indexing_helpers():
    p = phase_query_problem(2, {"00": "0", "11": "0", "01": "1", "10": "1"})
    assert p.size == 4
    assert p.index("01") == 1
    assert p.output_index("1") == 1
    assert p.class_indices("0") == [0, 3]
