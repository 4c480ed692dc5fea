import numpy as np
import pytest

from qqc.programs import Block, BlockMap, ConicFeasibilityProgram, Row
from qqc.solver import (
    FeasibilityOutcome,
    SolverConfig,
    SolverError,
    hvec,
    solve,
    unhvec,
    verify_point,
    weak_duality_check,
)


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


def _ident(d, scale=1.0):
    return BlockMap("id", d_in=d, d_out=d, scale=scale)


def _trace_row(name, idx, d, rhs, scale=1.0):
    m = BlockMap("trace_against", d_in=d, d_out=1, scale=scale,
                 mat=np.eye(d, dtype=complex))
    return Row(name, 1, [(idx, m)], np.array([[rhs]], dtype=complex))


def test_hvec_round_trip_and_isometry():
    rng = np.random.default_rng(5)
    for d in (1, 2, 5):
        a = random_hermitian(rng, d)
        b = random_hermitian(rng, d)
        va, vb = hvec(a), hvec(b)
        assert va.shape == (d * d,)
        assert va.dtype == np.float64
        assert np.allclose(unhvec(va, d), a)
        # real coordinates preserve the trace pairing
        assert np.isclose(float(va @ vb), np.trace(a @ b).real)


def test_solve_small_feasible_program():
    # x PSD with tr x = 1 and <diag(1,-1), x> = 1 forces x = diag(1, 0)
    blocks = [Block("x", 2, True)]
    rows = [
        _trace_row("trace", 0, 2, 1.0),
        Row("pin", 1, [(0, BlockMap("trace_against", d_in=2, d_out=1,
                                    mat=np.diag([1.0, -1.0]).astype(complex)))],
            np.array([[1.0]], dtype=complex)),
    ]
    prog = ConicFeasibilityProgram(blocks, rows, "primal")
    out = solve(prog)
    assert out.status == "FEASIBLE"
    assert np.allclose(out.point["x"], np.diag([1.0, 0.0]), atol=1e-6)
    assert max(out.residuals.values()) <= 1e-7


def test_solve_reports_infeasibility_certificate():
    # tr x = -1 with x PSD has no solution
    blocks = [Block("x", 2, True)]
    rows = [_trace_row("trace", 0, 2, -1.0)]
    prog = ConicFeasibilityProgram(blocks, rows, "primal")
    out = solve(prog)
    assert out.status == "INFEASIBLE_WITH_CERTIFICATE"
    assert set(out.certificate) == {"trace"}
    # Farkas check by hand: adjoint image PSD, pairing negative
    y = out.certificate["trace"]
    image = float(y[0, 0].real) * np.eye(2)
    assert np.linalg.eigvalsh(image)[0] >= -1e-7
    assert (y[0, 0] * -1.0).real < 0


def test_solve_is_deterministic():
    blocks = [Block("x", 3, True)]
    rows = [_trace_row("trace", 0, 3, 1.0)]
    prog = ConicFeasibilityProgram(blocks, rows, "primal")
    a = solve(prog, SolverConfig(seed=7))
    b = solve(prog, SolverConfig(seed=7))
    assert a.status == b.status == "FEASIBLE"
    assert a.iterations == b.iterations
    assert np.array_equal(a.point["x"], b.point["x"])


def test_solve_rejects_inequality_rows_in_primal_sense():
    blocks = [Block("x", 2, True)]
    rows = [Row("bad", 2, [(0, _ident(2))], np.zeros((2, 2), complex), sense="psd")]
    prog = ConicFeasibilityProgram(blocks, rows, "primal")
    with pytest.raises(SolverError):
        solve(prog)


def test_solve_polish_reaches_machine_precision(deutsch, cached_solve):
    out = cached_solve("deutsch", "primal", 1, 0.0)
    assert out.status == "FEASIBLE"
    assert max(out.residuals.values()) <= 1e-12


def test_free_block_program_with_strict_row():
    # find Hermitian y with y PSD and tr(-y) < 0; any positive multiple of I
    blocks = [Block("y", 2, False)]
    rows = [
        Row("floor", 2, [(0, _ident(2))], np.zeros((2, 2), dtype=complex),
            sense="psd"),
        Row("strict", 1,
            [(0, BlockMap("trace_against", d_in=2, d_out=1, scale=-1.0,
                          mat=np.eye(2, dtype=complex)))],
            np.zeros((1, 1), dtype=complex), sense="strict"),
    ]
    prog = ConicFeasibilityProgram(blocks, rows, "dual")
    out = solve(prog)
    assert out.status == "FEASIBLE"
    rep = verify_point(prog, out.point)
    assert rep.max_residual <= 1e-7
    assert rep.strict_slack > 0


def test_verify_point_flags_violations():
    blocks = [Block("x", 2, True)]
    rows = [_trace_row("trace", 0, 2, 1.0)]
    prog = ConicFeasibilityProgram(blocks, rows, "primal")
    rep = verify_point(prog, {"x": np.diag([2.0, 0.0]).astype(complex)})
    assert rep.row_residuals["trace"] == pytest.approx(1.0)
    assert not rep.within(1e-7)
    with pytest.raises(ValueError):
        verify_point(prog, {"x": np.eye(3, dtype=complex)})


def test_weak_duality_pairing_is_negative_on_certificates(deutsch, cached_solve):
    from qqc.programs import build_primal

    out = cached_solve("deutsch", "primal", 0, 0.0)
    prog = build_primal(deutsch, 0, 0.0)
    val = weak_duality_check({}, out.certificate, prog)
    assert val == pytest.approx(-1.0, abs=1e-6)


def test_outcome_shape():
    blocks = [Block("x", 2, True)]
    rows = [_trace_row("trace", 0, 2, 1.0)]
    out = solve(ConicFeasibilityProgram(blocks, rows, "primal"))
    assert isinstance(out, FeasibilityOutcome)
    assert out.certificate is None
    assert out.iterations >= 1
    assert set(out.residuals) == {"trace"}
