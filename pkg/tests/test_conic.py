import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covertnoma import conic
from covertnoma.conic import (AffineExpr, SdpProblem, complex_to_real,
                              dinkelbach, embed_matrix, extract_rank_one,
                              leading_eigvec, rank_one_gap, rank_penalty,
                              solve, unembed_matrix)


def _random_hermitian(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T)


def test_affine_expr_evaluate(rng):
    C = _random_hermitian(rng, 3)
    X = _random_hermitian(rng, 3)
    e = AffineExpr(matrix_terms={"X": C}, scalar_terms={"s": 2.0}, const=1.5)
    val = e.evaluate({"X": X}, {"s": 0.25})
    assert val == pytest.approx(float(np.real(np.trace(C @ X))) + 0.5 + 1.5)
    assert e.scale() > 0


def test_solve_recovers_largest_eigenvalue(rng):
    # max Re tr(C X) s.t. tr X = 1, X >> 0 has value lambda_max(C)
    for n in (2, 4):
        C = _random_hermitian(rng, n)
        prob = SdpProblem(
            matrix_dims={"X": n},
            objective=AffineExpr(matrix_terms={"X": C}),
            eq_constraints=[AffineExpr(
                matrix_terms={"X": np.eye(n, dtype=complex)}, const=-1.0)],
        )
        sol = solve(prob)
        assert sol.status == "optimal"
        lam = float(np.linalg.eigvalsh(C)[-1])
        assert sol.objective == pytest.approx(lam, rel=1e-6, abs=1e-7)
        u, _ = leading_eigvec(C)
        gap = rank_one_gap(sol.matrices["X"])
        assert gap <= 1e-5 or abs(sol.objective - lam) < 1e-6


def test_solve_scalar_bounds_and_quad():
    # max s + t  s.t.  s <= 3,  t^2 + 1 <= 5  ->  s = 3, t = 2
    prob = SdpProblem(
        matrix_dims={},
        scalar_bounds={"s": (None, 3.0), "t": (0.0, None)},
        objective=AffineExpr(scalar_terms={"s": 1.0, "t": 1.0}),
        quad_constraints=[(AffineExpr(scalar_terms={"t": 1.0}),
                           AffineExpr(const=1.0),
                           AffineExpr(const=5.0))],
    )
    sol = solve(prob)
    assert sol.scalars["s"] == pytest.approx(3.0, abs=1e-6)
    assert sol.scalars["t"] == pytest.approx(2.0, abs=1e-6)


def test_solve_detects_infeasibility():
    prob = SdpProblem(
        matrix_dims={"X": 2},
        objective=AffineExpr(matrix_terms={"X": np.eye(2, dtype=complex)}),
        eq_constraints=[
            AffineExpr(matrix_terms={"X": np.eye(2, dtype=complex)}, const=-1.0),
            AffineExpr(matrix_terms={"X": np.eye(2, dtype=complex)}, const=-2.0),
        ],
    )
    assert solve(prob).status == "infeasible"


def test_template_cache_reuses_structure(rng):
    # same structure, different data: both answers must be exact
    for seed in (0, 1):
        C = _random_hermitian(np.random.default_rng(seed), 3)
        prob = SdpProblem(
            matrix_dims={"X": 3},
            objective=AffineExpr(matrix_terms={"X": C}),
            eq_constraints=[AffineExpr(
                matrix_terms={"X": np.eye(3, dtype=complex)}, const=-1.0)],
        )
        sol = solve(prob)
        assert sol.objective == pytest.approx(
            float(np.linalg.eigvalsh(C)[-1]), rel=1e-6, abs=1e-7)


def test_embedding_round_trip(rng):
    A = _random_hermitian(rng, 4)
    Y = embed_matrix(A)
    assert np.allclose(unembed_matrix(Y), A)
    # PSD is preserved both ways
    P = A @ A.conj().T
    assert np.linalg.eigvalsh(embed_matrix(P))[0] >= -1e-10


def test_complex_to_real_equivalence(rng):
    C = _random_hermitian(rng, 3)
    prob = SdpProblem(
        matrix_dims={"X": 3},
        objective=AffineExpr(matrix_terms={"X": C}),
        eq_constraints=[AffineExpr(
            matrix_terms={"X": np.eye(3, dtype=complex)}, const=-1.0)],
    )
    real_prob = complex_to_real(prob)
    assert real_prob.matrix_dims["X"] == 6
    a = solve(prob)
    b = solve(real_prob)
    assert a.objective == pytest.approx(b.objective, rel=1e-5, abs=1e-6)
    with pytest.raises(ValueError):
        complex_to_real(real_prob)


def test_dinkelbach_scalar_fraction():
    # max (2x + 1) / (x + 2) on [0, 1] -> x = 1, ratio 1
    def inner(eta):
        # argmax of 2x + 1 - eta (x + 2) over [0, 1]
        return 1.0 if 2.0 - eta >= 0 else 0.0

    res = dinkelbach(lambda x: 2 * x + 1, lambda x: x + 2, inner,
                     eta0=0.0, tol=1e-9)
    assert res.eta == pytest.approx(1.0, abs=1e-9)
    assert res.solution == 1.0
    assert all(b >= a - 1e-12 for a, b in zip(res.etas, res.etas[1:]))


def test_dinkelbach_rejects_bad_denominator():
    with pytest.raises(conic.SolverError):
        dinkelbach(lambda x: 1.0, lambda x: 0.0, lambda eta: 0.0, eta0=0.0)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_rank_penalty_majorizes_gap(seed):
    rng = np.random.default_rng(seed)
    n = 3
    B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    V0 = B @ B.conj().T
    sur = rank_penalty(V0)
    # exact at the linearization point
    assert sur.surrogate(V0) == pytest.approx(rank_one_gap(V0), abs=1e-9)
    C = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    V1 = C @ C.conj().T
    assert sur.surrogate(V1) >= rank_one_gap(V1) - 1e-9


def test_extract_rank_one(rng):
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    V = np.outer(v, v.conj())
    res = extract_rank_one(V, "plain")
    assert res.ok and res.rank_ratio <= 1e-12
    assert np.allclose(np.outer(res.vector, res.vector.conj()), V, atol=1e-9)
    unit = extract_rank_one(V, "unit")
    assert np.linalg.norm(unit.vector) == pytest.approx(1.0)
    w = np.append(v, 1.0)
    trail = extract_rank_one(np.outer(w, w.conj()), "trailing_one")
    assert trail.vector[-1] == pytest.approx(1.0)
    assert np.allclose(trail.vector, w, atol=1e-9)
    with pytest.raises(ValueError):
        extract_rank_one(V, "bogus")
    # genuinely rank-two input is flagged
    V2 = V + 0.5 * np.trace(V).real / 4 * np.eye(4)
    assert not extract_rank_one(V2, "plain", rank_tol=1e-3).ok
    z = extract_rank_one(np.zeros((3, 3)), "plain")
    assert z.ok and np.allclose(z.vector, 0)


def test_leading_eigvec_deterministic_phase(rng):
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    V = np.outer(v, v.conj())
    u1, lam = leading_eigvec(V)
    u2, _ = leading_eigvec(V * 1.0)
    assert np.allclose(u1, u2)
    assert lam == pytest.approx(float(np.linalg.norm(v) ** 2))
    idx = np.flatnonzero(np.abs(u1) > 1e-12)[0]
    assert abs(np.angle(u1[idx])) < 1e-9


def test_dump_problem(tmp_path):
    prob = SdpProblem(
        matrix_dims={"X": 2},
        scalar_bounds={"s": (0.0, 1.0)},
        objective=AffineExpr(matrix_terms={"X": np.eye(2, dtype=complex)},
                             scalar_terms={"s": 1.0}, const=0.5),
    )
    path = tmp_path / "prob.txt"
    conic.dump_problem(prob, str(path))
    text = path.read_text()
    assert "var X 2" in text and "scalar s" in text
