"""Generic conic machinery: a canonical complex-Hermitian SDP form with a
solving contract, the real-symmetric doubling embedding, a Dinkelbach
fractional-program driver, and rank-one penalty construction/recovery.

The canonical form covers exactly the shapes the beamforming subproblems
need: Hermitian PSD matrix variables, bounded auxiliary scalars, linear
(in)equalities over trace inner products, and two-term sum-of-squares
constraints f1^2 + f2^2 <= rhs.

Solving is backed by cvxpy.  Problems with identical structure share a
compiled parametrized template, so repeated solves inside the penalty and
Dinkelbach loops only pay for parameter updates and the cone solve itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import cvxpy as cp
import numpy as np


class SolverError(RuntimeError):
    """The backend failed to return a usable solution."""


class InnerInfeasibleError(SolverError):
    """An inner subproblem reported infeasibility."""


# --- canonical problem form -------------------------------------------------

@dataclass
class AffineExpr:
    """Re sum_i tr(C_i X_i) + sum_j c_j s_j + const."""

    matrix_terms: dict[str, np.ndarray] = field(default_factory=dict)
    scalar_terms: dict[str, float] = field(default_factory=dict)
    const: float = 0.0

    def evaluate(self, matrices: dict[str, np.ndarray],
                 scalars: dict[str, float]) -> float:
        val = self.const
        for name, coeff in self.matrix_terms.items():
            val += float(np.real(np.trace(coeff @ matrices[name])))
        for name, c in self.scalar_terms.items():
            val += c * scalars[name]
        return val

    def scale(self) -> float:
        s = abs(self.const)
        for coeff in self.matrix_terms.values():
            s += float(np.linalg.norm(coeff))
        for c in self.scalar_terms.values():
            s += abs(c)
        return max(s, 1e-30)


@dataclass
class SdpProblem:
    """Canonical form: Hermitian PSD variables, scalar bounds, linear
    constraints, and two-term quadratic cone constraints."""

    matrix_dims: dict[str, int]
    scalar_bounds: dict[str, tuple[float | None, float | None]] = field(default_factory=dict)
    maximize: bool = True
    objective: AffineExpr = field(default_factory=AffineExpr)
    eq_constraints: list[AffineExpr] = field(default_factory=list)   # expr == 0
    ineq_constraints: list[AffineExpr] = field(default_factory=list)  # expr <= 0
    quad_constraints: list[tuple[AffineExpr, AffineExpr, AffineExpr]] = field(
        default_factory=list)  # f1^2 + f2^2 <= rhs
    complex_vars: bool = True

    def all_exprs(self) -> Iterable[AffineExpr]:
        yield self.objective
        yield from self.eq_constraints
        yield from self.ineq_constraints
        for f1, f2, rhs in self.quad_constraints:
            yield f1
            yield f2
            yield rhs


@dataclass
class SdpSolution:
    matrices: dict[str, np.ndarray]
    scalars: dict[str, float]
    objective: float
    status: str  # optimal | infeasible | inaccurate
    max_primal_residual: float
    gap_estimate: float
    raw_status: str = ""


# --- compiled templates ------------------------------------------------------

def _expr_signature(expr: AffineExpr) -> tuple:
    return (tuple(sorted(expr.matrix_terms)), tuple(sorted(expr.scalar_terms)))


def _structure_signature(problem: SdpProblem) -> tuple:
    return (
        tuple(sorted(problem.matrix_dims.items())),
        tuple(sorted((n, lb is not None, ub is not None)
                     for n, (lb, ub) in problem.scalar_bounds.items())),
        problem.maximize,
        problem.complex_vars,
        _expr_signature(problem.objective),
        tuple(_expr_signature(e) for e in problem.eq_constraints),
        tuple(_expr_signature(e) for e in problem.ineq_constraints),
        tuple(tuple(_expr_signature(e) for e in triple)
              for triple in problem.quad_constraints),
    )


class _Template:
    """A structure-matched cvxpy problem with parameter slots."""

    def __init__(self, problem: SdpProblem):
        self.mvars: dict[str, cp.Variable] = {}
        cons = []
        for name, dim in problem.matrix_dims.items():
            if problem.complex_vars:
                X = cp.Variable((dim, dim), hermitian=True, name=name)
            else:
                X = cp.Variable((dim, dim), symmetric=True, name=name)
            self.mvars[name] = X
            cons.append(X >> 0)
        self.svars: dict[str, cp.Variable] = {}
        self.bound_params: dict[tuple[str, str], cp.Parameter] = {}
        for name, (lb, ub) in problem.scalar_bounds.items():
            x = cp.Variable(name=name)
            self.svars[name] = x
            if lb is not None:
                p = cp.Parameter()
                self.bound_params[(name, "lb")] = p
                cons.append(x >= p)
            if ub is not None:
                p = cp.Parameter()
                self.bound_params[(name, "ub")] = p
                cons.append(x <= p)

        self.param_slots: list[tuple[cp.Parameter, tuple]] = []

        def build(expr: AffineExpr, path: tuple) -> cp.Expression:
            terms = []
            for mname in sorted(expr.matrix_terms):
                dim = self.mvars[mname].shape[0]
                P = cp.Parameter((dim, dim), complex=problem.complex_vars)
                self.param_slots.append((P, path + ("m", mname)))
                tr = cp.trace(P @ self.mvars[mname])
                terms.append(cp.real(tr) if problem.complex_vars else tr)
            for sname in sorted(expr.scalar_terms):
                p = cp.Parameter()
                self.param_slots.append((p, path + ("s", sname)))
                terms.append(p * self.svars[sname])
            c = cp.Parameter()
            self.param_slots.append((c, path + ("c",)))
            terms.append(c)
            return cp.sum(terms) if len(terms) > 1 else terms[0]

        obj_expr = build(problem.objective, ("obj",))
        objective = cp.Maximize(obj_expr) if problem.maximize else cp.Minimize(obj_expr)
        for i, e in enumerate(problem.eq_constraints):
            cons.append(build(e, ("eq", i)) == 0)
        for i, e in enumerate(problem.ineq_constraints):
            cons.append(build(e, ("le", i)) <= 0)
        for i, (f1, f2, rhs) in enumerate(problem.quad_constraints):
            e1 = build(f1, ("q", i, 0))
            e2 = build(f2, ("q", i, 1))
            er = build(rhs, ("q", i, 2))
            # rotated-cone form of f1^2 + f2^2 <= rhs (with implicit rhs >= 0)
            cons.append(cp.SOC(er + 1, cp.hstack([2 * e1, 2 * e2, er - 1])))
        self.cvx_problem = cp.Problem(objective, cons)

    def load(self, problem: SdpProblem) -> None:
        for (name, kind), p in self.bound_params.items():
            lb, ub = problem.scalar_bounds[name]
            p.value = lb if kind == "lb" else ub

        def expr_at(path: tuple) -> AffineExpr:
            if path[0] == "obj":
                return problem.objective
            if path[0] == "eq":
                return problem.eq_constraints[path[1]]
            if path[0] == "le":
                return problem.ineq_constraints[path[1]]
            return problem.quad_constraints[path[1]][path[2]]

        for P, path in self.param_slots:
            expr = expr_at(path[:-2] if path[-2] in ("m", "s") else path[:-1])
            tag = path[-2] if len(path) >= 2 and path[-2] in ("m", "s") else path[-1]
            if tag == "m":
                C = np.asarray(expr.matrix_terms[path[-1]])
                C = 0.5 * (C + C.conj().T)
                P.value = C if problem.complex_vars else np.real(C)
            elif tag == "s":
                P.value = expr.scalar_terms[path[-1]]
            else:
                P.value = expr.const


_TEMPLATE_CACHE: dict[tuple, _Template] = {}


@dataclass(frozen=True)
class SolveTolerances:
    primal_residual: float = 1e-7
    relative_gap: float = 1e-6


_SOLVER_ARGS = {
    "CLARABEL": {"tol_gap_rel": 1e-7, "tol_gap_abs": 1e-10},
    "CVXOPT": {},
    "SCS": {"eps": 1e-9, "max_iters": 200_000},
}
_FALLBACK_ORDER = ("CLARABEL", "CVXOPT", "SCS")


def _primal_residual(problem: SdpProblem, matrices, scalars) -> float:
    worst = 0.0
    for e in problem.eq_constraints:
        worst = max(worst, abs(e.evaluate(matrices, scalars)) / e.scale())
    for e in problem.ineq_constraints:
        worst = max(worst, max(0.0, e.evaluate(matrices, scalars)) / e.scale())
    for f1, f2, rhs in problem.quad_constraints:
        v = (f1.evaluate(matrices, scalars) ** 2
             + f2.evaluate(matrices, scalars) ** 2
             - rhs.evaluate(matrices, scalars))
        worst = max(worst, max(0.0, v) / max(rhs.scale() ** 2, 1e-30))
    for name, X in matrices.items():
        lam_min = float(np.linalg.eigvalsh(X)[0])
        scale = max(1.0, float(np.linalg.norm(X)))
        worst = max(worst, max(0.0, -lam_min) / scale)
    for name, (lb, ub) in problem.scalar_bounds.items():
        v = scalars[name]
        if lb is not None:
            worst = max(worst, max(0.0, lb - v) / max(1.0, abs(lb)))
        if ub is not None:
            worst = max(worst, max(0.0, v - ub) / max(1.0, abs(ub)))
    return worst


def solve(problem: SdpProblem, tolerances: SolveTolerances = SolveTolerances(),
          solver: str | None = None) -> SdpSolution:
    """Solve the canonical problem; deterministic for identical inputs.

    Falls back across backends on inaccurate/failed solves; infeasibility is
    reported as a status, never as silent garbage.
    """
    key = _structure_signature(problem)
    order = (solver,) if solver else _FALLBACK_ORDER
    last_raw = "no_solver"
    best = None
    for backend in order:
        # one compiled template per backend, so a fallback never invalidates
        # the primary backend's compilation cache
        template = _TEMPLATE_CACHE.get((key, backend))
        if template is None:
            template = _Template(problem)
            _TEMPLATE_CACHE[(key, backend)] = template
        template.load(problem)
        try:
            with warnings.catch_warnings():
                # we audit the primal residual ourselves below
                warnings.simplefilter("ignore")
                # no warm start: cached problems must not carry solver state
                # between calls or reruns stop being bit-reproducible
                template.cvx_problem.solve(solver=backend, warm_start=False,
                                           **_SOLVER_ARGS.get(backend, {}))
        except (cp.error.SolverError, Exception):  # noqa: BLE001 - backend bugs vary
            last_raw = f"{backend}:error"
            continue
        raw = template.cvx_problem.status
        last_raw = f"{backend}:{raw}"
        if raw in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return SdpSolution(matrices={}, scalars={}, objective=math.nan,
                               status="infeasible", max_primal_residual=math.nan,
                               gap_estimate=math.nan, raw_status=last_raw)
        if raw not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            continue
        matrices = {}
        ok = True
        for name, X in template.mvars.items():
            val = X.value
            if val is None:
                ok = False
                break
            val = np.asarray(val)
            matrices[name] = 0.5 * (val + val.conj().T)
        if not ok:
            continue
        scalars = {n: float(v.value) for n, v in template.svars.items()}
        objective = problem.objective.evaluate(matrices, scalars)
        residual = _primal_residual(problem, matrices, scalars)
        stats = template.cvx_problem.solver_stats
        gap = math.nan
        if stats is not None and stats.extra_stats is not None:
            gap = getattr(stats.extra_stats, "rel_gap", math.nan) or math.nan
        # trust our own feasibility audit over the solver's status label: a
        # nominally inaccurate solve whose residual passes is good enough
        status = "optimal" if residual <= tolerances.primal_residual \
            else "inaccurate"
        sol = SdpSolution(matrices=matrices, scalars=scalars, objective=objective,
                          status=status, max_primal_residual=residual,
                          gap_estimate=gap, raw_status=last_raw)
        if status == "optimal":
            return sol
        if best is None or residual < best.max_primal_residual:
            best = sol  # keep, but try the next backend for an accurate solve
    if best is not None:
        return best
    raise SolverError(f"all backends failed ({last_raw})")


# --- real-symmetric doubling embedding --------------------------------------

def embed_matrix(A: np.ndarray) -> np.ndarray:
    """[[Re A, -Im A], [Im A, Re A]] (Hermitian A -> symmetric, PSD-preserving)."""
    Ar, Ai = np.real(A), np.imag(A)
    return np.block([[Ar, -Ai], [Ai, Ar]])


def unembed_matrix(Y: np.ndarray) -> np.ndarray:
    """Recover X from (the structure-averaged) embedding of X."""
    n = Y.shape[0] // 2
    Xr = 0.5 * (Y[:n, :n] + Y[n:, n:])
    Xi = 0.5 * (Y[n:, :n] - Y[:n, n:])
    return Xr + 1j * Xi


def complex_to_real(problem: SdpProblem) -> SdpProblem:
    """Doubling embedding preserving all objective/constraint values.

    Coefficients carry a 1/2 factor since tr(T(A) T(X)) == 2 Re tr(A X).
    """
    if not problem.complex_vars:
        raise ValueError("problem is already real")

    def conv(expr: AffineExpr) -> AffineExpr:
        return AffineExpr(
            matrix_terms={n: 0.5 * embed_matrix(C)
                          for n, C in expr.matrix_terms.items()},
            scalar_terms=dict(expr.scalar_terms),
            const=expr.const,
        )

    return SdpProblem(
        matrix_dims={n: 2 * d for n, d in problem.matrix_dims.items()},
        scalar_bounds=dict(problem.scalar_bounds),
        maximize=problem.maximize,
        objective=conv(problem.objective),
        eq_constraints=[conv(e) for e in problem.eq_constraints],
        ineq_constraints=[conv(e) for e in problem.ineq_constraints],
        quad_constraints=[tuple(conv(e) for e in t) for t in problem.quad_constraints],
        complex_vars=False,
    )


# --- Dinkelbach driver -------------------------------------------------------

@dataclass
class DinkelbachResult:
    solution: Any
    eta: float
    etas: list[float]
    iterations: int


def dinkelbach(numerator: Callable[[Any], float],
               denominator: Callable[[Any], float],
               inner_solve: Callable[[float], Any],
               eta0: float,
               tol: float = 1e-6,
               max_iter: int = 50) -> DinkelbachResult:
    """Parametric iteration for max numerator/denominator.

    The denominator must be strictly positive on the feasible set.  Stops
    when the subtractive objective is (relatively) nonpositive, i.e. the
    ratio parameter has converged; the eta sequence is non-decreasing.
    """
    eta = eta0
    etas = []
    solution = None
    for it in range(1, max_iter + 1):
        solution = inner_solve(eta)
        num = numerator(solution)
        den = denominator(solution)
        if den <= 0:
            raise SolverError("Dinkelbach denominator must stay positive")
        new_eta = num / den
        etas.append(new_eta)
        gamma_hat = num - eta * den
        if gamma_hat <= tol * max(1.0, abs(eta) * abs(den)):
            return DinkelbachResult(solution=solution, eta=new_eta,
                                    etas=etas, iterations=it)
        eta = new_eta
    return DinkelbachResult(solution=solution, eta=eta, etas=etas,
                            iterations=max_iter)


# --- rank-one penalty --------------------------------------------------------

def rank_one_gap(V: np.ndarray) -> float:
    """tr(V) - ||V||_2; zero exactly at rank one (for PSD V)."""
    eigs = np.linalg.eigvalsh(V)
    return float(np.real(np.trace(V)) - eigs[-1])


def leading_eigvec(V: np.ndarray) -> tuple[np.ndarray, float]:
    """Leading eigenpair with a deterministic global phase (first significant
    component made real positive)."""
    vals, vecs = np.linalg.eigh(V)
    u = vecs[:, -1]
    idx = np.flatnonzero(np.abs(u) > 1e-12)
    if idx.size:
        u = u * np.exp(-1j * np.angle(u[idx[0]]))
    return u, float(vals[-1])


@dataclass(frozen=True)
class RankSurrogate:
    """Affine upper bound on the rank-one gap, linearized at a PSD point."""

    coeff: np.ndarray      # I - u u^H (Hermitian)
    u: np.ndarray
    lam1: float

    def exact(self, V: np.ndarray) -> float:
        return rank_one_gap(V)

    def surrogate(self, V: np.ndarray) -> float:
        return float(np.real(np.trace(self.coeff @ V)))


def rank_penalty(V_prev: np.ndarray) -> RankSurrogate:
    """Build the linearized penalty tr(V) - u^H V u for the leading
    eigenvector u of V_prev; an upper bound on tr(V) - ||V||_2 for PSD V."""
    u, lam1 = leading_eigvec(V_prev)
    n = V_prev.shape[0]
    coeff = np.eye(n, dtype=complex) - np.outer(u, u.conj())
    return RankSurrogate(coeff=coeff, u=u, lam1=lam1)


@dataclass(frozen=True)
class ExtractionResult:
    vector: np.ndarray
    rank_ratio: float  # lambda_2 / lambda_1
    ok: bool


def extract_rank_one(V: np.ndarray, normalization: str = "plain",
                     rank_tol: float = 1e-3) -> ExtractionResult:
    """Recover v with V ~ v v^H; flags when the second eigenvalue is not
    negligible.  Normalizations: plain (sqrt(lam1) u), unit, trailing_one."""
    vals, vecs = np.linalg.eigh(V)
    lam1 = float(vals[-1])
    if lam1 <= 1e-300:
        n = V.shape[0]
        return ExtractionResult(vector=np.zeros(n, dtype=complex),
                                rank_ratio=0.0, ok=True)
    lam2 = float(vals[-2]) if V.shape[0] > 1 else 0.0
    ratio = max(0.0, lam2) / lam1
    v = math.sqrt(lam1) * vecs[:, -1]
    if normalization == "unit":
        v = v / np.linalg.norm(v)
    elif normalization == "trailing_one":
        if abs(v[-1]) < 1e-12:
            return ExtractionResult(vector=v, rank_ratio=1.0, ok=False)
        v = v / v[-1]
    elif normalization == "plain":
        u, _ = leading_eigvec(V)
        v = math.sqrt(lam1) * u
    else:
        raise ValueError(f"unknown normalization '{normalization}'")
    return ExtractionResult(vector=v, rank_ratio=ratio, ok=ratio <= rank_tol)


# --- debug dump --------------------------------------------------------------

def dump_problem(problem: SdpProblem, path: str) -> None:
    """Sparse-triplet text dump for offline cross-validation."""
    with open(path, "w") as fh:
        fh.write(f"maximize {int(problem.maximize)} complex {int(problem.complex_vars)}\n")
        for name, dim in sorted(problem.matrix_dims.items()):
            fh.write(f"var {name} {dim}\n")
        for name, (lb, ub) in sorted(problem.scalar_bounds.items()):
            fh.write(f"scalar {name} {lb} {ub}\n")

        def wexpr(tag: str, expr: AffineExpr):
            fh.write(f"{tag} const {expr.const!r}\n")
            for mname, C in sorted(expr.matrix_terms.items()):
                rows, cols = np.nonzero(np.abs(C) > 0)
                for r, c in zip(rows, cols):
                    fh.write(f"{tag} {mname} {r} {c} {C[r, c].real!r} {C[r, c].imag!r}\n")
            for sname, coeff in sorted(expr.scalar_terms.items()):
                fh.write(f"{tag} scalar {sname} {coeff!r}\n")

        wexpr("obj", problem.objective)
        for i, e in enumerate(problem.eq_constraints):
            wexpr(f"eq{i}", e)
        for i, e in enumerate(problem.ineq_constraints):
            wexpr(f"le{i}", e)
        for i, (f1, f2, rhs) in enumerate(problem.quad_constraints):
            wexpr(f"q{i}a", f1)
            wexpr(f"q{i}b", f2)
            wexpr(f"q{i}r", rhs)
