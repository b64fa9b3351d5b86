"""Lifted-matrix construction and the three beamforming subproblems.

The quadratic beam gains become linear traces after lifting v -> V = v v^H.
`build_lifted` collects every coefficient matrix needed by the surface,
receive, and transmit subproblems; the solve_* functions run the penalized
semidefinite relaxations (Dinkelbach loop for the fractional objectives,
eigenvector-linearized rank-one penalty) and recover beams by rank-one
extraction.

All SDP data is expressed in noise-normalized units (powers divided by the
receiver noise, surface bookkeeping divided by the surface noise) so the
cone solver never sees 1e-12-scale coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .conic import (AffineExpr, InnerInfeasibleError, SdpProblem, dinkelbach,
                    extract_rank_one, rank_penalty)
from .physics import (DimensionError, FdBeam, GainBundle, IosBeam, PowerAlloc,
                      effective_gains, incident_power_per_element)
from .scenario import ChannelSet, Scenario


def lift_vector(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class LiftedMatrices:
    """Coefficient matrices of the trace identities.

    With V_t = v_t v_t^H (K x K), V_r = v_r v_r^H ((K+1) x (K+1), trailing
    entry 1), W_r = w_r w_r^H, and W_t = w_t w_t^H:

      |g_gb|^2                   = tr(A V_r A^H W_r)
      |g_ab|^2                   = tr(B V_t B^H W_r)
      |g_gw|^2                   = tr(C C^H V_r)
      |g_aw|^2                   = tr(D D^H V_t)
      |g_bw w_t|^2               = tr(E V_r)          = tr(Gw_t W_t)
      |w_r^H (SI direct+cascade) w_t|^2 = tr(F V_r)   = tr(Gb W_r) = tr(Gj_t W_t)
      ||h_ow Theta_i||^2         = tr(phi_iw V_i)
      ||w_r^H H_ob Theta_i||^2   = tr(phi_ib V_i)     = tr(G_i W_r)
      ||Theta_r||_F^2            = tr(pi V_r)
      ||Theta_r h_go||^2         = tr(phi_go V_r)
      ||Theta_t h_ao||^2         = tr(phi_ao V_t)
      ||Theta_r H_bo w_t||^2     = tr(phi_bo V_r)     = tr(Gr_t W_t)

    The vectors behind E and F carry elementwise conjugates (the lift pairs
    v with v^H, so the linear-in-v coefficients must be conjugated for the
    identities to hold exactly).
    """

    A: np.ndarray        # M x (K+1)
    B: np.ndarray        # M x K
    C: np.ndarray        # K+1
    D: np.ndarray        # K
    E_vec: np.ndarray    # K+1
    F_vec: np.ndarray    # K+1
    E: np.ndarray        # (K+1) x (K+1)
    F: np.ndarray        # (K+1) x (K+1)
    phi_rw: np.ndarray
    phi_tw: np.ndarray
    phi_go: np.ndarray
    phi_ao: np.ndarray
    phi_rb: np.ndarray
    phi_tb: np.ndarray
    phi_bo: np.ndarray
    pi: np.ndarray
    G_t: np.ndarray      # M x M
    G_r: np.ndarray
    G_b: np.ndarray
    Gr_t: np.ndarray     # M x M, reflected-jamming surface load
    Gw_t: np.ndarray     # M x M, jamming power at the warden
    Gj_t: np.ndarray     # M x M, residual self-interference quadratic form


def build_lifted(channels: ChannelSet, ios: IosBeam, fd: FdBeam) -> LiftedMatrices:
    """Assemble every lifted coefficient matrix for one (surface, fd) point."""
    c = channels
    K = c.h_ao.shape[0]
    M = c.H_ob.shape[0]
    if ios.amp_t.shape[0] != K or fd.w_t.shape[0] != M:
        raise DimensionError("beam dimensions do not match the channels")

    A = np.hstack([c.H_ob @ np.diag(c.h_go), np.zeros((M, 1), dtype=complex)])
    B = c.H_ob @ np.diag(c.h_ao)
    C = np.append(np.conj(c.h_go) * np.conj(c.h_ow), 0.0)
    D = np.conj(c.h_ao) * np.conj(c.h_ow)

    Hbo_wt = c.H_bo @ fd.w_t
    wrH_Hob = fd.w_r.conj() @ c.H_ob
    E_vec = np.conj(np.append(c.h_ow * Hbo_wt, c.h_bw @ fd.w_t))
    F_vec = np.conj(np.append(wrH_Hob * Hbo_wt, fd.w_r.conj() @ c.H_bb @ fd.w_t))
    E = lift_vector(E_vec)
    F = lift_vector(F_vec)

    abs2 = lambda x: np.abs(x) ** 2
    pad0 = lambda d: np.diag(np.append(d, 0.0)).astype(complex)
    phi_rw = pad0(abs2(c.h_ow))
    phi_tw = np.diag(abs2(c.h_ow)).astype(complex)
    phi_go = pad0(abs2(c.h_go))
    phi_ao = np.diag(abs2(c.h_ao)).astype(complex)
    phi_rb = pad0(abs2(wrH_Hob))
    phi_tb = np.diag(abs2(wrH_Hob)).astype(complex)
    phi_bo = pad0(abs2(Hbo_wt))
    pi = pad0(np.ones(K))

    Hob_tt = c.H_ob @ ios.theta_t
    Hob_tr = c.H_ob @ ios.theta_r
    G_t = Hob_tt @ Hob_tt.conj().T
    G_r = Hob_tr @ Hob_tr.conj().T
    si_chain = c.H_bb + Hob_tr @ c.H_bo
    gb_vec = si_chain @ fd.w_t
    G_b = lift_vector(gb_vec)

    tr_Hbo = ios.theta_r @ c.H_bo
    Gr_t = tr_Hbo.conj().T @ tr_Hbo
    gbw = c.h_ow @ tr_Hbo + c.h_bw       # row vector
    Gw_t = lift_vector(np.conj(gbw))
    gj = fd.w_r.conj() @ si_chain        # row vector
    Gj_t = lift_vector(np.conj(gj))

    return LiftedMatrices(A=A, B=B, C=C, D=D, E_vec=E_vec, F_vec=F_vec,
                          E=E, F=F, phi_rw=phi_rw, phi_tw=phi_tw,
                          phi_go=phi_go, phi_ao=phi_ao, phi_rb=phi_rb,
                          phi_tb=phi_tb, phi_bo=phi_bo, pi=pi,
                          G_t=G_t, G_r=G_r, G_b=G_b,
                          Gr_t=Gr_t, Gw_t=Gw_t, Gj_t=Gj_t)


def agm_update(diag_t: np.ndarray, diag_r: np.ndarray, p_in: np.ndarray,
               noise: float) -> np.ndarray:
    """Arithmetic-geometric-mean linearization coefficients, per element.

    mu_k = sqrt((p_in_k + noise) / (diag_t_k + diag_r_k)); at this point the
    convexified constraint (mu*(d_t+d_r))^2 + ((p_in+noise)/mu)^2 <= 2 p is
    tight against 2*(d_t+d_r)*(p_in+noise).  Matrices may be passed instead
    of diagonal vectors.  A vanishing diagonal sum degenerates to mu = 1
    (the constraint is slack there).
    """
    if np.ndim(diag_t) == 2:
        diag_t = np.real(np.diag(diag_t))
    if np.ndim(diag_r) == 2:
        diag_r = np.real(np.diag(diag_r))[:diag_t.shape[0]]
    s = np.asarray(diag_t) + np.asarray(diag_r)
    num = np.asarray(p_in, dtype=float) + noise
    mu = np.ones_like(s, dtype=float)
    mask = s >= 1e-12
    mu[mask] = np.sqrt(num[mask] / s[mask])
    return mu


@dataclass
class BeamDiagnostics:
    """Per-iteration record of the penalty and Dinkelbach loops."""

    etas: list = field(default_factory=list)         # one list per penalty iter
    penalties: list = field(default_factory=list)    # (1/rho) * surrogate
    rank_ratios: list = field(default_factory=list)
    statuses: list = field(default_factory=list)
    message: str = ""


def _rank_gap_small(*mats: np.ndarray, tol: float = 1e-8) -> bool:
    """True when every matrix is already numerically rank one.  The surrogate
    stop lags by several halvings of rho once the iterate stabilizes, so the
    exact gap is the cheaper certificate."""
    return all(conic.rank_one_gap(X) <= tol * max(np.real(np.trace(X)), 1e-30)
               for X in mats)


def _diag_selector(dim: int, k: int) -> np.ndarray:
    S = np.zeros((dim, dim), dtype=complex)
    S[k, k] = 1.0
    return S


def _normalized(expr: AffineExpr) -> AffineExpr:
    s = expr.scale()
    return AffineExpr(
        matrix_terms={n: c / s for n, c in expr.matrix_terms.items()},
        scalar_terms={n: c / s for n, c in expr.scalar_terms.items()},
        const=expr.const / s,
    )


# --- surface (refraction/reflection) subproblem ------------------------------

@dataclass
class IosSolveResult:
    V_t: np.ndarray
    V_r: np.ndarray
    ios: IosBeam
    ok: bool
    diagnostics: BeamDiagnostics


def solve_ios_beamforming(scenario: Scenario, channels: ChannelSet,
                          powers: PowerAlloc, fd: FdBeam, ios0: IosBeam,
                          kappa: float, passive: bool = False) -> IosSolveResult:
    """Penalized Dinkelbach solve of the surface beamforming subproblem."""
    s = scenario
    K = s.num_elements
    lm = build_lifted(channels, ios0, fd)
    W_r = lift_vector(fd.w_r)
    BWB = lm.B.conj().T @ W_r @ lm.B
    sb, so = s.noise_bob, s.noise_ios

    v_t = ios0.coeff_t
    v_r = np.append(ios0.coeff_r, 1.0)
    V_t, V_r = lift_vector(v_t), lift_vector(v_r)
    qin = incident_power_per_element(channels, powers, fd) / s.budget_ios
    diags = BeamDiagnostics()

    def num(sol) -> float:
        return powers.p_a * float(np.real(np.trace(BWB @ sol.matrices["Vt"]))) / sb

    def den(sol) -> float:
        Vt, Vr = sol.matrices["Vt"], sol.matrices["Vr"]
        om = (so * float(np.real(np.trace(lm.phi_tb @ Vt)))
              + so * float(np.real(np.trace(lm.phi_rb @ Vr)))
              + s.si_level * powers.p_j * float(np.real(np.trace(lm.F @ Vr))))
        return (om + sb) / sb

    # first pass is penalty-free (the bare relaxation is a global bound);
    # the penalty weight is then set relative to the achieved objective so
    # small-rate instances are not overwhelmed by the rank term
    rho = None
    last = None
    for _ in range(s.max_penalty_iters):
        sur_t = rank_penalty(V_t)
        sur_r = rank_penalty(V_r)
        mu = agm_update(np.real(np.diag(V_t)), np.real(np.diag(V_r))[:K],
                        qin, so / s.budget_ios)
        weight = 0.0 if rho is None else 1.0 / rho
        problem_of = lambda eta: _build_ios(scenario, lm, powers, fd, kappa,
                                            eta, weight, sur_t.coeff,
                                            sur_r.coeff, mu, passive)

        def inner(eta: float):
            sol = conic.solve(problem_of(eta))
            if sol.status == "infeasible":
                raise InnerInfeasibleError("surface subproblem infeasible")
            return sol

        eta0 = 0.0
        denom0 = (so * float(np.real(np.trace(lm.phi_tb @ V_t)))
                  + so * float(np.real(np.trace(lm.phi_rb @ V_r)))
                  + s.si_level * powers.p_j * float(np.real(np.trace(lm.F @ V_r)))
                  + sb) / sb
        eta0 = (powers.p_a * float(np.real(np.trace(BWB @ V_t))) / sb) / denom0
        try:
            result = dinkelbach(num, den, inner, eta0=eta0, tol=1e-6,
                                max_iter=30)
        except InnerInfeasibleError:
            diags.statuses.append("infeasible")
            diags.message = "inner subproblem infeasible; previous iterate kept"
            break
        sol = result.solution
        V_t, V_r = sol.matrices["Vt"], sol.matrices["Vr"]
        if not passive:
            qin = np.array([sol.scalars[f"qin{k}"] for k in range(K)])
        last = sol
        diags.etas.append(result.etas)
        diags.statuses.append(sol.status)
        gap = conic.rank_one_gap(V_t) + conic.rank_one_gap(V_r)
        pen = weight * (sur_t.surrogate(V_t) + sur_r.surrogate(V_r))
        diags.penalties.append(pen)
        if _rank_gap_small(V_t, V_r):
            break
        if rho is None:
            scale = max(abs(num(sol)), 1e-9)
            rho = s.rho_init[0] * max(gap, 1e-12) / (0.1 * scale)
            continue
        rho *= s.rho_decay[0]
        if pen <= s.zeta1:
            break

    ext_t = extract_rank_one(V_t, "plain")
    ext_r = extract_rank_one(V_r, "trailing_one")
    diags.rank_ratios.append((ext_t.rank_ratio, ext_r.rank_ratio))
    amp_cap = 1.0 if passive else s.amp_max
    v_t_new = ext_t.vector
    v_r_new = ext_r.vector[:K]
    ios = IosBeam(amp_t=np.minimum(np.abs(v_t_new), amp_cap),
                  amp_r=np.minimum(np.abs(v_r_new), amp_cap),
                  phase_t=np.mod(np.angle(v_t_new), 2.0 * np.pi),
                  phase_r=np.mod(np.angle(v_r_new), 2.0 * np.pi))
    ok = last is not None and ext_t.ok and ext_r.ok
    return IosSolveResult(V_t=V_t, V_r=V_r, ios=ios, ok=ok, diagnostics=diags)


def _build_ios(scenario: Scenario, lm: LiftedMatrices, powers: PowerAlloc,
               fd: FdBeam, kappa: float, eta: float, pen_weight: float,
               pen_t: np.ndarray, pen_r: np.ndarray, mu: np.ndarray,
               passive: bool) -> SdpProblem:
    """Assemble the penalized surface SDP at one Dinkelbach parameter."""
    s = scenario
    K = lm.B.shape[1]
    W_r = lift_vector(fd.w_r)
    BWB = lm.B.conj().T @ W_r @ lm.B
    AWA = lm.A.conj().T @ W_r @ lm.A
    CC = lift_vector(lm.C)
    DD = lift_vector(lm.D)
    sb, so = s.noise_bob, s.noise_ios
    pa, pg, pj = powers.p_a, powers.p_g, powers.p_j
    mu_g = 2.0 ** s.target_rate - 1.0
    amax2 = s.amp_max ** 2

    scalar_bounds: dict = {}
    if not passive:
        for k in range(K):
            scalar_bounds[f"q{k}"] = (0.0, s.per_element_budget / s.budget_ios)
            scalar_bounds[f"qin{k}"] = (0.0, None)

    obj = AffineExpr(
        matrix_terms={
            "Vt": (pa / sb) * BWB - eta * (so / sb) * lm.phi_tb
                  - pen_weight * pen_t,
            "Vr": -eta * ((so / sb) * lm.phi_rb
                          + (s.si_level * pj / sb) * lm.F)
                  - pen_weight * pen_r,
        },
        const=-eta,
    )
    eqs = [AffineExpr(matrix_terms={"Vr": _diag_selector(K + 1, K)}, const=-1.0)]
    ineqs = [
        _normalized(AffineExpr(                      # Grace QoS
            matrix_terms={
                "Vt": mu_g * (pa * BWB + so * lm.phi_tb),
                "Vr": mu_g * (so * lm.phi_rb + s.si_level * pj * lm.F)
                      - pg * AWA,
            },
            const=mu_g * sb,
        )),
        _normalized(AffineExpr(                      # covertness
            matrix_terms={
                "Vt": pa * DD + so * lm.phi_tw,
                "Vr": -(kappa - 1.0) * (pg * CC + pj * lm.E + so * lm.phi_rw),
            },
            const=-(kappa - 1.0) * s.noise_willie,
        )),
        _normalized(AffineExpr(                      # SIC ordering
            matrix_terms={"Vt": BWB, "Vr": -AWA})),
    ]
    quads = []
    if passive:
        for k in range(K):
            ineqs.append(AffineExpr(
                matrix_terms={"Vt": _diag_selector(K, k),
                              "Vr": _diag_selector(K + 1, k)},
                const=-1.0))
    else:
        ineqs.append(_normalized(AffineExpr(         # surface output budget
            matrix_terms={
                "Vt": pa * lm.phi_ao + so * np.eye(K, dtype=complex),
                "Vr": pg * lm.phi_go + so * lm.pi + pj * lm.phi_bo,
            },
            const=-s.budget_ios,
        )))
        for k in range(K):
            ineqs.append(AffineExpr(
                matrix_terms={"Vt": _diag_selector(K, k) / amax2}, const=-1.0))
            ineqs.append(AffineExpr(
                matrix_terms={"Vr": _diag_selector(K + 1, k) / amax2}, const=-1.0))
        # incident-power sum cap (surface-budget units)
        hao2 = float(np.sum(lm.phi_ao.diagonal().real))
        hgo2 = float(np.sum(lm.phi_go.diagonal().real))
        hbowt2 = float(np.sum(lm.phi_bo.diagonal().real))
        total_in = (pa * hao2 + pg * hgo2 + pj * hbowt2) / s.budget_ios
        ineqs.append(_normalized(AffineExpr(
            scalar_terms={f"qin{k}": 1.0 for k in range(K)},
            const=-total_in)))
        ineqs.append(_normalized(AffineExpr(         # element budget sum
            scalar_terms={f"q{k}": 1.0 for k in range(K)},
            const=-1.0)))
        for k in range(K):                           # per-element power (AGM)
            f1 = AffineExpr(matrix_terms={
                "Vt": mu[k] * _diag_selector(K, k),
                "Vr": mu[k] * _diag_selector(K + 1, k)})
            f2 = AffineExpr(scalar_terms={f"qin{k}": 1.0 / mu[k]},
                            const=so / (s.budget_ios * mu[k]))
            rhs = AffineExpr(scalar_terms={f"q{k}": 2.0})
            quads.append((f1, f2, rhs))

    return SdpProblem(matrix_dims={"Vt": K, "Vr": K + 1},
                      scalar_bounds=scalar_bounds, maximize=True,
                      objective=obj, eq_constraints=eqs,
                      ineq_constraints=ineqs, quad_constraints=quads)


# --- receive beamforming subproblem ------------------------------------------

@dataclass
class RxSolveResult:
    W_r: np.ndarray
    w_r: np.ndarray
    ok: bool
    diagnostics: BeamDiagnostics


def solve_receive_beamforming(scenario: Scenario, channels: ChannelSet,
                              powers: PowerAlloc, ios: IosBeam,
                              fd0: FdBeam, kappa: float) -> RxSolveResult:
    """Penalized Dinkelbach solve of the receive beamforming subproblem.

    The warden statistics do not involve the receive beam, so only the QoS
    and unit-trace constraints appear; the rank surrogate rides inside the
    fractional denominator.
    """
    s = scenario
    M = s.num_antennas
    diags = BeamDiagnostics()
    if M == 1:
        w = np.ones(1, dtype=complex)
        return RxSolveResult(W_r=lift_vector(w), w_r=w, ok=True,
                             diagnostics=diags)
    lm = build_lifted(channels, ios, fd0)
    v_t = ios.coeff_t
    v_r = np.append(ios.coeff_r, 1.0)
    V_t, V_r = lift_vector(v_t), lift_vector(v_r)
    BVB = lm.B @ V_t @ lm.B.conj().T
    AVA = lm.A @ V_r @ lm.A.conj().T
    sb, so = s.noise_bob, s.noise_ios
    pa, pg, pj = powers.p_a, powers.p_g, powers.p_j
    mu_g = 2.0 ** s.target_rate - 1.0

    W = lift_vector(fd0.w_r)
    rho = None

    def den_plain(Wm: np.ndarray) -> float:
        return (so * float(np.real(np.trace((lm.G_t + lm.G_r) @ Wm)))
                + s.si_level * pj * float(np.real(np.trace(lm.G_b @ Wm)))
                + sb) / sb

    qos = _normalized(AffineExpr(
        matrix_terms={"Wr": mu_g * (pa * BVB + so * (lm.G_t + lm.G_r)
                                    + s.si_level * pj * lm.G_b) - pg * AVA},
        const=mu_g * sb,
    ))
    unit_trace = AffineExpr(matrix_terms={"Wr": np.eye(M, dtype=complex)},
                            const=-1.0)

    for _ in range(s.max_penalty_iters):
        sur = rank_penalty(W)
        weight = 0.0 if rho is None else 1.0 / rho

        def num(sol) -> float:
            return pa * float(np.real(np.trace(BVB @ sol.matrices["Wr"]))) / sb

        def den(sol) -> float:
            Wm = sol.matrices["Wr"]
            return (den_plain(Wm)
                    + weight * float(np.real(np.trace(sur.coeff @ Wm))))

        def inner(eta: float):
            obj = AffineExpr(matrix_terms={
                "Wr": (pa / sb) * BVB
                      - eta * ((so / sb) * (lm.G_t + lm.G_r)
                               + (s.si_level * pj / sb) * lm.G_b
                               + weight * sur.coeff),
            }, const=-eta)
            prob = SdpProblem(matrix_dims={"Wr": M}, maximize=True,
                              objective=obj, eq_constraints=[unit_trace],
                              ineq_constraints=[qos])
            sol = conic.solve(prob)
            if sol.status == "infeasible":
                raise InnerInfeasibleError("receive subproblem infeasible")
            return sol

        eta0 = (pa * float(np.real(np.trace(BVB @ W))) / sb) / \
               (den_plain(W) + weight * float(np.real(np.trace(sur.coeff @ W))))
        try:
            result = dinkelbach(num, den, inner, eta0=eta0, tol=1e-6,
                                max_iter=30)
        except InnerInfeasibleError:
            diags.statuses.append("infeasible")
            diags.message = "inner subproblem infeasible; previous iterate kept"
            break
        W = result.solution.matrices["Wr"]
        diags.etas.append(result.etas)
        diags.statuses.append(result.solution.status)
        gap = conic.rank_one_gap(W)
        pen = weight * float(np.real(np.trace(sur.coeff @ W)))
        diags.penalties.append(pen)
        if _rank_gap_small(W):
            break
        if rho is None:
            scale = max(pa * float(np.real(np.trace(BVB @ W))) / sb, 1e-9)
            rho = s.rho_init[1] * max(gap, 1e-12) / (0.1 * scale)
            continue
        rho *= s.rho_decay[1]
        if pen <= s.zeta2:
            break

    ext = extract_rank_one(W, "unit")
    diags.rank_ratios.append(ext.rank_ratio)
    return RxSolveResult(W_r=W, w_r=ext.vector, ok=ext.ok, diagnostics=diags)


# --- transmit beamforming subproblem ------------------------------------------

@dataclass
class TxSolveResult:
    W_t: np.ndarray
    w_t: np.ndarray
    ok: bool
    diagnostics: BeamDiagnostics


def solve_transmit_beamforming(scenario: Scenario, channels: ChannelSet,
                               powers: PowerAlloc, ios: IosBeam,
                               fd0: FdBeam, kappa: float) -> TxSolveResult:
    """Penalty solve of the transmit beamforming subproblem: minimize the
    residual self-interference leakage subject to covertness and the surface
    output budget."""
    s = scenario
    M = s.num_antennas
    diags = BeamDiagnostics()
    if M == 1:
        w = np.ones(1, dtype=complex)
        return TxSolveResult(W_t=lift_vector(w), w_t=w, ok=True,
                             diagnostics=diags)
    lm = build_lifted(channels, ios, fd0)
    v_t = ios.coeff_t
    v_r = np.append(ios.coeff_r, 1.0)
    V_t, V_r = lift_vector(v_t), lift_vector(v_r)
    CC = lift_vector(lm.C)
    DD = lift_vector(lm.D)
    sb, so = s.noise_bob, s.noise_ios
    pa, pg, pj = powers.p_a, powers.p_g, powers.p_j
    H_aw = float(np.real(np.trace(DD @ V_t)))
    H_gw = float(np.real(np.trace(CC @ V_r)))

    covert = _normalized(AffineExpr(
        matrix_terms={"Wt": -(kappa - 1.0) * pj * lm.Gw_t},
        const=(pa * H_aw + so * float(np.real(np.trace(lm.phi_tw @ V_t)))
               - (kappa - 1.0) * (pg * H_gw
                                  + so * float(np.real(np.trace(lm.phi_rw @ V_r)))
                                  + s.noise_willie)),
    ))
    budget = _normalized(AffineExpr(
        matrix_terms={"Wt": pj * lm.Gr_t},
        const=(pg * float(np.real(np.trace(lm.phi_go @ V_r)))
               + pa * float(np.real(np.trace(lm.phi_ao @ V_t)))
               + so * float(np.real(np.trace(V_t)))
               + so * float(np.real(np.trace(lm.pi @ V_r)))
               - s.budget_ios),
    ))
    unit_trace = AffineExpr(matrix_terms={"Wt": np.eye(M, dtype=complex)},
                            const=-1.0)

    W = lift_vector(fd0.w_t)
    rho = None
    gj_scale = max(float(np.real(np.trace(lm.Gj_t))), 1e-30)
    for _ in range(s.max_penalty_iters):
        sur = rank_penalty(W)
        weight = 0.0 if rho is None else 1.0 / rho
        obj = AffineExpr(matrix_terms={
            "Wt": lm.Gj_t / gj_scale + weight * sur.coeff})
        prob = SdpProblem(matrix_dims={"Wt": M}, maximize=False,
                          objective=obj, eq_constraints=[unit_trace],
                          ineq_constraints=[covert, budget])
        sol = conic.solve(prob)
        if sol.status == "infeasible":
            diags.statuses.append("infeasible")
            diags.message = "subproblem infeasible; previous iterate kept"
            break
        W = sol.matrices["Wt"]
        diags.statuses.append(sol.status)
        gap = conic.rank_one_gap(W)
        pen = weight * float(np.real(np.trace(sur.coeff @ W)))
        diags.penalties.append(pen)
        if _rank_gap_small(W):
            break
        if rho is None:
            leak = float(np.real(np.trace((lm.Gj_t / gj_scale) @ W)))
            rho = s.rho_init[2] * max(gap, 1e-12) / (0.1 * max(leak, 1e-2))
            continue
        rho *= s.rho_decay[2]
        if pen <= s.zeta3:
            break

    ext = extract_rank_one(W, "unit")
    diags.rank_ratios.append(ext.rank_ratio)
    return TxSolveResult(W_t=W, w_t=ext.vector, ok=ext.ok, diagnostics=diags)
