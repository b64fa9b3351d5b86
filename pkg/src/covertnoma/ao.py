"""Alternating-optimization driver: closed-form powers, then the surface,
receive, and transmit SDP blocks in turn, with per-block acceptance guards.

Each block's candidate is re-audited on the raw (non-lifted) model and the
powers are re-run after beam extraction, so every accepted iterate is
feasible and the covert-rate trace is non-decreasing by construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .beamform import (lift_vector, solve_ios_beamforming,
                       solve_receive_beamforming, solve_transmit_beamforming)
from .physics import (ConstraintReport, FdBeam, IosBeam, PowerAlloc,
                      effective_gains, kappa_from_epsilon, sinr_and_rates)
from .physics import check_all_constraints
from .power import allocate_powers
from .scenario import ChannelSet, Scenario


@dataclass(frozen=True)
class SolutionState:
    """One full design point with its audited rates and feasibility."""

    powers: PowerAlloc
    ios: IosBeam
    fd: FdBeam
    V_t: np.ndarray
    V_r: np.ndarray
    W_t: np.ndarray
    W_r: np.ndarray
    rate_alice: float
    rate_grace: float
    report: ConstraintReport
    iteration: int = 0


@dataclass
class AoReport:
    """Per-outer-iteration trace and bookkeeping of one optimization run."""

    rate_trace: list = field(default_factory=list)
    block_statuses: list = field(default_factory=list)  # dict per outer iter
    wall_clock: float = 0.0
    termination: str = ""


def element_bookkeeping(scenario: Scenario, ios: IosBeam) -> tuple[np.ndarray, np.ndarray]:
    """Minimal per-element budget/incident variables consistent with the
    element power-accounting constraints (claimed incident power may be any
    value up to the physical total, so zero is always admissible)."""
    incident = np.zeros(scenario.num_elements)
    budget = (ios.amp_t ** 2 + ios.amp_r ** 2) * scenario.noise_ios
    return budget, incident


def evaluate_state(scenario: Scenario, channels: ChannelSet,
                   powers: PowerAlloc, ios: IosBeam, fd: FdBeam,
                   kappa: float, iteration: int = 0) -> SolutionState:
    """Audit a design point and package it with recomputed raw rates."""
    gains = effective_gains(channels, ios, fd)
    rates = sinr_and_rates(gains, powers, scenario.noise_bob,
                           scenario.si_level, scenario.noise_ios)
    budget, incident = element_bookkeeping(scenario, ios)
    report = check_all_constraints(scenario, channels, powers=powers, ios=ios,
                                   fd=fd, element_budget=budget,
                                   element_incident=incident, kappa=kappa)
    return SolutionState(powers=powers, ios=ios, fd=fd,
                         V_t=lift_vector(ios.coeff_t),
                         V_r=lift_vector(np.append(ios.coeff_r, 1.0)),
                         W_t=lift_vector(fd.w_t), W_r=lift_vector(fd.w_r),
                         rate_alice=rates.rate_alice,
                         rate_grace=rates.rate_grace,
                         report=report, iteration=iteration)


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _feasible_reflect_amp(scenario: Scenario, channels: ChannelSet,
                          w_t: np.ndarray, with_refract: bool,
                          passive: bool) -> float:
    """Uniform amplitude that keeps the surface budget feasible at worst-case
    powers (all transmitters at their maxima)."""
    if passive:
        return 1.0 / np.sqrt(2.0) if with_refract else 1.0
    s = scenario
    load = (s.budget_grace * float(np.sum(np.abs(channels.h_go) ** 2))
            + s.budget_jam * float(np.sum(np.abs(channels.H_bo @ w_t) ** 2))
            + s.num_elements * s.noise_ios)
    if with_refract:
        load += (s.budget_alice * float(np.sum(np.abs(channels.h_ao) ** 2))
                 + s.num_elements * s.noise_ios)
    a = np.sqrt(0.9 * s.budget_ios / load)
    return float(min(a, s.amp_max))


def initialize(scenario: Scenario, channels: ChannelSet,
               rng: np.random.Generator | None = None,
               mode: str = "aligned", passive: bool = False,
               max_restarts: int = 20) -> SolutionState:
    """Construct a feasible starting point.

    aligned: no refraction, reflection phases matched to the dominant
    singular pair of the Grace cascade, receive beam matched to it, random
    transmit beam, powers from the closed forms.  random: both phase
    profiles drawn uniformly (amplitudes still budget-feasible).
    Deterministic given the rng.  When no feasible start is found the best
    attempt is returned with an infeasible report; callers must check it.
    """
    if mode not in ("aligned", "random"):
        raise ValueError(f"unknown initialization mode {mode!r}")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence((scenario.rng_seed, 1)))
    s = scenario
    K, M = s.num_elements, s.num_antennas
    kappa = kappa_from_epsilon(s.covertness_eps)
    amp_cap = min(s.amp_max, 1.0) if passive else s.amp_max
    best = None
    for _ in range(max_restarts):
        w_t = _random_unit(rng, M)
        if mode == "random":
            a = min(_feasible_reflect_amp(s, channels, w_t, True, passive), amp_cap)
            phase_t = rng.uniform(0.0, 2.0 * np.pi, K)
            phase_r = rng.uniform(0.0, 2.0 * np.pi, K)
            ios = IosBeam(amp_t=np.full(K, a), amp_r=np.full(K, a),
                          phase_t=phase_t, phase_r=phase_r)
            grace_cascade = channels.H_ob @ (ios.coeff_r * channels.h_go)
            w_r = grace_cascade / np.linalg.norm(grace_cascade)
        else:
            a = min(_feasible_reflect_amp(s, channels, w_t, False, passive), amp_cap)
            M_g = channels.H_ob @ np.diag(channels.h_go)
            u, _, vh = np.linalg.svd(M_g)
            w_r = u[:, 0]
            phase_r = np.mod(-np.angle(vh[0]), 2.0 * np.pi)
            ios = IosBeam(amp_t=np.zeros(K), amp_r=np.full(K, a),
                          phase_t=np.zeros(K), phase_r=phase_r)
        fd = FdBeam(w_t=w_t, w_r=w_r)
        gains = effective_gains(channels, ios, fd)
        powers, ok = allocate_powers(s, gains, kappa)
        state = evaluate_state(s, channels, powers, ios, fd, kappa)
        if ok and state.report.feasible:
            return state
        if best is None or state.rate_alice > best.rate_alice:
            best = state
    return best


def run_ao(scenario: Scenario, channels: ChannelSet, init: SolutionState,
           *, optimize_ios: bool = True, optimize_receive: bool = True,
           optimize_transmit: bool = True,
           passive: bool = False) -> tuple[SolutionState, AoReport]:
    """Run the outer alternating loop from a feasible starting point.

    Block order per outer pass: closed-form powers, surface SDP, receive
    SDP, transmit SDP.  A block is accepted only if its re-audited candidate
    is feasible and does not lower the covert rate; otherwise the previous
    iterate is kept and the rejection recorded.
    """
    s = scenario
    t0 = time.perf_counter()
    kappa = kappa_from_epsilon(s.covertness_eps)
    report = AoReport()
    state = init
    if not state.report.feasible:
        report.termination = "infeasible_init"
        report.rate_trace.append(state.rate_alice)
        report.wall_clock = time.perf_counter() - t0
        return state, report
    report.rate_trace.append(state.rate_alice)

    def try_accept(cur: SolutionState, ios: IosBeam, fd: FdBeam,
                   it: int) -> tuple[SolutionState, str]:
        gains = effective_gains(channels, ios, fd)
        powers, ok = allocate_powers(s, gains, kappa)
        if not ok:
            return cur, "rejected_power_infeasible"
        cand = evaluate_state(s, channels, powers, ios, fd, kappa, it)
        if not cand.report.feasible:
            return cur, "rejected_infeasible"
        if cand.rate_alice < cur.rate_alice - 1e-12 * max(1.0, cur.rate_alice):
            return cur, "rejected_rate_drop"
        return cand, "accepted"

    for it in range(1, s.max_outer_iters + 1):
        rate_before = state.rate_alice
        statuses = {}

        state, statuses["powers"] = try_accept(state, state.ios, state.fd, it)

        if optimize_ios:
            res = solve_ios_beamforming(s, channels, state.powers, state.fd,
                                        state.ios, kappa, passive=passive)
            state, statuses["ios"] = try_accept(state, res.ios, state.fd, it)
            statuses["ios_rank"] = max(res.diagnostics.rank_ratios[-1])
            if not res.ok:
                statuses["ios"] += "_lowrank" if "reject" not in statuses["ios"] else ""
        else:
            statuses["ios"] = "skipped"

        if optimize_receive and s.num_antennas > 1:
            res = solve_receive_beamforming(s, channels, state.powers,
                                            state.ios, state.fd, kappa)
            fd = FdBeam(w_t=state.fd.w_t, w_r=res.w_r)
            state, statuses["receive"] = try_accept(state, state.ios, fd, it)
            if res.diagnostics.rank_ratios:
                statuses["receive_rank"] = res.diagnostics.rank_ratios[-1]
        else:
            statuses["receive"] = "skipped"

        if optimize_transmit and s.num_antennas > 1 and s.budget_jam > 0:
            res = solve_transmit_beamforming(s, channels, state.powers,
                                             state.ios, state.fd, kappa)
            fd = FdBeam(w_t=res.w_t, w_r=state.fd.w_r)
            state, statuses["transmit"] = try_accept(state, state.ios, fd, it)
            if res.diagnostics.rank_ratios:
                statuses["transmit_rank"] = res.diagnostics.rank_ratios[-1]
        else:
            statuses["transmit"] = "skipped"

        report.block_statuses.append(statuses)
        report.rate_trace.append(state.rate_alice)
        if state.rate_alice - rate_before < s.zeta4:
            report.termination = "converged"
            break
    else:
        report.termination = "max_iterations"

    report.wall_clock = time.perf_counter() - t0
    return state, report
