"""Closed-form transmit/jamming power allocation for fixed beams.

The caps on Alice's power come from the QoS, surface-budget, and covertness
constraints; the floor on the jamming power is the smallest value that keeps
the covertness constraint satisfied at the chosen Alice power.  Degenerate
denominators map to +inf (absent cap) or 0 (absent floor), never NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physics import GainBundle, PowerAlloc
from .scenario import Scenario

INF = math.inf


@dataclass(frozen=True)
class XiBundle:
    """The six closed-form cap/floor values (W)."""

    xi1: float  # QoS cap on P_a
    xi2: float  # surface-budget cap on P_a
    xi3: float  # covertness cap on P_a
    xi4: float  # QoS cap on P_j
    xi5: float  # surface-budget cap on P_j
    xi6: float  # covertness floor on P_j


def _ratio(num: float, den: float, degenerate: float) -> float:
    if den <= 0.0:
        return degenerate
    return num / den


def mu_from_target_rate(target_rate: float) -> float:
    return 2.0 ** target_rate - 1.0


def xi_values(scenario: Scenario, gains: GainBundle, kappa: float,
              p_a: float, p_g: float, p_j: float) -> XiBundle:
    """Evaluate all six caps/floors at fixed beams and the given powers.

    xi1..xi3 use (p_g, p_j); xi4..xi6 use (p_a, p_g).
    """
    s = scenario
    g = gains
    mu_g = mu_from_target_rate(s.target_rate)
    omega = g.omega(p_j, s.si_level, s.noise_ios)
    amp_noise = (g.amp_t + g.amp_r) * s.noise_ios
    frob_noise = (g.frob_t + g.frob_r) * s.noise_ios

    if mu_g <= 0.0:
        xi1 = INF
    else:
        xi1 = _ratio(p_g * g.ggb2 / mu_g - omega - s.noise_bob, g.gab2, INF)
    xi2 = _ratio(s.budget_ios - p_g * g.rhg2 - p_j * g.rbw2 - frob_noise,
                 g.tha2, INF)
    xi3 = _ratio((kappa - 1.0) * (s.noise_willie + p_g * g.ggw2 + p_j * g.gbw_wt2
                                  + g.how_r2 * s.noise_ios)
                 - g.how_t2 * s.noise_ios,
                 g.gaw2, INF)
    # Jamming enters Bob's interference through the coherent residual
    # self-interference term, matching the omega definition.
    if mu_g <= 0.0:
        xi4 = INF
    else:
        xi4 = _ratio(p_g * g.ggb2 / mu_g - p_a * g.gab2 - amp_noise - s.noise_bob,
                     s.si_level * g.si2, INF)
    xi5 = _ratio(s.budget_ios - p_g * g.rhg2 - p_a * g.tha2 - frob_noise,
                 g.rbw2, INF)
    cov_need = ((p_a * g.gaw2 + g.how_t2 * s.noise_ios) / (kappa - 1.0)
                if kappa > 1.0
                else (INF if p_a * g.gaw2 + g.how_t2 * s.noise_ios > 0 else 0.0))
    xi6 = _ratio(cov_need - p_g * g.ggw2 - g.how_r2 * s.noise_ios - s.noise_willie,
                 g.gbw_wt2, 0.0)
    return XiBundle(xi1=xi1, xi2=xi2, xi3=xi3, xi4=xi4, xi5=xi5, xi6=xi6)


@dataclass(frozen=True)
class PowerResult:
    value: float
    feasible: bool


def optimal_alice_power(xi: XiBundle, budget_alice: float) -> PowerResult:
    """Largest Alice power admitted by all caps; infeasible when negative."""
    cap = min(budget_alice, xi.xi1, xi.xi2, xi.xi3)
    if cap < 0.0:
        return PowerResult(value=0.0, feasible=False)
    return PowerResult(value=min(cap, budget_alice), feasible=True)


def optimal_jamming_power(xi: XiBundle, budget_jam: float) -> PowerResult:
    """Smallest jamming power supporting covertness, or 0 when none fits.

    A negative floor is clamped to 0 (covertness already holds unjammed).
    The boundary comparison carries a small relative slack so a floor that
    equals the limiting cap to rounding is still accepted.
    """
    limit = min(budget_jam, xi.xi4, xi.xi5)
    if xi.xi6 <= limit * (1.0 + 1e-9) + 1e-300:
        return PowerResult(value=min(max(0.0, xi.xi6), budget_jam), feasible=True)
    return PowerResult(value=0.0, feasible=True)


def grace_power(scenario: Scenario) -> float:
    return scenario.budget_grace


def allocate_powers(scenario: Scenario, gains: GainBundle,
                    kappa: float) -> tuple[PowerAlloc, bool]:
    """Jointly optimal (P_a, P_j) at fixed beams, with Grace at full budget.

    The rate is increasing in P_a and (weakly) decreasing in P_j, so the
    optimum keeps P_j at the covertness floor.  When the floor is zero at
    the unjammed Alice cap the unjammed caps are optimal; otherwise the
    optimum rides the covertness-tight line P_a = Xi3(P_j), and the caps
    from QoS, surface budget, and the jamming limits are substituted onto
    that line and solved in closed form.
    """
    s = scenario
    g = gains
    p_g = grace_power(s)
    mu_g = mu_from_target_rate(s.target_rate)
    so, sb, sw = s.noise_ios, s.noise_bob, s.noise_willie
    amp_noise = (g.amp_t + g.amp_r) * so
    frob_noise = (g.frob_t + g.frob_r) * so

    # affine coefficients: QoS a1*pa + b1*pj <= c1, surface a2*pa + b2*pj <= c2,
    # covertness a3*pa - b3*pj <= c3
    a1, b1 = g.gab2, s.si_level * g.si2
    c1 = (p_g * g.ggb2 / mu_g if mu_g > 0 else INF) - amp_noise - sb
    a2, b2 = g.tha2, g.rbw2
    c2 = s.budget_ios - p_g * g.rhg2 - frob_noise
    a3, b3 = g.gaw2, (kappa - 1.0) * g.gbw_wt2
    c3 = ((kappa - 1.0) * (sw + p_g * g.ggw2 + g.how_r2 * so)
          - g.how_t2 * so)

    def cap(num: float, den: float) -> float:
        if not math.isfinite(num):
            return INF
        return num / den if den > 0 else (INF if num >= 0 else -INF)

    # unjammed Alice cap; optimal whenever the covertness floor is 0 there
    pa0 = min(s.budget_alice, cap(c1, a1), cap(c2, a2))
    if pa0 < 0:
        return PowerAlloc(p_a=0.0, p_g=p_g, p_j=0.0), False
    if a3 * pa0 <= c3 + 1e-300:
        return PowerAlloc(p_a=pa0, p_g=p_g, p_j=0.0), True

    if b3 <= 0.0 or s.budget_jam <= 0.0:
        # jamming cannot relax covertness; it only caps Alice
        pa = min(pa0, cap(c3, a3))
        if pa < 0:
            return PowerAlloc(p_a=0.0, p_g=p_g, p_j=0.0), False
        return PowerAlloc(p_a=pa, p_g=p_g, p_j=0.0), True

    # substitute pj = (a3*pa - c3)/b3 (covertness tight) into each cap
    pa = min(
        s.budget_alice,
        cap(c1 + b1 * c3 / b3, a1 + b1 * a3 / b3),
        cap(c2 + b2 * c3 / b3, a2 + b2 * a3 / b3),
        cap(c3 + b3 * s.budget_jam, a3),
    )
    if pa < 0:
        return PowerAlloc(p_a=0.0, p_g=p_g, p_j=0.0), False
    pj = max(0.0, (a3 * pa - c3) / b3) if a3 * pa > c3 else 0.0
    pj = min(pj, s.budget_jam)
    return PowerAlloc(p_a=pa, p_g=p_g, p_j=pj), True
