"""Signal-model evaluation: effective gains, SINRs/rates, surface power
accounting, the warden's detection statistics, and the covertness audit.

Everything here is a pure function of immutable inputs, computed in linear
watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .scenario import ChannelSet, Scenario

TWO_PI = 2.0 * math.pi


class DimensionError(ValueError):
    """Dimension-inconsistent inputs."""


@dataclass(frozen=True)
class IosBeam:
    """Surface refraction/reflection coefficients (energy-splitting mode)."""

    amp_t: np.ndarray     # refraction amplitudes, K
    amp_r: np.ndarray     # reflection amplitudes, K
    phase_t: np.ndarray   # radians in [0, 2*pi)
    phase_r: np.ndarray

    def __post_init__(self):
        K = self.amp_t.shape[0]
        for name in ("amp_r", "phase_t", "phase_r"):
            if getattr(self, name).shape != (K,):
                raise DimensionError(f"{name} must have shape ({K},)")
        if np.any(self.amp_t < -1e-12) or np.any(self.amp_r < -1e-12):
            raise ValueError("amplitudes must be nonnegative")

    @property
    def coeff_t(self) -> np.ndarray:
        return self.amp_t * np.exp(1j * self.phase_t)

    @property
    def coeff_r(self) -> np.ndarray:
        return self.amp_r * np.exp(1j * self.phase_r)

    @property
    def theta_t(self) -> np.ndarray:
        return np.diag(self.coeff_t)

    @property
    def theta_r(self) -> np.ndarray:
        return np.diag(self.coeff_r)

    @classmethod
    def from_vectors(cls, v_t: np.ndarray, v_r: np.ndarray) -> "IosBeam":
        return cls(amp_t=np.abs(v_t), amp_r=np.abs(v_r),
                   phase_t=np.mod(np.angle(v_t), TWO_PI),
                   phase_r=np.mod(np.angle(v_r), TWO_PI))

    @classmethod
    def zero(cls, K: int) -> "IosBeam":
        z = np.zeros(K)
        return cls(amp_t=z.copy(), amp_r=z.copy(), phase_t=z.copy(), phase_r=z.copy())


@dataclass(frozen=True)
class FdBeam:
    """Bob's unit-norm transmit/receive beamformers."""

    w_t: np.ndarray
    w_r: np.ndarray

    def __post_init__(self):
        if self.w_t.shape != self.w_r.shape or self.w_t.ndim != 1:
            raise DimensionError("w_t and w_r must be vectors of equal length")
        for name in ("w_t", "w_r"):
            n = np.linalg.norm(getattr(self, name))
            if abs(n - 1.0) > 1e-9:
                raise ValueError(f"{name} must be unit-norm (got {n})")


@dataclass(frozen=True)
class PowerAlloc:
    """Transmit powers of Alice, Grace, and Bob's jammer (W)."""

    p_a: float
    p_g: float
    p_j: float

    def __post_init__(self):
        if min(self.p_a, self.p_g, self.p_j) < 0:
            raise ValueError("powers must be nonnegative")

    def validate_budgets(self, scenario: Scenario) -> None:
        if self.p_a > scenario.budget_alice * (1 + 1e-9):
            raise ValueError("p_a exceeds budget")
        if self.p_g > scenario.budget_grace * (1 + 1e-9):
            raise ValueError("p_g exceeds budget")
        if self.p_j > scenario.budget_jam * (1 + 1e-9):
            raise ValueError("p_j exceeds budget")


@dataclass(frozen=True)
class DetectionPair:
    """Willie's received-power variances under H0 and H1."""

    lam0: float
    lam1: float

    def __post_init__(self):
        if not (self.lam0 > 0 and self.lam1 > 0):
            raise ValueError("lam0 and lam1 must be positive")
        if self.lam1 < self.lam0 * (1 - 1e-12):
            raise ValueError("lam1 must be >= lam0")

    @property
    def ratio(self) -> float:
        return self.lam1 / self.lam0


@dataclass(frozen=True)
class GainBundle:
    """All squared effective gains needed by the rate, power, and detection
    expressions, plus the norms entering the surface power accounting."""

    gab2: float       # |w_r^H H_ob Theta_t h_ao|^2
    ggb2: float       # |w_r^H H_ob Theta_r h_go|^2
    ggw2: float       # |h_ow Theta_r h_go|^2
    gaw2: float       # |h_ow Theta_t h_ao|^2
    gbw_wt2: float    # |(h_ow Theta_r H_bo + h_bw) w_t|^2
    si2: float        # |w_r^H (H_bb + H_ob Theta_r H_bo) w_t|^2
    amp_t: float      # ||w_r^H H_ob Theta_t||^2
    amp_r: float      # ||w_r^H H_ob Theta_r||^2
    how_t2: float     # ||h_ow Theta_t||^2
    how_r2: float     # ||h_ow Theta_r||^2
    tha2: float       # ||Theta_t h_ao||^2
    rhg2: float       # ||Theta_r h_go||^2
    rbw2: float       # ||Theta_r H_bo w_t||^2
    sic_refl: float   # ||H_ob Theta_r h_go||^2
    sic_refr: float   # ||H_ob Theta_t h_ao||^2
    hao2: float       # ||h_ao||^2
    hgo2: float       # ||h_go||^2
    hbowt2: float     # ||H_bo w_t||^2
    frob_t: float     # ||Theta_t||_F^2
    frob_r: float     # ||Theta_r||_F^2

    def omega(self, p_j: float, si_level: float, noise_ios: float) -> float:
        """Interference-plus-amplified-noise power at Bob."""
        return (self.amp_t + self.amp_r) * noise_ios + si_level * p_j * self.si2


def effective_gains(channels: ChannelSet, ios: IosBeam, fd: FdBeam) -> GainBundle:
    """Evaluate every effective link gain for a candidate solution."""
    c = channels
    K = c.h_ao.shape[0]
    M = c.H_ob.shape[0]
    if ios.amp_t.shape[0] != K:
        raise DimensionError(f"surface beam has {ios.amp_t.shape[0]} elements, expected {K}")
    if fd.w_t.shape[0] != M:
        raise DimensionError(f"fd beam has {fd.w_t.shape[0]} antennas, expected {M}")
    vt = ios.coeff_t
    vr = ios.coeff_r
    wrH_Hob = fd.w_r.conj() @ c.H_ob            # 1 x K
    Hbo_wt = c.H_bo @ fd.w_t                    # K
    g_ab = wrH_Hob @ (vt * c.h_ao)
    g_gb = wrH_Hob @ (vr * c.h_go)
    g_gw = c.h_ow @ (vr * c.h_go)
    g_aw = c.h_ow @ (vt * c.h_ao)
    g_bw_wt = c.h_ow @ (vr * Hbo_wt) + c.h_bw @ fd.w_t
    si = fd.w_r.conj() @ c.H_bb @ fd.w_t + wrH_Hob @ (vr * Hbo_wt)
    return GainBundle(
        gab2=abs(g_ab) ** 2,
        ggb2=abs(g_gb) ** 2,
        ggw2=abs(g_gw) ** 2,
        gaw2=abs(g_aw) ** 2,
        gbw_wt2=abs(g_bw_wt) ** 2,
        si2=abs(si) ** 2,
        amp_t=float(np.sum(np.abs(wrH_Hob * vt) ** 2)),
        amp_r=float(np.sum(np.abs(wrH_Hob * vr) ** 2)),
        how_t2=float(np.sum(np.abs(c.h_ow * vt) ** 2)),
        how_r2=float(np.sum(np.abs(c.h_ow * vr) ** 2)),
        tha2=float(np.sum(np.abs(vt * c.h_ao) ** 2)),
        rhg2=float(np.sum(np.abs(vr * c.h_go) ** 2)),
        rbw2=float(np.sum(np.abs(vr * Hbo_wt) ** 2)),
        sic_refl=float(np.sum(np.abs(c.H_ob @ (vr * c.h_go)) ** 2)),
        sic_refr=float(np.sum(np.abs(c.H_ob @ (vt * c.h_ao)) ** 2)),
        hao2=float(np.sum(np.abs(c.h_ao) ** 2)),
        hgo2=float(np.sum(np.abs(c.h_go) ** 2)),
        hbowt2=float(np.sum(np.abs(Hbo_wt) ** 2)),
        frob_t=float(np.sum(ios.amp_t ** 2)),
        frob_r=float(np.sum(ios.amp_r ** 2)),
    )


@dataclass(frozen=True)
class RatePair:
    sinr_alice: float
    sinr_grace: float
    rate_alice: float
    rate_grace: float


def sinr_and_rates(gains: GainBundle, powers: PowerAlloc, noise_bob: float,
                   si_level: float, noise_ios: float) -> RatePair:
    """SINRs and achievable rates under SIC (Grace decoded first)."""
    omega = gains.omega(powers.p_j, si_level, noise_ios)
    sig_a = powers.p_a * gains.gab2
    sinr_a = sig_a / (omega + noise_bob)
    sinr_g = powers.p_g * gains.ggb2 / (sig_a + omega + noise_bob)
    return RatePair(sinr_alice=sinr_a, sinr_grace=sinr_g,
                    rate_alice=math.log2(1.0 + sinr_a),
                    rate_grace=math.log2(1.0 + sinr_g))


def ios_output_power(channels: ChannelSet, ios: IosBeam, fd: FdBeam,
                     powers: PowerAlloc, noise_ios: float) -> float:
    """Total power departing the surface (refracted + reflected + amplified noise)."""
    g = effective_gains(channels, ios, fd)
    return (powers.p_a * g.tha2 + powers.p_g * g.rhg2 + powers.p_j * g.rbw2
            + (g.frob_t + g.frob_r) * noise_ios)


def per_element_power(ios: IosBeam, incident: np.ndarray, noise_ios: float) -> np.ndarray:
    """Per-element consumed power ((a_t^2 + a_r^2) * (p_in + sigma_o^2))."""
    if np.any(incident < 0):
        raise ValueError("incident powers must be nonnegative")
    return (ios.amp_t ** 2 + ios.amp_r ** 2) * (incident + noise_ios)


def incident_power_per_element(channels: ChannelSet, powers: PowerAlloc,
                               fd: FdBeam) -> np.ndarray:
    """Physical per-element incident power averaged over signal statistics."""
    Hbo_wt = channels.H_bo @ fd.w_t
    return (powers.p_a * np.abs(channels.h_ao) ** 2
            + powers.p_g * np.abs(channels.h_go) ** 2
            + powers.p_j * np.abs(Hbo_wt) ** 2)


def detection_pair(gains: GainBundle, powers: PowerAlloc, noise_ios: float,
                   noise_willie: float) -> DetectionPair:
    """Willie's received-power variances under the two hypotheses."""
    lam0 = (powers.p_g * gains.ggw2 + powers.p_j * gains.gbw_wt2
            + gains.how_r2 * noise_ios + noise_willie)
    lam1 = lam0 + powers.p_a * gains.gaw2 + gains.how_t2 * noise_ios
    return DetectionPair(lam0=lam0, lam1=lam1)


def optimal_threshold(pair: DetectionPair) -> float:
    """Radiometer threshold minimizing Willie's total error probability.

    Degenerates to lam0 (the analytic limit) when the hypotheses coincide.
    """
    d = pair.lam1 - pair.lam0
    if d <= pair.lam0 * 1e-14:
        return pair.lam0
    return pair.lam1 * pair.lam0 / d * math.log(pair.lam1 / pair.lam0)


def mdep(pair: DetectionPair) -> float:
    """Minimum detection error probability (false alarm + miss detection)."""
    r = pair.ratio
    if r <= 1.0 + 1e-14:
        return 1.0
    d = pair.lam1 - pair.lam0
    return 1.0 + r ** (-pair.lam1 / d) - r ** (-pair.lam0 / d)


def kl_divergence(pair: DetectionPair) -> float:
    """KL divergence between Willie's H0 and H1 observation densities (nats)."""
    r = pair.ratio
    return math.log(r) + 1.0 / r - 1.0


def kappa_from_epsilon(eps: float, tol: float = 1e-12) -> float:
    """Root kappa >= 1 of log(k) + 1/k - 1 == 2*eps^2 (unique by monotonicity)."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    target = 2.0 * eps * eps
    if target == 0.0:
        return 1.0
    f = lambda lam: math.log(lam) + 1.0 / lam - 1.0 - target
    hi = 2.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 1.0, hi, xtol=tol)


def covertness_slack(gains: GainBundle, powers: PowerAlloc, kappa: float,
                     noise_ios: float, noise_willie: float) -> float:
    """Signed slack of the covertness constraint (>= 0 means satisfied)."""
    lhs = powers.p_a * gains.gaw2 + gains.how_t2 * noise_ios
    rhs = (kappa - 1.0) * (powers.p_g * gains.ggw2 + powers.p_j * gains.gbw_wt2
                           + gains.how_r2 * noise_ios + noise_willie)
    return rhs - lhs


def covertness_satisfied(gains: GainBundle, powers: PowerAlloc, kappa: float,
                         noise_ios: float, noise_willie: float,
                         tol: float = 1e-6) -> tuple[bool, float]:
    slack = covertness_slack(gains, powers, kappa, noise_ios, noise_willie)
    scale = (kappa - 1.0) * noise_willie + powers.p_a * gains.gaw2 + noise_willie
    return slack >= -tol * scale, slack


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    std_error: float


def mdep_monte_carlo(pair: DetectionPair, samples: int,
                     rng: np.random.Generator) -> MonteCarloEstimate:
    """Radiometer simulation: empirical false-alarm + miss rates at the
    optimal threshold.  |y_w|^2 is exponential under either hypothesis."""
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    thr = optimal_threshold(pair)
    y0 = rng.exponential(pair.lam0, samples)
    y1 = rng.exponential(pair.lam1, samples)
    fa = float(np.mean(y0 > thr))
    md = float(np.mean(y1 <= thr))
    se = math.sqrt(fa * (1 - fa) / samples + md * (1 - md) / samples)
    return MonteCarloEstimate(value=fa + md, std_error=se)


@dataclass(frozen=True)
class ConstraintReport:
    """Signed relative residuals of every constraint (>= 0 means satisfied).

    `residuals` holds the constraints the optimization enforces; the SIC
    ordering is audited in its receive-projected form there, while the
    unprojected surface-side form is reported in `informational`.
    """

    residuals: dict[str, float]
    informational: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-6

    @property
    def feasible(self) -> bool:
        return all(v >= -self.tol for v in self.residuals.values())

    def worst(self) -> tuple[str, float]:
        name = min(self.residuals, key=self.residuals.get)
        return name, self.residuals[name]


def check_all_constraints(scenario: Scenario, channels: ChannelSet, *,
                          powers: PowerAlloc, ios: IosBeam, fd: FdBeam,
                          element_budget: np.ndarray | None = None,
                          element_incident: np.ndarray | None = None,
                          kappa: float | None = None,
                          tol: float = 1e-6) -> ConstraintReport:
    """Aggregate feasibility audit with one signed residual per constraint.

    element_budget / element_incident are the per-element bookkeeping
    variables carried by the solution; when absent they default to the
    physical incident powers and the exact consumed powers.
    """
    s = scenario
    if kappa is None:
        kappa = kappa_from_epsilon(s.covertness_eps)
    g = effective_gains(channels, ios, fd)
    rp = sinr_and_rates(g, powers, s.noise_bob, s.si_level, s.noise_ios)
    if element_incident is None:
        element_incident = incident_power_per_element(channels, powers, fd)
    consumed = per_element_power(ios, element_incident, s.noise_ios)
    if element_budget is None:
        element_budget = consumed
    out_power = (powers.p_a * g.tha2 + powers.p_g * g.rhg2 + powers.p_j * g.rbw2
                 + (g.frob_t + g.frob_r) * s.noise_ios)
    total_incident = (powers.p_a * g.hao2 + powers.p_g * g.hgo2
                      + powers.p_j * g.hbowt2)
    cov_slack = covertness_slack(g, powers, kappa, s.noise_ios, s.noise_willie)
    cov_scale = ((kappa - 1.0) * s.noise_willie + powers.p_a * g.gaw2
                 + s.noise_willie)
    sic_scale = max(g.ggb2, g.gab2, 1e-300)
    sic_scale_raw = max(g.sic_refl, g.sic_refr, 1e-300)
    amp2 = np.maximum(ios.amp_t, ios.amp_r)
    elem_scale = max(float(np.max(element_budget)), s.noise_ios)

    residuals = {
        "budget_alice": (s.budget_alice - powers.p_a) / s.budget_alice,
        "budget_grace": (s.budget_grace - powers.p_g) / s.budget_grace,
        "budget_jam": ((s.budget_jam - powers.p_j) / s.budget_jam
                       if s.budget_jam > 0 else -powers.p_j),
        "power_nonneg": min(powers.p_a, powers.p_g, powers.p_j) / s.budget_grace,
        "sic_order": (g.ggb2 - g.gab2) / sic_scale,
        "qos_grace": (rp.rate_grace - s.target_rate) / max(1.0, s.target_rate),
        "amp_limit": float(np.min(s.amp_max - amp2)) / s.amp_max,
        "fd_norms": -max(abs(np.linalg.norm(fd.w_r) - 1.0),
                         abs(np.linalg.norm(fd.w_t) - 1.0)),
        "element_power": float(np.min(element_budget - consumed)) / elem_scale,
        "incident_sum": ((total_incident - float(np.sum(element_incident)))
                         / max(total_incident, s.noise_ios)),
        "element_total": (s.budget_ios - float(np.sum(element_budget))) / s.budget_ios,
        "ios_output": (s.budget_ios - out_power) / s.budget_ios,
        "covertness": cov_slack / cov_scale,
    }
    informational = {
        "sic_order_surface": (g.sic_refl - g.sic_refr) / sic_scale_raw,
        "element_power_physical": float(np.min(
            element_budget - per_element_power(
                ios, incident_power_per_element(channels, powers, fd),
                s.noise_ios))) / elem_scale,
    }
    return ConstraintReport(residuals=residuals, informational=informational, tol=tol)
