"""System parameters, node geometry, and random channel generation.

All powers are stored in linear watts; dBm/dB appear only at the config-file
boundary.  Channel realizations are a pure function of (rng_seed, trial,
Scenario), drawn from a counter-based stream so trials are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np


def dbm_to_watt(x_dbm: float) -> float:
    return 1e-3 * 10.0 ** (x_dbm / 10.0)


def watt_to_dbm(x_watt: float) -> float:
    return 10.0 * math.log10(x_watt / 1e-3)


def db_to_power(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def db_to_amplitude(x_db: float) -> float:
    return 10.0 ** (x_db / 20.0)


class ScenarioError(ValueError):
    """Invalid scenario parameters."""


@dataclass(frozen=True)
class Scenario:
    """Static system parameters for one experiment."""

    num_elements: int = 16          # K, surface elements
    num_antennas: int = 4           # M, receiver tx/rx antennas
    noise_ios: float = dbm_to_watt(-90.0)     # sigma_o^2 (W)
    noise_bob: float = dbm_to_watt(-90.0)     # sigma_b^2 (W)
    noise_willie: float = dbm_to_watt(-90.0)  # sigma_w^2 (W)
    budget_alice: float = dbm_to_watt(20.0)   # P_a^max (W)
    budget_grace: float = dbm_to_watt(20.0)   # P_g^max (W)
    budget_jam: float = dbm_to_watt(20.0)     # P_j^max (W)
    budget_ios: float = dbm_to_watt(20.0)     # P_o^max (W)
    per_element_budget: float = dbm_to_watt(20.0)  # cap on each element budget p_k (W)
    amp_max: float = db_to_amplitude(10.0)    # alpha_k^max (amplitude)
    si_level: float = db_to_power(-140.0)     # phi, residual self-interference
    covertness_eps: float = 0.1               # epsilon
    target_rate: float = 1.0                  # Rhat_g (bps/Hz)
    pos_alice: tuple[float, float] = (70.0, 15.0)
    pos_grace: tuple[float, float] = (70.0, -5.0)
    pos_willie: tuple[float, float] = (20.0, -5.0)
    pos_bob: tuple[float, float] = (0.0, 0.0)
    pos_ios: tuple[float, float] = (35.0, 5.0)
    zeta1: float = 1e-4   # IOS rank-penalty stop
    zeta2: float = 1e-4   # receive rank-penalty stop
    zeta3: float = 1e-4   # transmit rank-penalty stop
    zeta4: float = 1e-2   # outer covert-rate improvement stop (bps/Hz)
    rho_init: tuple[float, float, float] = (1.0, 1.0, 1.0)
    rho_decay: tuple[float, float, float] = (0.5, 0.5, 0.5)
    ref_loss: float = 1e-3        # path-loss gain at 1 m
    pl_exp_surface: float = 2.2   # exponent for surface-adjacent links
    pl_exp_direct: float = 3.0    # exponent for the Bob-Willie link
    rician_k: float = db_to_power(3.0)  # K-factor for surface-adjacent links
    rng_seed: int = 0
    max_outer_iters: int = 50
    max_penalty_iters: int = 30

    def __post_init__(self):
        if self.num_elements < 1 or self.num_antennas < 1:
            raise ScenarioError("num_elements and num_antennas must be >= 1")
        positive = [
            ("noise_ios", self.noise_ios), ("noise_bob", self.noise_bob),
            ("noise_willie", self.noise_willie), ("budget_alice", self.budget_alice),
            ("budget_grace", self.budget_grace), ("budget_ios", self.budget_ios),
            ("per_element_budget", self.per_element_budget),
            ("covertness_eps", self.covertness_eps), ("amp_max", self.amp_max),
            ("ref_loss", self.ref_loss),
        ]
        for name, val in positive:
            if not val > 0:
                raise ScenarioError(f"{name} must be strictly positive, got {val}")
        if self.budget_jam < 0:
            raise ScenarioError("budget_jam must be >= 0")
        if not 0.0 <= self.si_level <= 1.0:
            raise ScenarioError("si_level must be in [0, 1]")
        for c in self.rho_decay:
            if not 0.0 < c < 1.0:
                raise ScenarioError("rho_decay factors must be in (0, 1)")
        if self.target_rate < 0:
            raise ScenarioError("target_rate must be >= 0")
        # Alice must sit on the refraction side of the surface plane and
        # Grace on the reflection side.  The surface plane is horizontal at
        # the surface's y coordinate (the default geometry splits the users
        # across it); Bob shares Grace's side so her signal reflects to him.
        y0 = self.pos_ios[1]
        alice_side = self.pos_alice[1] - y0
        grace_side = self.pos_grace[1] - y0
        bob_side = self.pos_bob[1] - y0
        if alice_side * grace_side >= 0:
            raise ScenarioError(
                "Alice and Grace must be on opposite sides of the surface plane")
        if grace_side * bob_side <= 0:
            raise ScenarioError("Bob must be on Grace's (reflection) side")

    @property
    def noise_vec(self) -> tuple[float, float, float]:
        return (self.noise_ios, self.noise_bob, self.noise_willie)

    def distance(self, a: tuple[float, float], b: tuple[float, float]) -> float:
        return math.hypot(a[0] - b[0], a[1] - b[1])

    def with_overrides(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization of all seven links."""

    H_ob: np.ndarray  # A-IOS -> Bob rx, M x K
    H_bo: np.ndarray  # Bob tx -> A-IOS, K x M
    h_ao: np.ndarray  # Alice -> A-IOS, K
    h_go: np.ndarray  # Grace -> A-IOS, K
    h_ow: np.ndarray  # A-IOS -> Willie, K (row)
    h_bw: np.ndarray  # Bob tx -> Willie, M (row)
    H_bb: np.ndarray  # self-interference at Bob, M x M

    def __post_init__(self):
        K = self.h_ao.shape[0]
        M = self.H_ob.shape[0]
        expected = {
            "H_ob": (M, K), "H_bo": (K, M), "h_ao": (K,), "h_go": (K,),
            "h_ow": (K,), "h_bw": (M,), "H_bb": (M, M),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError(f"{name} contains non-finite entries")


def path_loss(distance: float, ref_loss: float, exponent: float) -> float:
    """Distance-power-law gain: ref_loss * distance**(-exponent)."""
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    return ref_loss * distance ** (-exponent)


def _rician(rng: np.random.Generator, shape, gain: float, k_factor: float) -> np.ndarray:
    """Rician fading entries with E|h|^2 == gain."""
    los_phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    los = np.exp(1j * los_phase)
    nlos = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    h = (np.sqrt(k_factor / (1.0 + k_factor)) * los
         + np.sqrt(1.0 / (1.0 + k_factor)) * nlos)
    return np.sqrt(gain) * h


def _rayleigh(rng: np.random.Generator, shape, gain: float) -> np.ndarray:
    nlos = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return np.sqrt(gain) * nlos


def channel_rng(scenario: Scenario, trial: int) -> np.random.Generator:
    """Counter-based stream: independent per (seed, trial)."""
    return np.random.default_rng(np.random.SeedSequence((scenario.rng_seed, trial)))


def generate_channels(scenario: Scenario, trial: int = 0,
                      rng: np.random.Generator | None = None) -> ChannelSet:
    """Draw one realization of all links.

    Surface-adjacent links are Rician; the Bob-Willie link is Rayleigh and
    the self-interference channel has i.i.d. unit-variance entries.
    """
    if rng is None:
        rng = channel_rng(scenario, trial)
    s = scenario
    K, M = s.num_elements, s.num_antennas
    d_ao = s.distance(s.pos_alice, s.pos_ios)
    d_go = s.distance(s.pos_grace, s.pos_ios)
    d_ow = s.distance(s.pos_ios, s.pos_willie)
    d_ob = s.distance(s.pos_ios, s.pos_bob)
    d_bw = s.distance(s.pos_bob, s.pos_willie)

    g = lambda d: path_loss(d, s.ref_loss, s.pl_exp_surface)
    # draw in a fixed order so realizations are reproducible
    H_ob = _rician(rng, (M, K), g(d_ob), s.rician_k)
    H_bo = _rician(rng, (K, M), g(d_ob), s.rician_k)
    h_ao = _rician(rng, (K,), g(d_ao), s.rician_k)
    h_go = _rician(rng, (K,), g(d_go), s.rician_k)
    h_ow = _rician(rng, (K,), g(d_ow), s.rician_k)
    h_bw = _rayleigh(rng, (M,), path_loss(d_bw, s.ref_loss, s.pl_exp_direct))
    H_bb = _rayleigh(rng, (M, M), 1.0)
    return ChannelSet(H_ob=H_ob, H_bo=H_bo, h_ao=h_ao, h_go=h_go,
                      h_ow=h_ow, h_bw=h_bw, H_bb=H_bb)


# --- config file I/O -------------------------------------------------------
#
# Flat key = value format, '#' comments.  Power budgets and noise levels are
# given in dBm (keys ending in _dbm), the self-interference level in dB
# (si_level_db) and the amplification limit as an amplitude in dB
# (amp_max_db).  Positions are "x, y" pairs in meters.

_DBM_KEYS = {
    "noise_ios_dbm": "noise_ios",
    "noise_bob_dbm": "noise_bob",
    "noise_willie_dbm": "noise_willie",
    "budget_alice_dbm": "budget_alice",
    "budget_grace_dbm": "budget_grace",
    "budget_jam_dbm": "budget_jam",
    "budget_ios_dbm": "budget_ios",
    "per_element_budget_dbm": "per_element_budget",
}
_POS_KEYS = {"pos_alice", "pos_grace", "pos_willie", "pos_bob", "pos_ios"}
_TRIPLE_KEYS = {"rho_init", "rho_decay"}
_INT_KEYS = {"num_elements", "num_antennas", "rng_seed",
             "max_outer_iters", "max_penalty_iters"}


class ConfigError(ValueError):
    """Malformed scenario config file."""


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _POS_KEYS or key in _TRIPLE_KEYS:
        parts = [float(p) for p in raw.replace("(", "").replace(")", "").split(",")]
        return tuple(parts)
    if key in _INT_KEYS:
        return int(raw)
    return float(raw)


def load_scenario(path: str) -> Scenario:
    """Parse a flat key = value scenario file."""
    kwargs = {}
    valid = {f.name for f in fields(Scenario)}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        try:
            if key in _DBM_KEYS:
                kwargs[_DBM_KEYS[key]] = dbm_to_watt(float(raw))
            elif key == "si_level_db":
                kwargs["si_level"] = db_to_power(float(raw))
            elif key == "amp_max_db":
                kwargs["amp_max"] = db_to_amplitude(float(raw))
            elif key in valid:
                kwargs[key] = _parse_value(key, raw)
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    try:
        return Scenario(**kwargs)
    except ScenarioError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_scenario(scenario: Scenario) -> str:
    """Serialize the fully resolved scenario (linear units) for provenance."""
    out = []
    for f in fields(Scenario):
        out.append(f"{f.name} = {getattr(scenario, f.name)!r}")
    return "\n".join(out) + "\n"
