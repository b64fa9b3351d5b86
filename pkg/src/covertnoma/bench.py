"""Benchmark schemes and parameter sweeps.

Five schemes share one optimization pipeline: the proposed active-surface
full-duplex design, its half-duplex variant, a random-surface variant, and
passive-surface variants (full and half duplex) whose per-element energy
split is capped at unity and whose second user inherits the surface power
budget for a fair comparison.

Sweeps reuse channel realizations across schemes and grid points (common
random numbers) and are deterministic given the scenario seed.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ao import initialize, run_ao
from .physics import detection_pair, effective_gains, kl_divergence, mdep
from .scenario import ChannelSet, Scenario, generate_channels

SWEEP_PARAMETERS = ("budget_jam", "budget_alice", "amp_max",
                    "num_elements", "num_antennas", "ios_x")


@dataclass(frozen=True)
class Scheme:
    """One benchmark variant and its scenario/pipeline overrides."""

    name: str
    passive: bool = False
    jamming: bool = True
    random_surface: bool = False

    def apply(self, scenario: Scenario) -> Scenario:
        s = scenario
        if not self.jamming:
            s = replace(s, budget_jam=0.0)
        if self.passive:
            s = replace(s, budget_grace=s.budget_grace + s.budget_ios,
                        amp_max=1.0)
        return s


SCHEMES: dict[str, Scheme] = {
    "proposed_A_FD": Scheme("proposed_A_FD"),
    "HD": Scheme("HD", jamming=False),
    "random_theta_A": Scheme("random_theta_A", random_surface=True),
    "passive_IOS_FD": Scheme("passive_IOS_FD", passive=True),
    "passive_IOS_HD": Scheme("passive_IOS_HD", passive=True, jamming=False),
}


@dataclass(frozen=True)
class TrialRecord:
    scheme: str
    parameter: str
    value: float
    trial: int
    rate_alice: float
    rate_grace: float
    p_a: float
    p_j: float
    mdep: float
    kl: float
    feasible: bool


@dataclass
class SweepResult:
    """Per-scheme aggregate over one swept parameter grid."""

    scheme: str
    parameter: str
    grid: list
    means: list = field(default_factory=list)
    half_widths: list = field(default_factory=list)
    feasible_counts: list = field(default_factory=list)
    trial_counts: list = field(default_factory=list)
    records: list = field(default_factory=list)


def apply_parameter(scenario: Scenario, parameter: str, value) -> Scenario:
    """Override one swept quantity; power budgets track the convention that
    both uplink users share the same budget."""
    if parameter == "budget_jam":
        return replace(scenario, budget_jam=float(value))
    if parameter == "budget_alice":
        return replace(scenario, budget_alice=float(value),
                       budget_grace=float(value))
    if parameter == "amp_max":
        return replace(scenario, amp_max=float(value))
    if parameter == "num_elements":
        return replace(scenario, num_elements=int(value))
    if parameter == "num_antennas":
        return replace(scenario, num_antennas=int(value))
    if parameter == "ios_x":
        return replace(scenario, pos_ios=(float(value), scenario.pos_ios[1]))
    raise ValueError(f"unknown sweep parameter '{parameter}' "
                     f"(expected one of {SWEEP_PARAMETERS})")


def run_scheme(scheme: Scheme, scenario: Scenario,
               channels: ChannelSet, trial: int = 0):
    """Optimize one channel realization under one scheme; returns the final
    state and the optimization report."""
    s = scheme.apply(scenario)
    rng = np.random.default_rng(np.random.SeedSequence((s.rng_seed, trial, 1)))
    init = initialize(s, channels, rng,
                      mode="random" if scheme.random_surface else "aligned",
                      passive=scheme.passive)
    return run_ao(s, channels, init,
                  optimize_ios=not scheme.random_surface,
                  passive=scheme.passive)


def _trial_record(scheme_name: str, scenario: Scenario, parameter: str,
                  value: float, trial: int) -> TrialRecord:
    scheme = SCHEMES[scheme_name]
    point = apply_parameter(scenario, parameter, value) \
        if parameter else scenario
    channels = generate_channels(point, trial)
    state, report = run_scheme(scheme, point, channels, trial)
    s = scheme.apply(point)
    gains = effective_gains(channels, state.ios, state.fd)
    pair = detection_pair(gains, state.powers, s.noise_ios, s.noise_willie)
    return TrialRecord(
        scheme=scheme_name, parameter=parameter, value=float(value),
        trial=trial, rate_alice=state.rate_alice, rate_grace=state.rate_grace,
        p_a=state.powers.p_a, p_j=state.powers.p_j,
        mdep=mdep(pair), kl=kl_divergence(pair),
        feasible=state.report.feasible and report.termination != "infeasible_init",
    )


def _trial_task(args) -> TrialRecord:
    return _trial_record(*args)


def sweep(parameter: str, grid, scenario: Scenario, schemes,
          trials: int, workers: int = 1) -> dict[str, SweepResult]:
    """Run all (scheme, grid point, trial) combinations.

    Channel realizations are shared across schemes and grid points whenever
    the dimensions and geometry agree, so scheme comparisons are paired.
    Aggregation order is fixed, making results deterministic given the seed.
    """
    if parameter and parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter '{parameter}'")
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid must be non-empty")
    scheme_names = [s.name if isinstance(s, Scheme) else s for s in schemes]
    for name in scheme_names:
        if name not in SCHEMES:
            raise ValueError(f"unknown scheme '{name}'")

    tasks = [(name, scenario, parameter, value, trial)
             for name in scheme_names
             for value in grid
             for trial in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_trial_task, tasks, chunksize=1))
    else:
        records = [_trial_task(t) for t in tasks]

    results = {}
    idx = 0
    for name in scheme_names:
        res = SweepResult(scheme=name, parameter=parameter, grid=grid)
        for value in grid:
            point_records = records[idx:idx + trials]
            idx += trials
            res.records.extend(point_records)
            rates = [r.rate_alice for r in point_records if r.feasible]
            res.trial_counts.append(trials)
            res.feasible_counts.append(len(rates))
            if rates:
                mean = float(np.mean(rates))
                if len(rates) > 1:
                    half = 1.96 * float(np.std(rates, ddof=1)) / math.sqrt(len(rates))
                else:
                    half = math.inf
            else:
                mean, half = math.nan, math.nan
            res.means.append(mean)
            res.half_widths.append(half)
        results[name] = res
    return results


# --- CSV output ---------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _atomic_write_rows(path: str, header, rows) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    os.replace(tmp, path)


DETAIL_HEADER = ("scheme", "parameter", "value", "trial", "rate_alice",
                 "rate_grace", "p_a", "p_j", "mdep", "kl", "feasible")


def write_detail_csv(path: str, result: SweepResult) -> None:
    rows = [(r.scheme, r.parameter, r.value, r.trial, r.rate_alice,
             r.rate_grace, r.p_a, r.p_j, r.mdep, r.kl, r.feasible)
            for r in result.records]
    _atomic_write_rows(path, DETAIL_HEADER, rows)


SUMMARY_HEADER = ("scheme", "parameter", "value", "trials", "feasible",
                  "mean_rate", "half_width")


def write_summary_csv(path: str, results: dict[str, SweepResult]) -> None:
    rows = []
    for name in sorted(results):
        res = results[name]
        for i, value in enumerate(res.grid):
            rows.append((res.scheme, res.parameter, value,
                         res.trial_counts[i], res.feasible_counts[i],
                         res.means[i], res.half_widths[i]))
    _atomic_write_rows(path, SUMMARY_HEADER, rows)
