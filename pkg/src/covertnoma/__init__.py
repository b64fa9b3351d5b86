"""Covert-rate maximization for an active-surface aided uplink NOMA system
with a full-duplex jamming receiver."""

from .ao import AoReport, SolutionState, initialize, run_ao
from .bench import SCHEMES, Scheme, SweepResult, run_scheme, sweep
from .physics import (DetectionPair, FdBeam, GainBundle, IosBeam, PowerAlloc,
                      detection_pair, effective_gains, kappa_from_epsilon,
                      kl_divergence, mdep, sinr_and_rates)
from .power import allocate_powers, xi_values
from .scenario import ChannelSet, Scenario, generate_channels, load_scenario

__version__ = "0.1.0"
