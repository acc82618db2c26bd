"""Capacity-achieving discrete inputs and information-energy capacity
regions for the Rayleigh-fading wireless-power-transfer channel with a
saturating transmit amplifier and a Bessel-map energy harvester."""

from .channel import (ChannelSpec, ConstraintSet, EhModel, HpaModel,
                      cond_density, harvested_energy, hpa_distort,
                      mixture_density, normalize_spec)
from .errors import (AccuracyError, CertificationError, ConfigError,
                     ContractError, DomainError, EscalationError,
                     InfeasibleError, SearchError)
from .infometrics import (ExtendedDistribution, MassPointDistribution,
                          average_energy, average_power, mi_density,
                          mixture_mi, mutual_information, output_density,
                          rate_bits)
from .montecarlo import (SimConfig, empirical_energy, empirical_mi,
                         empirical_mi_onoff, sample_symbols)
from .numerics import QuadratureRule, bessel_i0, integrate_halfline
from .region import (CapacityPoint, RegionCurve, compare_hpa, energy_bounds,
                     sweep_ask, sweep_onoff, trace_region)
from .shannon import (StateAlphabet, build_extended_grid, embed_onoff,
                      escalate_support, solve_extended, solve_onoff)
from .solver import (SolveOptions, SolveResult, build_grid, prune_support,
                     solve_ask, solve_weights)
from .verify import (KktReport, find_transition, kkt_check,
                     kkt_check_extended, low_pp_binary)

__version__ = "0.1.0"
