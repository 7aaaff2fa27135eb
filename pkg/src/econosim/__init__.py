"""Agent-based trade network model with collapse avalanches and heavy-tail analysis."""

from .config import SimConfig, TradeParams, load_config
from .criticality import critical_omega, critical_point, exponent_map, riemann_zeta
from .economy_graph import EconomyNetwork, init_network
from .tail_stats import TailFit, fit_degree_tail, fit_tail_exponent
from .trade_dynamics import Simulation, SimulationOutput, run

__version__ = "0.1.0"

__all__ = [
    "EconomyNetwork",
    "SimConfig",
    "Simulation",
    "SimulationOutput",
    "TailFit",
    "TradeParams",
    "critical_omega",
    "critical_point",
    "exponent_map",
    "fit_degree_tail",
    "fit_tail_exponent",
    "init_network",
    "load_config",
    "riemann_zeta",
    "run",
    "__version__",
]
