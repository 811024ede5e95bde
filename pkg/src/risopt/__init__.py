"""Received-power optimization for RIS-aided SISO links with mutually coupled dipoles."""

from .channel import ChannelEval, RisLoad, approx_transfer_function, phi, transfer_function, z_se
from .em_model import (
    Dipole, ImpedanceSet, Scenario, assemble_impedances, build_grid_scenario, load_impedances,
    mutual_impedance, save_impedances, self_impedance,
)
from .gradient import GradientEval, e_diagonal, gradient
from .metrics import MultCounter, complexity_benchmark, complexity_proposed, counted_run
from .optimizer import (
    OptimizerConfig, default_initializer, line_search_step, optimize, project, quadratic_model,
    unaware_counterpart,
)

__all__ = [
    "ChannelEval", "RisLoad", "approx_transfer_function", "phi", "transfer_function", "z_se",
    "Dipole", "ImpedanceSet", "Scenario", "assemble_impedances", "build_grid_scenario",
    "load_impedances", "mutual_impedance", "save_impedances", "self_impedance",
    "GradientEval", "e_diagonal", "gradient",
    "MultCounter", "complexity_benchmark", "complexity_proposed", "counted_run",
    "OptimizerConfig", "default_initializer", "line_search_step", "optimize", "project",
    "quadratic_model", "unaware_counterpart",
]
