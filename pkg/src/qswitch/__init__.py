"""Rate and fidelity models for quantum entanglement switches.

Compares an all-photonic entanglement generation switch (EGS) against a
memory-equipped switch running block entanglement generation, and provides
the sweeps and application utilities used to compare them.
"""

from qswitch.bmatch import CapacityVector, brute_force_max, emax_closed_form, greedy_max_allocation
from qswitch.egs import ArchitectureMetrics, evaluate_egs
from qswitch.errors import (
    ConfigError,
    DegenerateSeriesError,
    NoFeasibleBlockSizeError,
    ParameterDomainError,
    ProblemSizeError,
    QSwitchError,
    UndefinedConditionalError,
    UsageError,
)
from qswitch.hwmodel import HardwareProfile
from qswitch.memswitch import Estimator, evaluate_mem, optimize_block_size
from qswitch.utility import UtilityKind, delta_negativity_utility, utility

__version__ = "0.1.0"

__all__ = [
    "ArchitectureMetrics",
    "CapacityVector",
    "ConfigError",
    "DegenerateSeriesError",
    "Estimator",
    "HardwareProfile",
    "NoFeasibleBlockSizeError",
    "ParameterDomainError",
    "ProblemSizeError",
    "QSwitchError",
    "UndefinedConditionalError",
    "UsageError",
    "UtilityKind",
    "brute_force_max",
    "delta_negativity_utility",
    "emax_closed_form",
    "evaluate_egs",
    "evaluate_mem",
    "greedy_max_allocation",
    "optimize_block_size",
    "utility",
]
