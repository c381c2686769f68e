"""Fair division of indivisible goods among groups, over exact rationals."""
from .core import (AgentId, DiscreteAllocation, FractionalAllocation, Instance, InvariantError,
                   fairness_report, is_balanced, is_ef_k, is_efx, is_prop_k, utility)
from .ef1_two_groups import round_two_couples, solve_two_couples
from .instance_io import load_instance, parse_instance, save_instance
from .iterative_rounding import EliminationPolicy, run_iterative_rounding, run_iterative_rounding_detailed
from .oracle import BudgetExceeded, exists_allocation, search_allocation
from .pareto import is_fpo
from .special_prop1 import solve_special

__version__ = "0.1.0"
