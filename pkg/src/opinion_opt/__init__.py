"""Budgeted opinion optimization on social networks."""

from .baselines import (baseline_columnsum_chanplus, baseline_gradient_chanplus,
                        baseline_gradient_init, local_search_unconstrained,
                        nearest_corner)
from .dynamics import (SolveError, equilibrium, estimate_lipschitz, gradient,
                       objective, objective_and_gradient, simulate_dynamics)
from .instance import (Graph, Instance, RowStochasticMatrix,
                       budget_from_reference, chain_graph, generate_instance,
                       is_feasible, load_edge_list, load_instance,
                       random_connected_graph, save_instance)
from .optimizer import MinimizeResult, RunTrace, SolverOptions, minimize
from .projection import project, prox_g1
from .sweep import SweepConfig, run_sweep, summarize, sweep_from_graph

__version__ = "0.1.0"
