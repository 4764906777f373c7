"""Hide-and-seek games on graphs whose edges are randomly active each stage.

A hider sits on an edge of a rooted connected multigraph; a searcher walks
from the root, may wait, and wins by traversing the hider's edge.  Every
edge is independently active each stage with a known probability.  This
package computes certified brackets on the game value, builds the named
searcher and hider strategies for trees and Eulerian graphs, evaluates any
Markovian policy exactly, and simulates episodes.
"""

from .activation import ActivationParams, episode_rng, incident_pattern_distribution
from .analytic import (
    REGIME_THRESHOLD,
    ClosedForm,
    TreeAnalytics,
    bdfs_alpha,
    branch_alphas,
    closed_form_value,
    cycle_time_tree,
    deterministic_bounds,
    ebd,
    lambda_tree,
    phi,
    stochastic_bounds,
    theta_parallel,
    parallel_edge_time,
    unclamped_p_threshold,
    wait_first_active,
    zeta,
)
from .graphs import (
    CapacityError,
    Edge,
    GraphError,
    ParallelDescriptor,
    RootedGraph,
    TreeView,
    chinese_postman_tours,
    circle,
    classify,
    counterexample_tree,
    dump_instance,
    eulerian_cycles,
    line,
    load_instance,
    min_cover_walk_length,
    neighbors,
    parallel,
    random_binary_tree,
    random_connected_multigraph,
    random_tree,
    simple_binary_tree,
    tree_from_shape,
)
from .solver import (
    BestResponse,
    CoverageError,
    SolverError,
    UNREACHABLE,
    ValueCertificate,
    approximate_value,
    best_response_value,
    deterministic_value,
    hider_payoff,
    policy_hitting_times,
)
from .simulate import (
    ComparisonResult,
    EstimateReport,
    History,
    eulerian_counterexample_check,
    monte_carlo,
    simulate_episode,
    tree_counterexample_check,
    validate_history,
)
from .strategies import (
    DFSPolicy,
    MixturePolicy,
    ParallelUniformPolicy,
    RoutePolicy,
    SimpleTreeLowPPolicy,
    UCPSPolicy,
    UESPolicy,
    bdfs,
    build_policy,
    enumerate_es_plans,
    enumerate_pure_dfs,
    leaf_uniform,
    pure_dfs,
    udfs,
    uniform_density,
)

__version__ = "0.1.0"
