"""Label propagation on weighted graphs by total-variation minimization.

A library and CLI for transductive semi-supervised learning: labels known
on a few nodes are propagated to the rest by minimizing the weighted total
variation of the label signal, solved with a preconditioned primal-dual
method.  Includes an ordinary (harmonic) label-propagation baseline,
recovery-condition checks, and reproducible experiment generators.
"""

__version__ = "0.1.0"

from .baselines import LpConfig, lp_solve
from .generators import (
    ChainSpec,
    ImageGridSpec,
    PlantedPartitionSpec,
    chain_instance,
    image_grid_graph,
    make_image_grid_spec,
    planted_partition_instance,
    read_pgm,
    read_ppm,
    segment,
    synthetic_two_tone,
    write_mask_pgm,
    write_pgm,
    write_ppm,
)
from .graph import (
    DataGraph,
    IncidenceOperator,
    OrientedGraph,
    apply_incidence,
    apply_incidence_transpose,
    build_graph,
    connected_components,
    degree,
    flip_orientation,
    incidence,
    induced_subgraph,
    is_connected,
    load_edge_list,
    max_degree,
    neighborhood,
    orient,
    oriented_neighborhoods,
    save_edge_list,
)
from .signals import (
    Partition,
    SamplingSet,
    boundary,
    clustered_signal,
    load_labels_csv,
    load_partition_csv,
    load_samples_csv,
    make_partition,
    make_sampling_set,
    nmse,
    save_labels_csv,
    save_partition_csv,
    save_samples_csv,
    tv,
    tv_clustered_bound,
)
from .solver import (
    FixedIterations,
    HistoryRecord,
    ObjectiveDecrease,
    Preconditioners,
    SlpState,
    SolveReport,
    SolverConfig,
    check_convergence_condition,
    check_rate_envelope,
    preconditioners,
    read_history_csv,
    slp_solve,
    slp_solve_message_passing,
    suboptimality_trace,
    write_history_csv,
)
from .theory import (
    NnspEstimate,
    ResolveReport,
    kernel_contains,
    min_clustered_tv,
    min_clustered_tv_exact,
    nnsp_ratio_estimate,
    nnsp_ratio_exact,
    resolves,
    verify_approx_bound,
    verify_exact_recovery,
)
