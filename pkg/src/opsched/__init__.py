"""Stream allocation, launch ordering, and simulated execution of DNN
operator graphs on a modeled multi-SM GPU."""

__version__ = "0.1.0"

from .allocator import (
    DEFAULT_SYNC_OVERHEAD_US,
    PlanCost,
    StreamPlan,
    allocate_streams,
    evaluate_plan,
    load_plan,
    plan_to_dict,
    save_plan,
    single_stream_plan,
    validate_plan,
)
from .errors import (
    CoverageError,
    FormatError,
    GraphValidationError,
    InfeasibleBlockError,
    PlanViolationError,
    SchedulerError,
)
from .graph import (
    ComputationGraph,
    OpClass,
    OperatorNode,
    ResourceDemand,
    apply_profile,
    classify,
    graph_to_dict,
    load_graph,
    save_graph,
)
from .oracle import (
    OracleResult,
    PlanSearchResult,
    best_order,
    best_plan,
    linear_extensions,
)
from .orderer import (
    POLICIES,
    LaunchSchedule,
    ResourceScore,
    dominant_share,
    load_schedule,
    make_order,
    order_baseline,
    order_opara,
    resource_score,
    save_schedule,
)
from .simulator import (
    DEFAULT_GPU,
    GPU_PRESETS,
    BlockRecord,
    GpuConfig,
    OpRecord,
    SimResult,
    load_gpu_config,
    result_to_dict,
    sequential_makespan,
    sequential_makespan_ns,
    simulate,
    trace,
    trace_tsv,
    write_trace,
)

__all__ = [
    "__version__",
    "BlockRecord",
    "ComputationGraph",
    "CoverageError",
    "DEFAULT_GPU",
    "DEFAULT_SYNC_OVERHEAD_US",
    "FormatError",
    "GPU_PRESETS",
    "GpuConfig",
    "GraphValidationError",
    "InfeasibleBlockError",
    "LaunchSchedule",
    "OpClass",
    "OpRecord",
    "OperatorNode",
    "OracleResult",
    "POLICIES",
    "PlanCost",
    "PlanSearchResult",
    "PlanViolationError",
    "ResourceDemand",
    "ResourceScore",
    "SchedulerError",
    "SimResult",
    "StreamPlan",
    "allocate_streams",
    "apply_profile",
    "best_order",
    "best_plan",
    "classify",
    "dominant_share",
    "evaluate_plan",
    "graph_to_dict",
    "linear_extensions",
    "load_gpu_config",
    "load_graph",
    "load_plan",
    "load_schedule",
    "make_order",
    "order_baseline",
    "order_opara",
    "plan_to_dict",
    "resource_score",
    "result_to_dict",
    "save_graph",
    "save_plan",
    "save_schedule",
    "sequential_makespan",
    "sequential_makespan_ns",
    "simulate",
    "single_stream_plan",
    "trace",
    "trace_tsv",
    "validate_plan",
    "write_trace",
]
