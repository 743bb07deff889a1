"""Hodge decomposition of FAST dynamic functional connectivity."""
__version__ = "0.1.0"

from .connectivity import (  # noqa: E402
    EdgeFlowSeries, EdgeSet, FilterMatrix, NodeFunction, fast_filter, masked_flow_series,
    participant_correlation, per_epoch_flow, percentile_mask, window_average,
)
from .hodge import (  # noqa: E402
    HodgeComponents, HodgeSolver, SolverOptions, component_summary, decompose_flow,
    decompose_series,
)
from .signal_model import (  # noqa: E402
    BandSpec, Epoch, ParticipantRecording, WindowSpec, bandpass_filter, partition_windows,
    validate_cohort,
)
from .simplicial import (  # noqa: E402
    CliqueComplex, boundary_b1, boundary_b2, build_clique_complex, hodge_laplacian,
)
from .stats import (  # noqa: E402
    FeatureTable, StatResult, benjamini_hochberg, cohens_d, group_compare,
    wilcoxon_rank_sum,
)
from .synth import PlantedEffect, SynthConfig, generate_cohort  # noqa: E402

__all__ = [
    "BandSpec", "CliqueComplex", "EdgeFlowSeries", "EdgeSet", "Epoch", "FeatureTable",
    "FilterMatrix", "HodgeComponents", "HodgeSolver", "NodeFunction", "ParticipantRecording",
    "PlantedEffect", "SolverOptions", "StatResult", "SynthConfig", "WindowSpec",
    "bandpass_filter", "benjamini_hochberg", "boundary_b1", "boundary_b2",
    "build_clique_complex", "cohens_d", "component_summary", "decompose_flow",
    "decompose_series", "fast_filter", "generate_cohort", "group_compare", "hodge_laplacian",
    "masked_flow_series", "participant_correlation", "partition_windows", "per_epoch_flow",
    "percentile_mask", "validate_cohort", "wilcoxon_rank_sum", "window_average",
]
