"""Attention-sink detection and gaslighting-attention reallocation.

The heavy lifting lives in the `_core` extension module; this package just
re-exports its surface.
"""

from ._core import (  # noqa: F401
    AttentionTensor,
    BenchSummary,
    EpisodeOutcome,
    EpisodeResult,
    ForwardResult,
    GasEraserError,
    GaslightSample,
    GenParams,
    HeadScores,
    HeadSelection,
    InterventionConfig,
    ReallocReport,
    RowRealloc,
    SinkCriterion,
    SinkPartition,
    SinkSpike,
    TokenContext,
    ToyModel,
    ToyModelParams,
    Trace,
    TraceMetadata,
    apply_to_layer_stack,
    detect_sinks,
    generate_benchmark,
    preset_config,
    read_trace,
    reallocate,
    run_episode,
    run_episodes,
    score_heads,
    select_visual_heads,
    summarize,
    summarize_accuracies,
    to_outcome,
    token_norm_score,
    write_trace,
)

__all__ = [
    "AttentionTensor",
    "BenchSummary",
    "EpisodeOutcome",
    "EpisodeResult",
    "ForwardResult",
    "GasEraserError",
    "GaslightSample",
    "GenParams",
    "HeadScores",
    "HeadSelection",
    "InterventionConfig",
    "ReallocReport",
    "RowRealloc",
    "SinkCriterion",
    "SinkPartition",
    "SinkSpike",
    "TokenContext",
    "ToyModel",
    "ToyModelParams",
    "Trace",
    "TraceMetadata",
    "apply_to_layer_stack",
    "detect_sinks",
    "generate_benchmark",
    "preset_config",
    "read_trace",
    "reallocate",
    "run_episode",
    "run_episodes",
    "score_heads",
    "select_visual_heads",
    "summarize",
    "summarize_accuracies",
    "to_outcome",
    "token_norm_score",
    "write_trace",
]
