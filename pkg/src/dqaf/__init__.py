"""Episode-level data quality assessment and feedback for teleoperated demonstrations."""

from .episode import (
    Episode,
    FramePointer,
    TaskContext,
    TelemetrySample,
    load_episode,
    load_task_context,
    write_episode,
    write_task_context,
)
from .evidence import (
    ClassificationPolicy,
    EpisodeClassification,
    EvidenceItem,
    ViolationStatus,
    align_segment,
    build_evidence,
    classify_episode,
)
from .feedback import (
    FeedbackInput,
    FeedbackItem,
    Severity,
    assemble_input,
    synthesize,
    synthesize_fallback,
)
from .metrics import (
    MetricConfig,
    MetricId,
    MetricResult,
    action_saturation,
    aggregate_quality,
    evaluate_episode,
    evaluate_window,
    gripper_chatter,
    ldlj,
    static_fraction,
    static_threshold,
    subscore,
)
from .pipeline import Assessment, run_assessment
from .segments import (
    Segment,
    SegmentReport,
    ThresholdProfile,
    calibrate_thresholds,
    partition_episode,
    segment_violations,
)
from .semantic import (
    AnomalyRuleConfig,
    ScriptedMockProvider,
    SemanticContext,
    SemanticOutput,
    SemanticTrace,
    SemanticUpdate,
    build_context,
    build_trace,
    build_update_schedule,
    detect_anomalies,
    global_progress,
    query_provider,
)
from .synth import (
    FaultKind,
    FaultSpec,
    GenerationConfig,
    LatencyBudget,
    ValidationReport,
    default_fault,
    generate_episode,
    latency_budget,
    make_reference_profile,
    make_task_context,
    run_validation,
)

__version__ = "0.1.0"
