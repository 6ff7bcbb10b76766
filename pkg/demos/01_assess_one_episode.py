"""
Assessing a single teleoperation episode
========================================

Generates one clean and one faulted synthetic episode, calibrates
thresholds from a handful of clean references, runs the full assessment
pipeline on both, and prints what an operator would read afterwards.
"""

from dqaf import (
    FaultKind,
    default_fault,
    GenerationConfig,
    generate_episode,
    make_reference_profile,
    make_task_context,
    run_assessment,
)

# Calibrate a threshold profile from clean reference demonstrations.
# Seeds make every number in this script reproducible.
profile = make_reference_profile(seed=0, n_references=8)
ctx = make_task_context()

print("calibrated thresholds:")
for metric, theta in profile.thresholds.items():
    print(f"  {metric.value:12s} {theta:.4f}")

# A clean 50 s episode: smooth minimum-jerk motion, scripted semantic
# progress reaching 100%.
episode, semantic_mock, truth = generate_episode(seed=1)
assessment = run_assessment(episode, ctx, semantic_mock, profile)
print(f"\nclean episode {episode.episode_id}:")
print(f"  quality {assessment.quality:.2f}/10, label {assessment.classification.label}")

# The same generator with a stall fault: the arms stop moving for four
# consecutive segments mid-episode.
cfg = GenerationConfig()
fault = default_fault(FaultKind.STALL, cfg)
episode, semantic_mock, truth = generate_episode(seed=2, cfg=cfg, faults=[fault])
assessment = run_assessment(episode, ctx, semantic_mock, profile)

print(f"\nstalled episode {episode.episode_id} (ground truth: {truth.label}):")
print(f"  quality {assessment.quality:.2f}/10, label {assessment.classification.label}")
print(f"  reasons: {', '.join(assessment.classification.reasons)}")

# Each violation is aligned with the nearest semantic update, so the
# evidence reads as "metric X was out of range while doing subtask Y".
print("  evidence:")
for item in assessment.evidence[:5]:
    print(
        f"    [{item.window[0]:5.1f}-{item.window[1]:5.1f}s] {item.metric.value} "
        f"{item.status.value} ({item.observed:.3f} vs {item.threshold:.3f}) "
        f"during '{item.aligned_subtask}'"
    )

# And the operator-facing feedback: what failed, where, what to change.
print("  feedback:")
for fb in assessment.feedback:
    print(f"    [{fb.severity.value}] {fb.what}")
    print(f"      -> {fb.change}")
