"""
Validation cohort and latency budget
====================================

Runs the synthetic validation harness on a small cohort — clean episodes
plus one persistent fault per failure episode, cycling through all six
fault kinds — and prints the confusion counts, per-fault detection
rates, and the post-episode latency arithmetic.
"""

from dqaf import latency_budget, make_reference_profile, run_validation

# Thresholds come from clean synthetic references. The harness
# calibrates at the 99th percentile so that per-segment noise in a large
# clean cohort stays below the persistence rules.
profile = make_reference_profile(seed=0)

report = run_validation(n_success=18, n_failure=12, seed=7, profile=profile)
print(report.table())

# Latency arithmetic for a 50 s episode: 20 semantic calls at 2.0 s each
# plus a 3.0 s feedback call.
serial = latency_budget(20, 2.0, 3.0)
print(f"\nserial post-episode latency: {serial.total_s:.1f} s")

# Overlapping 60% of the semantic calls with recording leaves only the
# un-overlapped remainder plus the final call after the episode ends.
overlapped = latency_budget(20, 2.0, 3.0, overlap_fraction=0.6)
print(f"with 60% overlap: {overlapped.residual_s:.1f} s residual")
