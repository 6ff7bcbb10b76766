/** Pure projection of service responses into render-ready view models.
 *
 * Nothing here recomputes a metric: every number displayed comes straight
 * from the API payload, formatted only for display.
 */

import type {
  Assessment,
  EvidenceItem,
  FeedbackItem,
  SeverityName,
  TraceUpdate,
} from "./types.js";

/** Fixed severity palette, documented for test fixtures. */
export const SEVERITY_COLORS: Record<SeverityName, string> = {
  critical: "#c0392b",
  warning: "#e67e22",
  note: "#2980b9",
};

export const SEVERITY_RANK: Record<SeverityName, number> = {
  critical: 0,
  warning: 1,
  note: 2,
};

export interface ShadedWindow {
  t0: number;
  t1: number;
  status: "exceed" | "near";
  metric: string;
  evidenceIndex: number;
}

export interface MetricLane {
  metric: string;
  threshold: number;
  rawValue: number | null;
  subscore: number | null;
  windows: ShadedWindow[];
}

export interface AssessmentViewModel {
  episodeId: string;
  q: number;
  qDisplay: string;
  label: string;
  reasons: string[];
  finalProgress: number;
  duration: number;
  trace: TraceUpdate[];
  gaps: number[];
  lanes: MetricLane[];
  shadedWindows: ShadedWindow[];
  feedback: FeedbackItem[];
  evidence: EvidenceItem[];
}

/** Display formatting for the quality score: one decimal, no rounding games. */
export function formatQ(q: number): string {
  return q.toFixed(1);
}

function episodeDuration(a: Assessment): number {
  let end = 0;
  for (const u of a.trace) end = Math.max(end, u.t);
  for (const e of a.evidence) end = Math.max(end, e.window[1]);
  return end;
}

export function buildViewModel(a: Assessment): AssessmentViewModel {
  const shadedWindows: ShadedWindow[] = a.evidence.map((e, i) => ({
    t0: e.window[0],
    t1: e.window[1],
    status: e.status,
    metric: e.metric,
    evidenceIndex: i,
  }));

  const metrics = Object.keys(a.raw_values);
  for (const w of shadedWindows) {
    if (!metrics.includes(w.metric)) metrics.push(w.metric);
  }
  const lanes: MetricLane[] = metrics.map((metric) => ({
    metric,
    threshold: thresholdFor(a, metric),
    rawValue: a.raw_values[metric] ?? null,
    subscore: a.subscores[metric] ?? null,
    windows: shadedWindows.filter((w) => w.metric === metric),
  }));

  // Display order only; the service already orders most-severe first.
  const feedback = [...a.feedback].sort(
    (x, y) => SEVERITY_RANK[x.severity] - SEVERITY_RANK[y.severity],
  );

  return {
    episodeId: a.episode_id,
    q: a.q,
    qDisplay: formatQ(a.q),
    label: a.classification.label,
    reasons: a.classification.reasons,
    finalProgress: a.classification.final_progress,
    duration: episodeDuration(a),
    trace: a.trace,
    gaps: a.gaps,
    lanes,
    shadedWindows,
    feedback,
    evidence: a.evidence,
  };
}

function thresholdFor(a: Assessment, metric: string): number {
  const hit = a.evidence.find((e) => e.metric === metric);
  return hit ? hit.threshold : NaN;
}

export interface HighlightTargets {
  evidenceIndices: number[];
  traceTimes: number[];
}

/** Which chart windows / trace updates a feedback item points at. */
export function highlightTargets(
  feedback: FeedbackItem,
): HighlightTargets {
  const evidenceIndices: number[] = [];
  const traceTimes: number[] = [];
  for (const ref of feedback.evidence_refs) {
    const [kind, value] = splitRef(ref);
    if (value === "") continue;
    if (kind === "evidence") {
      const i = Number(value);
      if (Number.isInteger(i)) evidenceIndices.push(i);
    } else if (kind === "trace") {
      const t = Number(value);
      if (Number.isFinite(t)) traceTimes.push(t);
    }
  }
  return { evidenceIndices, traceTimes };
}

function splitRef(ref: string): [string, string] {
  const at = ref.indexOf(":");
  return at < 0 ? [ref, ""] : [ref.slice(0, at), ref.slice(at + 1)];
}
