/** Response shapes of the assessment service consumed by the dashboard. */

export type Label = "success" | "failure";
export type ViolationStatus = "exceed" | "near";
export type SeverityName = "critical" | "warning" | "note";

export interface TraceUpdate {
  t: number;
  progress: number;
  subtask_index: number;
  rationale: string;
  anomaly: boolean;
}

export interface EvidenceItem {
  metric: string;
  observed: number;
  threshold: number;
  status: ViolationStatus;
  window: [number, number];
  segment_index: number;
  aligned_update_time: number | null;
  aligned_subtask_index: number | null;
  aligned_subtask: string | null;
  rationale_excerpt: string;
}

export interface FeedbackItem {
  what: string;
  where: { window: [number, number]; subtask: string };
  change: string;
  severity: SeverityName;
  evidence_refs: string[];
}

export interface Classification {
  label: Label;
  reasons: string[];
  persistent_violation_count: number;
  final_progress: number;
  policy_snapshot: Record<string, number>;
}

export interface Assessment {
  episode_id: string;
  q: number;
  subscores: Record<string, number>;
  raw_values: Record<string, number>;
  trace: TraceUpdate[];
  gaps: number[];
  evidence: EvidenceItem[];
  classification: Classification;
  feedback: FeedbackItem[];
}

export interface EpisodeRow {
  episode_id: string;
  status: string;
  q?: number;
  label?: Label;
  reasons?: string[];
  error?: string;
}

export interface EpisodeList {
  episodes: EpisodeRow[];
}

export interface StatusResponse {
  status: string;
  error?: string;
}
