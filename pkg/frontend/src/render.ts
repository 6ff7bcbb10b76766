/** HTML/SVG string renderers for the four assessment panels and the queue.
 *
 * Renderers are pure string functions so tests can assert on output
 * without a browser; the app shell injects them and wires events.
 */

import type { EpisodeRow, FeedbackItem, StatusResponse } from "./types.js";
import type {
  AssessmentViewModel,
  MetricLane,
  ShadedWindow,
} from "./viewmodel.js";
import { SEVERITY_COLORS } from "./viewmodel.js";

const W = 600;
const H = 120;
const PAD = 30;

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function xScale(t: number, duration: number): number {
  return PAD + (t / Math.max(duration, 1e-9)) * (W - 2 * PAD);
}

function yScale(v: number, lo: number, hi: number): number {
  const span = Math.max(hi - lo, 1e-9);
  return H - PAD - ((v - lo) / span) * (H - 2 * PAD);
}

/** Panel 1: semantic trace — subtask index over time with anomaly markers. */
export function renderTracePanel(vm: AssessmentViewModel): string {
  const maxSubtask = Math.max(1, ...vm.trace.map((u) => u.subtask_index));
  const points = vm.trace
    .map((u) => {
      const x = xScale(u.t, vm.duration);
      const y = yScale(u.subtask_index, 0, maxSubtask + 1);
      const cls = u.anomaly ? "trace-point anomaly" : "trace-point";
      return (
        `<circle class="${cls}" data-t="${u.t}" cx="${x.toFixed(1)}" ` +
        `cy="${y.toFixed(1)}" r="${u.anomaly ? 5 : 3}">` +
        `<title>${esc(`t=${u.t}s subtask ${u.subtask_index}: ${u.rationale}`)}</title></circle>`
      );
    })
    .join("");
  const gapMarks = vm.gaps
    .map((t) => {
      const x = xScale(t, vm.duration).toFixed(1);
      return `<line class="trace-gap" x1="${x}" x2="${x}" y1="${PAD}" y2="${H - PAD}"/>`;
    })
    .join("");
  return (
    `<section class="panel" data-panel="trace"><h2>Semantic trace</h2>` +
    `<svg viewBox="0 0 ${W} ${H}">${gapMarks}${points}</svg></section>`
  );
}

/** Panel 2: global progress over time. */
export function renderProgressPanel(vm: AssessmentViewModel): string {
  const pts = vm.trace
    .map((u) => `${xScale(u.t, vm.duration).toFixed(1)},${yScale(u.progress, 0, 100).toFixed(1)}`)
    .join(" ");
  return (
    `<section class="panel" data-panel="progress"><h2>Progress</h2>` +
    `<svg viewBox="0 0 ${W} ${H}">` +
    `<polyline class="progress-line" fill="none" points="${pts}"/>` +
    `<text class="final-progress" x="${W - PAD}" y="${PAD}">` +
    `${vm.finalProgress.toFixed(0)}%</text>` +
    `</svg></section>`
  );
}

function renderWindowRect(w: ShadedWindow, duration: number): string {
  const x0 = xScale(w.t0, duration);
  const x1 = xScale(w.t1, duration);
  return (
    `<rect class="win win-${w.status}" data-evidence-index="${w.evidenceIndex}" ` +
    `x="${x0.toFixed(1)}" width="${(x1 - x0).toFixed(1)}" y="${PAD}" height="${H - 2 * PAD}">` +
    `<title>${esc(`${w.metric} ${w.status} [${w.t0}-${w.t1}s]`)}</title></rect>`
  );
}

function renderLane(lane: MetricLane, duration: number): string {
  const rects = lane.windows.map((w) => renderWindowRect(w, duration)).join("");
  const value =
    lane.rawValue === null ? "" : ` <span class="raw">${lane.rawValue.toPrecision(3)}</span>`;
  const thresholdLine = Number.isFinite(lane.threshold)
    ? `<line class="threshold" x1="${PAD}" x2="${W - PAD}" y1="${PAD}" y2="${PAD}">` +
      `<title>threshold ${lane.threshold}</title></line>`
    : "";
  return (
    `<div class="lane" data-metric="${esc(lane.metric)}">` +
    `<h3>${esc(lane.metric)}${value}</h3>` +
    `<svg viewBox="0 0 ${W} ${H}">${thresholdLine}${rects}</svg></div>`
  );
}

/** Panel 3: per-metric telemetry lanes with threshold lines and shaded
 * violation windows (exceed strong, near weak — via CSS classes). */
export function renderTelemetryPanel(vm: AssessmentViewModel): string {
  const lanes = vm.lanes.map((l) => renderLane(l, vm.duration)).join("");
  return (
    `<section class="panel" data-panel="telemetry"><h2>Telemetry</h2>${lanes}</section>`
  );
}

function renderFeedbackItem(item: FeedbackItem, index: number): string {
  const color = SEVERITY_COLORS[item.severity];
  const [t0, t1] = item.where.window;
  return (
    `<li class="feedback-item severity-${item.severity}" data-feedback-index="${index}" ` +
    `style="border-left-color:${color}">` +
    `<span class="severity" style="color:${color}">${item.severity}</span> ` +
    `<strong>${esc(item.what)}</strong>` +
    `<div class="where">${esc(item.where.subtask)} · ${t0.toFixed(1)}–${t1.toFixed(1)} s</div>` +
    `<div class="change">${esc(item.change)}</div></li>`
  );
}

/** Panel 4: feedback list, most severe first, click-to-highlight. */
export function renderFeedbackPanel(vm: AssessmentViewModel): string {
  const items = vm.feedback.map(renderFeedbackItem).join("");
  const body = items
    ? `<ol class="feedback-list">${items}</ol>`
    : `<p class="empty">No corrective feedback — clean episode.</p>`;
  return `<section class="panel" data-panel="feedback"><h2>Feedback</h2>${body}</section>`;
}

export function renderSummary(vm: AssessmentViewModel): string {
  const badges = vm.reasons
    .map((r) => `<span class="badge reason">${esc(r)}</span>`)
    .join("");
  return (
    `<header class="summary"><h1>${esc(vm.episodeId)}</h1>` +
    `<span class="q">q=${vm.qDisplay}</span>` +
    `<span class="label label-${vm.label}">${vm.label}</span>${badges}</header>`
  );
}

/** The full four-panel assessment view. */
export function renderAssessmentView(vm: AssessmentViewModel): string {
  return (
    renderSummary(vm) +
    renderTracePanel(vm) +
    renderProgressPanel(vm) +
    renderTelemetryPanel(vm) +
    renderFeedbackPanel(vm)
  );
}

/** Pending/error placeholder shown while polling the status endpoint. */
export function renderPending(status: StatusResponse): string {
  if (status.status === "error") {
    return `<div class="pending error">Analysis failed: ${esc(status.error ?? "unknown error")}</div>`;
  }
  return `<div class="pending">Analysis in progress (${esc(status.status)})…</div>`;
}

function renderQueueRow(row: EpisodeRow): string {
  const q = row.q !== undefined ? `q=${row.q.toFixed(1)}` : "";
  const label = row.label ? `<span class="label label-${row.label}">${row.label}</span>` : "";
  const badges = (row.reasons ?? [])
    .map((r) => `<span class="badge reason">${esc(r)}</span>`)
    .join("");
  return (
    `<li class="episode-row status-${esc(row.status)}" data-episode-id="${esc(row.episode_id)}">` +
    `<span class="id">${esc(row.episode_id)}</span> ` +
    `<span class="status">${esc(row.status)}</span> ${q} ${label}${badges}</li>`
  );
}

/** Episode queue: newest first, empty-state message, reason badges. */
export function renderQueue(rows: EpisodeRow[]): string {
  if (rows.length === 0) {
    return `<p class="empty">No episodes yet — record a demonstration or ingest one.</p>`;
  }
  return `<ul class="episode-queue">${rows.map(renderQueueRow).join("")}</ul>`;
}

export function renderUnreachable(): string {
  return `<div class="banner error">Assessment service unreachable — retrying…</div>`;
}
