/** Dashboard controller: wires the API client, pollers, and renderers to
 * the DOM. Kept thin — everything interesting lives in viewmodel/render,
 * which are covered by tests; this module is the browser glue.
 */

import { ApiClient } from "./api.js";
import {
  renderAssessmentView,
  renderPending,
  renderQueue,
  renderUnreachable,
} from "./render.js";
import { buildViewModel, highlightTargets } from "./viewmodel.js";
import { SelectionToken, startPolling, type PollHandle } from "./poll.js";
import type { Assessment, FeedbackItem } from "./types.js";

export interface AppElements {
  queue: HTMLElement;
  detail: HTMLElement;
  banner: HTMLElement;
}

export class DashboardApp {
  private readonly selection = new SelectionToken();
  private queuePoller: PollHandle | null = null;
  private statusPoller: PollHandle | null = null;
  private currentAssessment: Assessment | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly els: AppElements,
  ) {}

  start(): void {
    this.queuePoller = startPolling(
      () => this.api.getEpisodes(),
      (list) => {
        this.els.banner.innerHTML = "";
        this.els.queue.innerHTML = renderQueue(list.episodes);
      },
      () => {
        this.els.banner.innerHTML = renderUnreachable();
      },
    );
    this.els.queue.addEventListener("click", (ev) => {
      const row = (ev.target as HTMLElement).closest("[data-episode-id]");
      const id = row?.getAttribute("data-episode-id");
      if (id) void this.select(id);
    });
    this.els.detail.addEventListener("click", (ev) => {
      const item = (ev.target as HTMLElement).closest("[data-feedback-index]");
      const index = item?.getAttribute("data-feedback-index");
      if (index !== null && index !== undefined) {
        this.highlightFeedback(Number(index));
      }
    });
  }

  stop(): void {
    this.queuePoller?.stop();
    this.statusPoller?.stop();
  }

  async select(episodeId: string): Promise<void> {
    const token = this.selection.next();
    this.statusPoller?.stop();
    this.statusPoller = null;
    try {
      const status = await this.api.getStatus(episodeId);
      if (!this.selection.isCurrent(token)) return;
      if (status.status === "complete") {
        await this.showAssessment(episodeId, token);
      } else {
        this.els.detail.innerHTML = renderPending(status);
        this.pollUntilComplete(episodeId, token);
      }
    } catch (err) {
      if (this.selection.isCurrent(token)) {
        this.els.banner.innerHTML = renderUnreachable();
        throw err;
      }
    }
  }

  private pollUntilComplete(episodeId: string, token: number): void {
    this.statusPoller = startPolling(
      () => this.api.getStatus(episodeId),
      (status) => {
        if (!this.selection.isCurrent(token)) {
          this.statusPoller?.stop();
          return;
        }
        if (status.status === "complete") {
          this.statusPoller?.stop();
          void this.showAssessment(episodeId, token);
        } else {
          this.els.detail.innerHTML = renderPending(status);
        }
      },
      () => {
        this.els.banner.innerHTML = renderUnreachable();
      },
    );
  }

  private async showAssessment(episodeId: string, token: number): Promise<void> {
    const assessment = await this.api.getAssessment(episodeId);
    if (!this.selection.isCurrent(token)) return;
    this.currentAssessment = assessment;
    this.els.detail.innerHTML = renderAssessmentView(buildViewModel(assessment));
  }

  /** Toggle highlight on the windows/trace points a feedback item cites. */
  highlightFeedback(index: number): void {
    const assessment = this.currentAssessment;
    if (!assessment) return;
    const item: FeedbackItem | undefined = assessment.feedback[index];
    if (!item) return;
    const targets = highlightTargets(item);

    for (const el of this.els.detail.querySelectorAll(".highlight")) {
      el.classList.remove("highlight");
    }
    const picked = this.els.detail.querySelector(
      `[data-feedback-index="${index}"]`,
    );
    picked?.classList.add("highlight");
    for (const i of targets.evidenceIndices) {
      for (const el of this.els.detail.querySelectorAll(
        `[data-evidence-index="${i}"]`,
      )) {
        el.classList.add("highlight");
      }
    }
    for (const t of targets.traceTimes) {
      for (const el of this.els.detail.querySelectorAll(`[data-t="${t}"]`)) {
        el.classList.add("highlight");
      }
    }
  }
}

export function bootstrap(baseUrl: string): DashboardApp {
  const api = new ApiClient(baseUrl, (input, init) => fetch(input, init));
  const app = new DashboardApp(api, {
    queue: document.getElementById("queue")!,
    detail: document.getElementById("detail")!,
    banner: document.getElementById("banner")!,
  });
  app.start();
  return app;
}
