/** Queue/status polling with stale-response protection.
 *
 * Each poller owns a selection token: responses that arrive after the
 * selection has moved on (or the poller was stopped) are discarded, so a
 * slow request for the previous episode can never overwrite the current
 * view.
 */

export interface PollHandle {
  stop(): void;
}

export interface PollerOptions {
  intervalMs?: number;
  setIntervalImpl?: typeof setInterval;
  clearIntervalImpl?: typeof clearInterval;
}

export const DEFAULT_POLL_INTERVAL_MS = 2000;

/** Call `tick` immediately and then every interval; deliver each result to
 * `onResult` unless the poller was stopped in the meantime. Errors go to
 * `onError` (the poller keeps running so transient outages self-heal). */
export function startPolling<T>(
  tick: () => Promise<T>,
  onResult: (value: T) => void,
  onError: (err: unknown) => void,
  options: PollerOptions = {},
): PollHandle {
  const intervalMs = options.intervalMs ?? DEFAULT_POLL_INTERVAL_MS;
  const setI = options.setIntervalImpl ?? setInterval;
  const clearI = options.clearIntervalImpl ?? clearInterval;

  let stopped = false;
  const run = () => {
    tick().then(
      (value) => {
        if (!stopped) onResult(value);
      },
      (err) => {
        if (!stopped) onError(err);
      },
    );
  };
  run();
  const timer = setI(run, intervalMs);
  return {
    stop() {
      stopped = true;
      clearI(timer);
    },
  };
}

/** Monotonically increasing token; compare against the latest value before
 * applying an async result to shared state. */
export class SelectionToken {
  private current = 0;

  next(): number {
    this.current += 1;
    return this.current;
  }

  isCurrent(token: number): boolean {
    return token === this.current;
  }
}
