import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  DEFAULT_POLL_INTERVAL_MS,
  SelectionToken,
  startPolling,
} from "../src/poll.js";

describe("startPolling", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("ticks immediately and then every 2000 ms by default", async () => {
    expect(DEFAULT_POLL_INTERVAL_MS).toBe(2000);
    let ticks = 0;
    const handle = startPolling(
      async () => ++ticks,
      () => undefined,
      () => undefined,
    );
    await vi.advanceTimersByTimeAsync(0);
    expect(ticks).toBe(1);
    await vi.advanceTimersByTimeAsync(2000);
    expect(ticks).toBe(2);
    await vi.advanceTimersByTimeAsync(4000);
    expect(ticks).toBe(4);
    handle.stop();
  });

  it("stops ticking and delivering after stop()", async () => {
    let ticks = 0;
    const results: number[] = [];
    const handle = startPolling(
      async () => ++ticks,
      (v) => results.push(v),
      () => undefined,
    );
    await vi.advanceTimersByTimeAsync(2000);
    handle.stop();
    await vi.advanceTimersByTimeAsync(10000);
    expect(ticks).toBe(2);
    expect(results).toEqual([1, 2]);
  });

  it("does not deliver a result that resolves after stop()", async () => {
    const results: string[] = [];
    let resolveTick!: (v: string) => void;
    const handle = startPolling(
      () => new Promise<string>((resolve) => (resolveTick = resolve)),
      (v) => results.push(v),
      () => undefined,
    );
    await vi.advanceTimersByTimeAsync(0);
    handle.stop();
    resolveTick("late");
    await vi.advanceTimersByTimeAsync(0);
    expect(results).toEqual([]);
  });

  it("reports errors and keeps polling", async () => {
    let ticks = 0;
    const errors: unknown[] = [];
    const results: number[] = [];
    const handle = startPolling(
      async () => {
        ticks += 1;
        if (ticks === 1) throw new Error("down");
        return ticks;
      },
      (v) => results.push(v),
      (e) => errors.push(e),
    );
    await vi.advanceTimersByTimeAsync(2000);
    expect(errors).toHaveLength(1);
    expect(results).toEqual([2]);
    handle.stop();
  });

  it("honors a custom interval", async () => {
    let ticks = 0;
    const handle = startPolling(
      async () => ++ticks,
      () => undefined,
      () => undefined,
      { intervalMs: 500 },
    );
    await vi.advanceTimersByTimeAsync(1500);
    expect(ticks).toBe(4);
    handle.stop();
  });
});

describe("SelectionToken", () => {
  it("treats only the most recent token as current", () => {
    const sel = new SelectionToken();
    const first = sel.next();
    expect(sel.isCurrent(first)).toBe(true);
    const second = sel.next();
    expect(sel.isCurrent(first)).toBe(false);
    expect(sel.isCurrent(second)).toBe(true);
  });
});
