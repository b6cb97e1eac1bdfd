import { describe, expect, it } from "vitest";

import { emptyFilters } from "../src/filters.js";
import { emptyModel, matchesFilters, withLiveEvent, withSnapshot } from "../src/table.js";
import type { EventRow } from "../src/types.js";

function row(seq: number, extra: Partial<EventRow> = {}): EventRow {
  return {
    seq,
    user_id: "u1",
    user_name: "Alice Novak",
    gate_id: 1,
    gate_name: "Main",
    timestamp: `2026-01-01T00:0${seq}:00+00:00`,
    outcome: "granted",
    reason: null,
    gate_photo: "aa".repeat(32),
    registration_photo: "bb".repeat(32),
    client_time: null,
    ...extra,
  };
}

describe("withSnapshot", () => {
  it("orders newest first and tracks the snapshot boundary", () => {
    const model = withSnapshot([row(1), row(3), row(2)]);
    expect(model.rows.map((r) => r.seq)).toEqual([3, 2, 1]);
    expect(model.snapshotMaxSeq).toBe(3);
  });

  it("handles the empty result", () => {
    expect(withSnapshot([]).rows).toEqual([]);
    expect(withSnapshot([]).snapshotMaxSeq).toBe(0);
  });
});

describe("withLiveEvent", () => {
  it("prepends a newer matching event", () => {
    const model = withSnapshot([row(1), row(2)]);
    const next = withLiveEvent(model, row(3), emptyFilters);
    expect(next.rows.map((r) => r.seq)).toEqual([3, 2, 1]);
  });

  it("ignores events at or below the snapshot boundary", () => {
    const model = withSnapshot([row(1), row(2)]);
    expect(withLiveEvent(model, row(2), emptyFilters)).toBe(model);
    expect(withLiveEvent(model, row(1), emptyFilters)).toBe(model);
  });

  it("never duplicates a row", () => {
    const model = emptyModel();
    const once = withLiveEvent(model, row(1), emptyFilters);
    const twice = withLiveEvent(once, row(1), emptyFilters);
    expect(twice.rows.length).toBe(1);
  });

  it("applies the active filters to streamed rows", () => {
    const model = withSnapshot([]);
    const denied = { ...emptyFilters, deniedOnly: true };
    expect(withLiveEvent(model, row(1), denied).rows).toEqual([]);
    const deniedRow = row(2, { outcome: "denied", reason: "no_policy" });
    expect(withLiveEvent(model, deniedRow, denied).rows.length).toBe(1);
  });

  it("re-applies the time window that the live feed cannot", () => {
    const windowed = {
      ...emptyFilters,
      from: "2026-01-01T00:02:00Z",
      to: "2026-01-01T00:04:00Z",
    };
    const model = withSnapshot([]);
    expect(withLiveEvent(model, row(1), windowed).rows).toEqual([]); // 00:01, before window
    expect(withLiveEvent(model, row(2), windowed).rows.length).toBe(1); // 00:02, inclusive start
    expect(withLiveEvent(model, row(4), windowed).rows).toEqual([]); // 00:04, exclusive end
  });
});

describe("matchesFilters", () => {
  it("treats the window as half-open across timestamp formats", () => {
    const event = row(2); // 00:02 with +00:00 offset
    expect(matchesFilters(event, { ...emptyFilters, from: "2026-01-01T00:02:00Z" })).toBe(true);
    expect(matchesFilters(event, { ...emptyFilters, to: "2026-01-01T00:02:00Z" })).toBe(false);
  });

  it("composes as a conjunction", () => {
    const event = row(5, { gate_id: 2, user_id: "u9", outcome: "denied", reason: "no_policy" });
    expect(matchesFilters(event, { ...emptyFilters, gate: 2, user: "u9", deniedOnly: true })).toBe(true);
    expect(matchesFilters(event, { ...emptyFilters, gate: 1, user: "u9" })).toBe(false);
    expect(matchesFilters(event, { ...emptyFilters, user: "u1" })).toBe(false);
  });
});
