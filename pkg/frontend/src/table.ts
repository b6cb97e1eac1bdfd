// Monitoring table model: the server's query result plus streamed events
// that are newer than the snapshot. The client never invents rows; every
// row came either from /api/events or from a feed frame.

import type { EventRow } from "./types.js";
import type { Filters } from "./filters.js";

export interface MonitoringModel {
  rows: EventRow[]; // newest first, unique by seq
  snapshotMaxSeq: number;
}

export function emptyModel(): MonitoringModel {
  return { rows: [], snapshotMaxSeq: 0 };
}

export function withSnapshot(rows: EventRow[]): MonitoringModel {
  const sorted = [...rows].sort((a, b) => b.seq - a.seq);
  const maxSeq = sorted.length ? sorted[0].seq : 0;
  return { rows: sorted, snapshotMaxSeq: maxSeq };
}

// A streamed row joins the table only when it is newer than the snapshot,
// not already present, and matches the active filters (the feed applies
// gate/user/denied server-side; the time window is re-checked here).
export function withLiveEvent(
  model: MonitoringModel,
  event: EventRow,
  filters: Filters,
): MonitoringModel {
  if (event.seq <= model.snapshotMaxSeq) return model;
  if (model.rows.some((row) => row.seq === event.seq)) return model;
  if (!matchesFilters(event, filters)) return model;
  const rows = [event, ...model.rows].sort((a, b) => b.seq - a.seq);
  return { rows, snapshotMaxSeq: model.snapshotMaxSeq };
}

// Mirrors the server's conjunction; the time window is half-open
// [from, to). Timestamps compare by epoch since the server emits +00:00
// offsets while browser inputs produce Z-suffixed strings.
export function matchesFilters(event: EventRow, filters: Filters): boolean {
  const ts = Date.parse(event.timestamp);
  if (filters.from && ts < Date.parse(filters.from)) return false;
  if (filters.to && ts >= Date.parse(filters.to)) return false;
  if (filters.gate !== undefined && event.gate_id !== filters.gate) return false;
  if (filters.user && event.user_id !== filters.user) return false;
  if (filters.deniedOnly && event.outcome !== "denied") return false;
  return true;
}
