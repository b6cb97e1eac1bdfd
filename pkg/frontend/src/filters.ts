// Filter state and its mapping to query strings. Every field is optional;
// empty fields match everything, mirroring the server's conjunction.

export interface Filters {
  from?: string; // ISO timestamps, UTC
  to?: string;
  gate?: number;
  user?: string;
  deniedOnly: boolean;
}

export const emptyFilters: Filters = { deniedOnly: false };

export function eventsQuery(filters: Filters, page = 1, pageSize = 100): string {
  const params = new URLSearchParams();
  if (filters.from) params.set("from", filters.from);
  if (filters.to) params.set("to", filters.to);
  if (filters.gate !== undefined) params.set("gate", String(filters.gate));
  if (filters.user) params.set("user", filters.user);
  if (filters.deniedOnly) params.set("denied_only", "true");
  params.set("page", String(page));
  params.set("page_size", String(pageSize));
  return `?${params.toString()}`;
}

// Live feeds take only the non-time filters; the time window is applied
// client-side to streamed rows.
export function feedQuery(filters: Filters): string {
  const params = new URLSearchParams();
  if (filters.gate !== undefined) params.set("gate", String(filters.gate));
  if (filters.user) params.set("user", filters.user);
  if (filters.deniedOnly) params.set("denied_only", "true");
  const text = params.toString();
  return text ? `?${text}` : "";
}

// datetime-local inputs carry no zone; treat them as local time and send UTC.
export function localInputToIso(value: string): string | undefined {
  if (!value) return undefined;
  const parsed = new Date(value);
  if (Number.isNaN(parsed.getTime())) return undefined;
  return parsed.toISOString();
}

export function validateTimeWindow(filters: Filters): string | null {
  if (filters.from && filters.to && filters.from > filters.to) {
    return "the start of the time window is after its end";
  }
  return null;
}
