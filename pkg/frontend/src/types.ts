// Shared shapes mirroring the server's JSON.

export interface EventRow {
  seq: number;
  user_id: string;
  user_name: string;
  gate_id: number;
  gate_name: string | null;
  timestamp: string;
  outcome: "granted" | "denied";
  reason: string | null;
  gate_photo: string | null;
  registration_photo: string | null;
  client_time: string | null;
}

export interface Gate {
  gate_id: number;
  name: string;
  location: string;
}

export interface User {
  user_id: string;
  first_name: string;
  last_name: string;
  registration_photo: string;
}

export interface PolicyRow {
  user: User;
  gate_id: number;
  enabled: boolean;
  expires_at: string;
}

export interface EventsPage {
  events: EventRow[];
  page: number;
  page_size: number;
  total: number;
}

export type Frame =
  | { type: "heartbeat" }
  | ({ type: "event" } & EventRow)
  | { type: "error"; reason: string };
