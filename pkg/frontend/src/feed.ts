// Newline-delimited JSON feed reader with automatic reconnect.

import type { Frame } from "./types.js";

// Split a text buffer into complete frames plus the unfinished remainder.
export function parseFrames(buffer: string): { frames: Frame[]; rest: string } {
  const pieces = buffer.split("\n");
  const rest = pieces.pop() ?? "";
  const frames: Frame[] = [];
  for (const piece of pieces) {
    const line = piece.trim();
    if (!line) continue;
    frames.push(JSON.parse(line) as Frame);
  }
  return { frames, rest };
}

export type FeedStatus = "connecting" | "live" | "reconnecting" | "stopped";

export interface FeedHandlers {
  onFrame: (frame: Frame) => void;
  onStatus?: (status: FeedStatus) => void;
}

// One live connection to GET /api/feed. stop() ends it; any other
// termination (network drop, server restart, overflow) schedules a retry
// with exponential backoff so the dashboard heals on its own.
export class FeedConnection {
  private controller: AbortController | null = null;
  private stopped = false;
  private retryMs = 1000;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly query: string,
    private readonly handlers: FeedHandlers,
  ) {}

  start(): void {
    this.stopped = false;
    void this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.controller?.abort();
    this.setStatus("stopped");
  }

  private setStatus(status: FeedStatus): void {
    this.handlers.onStatus?.(status);
  }

  private async connect(): Promise<void> {
    this.controller = new AbortController();
    this.setStatus("connecting");
    try {
      const resp = await fetch(`${this.baseUrl}/api/feed${this.query}`, {
        headers: { Authorization: `Bearer ${this.token}` },
        signal: this.controller.signal,
      });
      if (!resp.ok || !resp.body) throw new Error(`feed returned ${resp.status}`);
      this.setStatus("live");
      this.retryMs = 1000;
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        const { frames, rest } = parseFrames(buffer);
        buffer = rest;
        for (const frame of frames) this.handlers.onFrame(frame);
      }
    } catch {
      // fall through to the retry path below
    }
    if (this.stopped) return;
    this.setStatus("reconnecting");
    this.timer = setTimeout(() => void this.connect(), this.retryMs);
    this.retryMs = Math.min(this.retryMs * 2, 10000);
  }
}
