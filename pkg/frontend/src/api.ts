// Typed client for the REST API. Every mutation the dashboard performs
// goes through these methods; there is no other write path.

import type { EventsPage, Gate, PolicyRow, User } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(detail || code);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  try {
    const body = (await resp.json()) as { error?: string; detail?: string };
    return new ApiError(resp.status, body.error ?? "error", body.detail ?? "");
  } catch {
    return new ApiError(resp.status, "error", resp.statusText);
  }
}

export class ApiClient {
  private readonly photoUrls = new Map<string, string>();

  constructor(
    readonly baseUrl: string,
    readonly token: string,
  ) {}

  private get headers(): Record<string, string> {
    return { Authorization: `Bearer ${this.token}` };
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, { headers: this.headers });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async health(): Promise<{ status: string }> {
    return this.getJson("/api/health");
  }

  async listGates(): Promise<Gate[]> {
    const body = await this.getJson<{ gates: Gate[] }>("/api/gates");
    return body.gates;
  }

  async listUsers(): Promise<User[]> {
    const body = await this.getJson<{ users: User[] }>("/api/users");
    return body.users;
  }

  async queryEvents(query: string): Promise<EventsPage> {
    return this.getJson(`/api/events${query}`);
  }

  async getPolicies(gateId: number): Promise<{ gate: Gate; policies: PolicyRow[] }> {
    return this.getJson(`/api/gates/${gateId}/policies`);
  }

  async putPolicy(
    gateId: number,
    userId: string,
    enabled: boolean,
    expiresAtIso: string,
  ): Promise<PolicyRow> {
    const resp = await fetch(`${this.baseUrl}/api/gates/${gateId}/policies/${userId}`, {
      method: "PUT",
      headers: { ...this.headers, "Content-Type": "application/json" },
      body: JSON.stringify({ enabled, expires_at: expiresAtIso }),
    });
    if (!resp.ok) throw await parseError(resp);
    const body = (await resp.json()) as { policy: PolicyRow };
    return body.policy;
  }

  async registerUser(
    firstName: string,
    lastName: string,
    photo: Blob,
    photoName: string,
  ): Promise<{ user: User; device_token: string }> {
    const form = new FormData();
    form.set("first_name", firstName);
    form.set("last_name", lastName);
    form.set("photo", photo, photoName);
    const resp = await fetch(`${this.baseUrl}/api/users`, {
      method: "POST",
      headers: this.headers,
      body: form,
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as { user: User; device_token: string };
  }

  // Images need the auth header, which <img src> cannot carry; fetch the
  // bytes once and hand out a cached object URL instead.
  async photoUrl(contentHash: string): Promise<string> {
    const cached = this.photoUrls.get(contentHash);
    if (cached) return cached;
    const resp = await fetch(`${this.baseUrl}/api/photos/${contentHash}`, {
      headers: this.headers,
    });
    if (!resp.ok) throw await parseError(resp);
    const url = URL.createObjectURL(await resp.blob());
    this.photoUrls.set(contentHash, url);
    return url;
  }
}
