// Live entrance monitoring: filters on the left, one row per check-in on
// the right, enrollment photo beside the gate photo for the human match.

import { ApiClient } from "../api.js";
import { FeedConnection } from "../feed.js";
import type { FeedStatus } from "../feed.js";
import { emptyFilters, eventsQuery, feedQuery, localInputToIso, validateTimeWindow } from "../filters.js";
import type { Filters } from "../filters.js";
import { emptyModel, withLiveEvent, withSnapshot } from "../table.js";
import type { MonitoringModel } from "../table.js";
import type { EventRow, Frame, Gate, User } from "../types.js";

export class MonitoringView {
  readonly element: HTMLElement;
  private model: MonitoringModel = emptyModel();
  private filters: Filters = { ...emptyFilters };
  private feed: FeedConnection | null = null;
  private tableBody!: HTMLElement;
  private banner!: HTMLElement;
  private errorBox!: HTMLElement;
  private gateSelect!: HTMLSelectElement;
  private userSelect!: HTMLSelectElement;

  constructor(private readonly api: ApiClient) {
    this.element = document.createElement("section");
    this.element.className = "monitoring split";
    this.element.innerHTML = `
      <aside class="panel filters-panel">
        <h2>Filters</h2>
        <label>From <input type="datetime-local" name="from"></label>
        <label>To <input type="datetime-local" name="to"></label>
        <label>Gate <select name="gate"><option value="">any gate</option></select></label>
        <label>User <select name="user"><option value="">any user</option></select></label>
        <label class="inline"><input type="checkbox" name="denied"> denied only</label>
        <button type="button" class="apply">Apply</button>
        <p class="error" hidden></p>
      </aside>
      <div class="panel grow">
        <div class="banner" hidden></div>
        <table class="events">
          <thead><tr>
            <th>#</th><th>Photos (enrollment / gate)</th><th>User</th>
            <th>Gate</th><th>Time</th><th>Status</th>
          </tr></thead>
          <tbody></tbody>
        </table>
      </div>`;
    this.tableBody = this.element.querySelector("tbody")!;
    this.banner = this.element.querySelector(".banner")!;
    this.errorBox = this.element.querySelector(".error")!;
    this.gateSelect = this.element.querySelector("select[name=gate]")!;
    this.userSelect = this.element.querySelector("select[name=user]")!;
    this.element.querySelector(".apply")!.addEventListener("click", () => {
      void this.applyFilters();
    });
  }

  async activate(): Promise<void> {
    await this.populateChoices();
    await this.refresh();
  }

  deactivate(): void {
    this.feed?.stop();
    this.feed = null;
  }

  private async populateChoices(): Promise<void> {
    const [gates, users] = await Promise.all([this.api.listGates(), this.api.listUsers()]);
    fillOptions(this.gateSelect, "any gate",
      gates.map((g: Gate) => [String(g.gate_id), g.name]));
    fillOptions(this.userSelect, "any user",
      users.map((u: User) => [u.user_id, `${u.first_name} ${u.last_name}`]));
  }

  private readFilters(): Filters | null {
    const fromInput = this.element.querySelector<HTMLInputElement>("input[name=from]")!;
    const toInput = this.element.querySelector<HTMLInputElement>("input[name=to]")!;
    const denied = this.element.querySelector<HTMLInputElement>("input[name=denied]")!;
    const filters: Filters = {
      from: localInputToIso(fromInput.value),
      to: localInputToIso(toInput.value),
      gate: this.gateSelect.value ? Number(this.gateSelect.value) : undefined,
      user: this.userSelect.value || undefined,
      deniedOnly: denied.checked,
    };
    const problem = validateTimeWindow(filters);
    this.errorBox.hidden = problem === null;
    if (problem !== null) {
      this.errorBox.textContent = problem;
      return null;
    }
    return filters;
  }

  private async applyFilters(): Promise<void> {
    const filters = this.readFilters();
    if (filters === null) return;
    this.filters = filters;
    await this.refresh();
  }

  // Changing any filter re-queries the snapshot and replaces the live
  // subscription; the table is always snapshot + newer streamed rows.
  private async refresh(): Promise<void> {
    this.feed?.stop();
    const page = await this.api.queryEvents(eventsQuery(this.filters));
    this.model = withSnapshot(page.events);
    this.render();
    this.feed = new FeedConnection(
      this.api.baseUrl,
      this.api.token,
      feedQuery(this.filters),
      {
        onFrame: (frame: Frame) => this.onFrame(frame),
        onStatus: (status: FeedStatus) => this.onStatus(status),
      },
    );
    this.feed.start();
  }

  private onFrame(frame: Frame): void {
    if (frame.type !== "event") return;
    const { type: _type, ...row } = frame;
    const next = withLiveEvent(this.model, row as EventRow, this.filters);
    if (next !== this.model) {
      this.model = next;
      this.render();
    }
  }

  private onStatus(status: FeedStatus): void {
    if (status === "live") {
      this.banner.hidden = true;
      return;
    }
    if (status === "reconnecting" || status === "connecting") {
      this.banner.hidden = false;
      this.banner.textContent = "live feed disconnected, retrying...";
    }
  }

  private render(): void {
    this.tableBody.textContent = "";
    for (const row of this.model.rows) {
      this.tableBody.appendChild(this.renderRow(row));
    }
  }

  private renderRow(row: EventRow): HTMLElement {
    const tr = document.createElement("tr");
    const local = new Date(row.timestamp);
    const badge = row.outcome === "granted"
      ? `<span class="badge granted">granted</span>`
      : `<span class="badge denied">denied<small>${row.reason ?? ""}</small></span>`;
    tr.innerHTML = `
      <td>${row.seq}</td>
      <td class="photos"></td>
      <td>${escapeHtml(row.user_name)}</td>
      <td>${escapeHtml(row.gate_name ?? `#${row.gate_id} (unknown)`)}</td>
      <td><time title="${row.timestamp} (UTC)">${local.toLocaleString()}</time></td>
      <td>${badge}</td>`;
    const photos = tr.querySelector(".photos")!;
    photos.appendChild(this.photo(row.registration_photo, "enrollment"));
    photos.appendChild(this.photo(row.gate_photo, "gate"));
    return tr;
  }

  private photo(hash: string | null, alt: string): HTMLElement {
    if (!hash) {
      const missing = document.createElement("span");
      missing.className = "no-photo";
      missing.textContent = "no photo";
      return missing;
    }
    const img = document.createElement("img");
    img.alt = alt;
    img.className = "thumb";
    void this.api.photoUrl(hash).then((url) => {
      img.src = url;
    });
    return img;
  }
}

function fillOptions(select: HTMLSelectElement, anyLabel: string, options: [string, string][]): void {
  const current = select.value;
  select.textContent = "";
  const any = document.createElement("option");
  any.value = "";
  any.textContent = anyLabel;
  select.appendChild(any);
  for (const [value, label] of options) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = label;
    select.appendChild(option);
  }
  select.value = current;
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
