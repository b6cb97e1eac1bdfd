// Gate access configuration: pick a gate on the left, edit who may pass
// on the right. Every policy row shows the user's photo, status and
// expiration; saving always requires an expiration date.

import { ApiClient, ApiError } from "../api.js";
import { policyStatus, validatePolicyForm } from "../validate.js";
import type { Gate, PolicyRow, User } from "../types.js";
import { escapeHtml } from "./monitoring.js";

export class PoliciesView {
  readonly element: HTMLElement;
  private gateSelect!: HTMLSelectElement;
  private userSelect!: HTMLSelectElement;
  private rowsBody!: HTMLElement;
  private errorBox!: HTMLElement;

  constructor(private readonly api: ApiClient) {
    this.element = document.createElement("section");
    this.element.className = "policies split";
    this.element.innerHTML = `
      <aside class="panel gate-list">
        <h2>Gate</h2>
        <select name="gate"></select>
        <p class="hint">Users that have (or had) access appear on the right,
        expired and disabled rows included.</p>
      </aside>
      <div class="panel grow">
        <table class="policy-table">
          <thead><tr>
            <th>Photo</th><th>User</th><th>Status</th><th>Expires</th><th></th>
          </tr></thead>
          <tbody></tbody>
        </table>
        <form class="add-policy">
          <h3>Add or replace access</h3>
          <label>User <select name="user"></select></label>
          <label class="inline"><input type="checkbox" name="enabled" checked> enabled</label>
          <label>Expires <input type="datetime-local" name="expires" required></label>
          <button type="submit">Save</button>
          <p class="error" hidden></p>
        </form>
      </div>`;
    this.gateSelect = this.element.querySelector("select[name=gate]")!;
    this.userSelect = this.element.querySelector("select[name=user]")!;
    this.rowsBody = this.element.querySelector("tbody")!;
    this.errorBox = this.element.querySelector(".error")!;
    this.gateSelect.addEventListener("change", () => void this.loadRows());
    this.element.querySelector("form")!.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.save();
    });
  }

  async activate(): Promise<void> {
    const [gates, users] = await Promise.all([this.api.listGates(), this.api.listUsers()]);
    this.fill(this.gateSelect, gates.map((g: Gate) => [String(g.gate_id), `${g.name} (${g.location})`]));
    this.fill(this.userSelect, users.map((u: User) => [u.user_id, `${u.first_name} ${u.last_name}`]));
    await this.loadRows();
  }

  deactivate(): void {}

  private fill(select: HTMLSelectElement, options: [string, string][]): void {
    const current = select.value;
    select.textContent = "";
    for (const [value, label] of options) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = label;
      select.appendChild(option);
    }
    if (current) select.value = current;
  }

  private async loadRows(): Promise<void> {
    this.rowsBody.textContent = "";
    if (!this.gateSelect.value) return;
    const body = await this.api.getPolicies(Number(this.gateSelect.value));
    for (const row of body.policies) {
      this.rowsBody.appendChild(this.renderRow(row));
    }
  }

  private renderRow(row: PolicyRow): HTMLElement {
    const tr = document.createElement("tr");
    const status = policyStatus(row.enabled, row.expires_at, new Date());
    const local = new Date(row.expires_at);
    tr.innerHTML = `
      <td class="photos"></td>
      <td>${escapeHtml(row.user.first_name)} ${escapeHtml(row.user.last_name)}</td>
      <td><span class="badge ${status}">${status}</span></td>
      <td><time title="${row.expires_at} (UTC)">${local.toLocaleString()}</time></td>
      <td>
        <span class="edit-controls">
          <input type="checkbox" ${row.enabled ? "checked" : ""} title="enabled">
          <input type="datetime-local" value="${toLocalInput(local)}">
          <button type="button">Update</button>
          <span class="error" role="alert"></span>
        </span>
      </td>`;
    const img = document.createElement("img");
    img.className = "thumb";
    img.alt = "enrollment";
    void this.api.photoUrl(row.user.registration_photo).then((url) => {
      img.src = url;
    });
    tr.querySelector(".photos")!.appendChild(img);
    const [enabledBox, expiresInput] = tr.querySelectorAll("input");
    tr.querySelector("button")!.addEventListener("click", () => {
      void this.update(
        row,
        (enabledBox as HTMLInputElement).checked,
        (expiresInput as HTMLInputElement).value,
        tr.querySelector(".edit-controls .error") as HTMLElement,
      );
    });
    return tr;
  }

  private async update(
    row: PolicyRow,
    enabled: boolean,
    expiresLocal: string,
    errorBox: HTMLElement,
  ): Promise<void> {
    const checked = validatePolicyForm(expiresLocal);
    if (!checked.ok) {
      errorBox.textContent = checked.error;
      return;
    }
    errorBox.textContent = "";
    try {
      await this.api.putPolicy(row.gate_id, row.user.user_id, enabled, checked.expiresAtIso);
      await this.loadRows();
    } catch (err) {
      errorBox.textContent = err instanceof ApiError ? err.message : String(err);
    }
  }

  private async save(): Promise<void> {
    const expires = this.element.querySelector<HTMLInputElement>("input[name=expires]")!;
    const enabled = this.element.querySelector<HTMLInputElement>("input[name=enabled]")!;
    const checked = validatePolicyForm(expires.value);
    this.errorBox.hidden = checked.ok;
    if (!checked.ok) {
      this.errorBox.textContent = checked.error;
      return;
    }
    try {
      await this.api.putPolicy(
        Number(this.gateSelect.value),
        this.userSelect.value,
        enabled.checked,
        checked.expiresAtIso,
      );
      await this.loadRows();
    } catch (err) {
      this.errorBox.hidden = false;
      this.errorBox.textContent = err instanceof ApiError ? err.message : String(err);
    }
  }
}

function toLocalInput(date: Date): string {
  const pad = (n: number) => String(n).padStart(2, "0");
  return (
    `${date.getFullYear()}-${pad(date.getMonth() + 1)}-${pad(date.getDate())}` +
    `T${pad(date.getHours())}:${pad(date.getMinutes())}`
  );
}
