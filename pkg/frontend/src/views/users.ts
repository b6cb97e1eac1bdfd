// User registration: first and last names plus a photograph, all
// mandatory. The issued device token is shown exactly once.

import { ApiClient, ApiError } from "../api.js";
import { validateRegistration } from "../validate.js";
import type { User } from "../types.js";
import { escapeHtml } from "./monitoring.js";

export class UsersView {
  readonly element: HTMLElement;
  private errorBox!: HTMLElement;
  private tokenPanel!: HTMLElement;
  private listBody!: HTMLElement;

  constructor(private readonly api: ApiClient) {
    this.element = document.createElement("section");
    this.element.className = "users split";
    this.element.innerHTML = `
      <aside class="panel">
        <h2>Register user</h2>
        <form class="register">
          <label>First name <input name="first" type="text"></label>
          <label>Last name <input name="last" type="text"></label>
          <label>Photograph <input name="photo" type="file" accept="image/png,image/jpeg"></label>
          <button type="submit">Register</button>
          <p class="error" hidden></p>
        </form>
        <div class="token-panel" hidden>
          <h3>Device token (shown once)</h3>
          <code class="token"></code>
          <p class="hint">Install it on the user's phone; the dashboard
          never displays it again.</p>
        </div>
      </aside>
      <div class="panel grow">
        <h2>Registered users</h2>
        <table><thead><tr><th>Photo</th><th>Name</th><th>Id</th></tr></thead>
        <tbody></tbody></table>
      </div>`;
    this.errorBox = this.element.querySelector(".error")!;
    this.tokenPanel = this.element.querySelector(".token-panel")!;
    this.listBody = this.element.querySelector("tbody")!;
    this.element.querySelector("form")!.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.register();
    });
  }

  async activate(): Promise<void> {
    await this.loadUsers();
  }

  deactivate(): void {}

  private async loadUsers(): Promise<void> {
    const users = await this.api.listUsers();
    this.listBody.textContent = "";
    for (const user of users) {
      this.listBody.appendChild(this.renderUser(user));
    }
  }

  private renderUser(user: User): HTMLElement {
    const tr = document.createElement("tr");
    tr.innerHTML = `
      <td class="photos"></td>
      <td>${escapeHtml(user.first_name)} ${escapeHtml(user.last_name)}</td>
      <td><code>${escapeHtml(user.user_id)}</code></td>`;
    const img = document.createElement("img");
    img.className = "thumb";
    img.alt = "enrollment";
    void this.api.photoUrl(user.registration_photo).then((url) => {
      img.src = url;
    });
    tr.querySelector(".photos")!.appendChild(img);
    return tr;
  }

  private async register(): Promise<void> {
    const first = this.element.querySelector<HTMLInputElement>("input[name=first]")!;
    const last = this.element.querySelector<HTMLInputElement>("input[name=last]")!;
    const photo = this.element.querySelector<HTMLInputElement>("input[name=photo]")!;
    const file = photo.files?.[0] ?? null;
    const problem = validateRegistration({
      firstName: first.value,
      lastName: last.value,
      hasPhoto: file !== null,
    });
    this.errorBox.hidden = problem === null;
    if (problem !== null) {
      this.errorBox.textContent = problem;
      return;
    }
    try {
      const result = await this.api.registerUser(first.value, last.value, file!, file!.name);
      this.tokenPanel.hidden = false;
      this.tokenPanel.querySelector(".token")!.textContent = result.device_token;
      first.value = "";
      last.value = "";
      photo.value = "";
      await this.loadUsers();
    } catch (err) {
      this.errorBox.hidden = false;
      this.errorBox.textContent = err instanceof ApiError ? err.message : String(err);
    }
  }
}
