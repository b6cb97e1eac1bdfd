// Dashboard shell: admin token entry, tab switching, view lifecycle.

import { ApiClient } from "./api.js";
import { MonitoringView } from "./views/monitoring.js";
import { PoliciesView } from "./views/policies.js";
import { UsersView } from "./views/users.js";

interface View {
  element: HTMLElement;
  activate(): Promise<void>;
  deactivate(): void;
}

const TOKEN_KEY = "gatekeeper-admin-token";

function serverBase(): string {
  // served from /ui on the API server itself; same origin
  return window.location.origin;
}

async function connect(token: string): Promise<ApiClient | null> {
  const api = new ApiClient(serverBase(), token);
  try {
    await api.listGates(); // cheap authenticated probe
    return api;
  } catch {
    return null;
  }
}

function buildShell(api: ApiClient): void {
  const root = document.getElementById("app")!;
  root.textContent = "";

  const nav = document.createElement("nav");
  const main = document.createElement("main");
  root.append(nav, main);

  const views: Record<string, View> = {
    Monitoring: new MonitoringView(api),
    "Gate access": new PoliciesView(api),
    Users: new UsersView(api),
  };
  let active: View | null = null;

  const buttons = new Map<string, HTMLButtonElement>();
  for (const name of Object.keys(views)) {
    const button = document.createElement("button");
    button.textContent = name;
    button.addEventListener("click", () => void show(name));
    nav.appendChild(button);
    buttons.set(name, button);
  }

  async function show(name: string): Promise<void> {
    active?.deactivate();
    main.textContent = "";
    for (const [label, button] of buttons) {
      button.classList.toggle("active", label === name);
    }
    active = views[name];
    main.appendChild(active.element);
    await active.activate();
  }

  void show("Monitoring");
}

function buildLogin(): void {
  const root = document.getElementById("app")!;
  root.innerHTML = `
    <div class="login panel">
      <h1>gatekeeper</h1>
      <p>Paste the administrator token printed at server start.</p>
      <form>
        <input type="password" name="token" placeholder="admin token" autofocus>
        <button type="submit">Connect</button>
        <p class="error" hidden></p>
      </form>
    </div>`;
  const form = root.querySelector("form")!;
  const error = root.querySelector<HTMLElement>(".error")!;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const token = root.querySelector<HTMLInputElement>("input[name=token]")!.value.trim();
    void connect(token).then((api) => {
      if (api === null) {
        error.hidden = false;
        error.textContent = "token rejected by the server";
        return;
      }
      sessionStorage.setItem(TOKEN_KEY, token);
      buildShell(api);
    });
  });
}

async function start(): Promise<void> {
  const saved = sessionStorage.getItem(TOKEN_KEY);
  if (saved) {
    const api = await connect(saved);
    if (api !== null) {
      buildShell(api);
      return;
    }
    sessionStorage.removeItem(TOKEN_KEY);
  }
  buildLogin();
}

void start();
