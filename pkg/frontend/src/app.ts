// Console wiring: horizontal layout with all controls across the top so
// the result panels get the full window width.

import { ApiClient } from "./api.js";
import { TRACE_KINDS, emptyForm, type QueryFormState, type TraceKindName } from "./model.js";
import { renderPanel, renderProgressChips, escapeHtml } from "./panels.js";
import { pollJob, type PollOptions } from "./poll.js";
import { isValidPort, isValidTarget } from "./validate.js";

const LAYOUT = `
<header class="topbar">
  <div class="controls">
    <label>Target <input id="target" placeholder="www.example.org" autocomplete="off"></label>
    <label>HTTP <input id="http-port" type="number" value="80" min="1" max="65535"></label>
    <label>HTTPS <input id="https-port" type="number" value="443" min="1" max="65535"></label>
    <span id="kinds" class="kinds"></span>
    <label>Search text <input id="search-text" placeholder="optional"></label>
    <label class="case"><input id="search-case" type="checkbox"> case sensitive</label>
    <button id="start" disabled>Start query</button>
    <button id="config-btn" type="button">Configuration</button>
  </div>
  <div class="exports">
    <label>Export path <input id="export-path" value="result.xml"></label>
    <button id="export-btn" disabled>Export</button>
    <span id="status" class="status"></span>
  </div>
  <div id="config-editor" class="config-editor" hidden>
    <label>Check URL <input id="cfg-url"></label>
    <label>SafeBrowsing key <input id="cfg-key"></label>
    <label>Proxy host <input id="cfg-proxy-host"></label>
    <label>Proxy port <input id="cfg-proxy-port" type="number" value="0"></label>
    <button id="cfg-save">Save</button>
  </div>
</header>
<div id="progress" class="progress"></div>
<main id="results" class="results"></main>
`;

export interface App {
  readonly form: QueryFormState;
  startQuery(): Promise<void>;
  exportResults(): Promise<void>;
  pivotTo(host: string): void;
  currentJobId: string | null;
}

export function initApp(
  root: HTMLElement,
  client: ApiClient = new ApiClient(),
  pollOptions: PollOptions = {},
): App {
  root.innerHTML = LAYOUT;
  const byId = <T extends HTMLElement>(id: string) => root.querySelector<T>(`#${id}`)!;

  const targetInput = byId<HTMLInputElement>("target");
  const httpPortInput = byId<HTMLInputElement>("http-port");
  const httpsPortInput = byId<HTMLInputElement>("https-port");
  const kindsBox = byId<HTMLElement>("kinds");
  const searchInput = byId<HTMLInputElement>("search-text");
  const searchCase = byId<HTMLInputElement>("search-case");
  const startButton = byId<HTMLButtonElement>("start");
  const exportButton = byId<HTMLButtonElement>("export-btn");
  const exportPath = byId<HTMLInputElement>("export-path");
  const statusLine = byId<HTMLElement>("status");
  const progressBox = byId<HTMLElement>("progress");
  const resultsBox = byId<HTMLElement>("results");

  for (const kind of TRACE_KINDS) {
    const label = root.ownerDocument.createElement("label");
    label.className = "kind";
    label.innerHTML = `<input type="checkbox" value="${kind}" checked> ${kind}`;
    kindsBox.appendChild(label);
  }

  const form = emptyForm();
  const app: App & { currentJobId: string | null } = {
    form,
    currentJobId: null,
    startQuery,
    exportResults,
    pivotTo,
  };

  function selectedKinds(): TraceKindName[] {
    return Array.from(kindsBox.querySelectorAll<HTMLInputElement>("input:checked")).map(
      (box) => box.value as TraceKindName,
    );
  }

  function syncForm(): void {
    form.target = targetInput.value;
    form.httpPort = httpPortInput.value ? Number(httpPortInput.value) : null;
    form.httpsPort = httpsPortInput.value ? Number(httpsPortInput.value) : null;
    form.selectedKinds = selectedKinds();
    form.searchTexts = searchInput.value
      ? [{ text: searchInput.value, caseSensitive: searchCase.checked }]
      : [];
    startButton.disabled = !(
      isValidTarget(form.target) &&
      isValidPort(form.httpPort) &&
      isValidPort(form.httpsPort) &&
      form.selectedKinds.length > 0
    );
  }

  function setStatus(text: string, isError = false): void {
    statusLine.textContent = text;
    statusLine.className = isError ? "status error" : "status";
  }

  async function startQuery(): Promise<void> {
    syncForm();
    if (startButton.disabled) {
      return;
    }
    startButton.disabled = true;
    exportButton.disabled = true;
    resultsBox.innerHTML = "";
    setStatus("submitting…");
    try {
      const jobId = await client.startQuery(form);
      app.currentJobId = jobId;
      setStatus(`job ${jobId} running`);
      const job = await pollJob(client, jobId, {
        ...pollOptions,
        onProgress: (view) => {
          progressBox.innerHTML = renderProgressChips(view.progress);
          pollOptions.onProgress?.(view);
        },
      });
      if (job.state === "Failed") {
        setStatus(`job failed: ${job.error ?? "unknown error"}`, true);
        return;
      }
      const outcome = await client.getResult(jobId);
      resultsBox.innerHTML = outcome.results.map(renderPanel).join("");
      exportButton.disabled = false;
      setStatus(`job ${jobId} done`);
    } catch (err) {
      setStatus(String(err), true);
    } finally {
      syncForm();
    }
  }

  async function exportResults(): Promise<void> {
    if (!app.currentJobId) {
      return;
    }
    try {
      const body = await client.exportResult(app.currentJobId, exportPath.value);
      setStatus(`exported to ${body.path}`);
    } catch (err) {
      setStatus(String(err), true);
    }
  }

  function pivotTo(host: string): void {
    targetInput.value = host;
    syncForm();
    targetInput.focus();
  }

  // config editor
  const configEditor = byId<HTMLElement>("config-editor");
  byId<HTMLButtonElement>("config-btn").addEventListener("click", async () => {
    configEditor.hidden = !configEditor.hidden;
    if (!configEditor.hidden) {
      try {
        const config = await client.getConfig();
        byId<HTMLInputElement>("cfg-url").value = config.checkConnectionURL;
        byId<HTMLInputElement>("cfg-key").value = config.googleSafeBrowsingKey;
        byId<HTMLInputElement>("cfg-proxy-host").value = config.proxy.host;
        byId<HTMLInputElement>("cfg-proxy-port").value = String(config.proxy.port);
      } catch (err) {
        setStatus(String(err), true);
      }
    }
  });
  byId<HTMLButtonElement>("cfg-save").addEventListener("click", async () => {
    try {
      await client.putConfig({
        checkConnectionURL: byId<HTMLInputElement>("cfg-url").value,
        googleSafeBrowsingKey: byId<HTMLInputElement>("cfg-key").value,
        proxy: {
          host: byId<HTMLInputElement>("cfg-proxy-host").value,
          port: Number(byId<HTMLInputElement>("cfg-proxy-port").value) || 0,
        },
      });
      setStatus("configuration saved");
      configEditor.hidden = true;
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  for (const input of [targetInput, httpPortInput, httpsPortInput, searchInput]) {
    input.addEventListener("input", syncForm);
  }
  kindsBox.addEventListener("change", syncForm);
  startButton.addEventListener("click", () => void startQuery());
  exportButton.addEventListener("click", () => void exportResults());
  resultsBox.addEventListener("click", (event) => {
    const link = (event.target as HTMLElement).closest<HTMLElement>(".pivot");
    if (link?.dataset.pivot) {
      event.preventDefault();
      pivotTo(link.dataset.pivot);
    }
  });

  syncForm();
  return app;
}
