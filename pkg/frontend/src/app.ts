/** Browser entry point: a small DOM application over the trainer API.
 * Home shows the six entrances; training runs a hinted live session;
 * examination runs the same session flow with every hint surface gone. */
import { TrainerClient } from "./api.js";
import type { EventDoc, LiveState, ScenarioDoc } from "./api.js";
import {
  HOME_ENTRANCES,
  entranceTarget,
  hintAffordances,
  initialViewState,
  type ViewState,
} from "./views.js";
import { actionName } from "./walkthrough.js";

const client = new TrainerClient("");
let viewState: ViewState = initialViewState();

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text) node.textContent = text;
  return node;
}

function root(): HTMLElement {
  const node = document.getElementById("app");
  if (node === null) throw new Error("missing #app mount point");
  return node;
}

function renderHome(): void {
  const mount = root();
  mount.replaceChildren();
  mount.append(el("h1", "title", "Engine Assembly Trainer"));
  const grid = el("div", "entrance-grid");
  for (const entrance of HOME_ENTRANCES) {
    const card = el("button", `entrance entrance-${entrance.category}`);
    card.append(el("span", "entrance-title", entrance.title));
    card.append(el("span", "entrance-desc", entrance.description));
    card.addEventListener("click", () => {
      viewState = { ...viewState, view: entranceTarget(entrance) };
      void renderCurrentView();
    });
    grid.append(card);
  }
  mount.append(grid);
}

async function startSession(mode: "training" | "examination"): Promise<void> {
  const scenarios = await client.listScenarios();
  if (scenarios.length === 0) throw new Error("server has no scenarios");
  const scenarioId = scenarios[0].id;
  const { session_id } = await client.createSession(scenarioId, mode);
  viewState = { ...viewState, sessionId: session_id, scenarioId };
}

function renderHints(mount: HTMLElement, state: LiveState): void {
  const channels = hintAffordances(viewState.view, state.hint_config);
  if (channels.length === 0) return;
  const panel = el("div", "hint-panel");
  const hints = state.events.filter((e) => e.action === "HintIssued");
  const latest = hints.length > 0 ? hints[hints.length - 1] : null;
  for (const channel of channels) {
    const text =
      latest !== null && latest.payload["channel"] === channel
        ? String(latest.payload["text"])
        : "";
    panel.append(el("div", `hint hint-${channel}`, text));
  }
  mount.append(panel);
}

function renderStepList(mount: HTMLElement, scenario: ScenarioDoc, state: LiveState): void {
  const list = el("ul", "step-list");
  const completed = new Set(state.completed_steps);
  const candidates = new Set(state.candidates);
  for (const step of scenario.steps) {
    const status = completed.has(step.id) ? "done" : candidates.has(step.id) ? "ready" : "locked";
    const item = el("li", `step step-${status}`);
    item.append(el("span", "step-id", step.id));
    item.append(el("span", "step-action", actionName(step.action)));
    if (status === "ready") {
      const go = el("button", "step-go", "Attempt");
      go.addEventListener("click", () => void attemptStep(step.id, scenario));
      item.append(go);
    }
    list.append(item);
  }
  mount.append(list);
}

async function attemptStep(stepId: string, scenario: ScenarioDoc): Promise<void> {
  if (viewState.sessionId === null) return;
  const step = scenario.steps.find((s) => s.id === stepId);
  if (step === undefined) return;
  await client.attempt(viewState.sessionId, {
    step_id: step.id,
    tool_id: step.required_tool ?? null,
    torque: step.required_torque ?? null,
    action: actionName(step.action),
  });
  await renderCurrentView();
}

async function renderSession(): Promise<void> {
  if (viewState.sessionId === null) {
    await startSession(viewState.view === "examination" ? "examination" : "training");
  }
  const sessionId = viewState.sessionId;
  const scenarioId = viewState.scenarioId;
  if (sessionId === null || scenarioId === null) return;
  const [scenario, state] = await Promise.all([
    client.getScenario(scenarioId),
    client.state(sessionId),
  ]);
  const mount = root();
  mount.replaceChildren();
  const heading = viewState.view === "examination" ? "Examination" : "Training";
  mount.append(el("h1", "title", `${heading}: ${scenario.engine_name}`));
  mount.append(el("div", "progress", `${Math.round(state.progress * 100)}% complete`));
  renderHints(mount, state);
  renderStepList(mount, scenario, state);
  if (state.finished && state.report !== null) {
    mount.append(el("div", "score", `Score: ${state.report["score"]}`));
  }
  const back = el("button", "back", "Back to home");
  back.addEventListener("click", () => {
    viewState = initialViewState();
    void renderCurrentView();
  });
  mount.append(back);
}

async function renderRecords(): Promise<void> {
  const scenarios = await client.listScenarios();
  const mount = root();
  mount.replaceChildren();
  mount.append(el("h1", "title", "Records"));
  const list = el("ul", "scenario-list");
  for (const s of scenarios) {
    list.append(el("li", "scenario", `${s.engine_name} (${s.direction}, ${s.steps} steps)`));
  }
  mount.append(list);
  const back = el("button", "back", "Back to home");
  back.addEventListener("click", () => {
    viewState = initialViewState();
    void renderCurrentView();
  });
  mount.append(back);
}

export async function renderCurrentView(): Promise<void> {
  switch (viewState.view) {
    case "home":
      renderHome();
      return;
    case "training":
    case "examination":
      await renderSession();
      return;
    case "records":
      await renderRecords();
      return;
  }
}

if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  void renderCurrentView();
}
