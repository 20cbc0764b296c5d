/** Scripted walkthrough: derive the correct inputs for every step of a
 * scenario and drive a live session through them over the HTTP API. */
import type { ActionDoc, AttemptInput, EventDoc, ScenarioDoc, StepDoc, TrainerClient } from "./api.js";

export function actionName(action: ActionDoc): string {
  return action.type === "composite" ? action.name : action.kind;
}

/** Dependency-respecting step order: repeatedly take the first step in
 * authored order whose prerequisites are all satisfied. */
export function topologicalOrder(scenario: ScenarioDoc): StepDoc[] {
  const done = new Set<string>();
  const remaining = [...scenario.steps];
  const ordered: StepDoc[] = [];
  while (remaining.length > 0) {
    const index = remaining.findIndex((step) =>
      step.prerequisites.every((p) => done.has(p)),
    );
    if (index < 0) {
      throw new Error("scenario has a prerequisite cycle");
    }
    const step = remaining.splice(index, 1)[0];
    done.add(step.id);
    ordered.push(step);
  }
  return ordered;
}

/** One correct attempt per step, in executable order. */
export function perfectInputs(scenario: ScenarioDoc): AttemptInput[] {
  return topologicalOrder(scenario).map((step) => ({
    step_id: step.id,
    tool_id: step.required_tool ?? null,
    torque: step.required_torque ?? null,
    action: actionName(step.action),
  }));
}

export interface WalkthroughResult {
  sessionId: string;
  score: number | null;
  events: EventDoc[];
}

/** Run a flawless session against a live server and return its full
 * event log (timestamps stay at zero: no at_ms is ever supplied). */
export async function runWalkthrough(
  client: TrainerClient,
  scenarioId: string,
  mode: "training" | "examination" = "training",
  hints: string = "T3",
): Promise<WalkthroughResult> {
  const scenario = await client.getScenario(scenarioId);
  const { session_id: sessionId } = await client.createSession(scenarioId, mode, hints);
  for (const input of perfectInputs(scenario)) {
    const outcome = await client.attempt(sessionId, input);
    if (!outcome.accepted) {
      throw new Error(`walkthrough attempt rejected: ${input.step_id} (${outcome.error_kind})`);
    }
  }
  const state = await client.state(sessionId);
  if (!state.finished) {
    throw new Error("walkthrough completed every step but session is unfinished");
  }
  const score = state.report === null ? null : (state.report["score"] as number);
  return { sessionId, score, events: state.events };
}

/** Rewrite session-id event targets so logs from different sessions of
 * the same scenario can be compared directly. */
export function normalizeSessionId(
  events: readonly EventDoc[],
  sessionId: string,
  replacement: string,
): EventDoc[] {
  return events.map((event) =>
    event.target === sessionId ? { ...event, target: replacement } : event,
  );
}
