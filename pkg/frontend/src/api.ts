/** Typed fetch client for the trainer HTTP service. */

export interface BasicActionDoc {
  type: "basic";
  kind: string;
  direction?: string;
  turns?: number;
  min_duration_ms?: number;
}

export interface CompositeActionDoc {
  type: "composite";
  name: string;
  sequence?: BasicActionDoc[];
}

export type ActionDoc = BasicActionDoc | CompositeActionDoc;

export interface StepDoc {
  id: string;
  target_part: string;
  action: ActionDoc;
  prerequisites: string[];
  prompt_text: string;
  prompt_voice_text: string;
  required_tool?: string;
  required_torque?: number;
  stage?: string;
}

export interface ToolDoc {
  id: string;
  display_name: string;
  slot: number;
  torque_setting?: number;
}

export interface PartDoc {
  id: string;
  display_name: string;
  category: string;
  initial_state: string;
}

export interface ScenarioDoc {
  format: number;
  id: string;
  engine_name: string;
  direction: string;
  parts: PartDoc[];
  tools: ToolDoc[];
  steps: StepDoc[];
  tutorial: { title: string; body: string; media?: string }[];
}

export interface ScenarioSummary {
  id: string;
  engine_name: string;
  direction: string;
  steps: number;
}

export interface EventDoc {
  seq: number;
  t_ms: number;
  action: string;
  target: string;
  payload: Record<string, unknown>;
}

export interface AttemptInput {
  step_id: string;
  tool_id?: string | null;
  torque?: number | null;
  action: string;
  at_ms?: number | null;
}

export interface AttemptResult {
  accepted: boolean;
  error_kind: string | null;
  finished: boolean;
  progress: number;
  events: EventDoc[];
}

export interface HintConfigDoc {
  voice: boolean;
  text: boolean;
  tablet_display: boolean;
  screen_display: boolean;
}

export interface LiveState {
  session_id: string;
  scenario_id: string;
  mode: string;
  hint_config: HintConfigDoc;
  completed_steps: string[];
  candidates: string[];
  part_states: Record<string, string>;
  progress: number;
  stage_progress: Record<string, { completed: number; total: number }>;
  finished: boolean;
  report: Record<string, unknown> | null;
  events: EventDoc[];
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class TrainerClient {
  constructor(private baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        detail = JSON.stringify((await response.json()).detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/v1/health");
  }

  listScenarios(): Promise<ScenarioSummary[]> {
    return this.request("GET", "/v1/scenarios");
  }

  getScenario(id: string): Promise<ScenarioDoc> {
    return this.request("GET", `/v1/scenarios/${encodeURIComponent(id)}`);
  }

  createSession(
    scenarioId: string,
    mode: "training" | "examination",
    hints: string = "T3",
    studentId?: string,
  ): Promise<{ session_id: string }> {
    return this.request("POST", "/v1/live", {
      scenario_id: scenarioId,
      mode,
      hints,
      student_id: studentId ?? null,
    });
  }

  state(sessionId: string): Promise<LiveState> {
    return this.request("GET", `/v1/live/${encodeURIComponent(sessionId)}/state`);
  }

  attempt(sessionId: string, input: AttemptInput): Promise<AttemptResult> {
    return this.request("POST", `/v1/live/${encodeURIComponent(sessionId)}/attempt`, input);
  }

  abandon(sessionId: string): Promise<{ finished: boolean }> {
    return this.request("POST", `/v1/live/${encodeURIComponent(sessionId)}/abandon`);
  }

  submit(sessionId: string, group?: string): Promise<{ session_id: string; score: number; band: string }> {
    const query = group === undefined ? "" : `?group=${encodeURIComponent(group)}`;
    return this.request("POST", `/v1/live/${encodeURIComponent(sessionId)}/submit${query}`);
  }
}
