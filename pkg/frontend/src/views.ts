/** View model for the client: home entrances, per-view hint affordances,
 * and step grouping for the stage progress panel. */
import type { HintConfigDoc, StepDoc } from "./api.js";

export type EntranceCategory = "training" | "examination" | "records";

export interface HomeEntrance {
  id: string;
  title: string;
  category: EntranceCategory;
  description: string;
}

/** The six entrances of the home view: three training, two examination,
 * plus the records browser. */
export const HOME_ENTRANCES: readonly HomeEntrance[] = [
  {
    id: "grouping-mode",
    title: "Grouping Mode",
    category: "training",
    description: "Practice with a partner; attempts are shared across the group.",
  },
  {
    id: "structure-display",
    title: "Structure Display",
    category: "training",
    description: "Browse the engine's parts and how they fit together.",
  },
  {
    id: "tools-learning",
    title: "Tools Learning",
    category: "training",
    description: "Learn each tool, its slot and its torque setting.",
  },
  {
    id: "task-selection",
    title: "Task Selection",
    category: "examination",
    description: "Choose an assembly or disassembly task to be graded on.",
  },
  {
    id: "task-details",
    title: "Task Details",
    category: "examination",
    description: "Review the scoring rules before starting an exam.",
  },
  {
    id: "records",
    title: "Records",
    category: "records",
    description: "Look up stored session reports and cohort summaries.",
  },
];

export type ViewName = "home" | "training" | "examination" | "records";

export interface ViewState {
  view: ViewName;
  sessionId: string | null;
  scenarioId: string | null;
}

export function initialViewState(): ViewState {
  return { view: "home", sessionId: null, scenarioId: null };
}

export function entranceTarget(entrance: HomeEntrance): ViewName {
  switch (entrance.category) {
    case "training":
      return "training";
    case "examination":
      return "examination";
    case "records":
      return "records";
  }
}

export type HintChannel = "voice" | "text" | "tablet-display" | "screen-display";

/** Hint channels the current view may surface. Examination views never
 * show hints, whatever the session's hint configuration says. */
export function hintAffordances(view: ViewName, config: HintConfigDoc): HintChannel[] {
  if (view !== "training") {
    return [];
  }
  const channels: HintChannel[] = [];
  if (config.voice) channels.push("voice");
  if (config.text) channels.push("text");
  if (config.tablet_display) channels.push("tablet-display");
  if (config.screen_display) channels.push("screen-display");
  return channels;
}

/** Steps keyed by stage label, preserving authored order; unstaged steps
 * fall under "". */
export function groupStepsByStage(steps: readonly StepDoc[]): Map<string, StepDoc[]> {
  const groups = new Map<string, StepDoc[]>();
  for (const step of steps) {
    const label = step.stage ?? "";
    const bucket = groups.get(label);
    if (bucket === undefined) {
      groups.set(label, [step]);
    } else {
      bucket.push(step);
    }
  }
  return groups;
}
