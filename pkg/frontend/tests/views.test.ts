import { describe, expect, it } from "vitest";

import type { HintConfigDoc, StepDoc } from "../src/api.js";
import {
  HOME_ENTRANCES,
  entranceTarget,
  groupStepsByStage,
  hintAffordances,
  initialViewState,
} from "../src/views.js";

const ALL_CHANNELS: HintConfigDoc = {
  voice: true,
  text: true,
  tablet_display: true,
  screen_display: true,
};

describe("home view", () => {
  it("shows exactly six entrances", () => {
    expect(HOME_ENTRANCES).toHaveLength(6);
  });

  it("splits entrances into three training, two examination, one records", () => {
    const byCategory = new Map<string, number>();
    for (const entrance of HOME_ENTRANCES) {
      byCategory.set(entrance.category, (byCategory.get(entrance.category) ?? 0) + 1);
    }
    expect(byCategory.get("training")).toBe(3);
    expect(byCategory.get("examination")).toBe(2);
    expect(byCategory.get("records")).toBe(1);
  });

  it("gives every entrance a unique id and a target view", () => {
    const ids = new Set(HOME_ENTRANCES.map((e) => e.id));
    expect(ids.size).toBe(6);
    for (const entrance of HOME_ENTRANCES) {
      expect(["training", "examination", "records"]).toContain(entranceTarget(entrance));
    }
  });

  it("starts at home with no active session", () => {
    expect(initialViewState()).toEqual({ view: "home", sessionId: null, scenarioId: null });
  });
});

describe("hint affordances", () => {
  it("renders zero hint affordances in the examination view", () => {
    expect(hintAffordances("examination", ALL_CHANNELS)).toEqual([]);
  });

  it("renders none on home or records either", () => {
    expect(hintAffordances("home", ALL_CHANNELS)).toEqual([]);
    expect(hintAffordances("records", ALL_CHANNELS)).toEqual([]);
  });

  it("mirrors the enabled channels in the training view", () => {
    expect(hintAffordances("training", ALL_CHANNELS)).toEqual([
      "voice",
      "text",
      "tablet-display",
      "screen-display",
    ]);
    expect(
      hintAffordances("training", {
        voice: true,
        text: false,
        tablet_display: false,
        screen_display: true,
      }),
    ).toEqual(["voice", "screen-display"]);
  });
});

describe("stage grouping", () => {
  const step = (id: string, stage?: string): StepDoc => ({
    id,
    target_part: "p1",
    action: { type: "basic", kind: "press" },
    prerequisites: [],
    prompt_text: "",
    prompt_voice_text: "",
    stage,
  });

  it("keys steps by stage label in authored order", () => {
    const groups = groupStepsByStage([
      step("a", "S1"),
      step("b", "S2"),
      step("c", "S1"),
      step("d"),
    ]);
    expect([...groups.keys()]).toEqual(["S1", "S2", ""]);
    expect(groups.get("S1")?.map((s) => s.id)).toEqual(["a", "c"]);
    expect(groups.get("")?.map((s) => s.id)).toEqual(["d"]);
  });
});
