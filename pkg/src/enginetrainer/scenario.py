"""Entity layer: parts, tools, actions, procedure steps and the scenario file format.

All values are immutable after construction; parsing, validation and
inversion are pure functions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Optional, Union

SCENARIO_FORMAT_VERSION = 1


class ScenarioError(Exception):
    """Base class for scenario file errors."""


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"syntax error at line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ScenarioSchemaError(ScenarioError):
    def __init__(self, location: str, message: str):
        super().__init__(f"schema error at {location}: {message}")
        self.location = location


class ScenarioReferenceError(ScenarioError):
    def __init__(self, location: str, ref_id: str, message: str):
        super().__init__(f"reference error at {location}: {message}")
        self.location = location
        self.ref_id = ref_id


class ScenarioCycleError(ScenarioError):
    def __init__(self, cycle: list[str]):
        super().__init__("prerequisite cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class MissingInverseError(ScenarioError):
    def __init__(self, name: str):
        super().__init__(f"composite action {name!r} has no registered inverse")
        self.name = name


class ActionKind(str, Enum):
    ROTATE = "rotate"
    PRESS = "press"
    HOLD = "hold"
    HIDE = "hide"


class RotateDirection(str, Enum):
    CW = "cw"
    CCW = "ccw"


@dataclass(frozen=True)
class BasicAction:
    kind: ActionKind
    direction: Optional[RotateDirection] = None  # rotate only
    turns: Optional[float] = None                # rotate only, > 0
    min_duration_ms: Optional[float] = None      # hold only, >= 0

    def __post_init__(self):
        if self.kind is ActionKind.ROTATE:
            if self.direction is None:
                raise ValueError("rotate requires a direction")
            if self.turns is None or self.turns <= 0:
                raise ValueError("rotate requires turns > 0")
        elif self.kind is ActionKind.HOLD:
            if self.min_duration_ms is not None and self.min_duration_ms < 0:
                raise ValueError("hold min duration must be >= 0")
            if self.min_duration_ms is None:
                object.__setattr__(self, "min_duration_ms", 0.0)

    def inverse(self) -> "BasicAction":
        if self.kind is ActionKind.ROTATE:
            flipped = (RotateDirection.CCW if self.direction is RotateDirection.CW
                       else RotateDirection.CW)
            return replace(self, direction=flipped)
        # press, hold and hide are their own inverses (hide restores state
        # when the scenario direction flips)
        return self

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"type": "basic", "kind": self.kind.value}
        if self.kind is ActionKind.ROTATE:
            doc["direction"] = self.direction.value
            doc["turns"] = self.turns
        elif self.kind is ActionKind.HOLD:
            doc["min_duration_ms"] = self.min_duration_ms
        return doc


@dataclass(frozen=True)
class CompositeAction:
    name: str
    sequence: tuple[BasicAction, ...]

    def __post_init__(self):
        if not self.sequence:
            raise ValueError("composite sequence must be non-empty")

    def to_json(self) -> dict:
        if self.name in COMPOSITE_LIBRARY and COMPOSITE_LIBRARY[self.name] == self:
            return {"type": "composite", "name": self.name}
        return {
            "type": "composite",
            "name": self.name,
            "sequence": [a.to_json() for a in self.sequence],
        }


Action = Union[BasicAction, CompositeAction]


def _rotate(direction: RotateDirection, turns: float = 1.0) -> BasicAction:
    return BasicAction(ActionKind.ROTATE, direction=direction, turns=turns)


# "screw" is rotation followed by pressing; "unscrew" is the reverse.
COMPOSITE_LIBRARY: dict[str, CompositeAction] = {
    "screw": CompositeAction("screw", (_rotate(RotateDirection.CW),
                                       BasicAction(ActionKind.PRESS))),
    "unscrew": CompositeAction("unscrew", (BasicAction(ActionKind.PRESS),
                                           _rotate(RotateDirection.CCW))),
}

COMPOSITE_INVERSES: dict[str, str] = {"screw": "unscrew", "unscrew": "screw"}


def action_name(action: Action) -> str:
    """Name a trainee must supply to match the step's action."""
    return action.name if isinstance(action, CompositeAction) else action.kind.value


class PartCategory(str, Enum):
    FASTENER = "fastener"
    COMPONENT = "component"
    ASSEMBLY = "assembly"


class PartState(str, Enum):
    INSTALLED = "installed"
    REMOVED = "removed"
    HIDDEN = "hidden"


class Direction(str, Enum):
    ASSEMBLY = "assembly"
    DISASSEMBLY = "disassembly"


@dataclass(frozen=True)
class Part:
    id: str
    display_name: str
    category: PartCategory
    initial_state: PartState

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "category": self.category.value,
            "initial_state": self.initial_state.value,
        }


@dataclass(frozen=True)
class Tool:
    id: str
    display_name: str
    slot: int
    torque_setting: Optional[float] = None  # N*m, > 0 when present

    def __post_init__(self):
        if self.slot < 0:
            raise ValueError("tool slot must be >= 0")
        if self.torque_setting is not None and self.torque_setting <= 0:
            raise ValueError("torque setting must be > 0")

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "id": self.id,
            "display_name": self.display_name,
            "slot": self.slot,
        }
        if self.torque_setting is not None:
            doc["torque_setting"] = self.torque_setting
        return doc


@dataclass(frozen=True)
class Step:
    id: str
    target_part: str
    action: Action
    prerequisites: frozenset[str] = frozenset()
    required_tool: Optional[str] = None
    required_torque: Optional[float] = None
    prompt_text: str = ""
    prompt_voice_text: str = ""
    stage: Optional[str] = None  # S1..S7 grouping label, used for reports

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "id": self.id,
            "target_part": self.target_part,
            "action": self.action.to_json(),
            "prerequisites": sorted(self.prerequisites),
            "prompt_text": self.prompt_text,
            "prompt_voice_text": self.prompt_voice_text,
        }
        if self.required_tool is not None:
            doc["required_tool"] = self.required_tool
        if self.required_torque is not None:
            doc["required_torque"] = self.required_torque
        if self.stage is not None:
            doc["stage"] = self.stage
        return doc


@dataclass(frozen=True)
class TutorialEntry:
    title: str
    body: str
    media: Optional[str] = None

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"title": self.title, "body": self.body}
        if self.media is not None:
            doc["media"] = self.media
        return doc


@dataclass(frozen=True)
class Scenario:
    id: str
    engine_name: str
    direction: Direction
    parts: tuple[Part, ...]
    tools: tuple[Tool, ...]
    steps: tuple[Step, ...]
    tutorial: tuple[TutorialEntry, ...] = ()

    def part_by_id(self) -> dict[str, Part]:
        return {p.id: p for p in self.parts}

    def tool_by_id(self) -> dict[str, Tool]:
        return {t.id: t for t in self.tools}

    def step_by_id(self) -> dict[str, Step]:
        return {s.id: s for s in self.steps}

    def stages(self) -> list[str]:
        """Distinct stage labels in authored step order."""
        seen: list[str] = []
        for s in self.steps:
            if s.stage is not None and s.stage not in seen:
                seen.append(s.stage)
        return seen

    def to_json(self) -> dict:
        return {
            "format": SCENARIO_FORMAT_VERSION,
            "id": self.id,
            "engine_name": self.engine_name,
            "direction": self.direction.value,
            "parts": [p.to_json() for p in self.parts],
            "tools": [t.to_json() for t in self.tools],
            "steps": [s.to_json() for s in self.steps],
            "tutorial": [t.to_json() for t in self.tutorial],
        }


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.location}: {self.message}"


def canonical_json(doc: Any) -> str:
    """Canonical serialization: sorted keys, 2-space indent, LF endings."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def serialize_scenario(scenario: Scenario) -> str:
    return canonical_json(scenario.to_json())


def _expect(doc: dict, key: str, kind, location: str):
    if key not in doc:
        raise ScenarioSchemaError(location, f"missing field {key!r}")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioSchemaError(f"{location}.{key}", "expected a number")
        return float(value)
    if not isinstance(value, kind):
        raise ScenarioSchemaError(f"{location}.{key}", f"expected {kind.__name__}")
    return value


def _parse_enum(enum_cls, raw: str, location: str):
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ScenarioSchemaError(location, f"unknown value {raw!r} (expected one of {allowed})") from None


def _parse_basic_action(doc: dict, location: str) -> BasicAction:
    kind = _parse_enum(ActionKind, _expect(doc, "kind", str, location), f"{location}.kind")
    try:
        if kind is ActionKind.ROTATE:
            direction = _parse_enum(RotateDirection, _expect(doc, "direction", str, location),
                                    f"{location}.direction")
            return BasicAction(kind, direction=direction, turns=_expect(doc, "turns", float, location))
        if kind is ActionKind.HOLD:
            ms = float(doc.get("min_duration_ms", 0))
            return BasicAction(kind, min_duration_ms=ms)
        return BasicAction(kind)
    except ValueError as exc:
        raise ScenarioSchemaError(location, str(exc)) from None


def _parse_action(doc: Any, location: str) -> Action:
    if not isinstance(doc, dict):
        raise ScenarioSchemaError(location, "action must be an object")
    kind = doc.get("type", "basic")
    if kind == "basic":
        return _parse_basic_action(doc, location)
    if kind == "composite":
        name = _expect(doc, "name", str, location)
        if "sequence" not in doc:
            if name not in COMPOSITE_LIBRARY:
                raise ScenarioSchemaError(location, f"unknown library composite {name!r}")
            return COMPOSITE_LIBRARY[name]
        seq = doc["sequence"]
        if not isinstance(seq, list) or not seq:
            raise ScenarioSchemaError(f"{location}.sequence", "expected a non-empty list")
        basics = tuple(_parse_basic_action(b, f"{location}.sequence[{i}]")
                       for i, b in enumerate(seq))
        return CompositeAction(name, basics)
    raise ScenarioSchemaError(location, f"unknown action type {kind!r}")


def parse_scenario(document: str) -> Scenario:
    """Parse and fully validate a scenario document.

    Raises ScenarioSyntaxError, ScenarioSchemaError, ScenarioReferenceError
    or ScenarioCycleError; on success the returned value round-trips through
    serialize_scenario.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ScenarioSchemaError("$", "top level must be an object")
    version = _expect(doc, "format", int, "$")
    if version != SCENARIO_FORMAT_VERSION:
        raise ScenarioSchemaError("$.format", f"unsupported format version {version}")

    parts = []
    for i, p in enumerate(doc.get("parts", [])):
        loc = f"$.parts[{i}]"
        parts.append(Part(
            id=_expect(p, "id", str, loc),
            display_name=_expect(p, "display_name", str, loc),
            category=_parse_enum(PartCategory, _expect(p, "category", str, loc), f"{loc}.category"),
            initial_state=_parse_enum(PartState, _expect(p, "initial_state", str, loc),
                                      f"{loc}.initial_state"),
        ))

    tools = []
    for i, t in enumerate(doc.get("tools", [])):
        loc = f"$.tools[{i}]"
        try:
            tools.append(Tool(
                id=_expect(t, "id", str, loc),
                display_name=_expect(t, "display_name", str, loc),
                slot=_expect(t, "slot", int, loc),
                torque_setting=float(t["torque_setting"]) if "torque_setting" in t else None,
            ))
        except ValueError as exc:
            raise ScenarioSchemaError(loc, str(exc)) from None

    steps = []
    for i, s in enumerate(doc.get("steps", [])):
        loc = f"$.steps[{i}]"
        prereqs = s.get("prerequisites", [])
        if not isinstance(prereqs, list):
            raise ScenarioSchemaError(f"{loc}.prerequisites", "expected a list")
        steps.append(Step(
            id=_expect(s, "id", str, loc),
            target_part=_expect(s, "target_part", str, loc),
            action=_parse_action(s.get("action"), f"{loc}.action"),
            prerequisites=frozenset(prereqs),
            required_tool=s.get("required_tool"),
            required_torque=float(s["required_torque"]) if "required_torque" in s else None,
            prompt_text=s.get("prompt_text", ""),
            prompt_voice_text=s.get("prompt_voice_text", ""),
            stage=s.get("stage"),
        ))

    tutorial = []
    for i, e in enumerate(doc.get("tutorial", [])):
        loc = f"$.tutorial[{i}]"
        tutorial.append(TutorialEntry(
            title=_expect(e, "title", str, loc),
            body=_expect(e, "body", str, loc),
            media=e.get("media"),
        ))

    scenario = Scenario(
        id=_expect(doc, "id", str, "$"),
        engine_name=_expect(doc, "engine_name", str, "$"),
        direction=_parse_enum(Direction, _expect(doc, "direction", str, "$"), "$.direction"),
        parts=tuple(parts),
        tools=tuple(tools),
        steps=tuple(steps),
        tutorial=tuple(tutorial),
    )
    _raise_first(scenario)
    return scenario


def _raise_first(scenario: Scenario) -> None:
    """Promote the first validation diagnostic to a typed exception."""
    diags = validate_scenario(scenario)
    for d in diags:
        if d.severity != "error":
            continue
        if "cycle" in d.message:
            cycle = _find_cycle(scenario)
            raise ScenarioCycleError(cycle if cycle else [d.location])
        if "unknown" in d.message or "dangling" in d.message:
            ref = d.message.split("'")[1] if "'" in d.message else d.location
            raise ScenarioReferenceError(d.location, ref, d.message)
        raise ScenarioSchemaError(d.location, d.message)


def validate_scenario(scenario: Scenario) -> list[Diagnostic]:
    """Return every invariant violation; empty list means valid."""
    diags: list[Diagnostic] = []

    def check_unique(items, what):
        seen: set[str] = set()
        for item in items:
            if item.id in seen:
                diags.append(Diagnostic("error", f"{what} {item.id!r}",
                                        f"duplicate {what} id {item.id!r}"))
            seen.add(item.id)

    check_unique(scenario.parts, "part")
    check_unique(scenario.tools, "tool")
    check_unique(scenario.steps, "step")

    part_ids = {p.id for p in scenario.parts}
    tool_ids = {t.id for t in scenario.tools}
    step_ids = {s.id for s in scenario.steps}

    for s in scenario.steps:
        loc = f"step {s.id!r}"
        if s.target_part not in part_ids:
            diags.append(Diagnostic("error", loc, f"unknown part '{s.target_part}'"))
        if s.required_tool is not None and s.required_tool not in tool_ids:
            diags.append(Diagnostic("error", loc, f"unknown tool '{s.required_tool}'"))
        if s.required_torque is not None and s.required_torque <= 0:
            diags.append(Diagnostic("error", loc, "required torque must be > 0"))
        for pre in s.prerequisites:
            if pre not in step_ids:
                diags.append(Diagnostic("error", loc, f"unknown prerequisite step '{pre}'"))

    cycle = _find_cycle(scenario)
    if cycle:
        diags.append(Diagnostic("error", f"step {cycle[0]!r}",
                                "prerequisite cycle: " + " -> ".join(cycle)))
    return diags


def _find_cycle(scenario: Scenario) -> list[str]:
    """Return the member ids of one prerequisite cycle, or [] if acyclic."""
    steps = scenario.step_by_id()
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {sid: WHITE for sid in steps}
    stack: list[str] = []

    def visit(sid: str) -> Optional[list[str]]:
        color[sid] = GRAY
        stack.append(sid)
        for pre in sorted(steps[sid].prerequisites):
            if pre not in steps:
                continue
            if color[pre] == GRAY:
                return stack[stack.index(pre):]
            if color[pre] == WHITE:
                found = visit(pre)
                if found:
                    return found
        stack.pop()
        color[sid] = BLACK
        return None

    for sid in steps:
        if color[sid] == WHITE:
            found = visit(sid)
            if found:
                return found
    return []


def topological_order(scenario: Scenario) -> list[str]:
    """Order step ids so prerequisites come first; ties broken by authored order."""
    remaining = list(scenario.steps)
    done: set[str] = set()
    order: list[str] = []
    while remaining:
        ready = next((s for s in remaining if s.prerequisites <= done), None)
        if ready is None:
            raise ScenarioCycleError(_find_cycle(scenario) or [s.id for s in remaining])
        remaining.remove(ready)
        done.add(ready.id)
        order.append(ready.id)
    return order


def _invert_id(identifier: str) -> str:
    return identifier[:-4] if identifier.endswith("-inv") else identifier + "-inv"


def _invert_action(action: Action) -> Action:
    if isinstance(action, CompositeAction):
        if action.name in COMPOSITE_INVERSES:
            return COMPOSITE_LIBRARY[COMPOSITE_INVERSES[action.name]]
        raise MissingInverseError(action.name)
    return action.inverse()


def terminal_part_states(scenario: Scenario) -> dict[str, PartState]:
    """Part states after a complete run of the scenario."""
    states = {p.id: p.initial_state for p in scenario.parts}
    for step in scenario.steps:
        states[step.target_part] = _completed_state(scenario.direction, step.action)
    return states


def _completed_state(direction: Direction, action: Action) -> PartState:
    if direction is Direction.ASSEMBLY:
        return PartState.INSTALLED
    basics = action.sequence if isinstance(action, CompositeAction) else (action,)
    if any(b.kind is ActionKind.HIDE for b in basics):
        return PartState.HIDDEN
    return PartState.REMOVED


def invert_scenario(scenario: Scenario) -> Scenario:
    """The opposite-direction scenario: reversed steps, reversed prerequisite
    edges, each action replaced by its inverse. Involutive modulo generated ids.
    """
    successors: dict[str, set[str]] = {s.id: set() for s in scenario.steps}
    for s in scenario.steps:
        for pre in s.prerequisites:
            successors[pre].add(s.id)

    final_states = terminal_part_states(scenario)
    inverted_parts = tuple(
        replace(p, initial_state=final_states[p.id]) for p in scenario.parts
    )
    inverted_steps = tuple(
        replace(
            s,
            id=_invert_id(s.id),
            action=_invert_action(s.action),
            prerequisites=frozenset(_invert_id(x) for x in successors[s.id]),
        )
        for s in reversed(scenario.steps)
    )
    direction = (Direction.ASSEMBLY if scenario.direction is Direction.DISASSEMBLY
                 else Direction.DISASSEMBLY)
    return replace(scenario, id=_invert_id(scenario.id), direction=direction,
                   parts=inverted_parts, steps=inverted_steps)
