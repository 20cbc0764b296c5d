"""Canonical shipped scenario: a desk-scale Buick Verano engine disassembly
with seven stages S1..S7 and 15 steps.

The step-level content is invented for reproducibility; it is not the real
service procedure for this engine.
"""
from __future__ import annotations

from importlib import resources

from .scenario import (
    ActionKind,
    BasicAction,
    COMPOSITE_LIBRARY,
    Direction,
    Part,
    PartCategory,
    PartState,
    Scenario,
    Step,
    Tool,
    TutorialEntry,
    parse_scenario,
    serialize_scenario,
)

VERANO_SCENARIO_ID = "verano-s1-s7"

_HOLD = BasicAction(ActionKind.HOLD, min_duration_ms=500.0)
_PRESS = BasicAction(ActionKind.PRESS)
_HIDE = BasicAction(ActionKind.HIDE)
_UNSCREW = COMPOSITE_LIBRARY["unscrew"]


def _part(pid: str, name: str, category: PartCategory = PartCategory.COMPONENT) -> Part:
    return Part(pid, name, category, PartState.INSTALLED)


def build_verano_scenario() -> Scenario:
    parts = (
        _part("engine-assembly", "Engine assembly", PartCategory.ASSEMBLY),
        _part("drain-plug", "Oil drain plug", PartCategory.FASTENER),
        _part("calibration-port", "Torque calibration port"),
        _part("bolt-1", "Cover bolt 1", PartCategory.FASTENER),
        _part("bolt-2", "Cover bolt 2", PartCategory.FASTENER),
        _part("bolt-3", "Cover bolt 3", PartCategory.FASTENER),
        _part("oil-cooler", "Oil cooler"),
        _part("water-pump", "Water pump"),
        _part("fuel-rail", "Fuel rail"),
        _part("injector-1", "Fuel injector 1"),
        _part("injector-2", "Fuel injector 2"),
        _part("cylinder-head", "Cylinder head", PartCategory.ASSEMBLY),
        _part("piston", "Piston"),
        _part("parts-tray", "Parts tray"),
        _part("tool-rack", "Tool rack"),
    )
    tools = (
        Tool("torque-wrench", "Torque wrench", slot=0, torque_setting=35.0),
        Tool("socket-wrench", "Socket wrench", slot=1),
        Tool("screwdriver", "Flat screwdriver", slot=2),
        Tool("pliers", "Combination pliers", slot=3),
    )

    def step(sid, stage, part, action, prereqs=(), tool=None, torque=None,
             text="", voice=""):
        return Step(id=sid, stage=stage, target_part=part, action=action,
                    prerequisites=frozenset(prereqs), required_tool=tool,
                    required_torque=torque, prompt_text=text,
                    prompt_voice_text=voice or text)

    steps = (
        step("s1-1", "S1", "engine-assembly", _HOLD,
             text="Inspect the engine and confirm the work area is clear.",
             voice="Start by inspecting the engine assembly."),
        step("s1-2", "S1", "drain-plug", _PRESS, prereqs=["s1-1"],
             text="Check the drain plug is seated before moving the engine."),
        step("s2-1", "S2", "calibration-port", COMPOSITE_LIBRARY["screw"],
             prereqs=["s1-2"],
             tool="torque-wrench", torque=35.0,
             text="Set the torque wrench to 35 Nm on the calibration port."),
        step("s3-1", "S3", "bolt-1", _UNSCREW, prereqs=["s2-1"],
             tool="torque-wrench", torque=35.0,
             text="Remove cover bolt 1 with the torque wrench."),
        step("s3-2", "S3", "bolt-2", _UNSCREW, prereqs=["s2-1"],
             tool="torque-wrench", torque=35.0,
             text="Remove cover bolt 2 with the torque wrench."),
        step("s3-3", "S3", "bolt-3", _UNSCREW, prereqs=["s2-1"],
             tool="torque-wrench", torque=35.0,
             text="Remove cover bolt 3 with the torque wrench."),
        step("s4-1", "S4", "oil-cooler", _UNSCREW,
             prereqs=["s3-1", "s3-2", "s3-3"], tool="socket-wrench",
             text="Unbolt and remove the oil cooler."),
        step("s4-2", "S4", "water-pump", _PRESS, prereqs=["s4-1"],
             text="Pull the water pump free of its housing."),
        step("s5-1", "S5", "fuel-rail", _UNSCREW, prereqs=["s4-2"],
             tool="socket-wrench",
             text="Unbolt the fuel rail."),
        step("s5-2", "S5", "injector-1", _PRESS, prereqs=["s5-1"],
             text="Press injector 1 out of the rail seat."),
        step("s5-3", "S5", "injector-2", _PRESS, prereqs=["s5-1"],
             text="Press injector 2 out of the rail seat."),
        step("s6-1", "S6", "cylinder-head", _UNSCREW,
             prereqs=["s5-2", "s5-3"], tool="socket-wrench",
             text="Unbolt and lift off the cylinder head."),
        step("s6-2", "S6", "piston", _HOLD, prereqs=["s6-1"],
             text="Hold the piston steady and draw it out of the cylinder."),
        step("s7-1", "S7", "parts-tray", _HIDE, prereqs=["s6-2"],
             text="Lay every removed part out on the tray in removal order."),
        step("s7-2", "S7", "tool-rack", _HIDE, prereqs=["s7-1"],
             text="Return all tools to their rack positions."),
    )
    tutorial = (
        TutorialEntry("Engine overview",
                      "The Buick Verano engine trainer covers seven stages, "
                      "from preparation through final part arrangement."),
        TutorialEntry("Tool usage",
                      "Always set the torque wrench before loosening cover "
                      "bolts; fasteners are torqued to 35 Nm.",
                      media="videos/tool-usage.mp4"),
        TutorialEntry("Safety notes",
                      "Support heavy assemblies with both hands and keep the "
                      "work area clear."),
    )
    return Scenario(
        id=VERANO_SCENARIO_ID,
        engine_name="Buick Verano",
        direction=Direction.DISASSEMBLY,
        parts=parts,
        tools=tools,
        steps=steps,
        tutorial=tutorial,
    )


def verano_document() -> str:
    """Canonical serialized form of the shipped scenario."""
    return serialize_scenario(build_verano_scenario())


def load_packaged_scenario() -> Scenario:
    """Parse the golden scenario file shipped with the package."""
    text = (resources.files("enginetrainer.data") / "verano_s1_s7.json").read_text("utf-8")
    return parse_scenario(text)
