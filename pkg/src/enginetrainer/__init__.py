"""Rendering-agnostic training engine for guided engine assembly and
disassembly procedures."""

__version__ = "0.1.0"
