"""Deterministic text formatting shared by the command-line reports."""

from __future__ import annotations

from typing import Iterable


def fmt(x) -> str:
    """Format a number: floats carry 17 significant digits, ints stay exact."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def csv_row(cells: Iterable) -> str:
    out = []
    for cell in cells:
        out.append(cell if isinstance(cell, str) else fmt(cell))
    return ",".join(out)


def header(version: str, command: str, settings: dict) -> list[str]:
    """Comment header: tool version, command, and the resolved parameters."""
    lines = [f"# streampop {version}", f"# command={command}"]
    parts = [f"{key}={settings[key]}" for key in sorted(settings)]
    if parts:
        lines.append("# " + " ".join(parts))
    return lines
