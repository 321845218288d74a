"""Tabular sweep results and their CSV rendering."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence


def format_value(x: Any) -> str:
    """Render one CSV cell: floats in round-trip scientific notation."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.16e}"
    if hasattr(x, "item"):  # numpy scalars
        return format_value(x.item())
    return str(x)


@dataclass
class SweepResult:
    """Ordered rows of ``(parameter, measurements...)`` under named columns."""

    columns: Sequence[str]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        k = list(self.columns).index(name)
        return [r[k] for r in self.rows]

    def to_csv_lines(self) -> list[str]:
        lines = [",".join(self.columns)]
        lines += [",".join(format_value(v) for v in row) for row in self.rows]
        return lines

    def to_csv(self) -> str:
        return "\n".join(self.to_csv_lines()) + "\n"
