"""Template design problem instances: validation, tolerance bands, loading."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import IO, Union

from .errors import NotFound, ParseError, ValidationError

# Demands in thousands of units; template counts follow the published best designs.
_BUILTINS = {
    "catfood": dict(
        slots=9,
        templates=2,
        demands=[250, 255, 260, 500, 500, 800, 1100],
    ),
    "herbs": dict(
        slots=42,
        templates=2,
        demands=[
            60, 60, 70, 70, 70, 70, 70, 70, 70, 80,
            80, 80, 80, 90, 90, 90, 90, 90, 90, 100,
            100, 100, 100, 150, 230, 230, 230, 230, 280, 280,
        ],
    ),
    "magazine": dict(
        slots=40,
        templates=3,
        demands=[
            50, 53, 55, 60, 85, 90, 100, 100, 105, 110,
            137, 140, 140, 140, 150, 150, 150, 150, 150, 150,
            150, 150, 168, 170, 170, 195, 195, 200, 200, 200,
            210, 210, 225, 230, 230, 230, 250, 250, 250, 250,
            250, 250, 250, 250, 265, 270, 270, 375, 375, 405,
        ],
    ),
}

BUILTIN_NAMES = tuple(_BUILTINS)
DEFAULT_TOLERANCE = 0.10


@dataclass(frozen=True)
class ProblemInstance:
    """A TDP<v, t, s> instance with per-variation demands and tolerances.

    Demands are raw product units. Tolerances are fractions: variation ``i``
    may be produced anywhere in ``[(1 - lower_tol[i]) Q_i, (1 + upper_tol[i]) Q_i]``.
    """

    name: str
    v: int
    t: int
    s: int
    demands: tuple[int, ...]
    lower_tol: tuple[float, ...]
    upper_tol: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(self.demands))
        object.__setattr__(self, "lower_tol", tuple(float(x) for x in self.lower_tol))
        object.__setattr__(self, "upper_tol", tuple(float(x) for x in self.upper_tol))
        for field in ("v", "t", "s"):
            value = getattr(self, field)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValidationError(field, f"{field} must be a positive integer, got {value!r}")
        if len(self.demands) != self.v:
            raise ValidationError("demands", f"expected {self.v} demands, got {len(self.demands)}")
        for q in self.demands:
            if isinstance(q, bool) or not isinstance(q, int) or q <= 0:
                raise ValidationError("demands", f"demands must be positive integers, got {q!r}")
        for field in ("lower_tol", "upper_tol"):
            values = getattr(self, field)
            if len(values) != self.v:
                raise ValidationError(field, f"expected {self.v} values, got {len(values)}")
            for x in values:
                if not 0.0 <= x <= 1.0:
                    raise ValidationError(field, f"tolerance {x!r} outside [0, 1]")

    @property
    def total_demand(self) -> int:
        return sum(self.demands)

    def bands(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Integer (low, high) production limits for every variation."""
        pairs = [tolerance_band(self, i) for i in range(1, self.v + 1)]
        return tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "variations": self.v,
            "templates": self.t,
            "slots": self.s,
            "demands": list(self.demands),
            "lower_tol": list(self.lower_tol),
            "upper_tol": list(self.upper_tol),
        }


def _round_half_up(x: Fraction) -> int:
    return int((x + Fraction(1, 2)).__floor__())


def tolerance_band(inst: ProblemInstance, i: int) -> tuple[int, int]:
    """Admissible production interval of variation ``i`` (1-based), in units."""
    if not 1 <= i <= inst.v:
        raise IndexError(f"variation index {i} outside 1..{inst.v}")
    q = inst.demands[i - 1]
    # str() keeps 0.1 as exactly 1/10
    lo = (1 - Fraction(str(inst.lower_tol[i - 1]))) * q
    hi = (1 + Fraction(str(inst.upper_tol[i - 1]))) * q
    return _round_half_up(lo), _round_half_up(hi)


def builtin_instance(name: str) -> ProblemInstance:
    try:
        data = _BUILTINS[name.lower()]
    except KeyError:
        raise NotFound(f"unknown builtin instance {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    v = len(data["demands"])
    return ProblemInstance(
        name=name.lower(),
        v=v,
        t=data["templates"],
        s=data["slots"],
        demands=tuple(d * 1000 for d in data["demands"]),
        lower_tol=(DEFAULT_TOLERANCE,) * v,
        upper_tol=(DEFAULT_TOLERANCE,) * v,
    )


_REQUIRED = ("name", "variations", "templates", "slots", "demands", "lower_tol", "upper_tol")


def instance_from_dict(doc: dict) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    for field in _REQUIRED:
        if field not in doc:
            raise ParseError("missing field", field=field)
    for field in ("demands", "lower_tol", "upper_tol"):
        if not isinstance(doc[field], list):
            raise ParseError("expected a list", field=field)
    return ProblemInstance(
        name=str(doc["name"]),
        v=doc["variations"],
        t=doc["templates"],
        s=doc["slots"],
        demands=tuple(doc["demands"]),
        lower_tol=tuple(doc["lower_tol"]),
        upper_tol=tuple(doc["upper_tol"]),
    )


def load_instance(source: Union[bytes, str, IO]) -> ProblemInstance:
    """Parse a JSON instance document from bytes, text or a readable stream."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    return instance_from_dict(doc)


def dump_instance(inst: ProblemInstance) -> str:
    return json.dumps(inst.to_dict(), indent=2)


def resolve_instance(ref: str) -> ProblemInstance:
    """Accept ``builtin:<name>`` (or a bare builtin name) or a file path."""
    if ref.startswith("builtin:"):
        return builtin_instance(ref.split(":", 1)[1])
    path = Path(ref)
    if not path.exists() and ref.lower() in _BUILTINS:
        return builtin_instance(ref)
    return load_instance(path.read_bytes())
