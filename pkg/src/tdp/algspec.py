"""Compact algorithm notation, e.g. ``Ma.Hc.P*.A2.Ux`` or ``Bc5(Ts.D,Ga.D*.A4.Gd)RD``.

Grammar (heads are case-insensitive, whitespace is ignored)::

    basic    := ("Hc" | "Ts") "." model
              | "Ga" "." model ".A" int "." ("Ux" | "Gd")
    memetic  := "Ma" "." ("Hc" | "Ts") "." model ".A" int "." ("Ux" | "Gd")
    model    := ("P" | "D") ["*"]
    coop     := ("Ri" | "Bc" | "Ra") int "(" member ("," member)* ")" policy policy
    member   := [int] (basic | memetic)
    policy   := "R" | "D" | "W"
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

from .encoding import ModelKind
from .errors import ParseError, SpecError

LS_METHODS = ("HC", "TS")
CROSSOVERS = ("UX", "GD")
TOPOLOGIES = {"RI": "RING", "BC": "BROADCAST", "RA": "RANDOM"}
POLICIES = ("R", "D", "W")

_TOPOLOGY_HEAD = {v: k for k, v in TOPOLOGIES.items()}


@dataclass(frozen=True)
class LocalSearchSpec:
    method: str
    kind: ModelKind


@dataclass(frozen=True)
class GeneticSpec:
    kind: ModelKind
    arity: int
    crossover: str


@dataclass(frozen=True)
class MemeticSpec:
    ls_method: str
    kind: ModelKind
    arity: int
    crossover: str


@dataclass(frozen=True)
class CooperativeSpec:
    """``members`` holds ``(count, spec)`` pairs in listed order; a member
    written without a multiplier has count 1."""

    topology: str
    n: int
    members: tuple
    migration: str
    acceptance: str

    def __post_init__(self):
        object.__setattr__(self, "members", tuple((int(c), m) for c, m in self.members))


BasicSpec = Union[LocalSearchSpec, GeneticSpec, MemeticSpec]
AlgorithmSpec = Union[LocalSearchSpec, GeneticSpec, MemeticSpec, CooperativeSpec]


# ------------------------------------------------------------------ parsing

class _Parser:
    def __init__(self, text: str):
        # parse the whitespace-free text but report positions in the original
        self.chars = []
        self.where = []
        for i, ch in enumerate(text):
            if not ch.isspace():
                self.chars.append(ch)
                self.where.append(i)
        self.src = "".join(self.chars)
        self.upper = self.src.upper()
        self.i = 0
        self.end_pos = len(text)

    def pos(self) -> int:
        return self.where[self.i] if self.i < len(self.where) else self.end_pos

    def fail(self, msg: str):
        raise ParseError(msg, position=self.pos())

    def peek(self, n: int = 1) -> str:
        return self.upper[self.i:self.i + n]

    def accept(self, token: str) -> bool:
        if self.upper.startswith(token, self.i):
            self.i += len(token)
            return True
        return False

    def expect(self, token: str):
        if not self.accept(token):
            found = self.src[self.i:self.i + len(token)] or "end of input"
            self.fail(f"expected {token!r}, found {found!r}")

    def choice(self, options, what: str) -> str:
        for opt in options:
            if self.accept(opt):
                return opt
        found = self.src[self.i:self.i + 2] or "end of input"
        self.fail(f"expected {what}, found {found!r}")

    def integer(self, what: str) -> int:
        start = self.i
        while self.i < len(self.upper) and self.upper[self.i].isdigit():
            self.i += 1
        if start == self.i:
            self.fail(f"expected {what}")
        return int(self.upper[start:self.i])

    def model(self) -> ModelKind:
        m = self.choice(("P", "D"), "model 'P' or 'D'")
        return ModelKind(m, self.accept("*"))

    def arity_and_crossover(self):
        self.expect(".")
        self.expect("A")
        arity = self.integer("parent count after 'A'")
        if arity < 2:
            raise SpecError(f"arity must be at least 2, got {arity}")
        self.expect(".")
        return arity, self.choice(CROSSOVERS, "crossover 'Ux' or 'Gd'")

    def basic(self) -> BasicSpec:
        head = self.choice(("HC", "TS", "GA", "MA"), "algorithm 'Hc', 'Ts', 'Ga' or 'Ma'")
        self.expect(".")
        if head in LS_METHODS:
            return LocalSearchSpec(head, self.model())
        if head == "GA":
            kind = self.model()
            return GeneticSpec(kind, *self.arity_and_crossover())
        method = self.choice(LS_METHODS, "local search 'Hc' or 'Ts'")
        self.expect(".")
        kind = self.model()
        return MemeticSpec(method, kind, *self.arity_and_crossover())

    def spec(self) -> AlgorithmSpec:
        if self.peek(2) in TOPOLOGIES:
            return self.cooperative()
        return self.basic()

    def cooperative(self) -> CooperativeSpec:
        topology = TOPOLOGIES[self.choice(tuple(TOPOLOGIES), "topology")]
        n = self.integer("agent count")
        self.expect("(")
        members = []
        while True:
            count = self.integer("count") if self.peek().isdigit() else 1
            if self.peek(2) in TOPOLOGIES:
                self.fail("cooperative members cannot themselves be cooperative")
            members.append((count, self.basic()))
            if self.accept(")"):
                break
            self.expect(",")
        migration = self.choice(POLICIES, "migration policy 'R', 'D' or 'W'")
        acceptance = self.choice(POLICIES, "acceptance policy 'R', 'D' or 'W'")
        spec = CooperativeSpec(topology, n, tuple(members), migration, acceptance)
        expand_members(spec)
        return spec


def parse_spec(text: str) -> AlgorithmSpec:
    if not text or not text.strip():
        raise ParseError("empty algorithm name", position=0)
    p = _Parser(text)
    spec = p.spec()
    if p.i != len(p.upper):
        p.fail(f"unexpected trailing text {p.src[p.i:]!r}")
    return spec


# --------------------------------------------------------------- formatting

def _cased(token: str) -> str:
    return token[0] + token[1:].lower()


def format_spec(spec: AlgorithmSpec) -> str:
    if isinstance(spec, LocalSearchSpec):
        return f"{_cased(spec.method)}.{spec.kind}"
    if isinstance(spec, GeneticSpec):
        return f"Ga.{spec.kind}.A{spec.arity}.{_cased(spec.crossover)}"
    if isinstance(spec, MemeticSpec):
        return (f"Ma.{_cased(spec.ls_method)}.{spec.kind}"
                f".A{spec.arity}.{_cased(spec.crossover)}")
    if isinstance(spec, CooperativeSpec):
        members = ",".join(
            (str(c) if c != 1 else "") + format_spec(m) for c, m in spec.members
        )
        head = _cased(_TOPOLOGY_HEAD[spec.topology])
        return f"{head}{spec.n}({members}){spec.migration}{spec.acceptance}"
    raise SpecError(f"not an algorithm spec: {spec!r}")


# ---------------------------------------------------------------- expansion

def member_counts(spec: CooperativeSpec) -> list[int]:
    """Agent count per listed member after applying the even-split rule."""
    if spec.n < 1:
        raise SpecError(f"agent count must be positive, got {spec.n}")
    counts = [c for c, _ in spec.members]
    if not counts:
        raise SpecError("cooperative spec lists no members")
    if any(c < 1 for c in counts):
        raise SpecError(f"member counts must be positive, got {counts}")
    total = sum(counts)
    if total == spec.n:
        return counts
    if total < spec.n and all(c == 1 for c in counts):
        base, extra = divmod(spec.n, len(counts))
        return [base + (1 if i < extra else 0) for i in range(len(counts))]
    raise SpecError(f"member counts {counts} do not add up to {spec.n} agents")


def expand_members(spec: CooperativeSpec) -> list[BasicSpec]:
    out = []
    for count, (_, member) in zip(member_counts(spec), spec.members):
        if isinstance(member, CooperativeSpec):
            raise SpecError("cooperative members cannot themselves be cooperative")
        out.extend([member] * count)
    return out


def warn_policy(spec: AlgorithmSpec) -> None:
    """Warn about migration policies outside the studied combinations."""
    if isinstance(spec, CooperativeSpec) and spec.migration == "W":
        warnings.warn(f"{format_spec(spec)}: worst-solution migration was not part of the studied policy pairs",
                      stacklevel=2)


def spec_kind(spec: AlgorithmSpec) -> str:
    return {LocalSearchSpec: "local", GeneticSpec: "genetic",
            MemeticSpec: "memetic", CooperativeSpec: "cooperative"}[type(spec)]
