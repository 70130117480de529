"""Genotype representations for template designs.

Two encodings are supported:

* classical (``P``): a ``v x t`` matrix whose entry ``(i, j)`` counts the
  copies of variation ``i`` on template ``j``; each column sums to ``s``.
* alternative (``D``): an ``s x t`` matrix whose entry ``(h, j)`` is the
  (1-based) variation printed in slot ``h`` of template ``j``.

Symmetry breaking orders the template columns lexicographically and, for the
alternative encoding, sorts every column ascending first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidGenotype
from .instance import ProblemInstance

CLASSICAL = "P"
ALTERNATIVE = "D"


class Genotype:
    """Immutable-by-convention integer matrix tagged with its encoding."""

    __slots__ = ("matrix", "_key")
    model = ""

    def __init__(self, matrix):
        m = np.array(matrix, dtype=np.int64)
        if m.ndim != 2:
            raise InvalidGenotype(f"genotype matrix must be 2-D, got shape {m.shape}")
        self.matrix = m
        self._key = None

    @classmethod
    def _wrap(cls, matrix: np.ndarray) -> "Genotype":
        # trusted constructor for internal hot paths: no copy, no checks
        g = cls.__new__(cls)
        g.matrix = matrix
        g._key = None
        return g

    @property
    def key(self) -> bytes:
        if self._key is None:
            self._key = self.model.encode() + bytes(self.matrix.shape) + self.matrix.tobytes()
        return self._key

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def t(self) -> int:
        return self.matrix.shape[1]

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.matrix[:, j])

    def columns(self) -> list[tuple[int, ...]]:
        return [self.column(j) for j in range(self.t)]

    def tolist(self) -> list[list[int]]:
        return self.matrix.tolist()

    def __eq__(self, other):
        if not isinstance(other, Genotype):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"{type(self).__name__}({self.matrix.tolist()})"


class ClassicalGenotype(Genotype):
    __slots__ = ()
    model = CLASSICAL

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]]) -> "ClassicalGenotype":
        return cls(np.array(columns, dtype=np.int64).T)

    @property
    def counts(self) -> np.ndarray:
        return self.matrix


class AlternativeGenotype(Genotype):
    __slots__ = ()
    model = ALTERNATIVE

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]]) -> "AlternativeGenotype":
        return cls(np.array(columns, dtype=np.int64).T)

    @property
    def slots(self) -> np.ndarray:
        return self.matrix


GENOTYPE_TYPES = {CLASSICAL: ClassicalGenotype, ALTERNATIVE: AlternativeGenotype}


@dataclass(frozen=True)
class ModelKind:
    model: str = CLASSICAL
    symmetry_breaking: bool = False

    def __post_init__(self):
        if self.model not in GENOTYPE_TYPES:
            raise ValueError(f"model must be 'P' or 'D', got {self.model!r}")

    @property
    def genotype_type(self) -> type:
        return GENOTYPE_TYPES[self.model]

    def __str__(self):
        return self.model + ("*" if self.symmetry_breaking else "")


# ---------------------------------------------------------------- validation

def check_classical(g: Genotype, s: int | None = None, v: int | None = None) -> None:
    if not isinstance(g, ClassicalGenotype):
        raise InvalidGenotype(f"expected a classical genotype, got {type(g).__name__}")
    m = g.matrix
    if v is not None and m.shape[0] != v:
        raise InvalidGenotype(f"expected {v} rows, got {m.shape[0]}")
    if m.size and m.min() < 0:
        raise InvalidGenotype("negative slot count")
    sums = m.sum(axis=0)
    target = int(sums[0]) if s is None else s
    if np.any(sums != target):
        raise InvalidGenotype(f"template columns must each sum to {target}, got {sums.tolist()}")
    if target < 1:
        raise InvalidGenotype("templates must have at least one slot")


def check_alternative(g: Genotype, v: int, s: int | None = None) -> None:
    if not isinstance(g, AlternativeGenotype):
        raise InvalidGenotype(f"expected an alternative genotype, got {type(g).__name__}")
    m = g.matrix
    if s is not None and m.shape[0] != s:
        raise InvalidGenotype(f"expected {s} slots per template, got {m.shape[0]}")
    if m.size == 0 or m.min() < 1 or m.max() > v:
        raise InvalidGenotype(f"slot values must lie in 1..{v}")


def check_genotype(g: Genotype, inst: ProblemInstance) -> None:
    if isinstance(g, ClassicalGenotype):
        check_classical(g, s=inst.s, v=inst.v)
    elif isinstance(g, AlternativeGenotype):
        check_alternative(g, inst.v, s=inst.s)
    else:
        raise InvalidGenotype(f"not a genotype: {g!r}")
    if g.t != inst.t:
        raise InvalidGenotype(f"expected {inst.t} templates, got {g.t}")


# --------------------------------------------------------------- conversions

def classical_to_alternative(g: ClassicalGenotype, s: int | None = None) -> AlternativeGenotype:
    """List each variation ``s_ij`` times per column, in ascending order."""
    check_classical(g, s=s)
    counts = g.matrix
    v = counts.shape[0]
    labels = np.arange(1, v + 1)
    cols = [np.repeat(labels, counts[:, j]) for j in range(counts.shape[1])]
    return AlternativeGenotype._wrap(np.stack(cols, axis=1).astype(np.int64))


def slot_counts(slots: np.ndarray, v: int) -> np.ndarray:
    s, t = slots.shape
    flat = (slots - 1) * t + np.arange(t)
    return np.bincount(flat.ravel(), minlength=v * t).reshape(v, t)


def alternative_to_classical(g: AlternativeGenotype, v: int) -> ClassicalGenotype:
    check_alternative(g, v)
    return ClassicalGenotype._wrap(slot_counts(g.matrix, v))


def as_classical(g: Genotype, v: int) -> ClassicalGenotype:
    if isinstance(g, ClassicalGenotype):
        return g
    return ClassicalGenotype._wrap(slot_counts(g.matrix, v))


def convert(g: Genotype, kind: ModelKind, v: int) -> Genotype:
    """Re-encode ``g`` for ``kind`` and canonicalise when it asks for symmetry breaking."""
    if g.model == kind.model:
        out = g
    elif kind.model == CLASSICAL:
        out = ClassicalGenotype._wrap(slot_counts(g.matrix, v))
    else:
        out = classical_to_alternative(g)
    return canonical_matrix_form(out, kind)


# ---------------------------------------------------------- symmetry breaking

def lex_leq(a: Sequence[int], b: Sequence[int]) -> bool:
    if len(a) != len(b):
        raise IndexError(f"cannot compare sequences of length {len(a)} and {len(b)}")
    return tuple(a) <= tuple(b)


def _order_columns(m: np.ndarray) -> np.ndarray:
    if m.shape[1] < 2:
        return m
    order = np.lexsort(m[::-1])
    return m[:, order]


def canonical_matrix_form(g: Genotype, kind: ModelKind) -> Genotype:
    # unchecked variant of canonicalize() used inside the search loops
    if not kind.symmetry_breaking:
        return g
    m = g.matrix
    if g.model == ALTERNATIVE:
        m = np.sort(m, axis=0)
    return type(g)._wrap(_order_columns(m))


def _check_kind(g: Genotype, kind: ModelKind) -> None:
    if g.model != kind.model:
        raise InvalidGenotype(f"genotype encoding {g.model!r} does not match model {kind.model!r}")
    if isinstance(g, ClassicalGenotype):
        check_classical(g)
    else:
        m = g.matrix
        if m.size == 0 or m.min() < 1:
            raise InvalidGenotype("slot values must be positive variation indices")


def canonicalize(g: Genotype, kind: ModelKind) -> Genotype:
    """Return the symmetry-broken representative of ``g`` (``g`` itself when SB is off)."""
    _check_kind(g, kind)
    return canonical_matrix_form(g, kind)


def is_canonical(g: Genotype, kind: ModelKind) -> bool:
    return canonicalize(g, kind) == g


# ------------------------------------------------------------------ sampling

def random_genotype(inst: ProblemInstance, kind: ModelKind, rng: np.random.Generator) -> Genotype:
    """Draw every slot's variation uniformly, then encode for ``kind``.

    Classical designs are the slot counts of that draw, so every column sums
    to ``s`` by construction.
    """
    slots = rng.integers(1, inst.v + 1, size=(inst.s, inst.t), dtype=np.int64)
    if kind.model == CLASSICAL:
        g = ClassicalGenotype._wrap(slot_counts(slots, inst.v))
    else:
        g = AlternativeGenotype._wrap(slots)
    return canonical_matrix_form(g, kind)


def hamming_distance(g1: Genotype, g2: Genotype) -> int:
    if g1.model != g2.model:
        # compare in the alternative encoding, classical side put in canonical form
        alt_sb = ModelKind(ALTERNATIVE, True)
        if isinstance(g1, ClassicalGenotype):
            g1 = canonical_matrix_form(classical_to_alternative(g1), alt_sb)
        else:
            g2 = canonical_matrix_form(classical_to_alternative(g2), alt_sb)
    if g1.matrix.shape != g2.matrix.shape:
        raise IndexError(f"shape mismatch {g1.matrix.shape} vs {g2.matrix.shape}")
    return int(np.count_nonzero(g1.matrix != g2.matrix))


def distance_matrix(a: Sequence[Genotype], b: Sequence[Genotype]) -> np.ndarray:
    """Pairwise Hamming distances between two lists of same-shape genotypes."""
    if not a or not b:
        return np.zeros((len(a), len(b)), dtype=np.int64)
    x = np.stack([g.matrix.ravel() for g in a])
    y = np.stack([g.matrix.ravel() for g in b])
    if x.shape[1] != y.shape[1]:
        raise IndexError("shape mismatch between genotype lists")
    return (x[:, None, :] != y[None, :, :]).sum(axis=2)


def genotype_from_dict(doc: dict) -> Genotype:
    model = doc.get("model", CLASSICAL)
    if model not in GENOTYPE_TYPES:
        raise InvalidGenotype(f"unknown model {model!r}")
    return GENOTYPE_TYPES[model](doc["matrix"])


def genotype_to_dict(g: Genotype) -> dict:
    return {"model": g.model, "rows": g.shape[0], "templates": g.t, "matrix": g.tolist()}
