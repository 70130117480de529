"""Neighbourhood moves, hill climbing and tabu search.

A classical move shifts one slot of template ``j`` from variation ``a`` to
variation ``b``; an alternative move rewrites slot ``h`` of template ``j``
to variation ``w``. Positions (templates, slots, classical rows) are
0-based; ``w`` is a variation label in ``1..v`` like every slot value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union

import numpy as np

from .encoding import (
    AlternativeGenotype,
    ClassicalGenotype,
    Genotype,
    ModelKind,
    canonical_matrix_form,
    check_genotype,
    random_genotype,
)
from .errors import BudgetExhausted, InvalidMove, InvalidParameter
from .instance import ProblemInstance
from .pressing import WORST_FITNESS, Evaluator, Fitness

DEFAULT_PERCENT = 0.05
DEFAULT_TENURE = 10
ARCHIVE_SIZE = 10
TABU_MIN_SAMPLE = 5
_PERMUTE_BELOW = 4096


def compute_budget(inst: ProblemInstance, percent: float) -> int:
    """Evaluation budget ``round(1000 t v (v-1) percent)``, halves rounded up."""
    if not 0 < percent <= 1:
        raise InvalidParameter(f"percent must lie in (0, 1], got {percent}")
    exact = 1000 * inst.t * inst.v * (inst.v - 1) * Fraction(str(percent))
    return int((exact + Fraction(1, 2)).__floor__())


def stagnation_limit(budget: int) -> int:
    return max(1, budget // 10)


@dataclass(frozen=True)
class ClassicalMove:
    template: int
    donor: int
    recipient: int

    def reverse(self) -> "ClassicalMove":
        return ClassicalMove(self.template, self.recipient, self.donor)


@dataclass(frozen=True)
class AlternativeMove:
    template: int
    slot: int
    value: int


Move = Union[ClassicalMove, AlternativeMove]


def neighborhood_size(inst: ProblemInstance, kind: ModelKind) -> int:
    """Number of distinct moves: ``t v (v-1)`` classical, ``t s (v-1)`` alternative."""
    rows = inst.v if kind.model == "P" else inst.s
    return inst.t * rows * (inst.v - 1)


def sample_cap(size: int) -> int:
    return max(1, size // 100)


def _apply_raw(g: Genotype, m: Move) -> Genotype:
    out = g.matrix.copy()
    if isinstance(m, ClassicalMove):
        out[m.donor, m.template] -= 1
        out[m.recipient, m.template] += 1
    else:
        out[m.slot, m.template] = m.value
    return type(g)._wrap(out)


def apply_move(g: Genotype, m: Move, kind: ModelKind, v: Optional[int] = None) -> Genotype:
    """Apply ``m`` to ``g`` and canonicalise when ``kind`` breaks symmetry.

    ``v`` bounds alternative slot values; without it only positivity is checked.
    """
    rows, t = g.matrix.shape
    if g.model != kind.model:
        raise InvalidMove(f"genotype encoding {g.model!r} does not match model {kind.model!r}")
    if isinstance(m, ClassicalMove):
        if not isinstance(g, ClassicalGenotype):
            raise InvalidMove("classical move applied to an alternative genotype")
        if not (0 <= m.template < t and 0 <= m.donor < rows and 0 <= m.recipient < rows):
            raise InvalidMove(f"move {m} outside a {rows}x{t} design")
        if m.donor == m.recipient:
            raise InvalidMove("donor and recipient must differ")
        if g.matrix[m.donor, m.template] < 1:
            raise InvalidMove(f"variation {m.donor} has no slot on template {m.template}")
    elif isinstance(m, AlternativeMove):
        if not isinstance(g, AlternativeGenotype):
            raise InvalidMove("alternative move applied to a classical genotype")
        if not (0 <= m.template < t and 0 <= m.slot < rows):
            raise InvalidMove(f"move {m} outside a {rows}x{t} design")
        if m.value < 1 or (v is not None and m.value > v):
            raise InvalidMove(f"variation label {m.value} out of range")
        if g.matrix[m.slot, m.template] == m.value:
            raise InvalidMove("new value equals the current one")
    else:
        raise InvalidMove(f"not a move: {m!r}")
    return canonical_matrix_form(_apply_raw(g, m), kind)


def _index_stream(n: int, rng: np.random.Generator) -> Iterator[int]:
    # move indices without replacement, in seeded random order
    if n <= _PERMUTE_BELOW:
        yield from rng.permutation(n).tolist()
        return
    seen = set()
    while len(seen) < n:
        for x in rng.integers(n, size=64).tolist():
            if x not in seen:
                seen.add(x)
                yield x


def _decode(g: Genotype, idx: int, v: int) -> Optional[Move]:
    rows, t = g.matrix.shape
    per_template = rows * (v - 1)
    j, r = divmod(idx, per_template)
    pos, k = divmod(r, v - 1)
    if g.model == "P":
        b = k + (k >= pos)
        if g.matrix[pos, j] < 1:
            return None
        return ClassicalMove(j, pos, b)
    cur = int(g.matrix[pos, j])
    w = k + 1
    if w >= cur:
        w += 1
    return AlternativeMove(j, pos, w)


def iter_moves(g: Genotype, kind: ModelKind, rng: np.random.Generator, v: int,
               k: Optional[int] = None) -> Iterator[tuple[Move, Genotype]]:
    """Up to ``k`` (move, neighbour) pairs with distinct neighbours."""
    rows, t = g.matrix.shape
    if v < 2:
        return
    seen = {g.key}
    produced = 0
    for idx in _index_stream(t * rows * (v - 1), rng):
        m = _decode(g, idx, v)
        if m is None:
            continue
        nb = canonical_matrix_form(_apply_raw(g, m), kind)
        key = nb.key
        if key in seen:
            continue
        seen.add(key)
        yield m, nb
        produced += 1
        if k is not None and produced >= k:
            return


def sample_neighbors(g: Genotype, kind: ModelKind, rng: np.random.Generator, k: int,
                     v: Optional[int] = None) -> Iterator[Genotype]:
    """Seeded stream of at most ``k`` distinct neighbours of ``g``.

    ``v`` defaults to the largest label present (alternative) or the row
    count (classical).
    """
    if k < 1:
        raise InvalidParameter(f"k must be at least 1, got {k}")
    if v is None:
        v = g.matrix.shape[0] if g.model == "P" else int(g.matrix.max())
    for _, nb in iter_moves(g, kind, rng, v, k):
        yield nb


# ------------------------------------------------------------------ engines

class LocalSearchEngine:
    """Shared state for resumable single-point searches.

    ``step`` performs one iteration and may be interrupted by
    :class:`BudgetExhausted` at any evaluation; the state stays consistent
    so the search can continue once more budget is granted.
    """

    def __init__(self, inst: ProblemInstance, kind: ModelKind, evaluator: Evaluator,
                 rng: np.random.Generator, stagnation: int, start: Optional[Genotype] = None,
                 restart: bool = True):
        self.inst = inst
        self.kind = kind
        self.ev = evaluator
        self.rng = rng
        self.stagnation = stagnation
        self.restart = restart
        self.size = neighborhood_size(inst, kind)
        self.cap = sample_cap(self.size)
        self.current: Optional[Genotype] = None
        self.current_f: Fitness = WORST_FITNESS
        self.idle = 0
        self.finished = False
        self.archive: list[tuple[Genotype, Fitness]] = []
        self._pending = start

    # pool interface used by cooperative agents
    def pool(self) -> list[tuple[Genotype, Fitness]]:
        return list(self.archive)

    def set_pool(self, members: list[tuple[Genotype, Fitness]]) -> None:
        self.archive = sorted(members, key=lambda gf: gf[1])[:ARCHIVE_SIZE]
        for g, f in self.archive:
            if f < self.current_f:
                self.current, self.current_f = g, f
                self.idle = 0
                self._on_move()

    def _note(self, g: Genotype, f: Fitness) -> None:
        arc = self.archive
        if len(arc) >= ARCHIVE_SIZE and not f < arc[-1][1]:
            return
        key = g.key
        if any(h.key == key for h, _ in arc):
            return
        arc.append((g, f))
        arc.sort(key=lambda gf: gf[1])
        del arc[ARCHIVE_SIZE:]

    def _evaluate(self, g: Genotype) -> Fitness:
        f = self.ev(g)
        self._note(g, f)
        return f

    def _on_move(self) -> None:
        pass

    def _start(self) -> None:
        if self._pending is not None:
            g = self._pending
        else:
            g = random_genotype(self.inst, self.kind, self.rng)
        f = self._evaluate(g)
        self._pending = None
        self.current, self.current_f = g, f
        self.idle = 0
        self._on_move()

    def _stalled(self) -> bool:
        """Count one non-improving evaluation; True when the search must restart."""
        self.idle += 1
        if self.idle < self.stagnation:
            return False
        if self.restart:
            self.current = None
        else:
            self.finished = True
        return True

    def step(self) -> None:
        raise NotImplementedError

    def run(self) -> None:
        """Iterate until the evaluator refuses more evaluations (or the search ends)."""
        try:
            while not self.finished:
                if self.current is None:
                    self._start()
                    continue
                self.step()
        except BudgetExhausted:
            pass

    def advance(self, n: int) -> None:
        self.ev.grant(n)
        self.run()


class HillClimber(LocalSearchEngine):
    """First-improvement climbing.

    The neighbours of the current design are visited in one seeded random
    order, ``cap`` per iteration. Once that order runs out the design is a
    proven local optimum and the climber restarts (or stops, when restarts
    are disabled) without waiting for the stagnation limit.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._stream = None
        self._held = None

    def _on_move(self) -> None:
        self._stream = None
        self._held = None

    def _exhausted(self) -> None:
        if self.restart:
            self.current = None
        else:
            self.finished = True

    def step(self) -> None:
        if self._stream is None:
            self._stream = iter_moves(self.current, self.kind, self.rng, self.inst.v)
        for _ in range(self.cap):
            if self._held is None:
                nxt = next(self._stream, None)
                if nxt is None:
                    self._exhausted()
                    return
                self._held = nxt[1]
            nb = self._held
            f = self._evaluate(nb)
            self._held = None
            if f < self.current_f:
                self.current, self.current_f = nb, f
                self.idle = 0
                self._on_move()
                return
            if self._stalled():
                return


class TabuSearch(LocalSearchEngine):
    """Moves to the best admissible neighbour of each sample, improving or not.

    The reverse of every accepted move stays tabu for ``tenure`` iterations
    unless it would beat the best design found so far. Move attributes are
    read in the coordinates of the design they apply to, so under symmetry
    breaking a column reordering can blur them; they remain a heuristic.
    """

    def __init__(self, *args, tenure: int = DEFAULT_TENURE, **kwargs):
        if tenure < 1:
            raise InvalidParameter(f"tenure must be at least 1, got {tenure}")
        super().__init__(*args, **kwargs)
        self.tenure = tenure
        # two per cent of the neighbourhood, but never so few that the
        # search degenerates into a random walk on tiny instances
        self.cap = min(self.size, max(TABU_MIN_SAMPLE, 2 * sample_cap(self.size)))
        self.iteration = 0
        self.tabu: dict = {}
        self.segment_best: Fitness = WORST_FITNESS
        self._scan = None
        self._choice = None
        self._held = None

    def _on_move(self) -> None:
        if self.current_f < self.segment_best:
            self.segment_best = self.current_f

    def _start(self) -> None:
        self._scan = None
        self.tabu.clear()
        self.segment_best = WORST_FITNESS
        super()._start()

    def set_pool(self, members) -> None:
        before = self.current
        super().set_pool(members)
        if self.current is not before:
            self._scan = None

    def _is_tabu(self, m: Move) -> bool:
        return self.tabu.get(self._attr(m), -1) > self.iteration

    @staticmethod
    def _attr(m: Move):
        if isinstance(m, ClassicalMove):
            return (m.template, m.donor, m.recipient)
        return (m.template, m.slot, m.value)

    def step(self) -> None:
        # the scan of one iteration survives a budget interruption
        if self._scan is None:
            if self.inst.v < 2:
                self.finished = True
                return
            self.iteration += 1
            self._scan = iter_moves(self.current, self.kind, self.rng, self.inst.v, self.cap)
            self._choice = None
            self._held = None
        while True:
            if self._held is None:
                self._held = next(self._scan, None)
                if self._held is None:
                    break
            m, nb = self._held
            f = self._evaluate(nb)
            self._held = None
            if f < self.segment_best:
                self.segment_best = f
                self.idle = 0
            elif self._stalled():
                self._scan = None
                return
            best = self._choice
            if best is not None and not f < best[0]:
                continue
            # the evaluator already counts f, so "beats the incumbent" reads as <=
            if self._is_tabu(m) and not f <= self.ev.best_fitness:
                continue
            self._choice = (f, m, nb)
        self._scan = None
        if self._choice is None:
            return
        f, m, nb = self._choice
        if isinstance(m, ClassicalMove):
            self.tabu[self._attr(m.reverse())] = self.iteration + self.tenure
        else:
            old = int(self.current.matrix[m.slot, m.template])
            self.tabu[(m.template, m.slot, old)] = self.iteration + self.tenure
        self.current, self.current_f = nb, f


# ------------------------------------------------------------- entry points

def _run_engine(cls, inst, kind, start, budget, rng, **kwargs):
    if budget < 1:
        raise InvalidParameter(f"budget must be positive, got {budget}")
    if start is not None:
        check_genotype(start, inst)
        start = canonical_matrix_form(start, kind)
    ev = Evaluator(inst, budget)
    engine = cls(inst, kind, ev, rng, stagnation_limit(budget), start=start, **kwargs)
    engine.run()
    return ev.best, ev.best_fitness, ev.evals


def hill_climb(inst: ProblemInstance, kind: ModelKind, start: Optional[Genotype], budget: int,
               rng: np.random.Generator):
    """Returns ``(best genotype, best fitness, evaluations used)``; a random
    design is drawn when ``start`` is None."""
    return _run_engine(HillClimber, inst, kind, start, budget, rng)


def tabu_search(inst: ProblemInstance, kind: ModelKind, start: Optional[Genotype], budget: int,
                tenure: int, rng: np.random.Generator):
    if tenure < 1:
        raise InvalidParameter(f"tenure must be at least 1, got {tenure}")
    return _run_engine(TabuSearch, inst, kind, start, budget, rng, tenure=tenure)
