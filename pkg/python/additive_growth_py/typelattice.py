"""Finite type lattices: order, join, primitive types and colour combinations."""

import itertools
import logging
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np

from .types import (
    MAX_TYPES,
    PASSIVE,
    JoinViolation,
    LatticeTooLarge,
    NotMultiColour,
    PosetViolation,
    Verdict,
)
from .utils import ValidationReport

logger = logging.getLogger(__name__)

ColourCombination = frozenset


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def transitive_closure(n: int, covers: Iterable[tuple[int, int]]) -> np.ndarray:
    """Reflexive-transitive closure of a covering relation (Warshall)."""
    order = np.eye(n, dtype=bool)
    for low, high in covers:
        order[low, high] = True
    for k in range(n):
        order |= np.outer(order[:, k], order[k, :])
    return order


def least_upper_bounds(order: np.ndarray) -> np.ndarray:
    """Join table derived from an order; raises JoinViolation if some pair has no least upper bound."""
    n = order.shape[0]
    join = np.empty((n, n), dtype=np.int64)
    for a in range(n):
        for b in range(a, n):
            upper = np.flatnonzero(order[a] & order[b])
            least = [c for c in upper if order[c, upper].all()]
            if not least:
                raise JoinViolation(
                    f"Types {a} and {b} have no least upper bound", witness=(a, b)
                )
            join[a, b] = join[b, a] = least[0]
    return join


def validate_lattice(order, join_table) -> ValidationReport:
    """Check the partial order and join axioms.

    Args:
        order: Boolean ``n x n`` table, ``order[a, b]`` meaning ``a <= b``.
        join_table: Integer ``n x n`` table of joins.

    Returns:
        An ok report when every axiom holds.

    Raises:
        LatticeTooLarge: More than ``MAX_TYPES`` types.
        PosetViolation: Order is not reflexive, antisymmetric, transitive or has no bottom 0.
        JoinViolation: Join table is not the least upper bound.
    """
    order = np.asarray(order, dtype=bool)
    join = np.asarray(join_table, dtype=np.int64)
    n = order.shape[0]
    if n > MAX_TYPES:
        raise LatticeTooLarge(f"{n} types exceed the limit of {MAX_TYPES}", witness=n)
    if n == 0 or order.shape != (n, n) or join.shape != (n, n):
        raise PosetViolation("Order and join tables must be square and nonempty")

    bad = np.flatnonzero(~np.diag(order))
    if bad.size:
        a = int(bad[0])
        raise PosetViolation(f"Order is not reflexive at {a}", witness=(a,))
    both = order & order.T & ~np.eye(n, dtype=bool)
    if both.any():
        a, b = map(int, np.argwhere(both)[0])
        raise PosetViolation(f"Order is not antisymmetric: {a} <= {b} <= {a}", witness=(a, b))
    for b in range(n):
        # a <= b and b <= c but not a <= c
        gap = np.outer(order[:, b], order[b, :]) & ~order
        if gap.any():
            a, c = map(int, np.argwhere(gap)[0])
            raise PosetViolation(
                f"Order is not transitive: {a} <= {b} <= {c} but not {a} <= {c}",
                witness=(a, b, c),
            )
    below = np.flatnonzero(~order[PASSIVE])
    if below.size:
        a = int(below[0])
        raise PosetViolation(f"Passive type 0 is not below {a}", witness=(0, a))

    if join.min() < 0 or join.max() >= n:
        a, b = map(int, np.argwhere((join < 0) | (join >= n))[0])
        raise JoinViolation(f"join({a},{b}) is not a type", witness=(a, b))
    idx = np.arange(n)
    not_upper = ~order[idx[:, None], join] | ~order[idx[None, :], join]
    if not_upper.any():
        a, b = map(int, np.argwhere(not_upper)[0])
        raise JoinViolation(
            f"join({a},{b}) = {join[a, b]} is not an upper bound of {a} and {b}",
            witness=(a, b),
        )
    for a in range(n):
        for b in range(n):
            upper = order[a] & order[b]
            if not order[join[a, b], upper].all():
                c = int(np.flatnonzero(upper & ~order[join[a, b]])[0])
                raise JoinViolation(
                    f"join({a},{b}) = {join[a, b]} is not below the upper bound {c}",
                    witness=(a, b, c),
                )
    return ValidationReport(Verdict.OK, "lattice", f"{n} types form a lattice")


class TypeLattice:
    """Finite set of types ``0..n-1`` with a partial order and a join; 0 is passive.

    Instances are immutable after construction and always validated.
    """

    def __init__(self, labels: Sequence[str], order, join_table=None):
        order = np.array(order, dtype=bool)
        if len(labels) != order.shape[0]:
            raise PosetViolation(
                f"{len(labels)} labels for {order.shape[0]} types", witness=tuple(labels)
            )
        if len(set(labels)) != len(labels):
            raise PosetViolation("Type labels must be distinct", witness=tuple(labels))
        if len(labels) > MAX_TYPES:
            raise LatticeTooLarge(
                f"{len(labels)} types exceed the limit of {MAX_TYPES}", witness=len(labels)
            )
        if join_table is None:
            join_table = least_upper_bounds(order)
        join_table = np.array(join_table, dtype=np.int64)
        validate_lattice(order, join_table)
        self.labels = tuple(str(label) for label in labels)
        self.order = _readonly(order)
        self.join_table = _readonly(join_table)

    @classmethod
    def from_covers(cls, labels: Sequence[str], covers, join_table=None) -> "TypeLattice":
        """Build a lattice from covering pairs given as indices or labels."""
        index = {label: i for i, label in enumerate(labels)}
        n = len(labels)
        pairs = []
        for low, high in covers:
            try:
                pairs.append(tuple(index[t] if isinstance(t, str) else int(t) for t in (low, high)))
            except KeyError as e:
                raise PosetViolation(f"Covering pair names unknown type {e}", witness=(low, high)) from None
        if any(not 0 <= i < n for pair in pairs for i in pair):
            raise PosetViolation("Covering pair names an unknown type", witness=tuple(pairs))
        # 0 sits below everything even if the covers omit it.
        pairs.extend((PASSIVE, a) for a in range(1, n))
        closure = transitive_closure(n, pairs)
        cyc = closure & closure.T & ~np.eye(n, dtype=bool)
        if cyc.any():
            a, b = map(int, np.argwhere(cyc)[0])
            raise PosetViolation(f"Covers contain a cycle through {a} and {b}", witness=(a, b))
        return cls(labels, closure, join_table)

    @classmethod
    def chain(cls, n: int, labels: Sequence[str] | None = None) -> "TypeLattice":
        """Totally ordered lattice ``0 < 1 < ... < n-1``."""
        labels = labels or [str(i) for i in range(n)]
        return cls.from_covers(labels, [(i, i + 1) for i in range(n - 1)])

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"TypeLattice({list(self.labels)})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TypeLattice)
            and self.labels == other.labels
            and np.array_equal(self.order, other.order)
        )

    def __hash__(self) -> int:
        return hash((self.labels, self.order.tobytes()))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def active(self) -> range:
        return range(1, self.size)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"Unknown type label {label!r}") from None

    def leq(self, a: int, b: int) -> bool:
        return bool(self.order[a, b])

    def less(self, a: int, b: int) -> bool:
        return a != b and bool(self.order[a, b])

    def is_incomparable(self, a: int, b: int) -> bool:
        """True iff ``a <> b``."""
        return not self.order[a, b] and not self.order[b, a]

    def join(self, a: int, b: int) -> int:
        return int(self.join_table[a, b])

    def join_all(self, types: Iterable[int]) -> int:
        return reduce(self.join, types, PASSIVE)

    @cached_property
    def top(self) -> int:
        return self.join_all(range(self.size))

    def covers(self) -> list[tuple[int, int]]:
        """Covering pairs ``a < b`` with nothing strictly between."""
        strict = self.order & ~np.eye(self.size, dtype=bool)
        pairs = []
        for a, b in np.argwhere(strict):
            if not (strict[a] & strict[:, b]).any():
                pairs.append((int(a), int(b)))
        return pairs

    @cached_property
    def primitives(self) -> tuple[int, ...]:
        """Active types that are not the join of two types different from themselves."""
        n = self.size
        rows, cols = np.indices((n, n))
        result = []
        for a in self.active:
            hits = (self.join_table == a) & (rows != a) & (cols != a)
            if not hits.any():
                result.append(a)
        return tuple(result)

    def minimal(self, types: Iterable[int]) -> frozenset:
        """Elements of ``types`` not strictly above another element."""
        types = set(types)
        return frozenset(a for a in types if not any(self.less(b, a) for b in types))

    def maximal(self, types: Iterable[int]) -> frozenset:
        types = set(types)
        return frozenset(a for a in types if not any(self.less(a, b) for b in types))

    def is_antichain(self, types: Iterable[int]) -> bool:
        types = list(types)
        return all(self.is_incomparable(a, b) for a, b in itertools.combinations(types, 2))

    @cached_property
    def _decompositions(self) -> dict[int, tuple[ColourCombination, ...]]:
        table: dict[int, list] = {b: [] for b in self.active}
        prims = self.primitives
        for size in range(1, len(prims) + 1):
            for combo in itertools.combinations(prims, size):
                if self.is_antichain(combo):
                    table[self.join_all(combo)].append(frozenset(combo))
        return {b: tuple(combos) for b, combos in table.items()}

    def decompositions(self, b: int) -> tuple[ColourCombination, ...]:
        """Colour combinations whose join is ``b``; ``(frozenset(),)`` for the passive type."""
        if b == PASSIVE:
            return (frozenset(),)
        return self._decompositions[b]

    def colour_combinations(self) -> tuple[ColourCombination, ...]:
        """Every nonempty antichain of primitive types."""
        return tuple(c for b in self.active for c in self._decompositions[b])

    def is_multi_colour(self) -> bool:
        return all(len(self._decompositions[b]) == 1 for b in self.active)

    def colours(self, b: int) -> ColourCombination:
        """The unique decomposition ``C(b)`` of a type in a multi-colour lattice."""
        combos = self.decompositions(b)
        if len(combos) != 1:
            raise NotMultiColour(
                f"Type {self.labels[b]} has {len(combos)} decompositions", witness=b
            )
        return combos[0]

    def colour_join(self, c1: ColourCombination, c2: ColourCombination) -> ColourCombination:
        """Maximal elements of ``c1 | c2``."""
        return self.maximal(c1 | c2)

    def layer_partition(self, types: Iterable[int]) -> list[frozenset]:
        """Split ``types`` into successive layers of minimal elements."""
        remaining = set(types)
        layers = []
        while remaining:
            layer = self.minimal(remaining)
            layers.append(layer)
            remaining -= layer
        return layers

    def config_leq(self, phi, psi) -> bool:
        """Pointwise order of configurations."""
        return bool(self.order[np.asarray(phi), np.asarray(psi)].all())

    def config_join(self, phi, psi) -> np.ndarray:
        return self.join_table[np.asarray(phi), np.asarray(psi)]

    def distributive_witness(self) -> tuple[int, int, int] | None:
        """A primitive ``a`` and types ``b, c`` with ``a <= b v c`` but ``a`` below neither, if any."""
        n = self.size
        for a in self.primitives:
            for b in range(n):
                for c in range(b, n):
                    if self.order[a, self.join_table[b, c]] and not self.order[a, b] and not self.order[a, c]:
                        return a, b, c
        return None
