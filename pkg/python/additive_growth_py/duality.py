"""Dual types, dual mappings and dual models, self-duality and the double dual."""

import logging
from dataclasses import replace
from typing import Iterable, Iterator

import numpy as np

from .eventmodel import (
    GrowthModel,
    LocalMapping,
    canonical_model,
    is_additive,
    same_weights,
)
from .typelattice import ColourCombination, TypeLattice
from .types import (
    DUAL_WARN_TYPES,
    ISOMORPHISM_SEARCH_TYPES,
    MAX_TABLE_ENTRIES,
    PASSIVE,
    NotAdditive,
    NotDualType,
    NotMultiColour,
)
from .utils import PropertyCheck, all_configurations, check_table_size, encode

logger = logging.getLogger(__name__)

_CHUNK = 1 << 20
_COMPAT_CELLS = 1 << 24


def _bit(masks: np.ndarray, a: int) -> np.ndarray:
    return ((masks >> a) & 1).astype(bool)


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


class DualLattice(TypeLattice):
    """Dual types of a lattice: increasing, decomposable sets of active types.

    Dual type ``d`` is stored as the bitmask ``masks[d]`` over primal types; index 0 is the
    empty set, identified with the passive type. Order is inclusion and join is union.
    """

    def __init__(self, primal: TypeLattice, masks: Iterable[int]):
        masks = sorted(set(int(m) for m in masks), key=lambda m: (_popcount(m), m))
        if masks[0] != 0:
            raise NotDualType("The empty dual type is missing", witness=masks[0])
        position = {m: i for i, m in enumerate(masks)}
        size = len(masks)
        arr = np.array(masks, dtype=np.int64)
        order = (arr[:, None] & arr[None, :]) == arr[:, None]
        join = np.empty((size, size), dtype=np.int64)
        for i, mi in enumerate(masks):
            for j, mj in enumerate(masks):
                union = mi | mj
                if union not in position:
                    raise NotDualType(
                        f"Union of dual types {i} and {j} is not a dual type", witness=(mi, mj)
                    )
                join[i, j] = position[union]
        labels = [primal.labels[PASSIVE]] + [
            "{" + ",".join(primal.labels[a] for a in range(len(primal)) if m >> a & 1) + "}"
            for m in masks[1:]
        ]
        super().__init__(labels, order, join)
        self.primal = primal
        self.masks = tuple(masks)
        self._position = position
        contains = np.zeros((size, len(primal)), dtype=bool)
        for i, m in enumerate(masks):
            for a in range(len(primal)):
                contains[i, a] = bool(m >> a & 1)
        contains.setflags(write=False)
        self.contains = contains
        self.identification = self._identify() if primal.is_multi_colour() else None

    def members(self, d: int) -> frozenset:
        return frozenset(a for a in range(len(self.primal)) if self.masks[d] >> a & 1)

    def index_of(self, members: Iterable[int]) -> int:
        mask = 0
        for a in members:
            mask |= 1 << a
        return self.index_of_mask(mask)

    def index_of_mask(self, mask: int) -> int:
        try:
            return self._position[mask]
        except KeyError:
            raise NotDualType(f"{bin(mask)} is not a dual type", witness=mask) from None

    def indices_of_masks(self, masks: np.ndarray) -> np.ndarray:
        """Vectorized ``index_of_mask``."""
        keys = np.array(sorted(self._position), dtype=np.int64)
        values = np.array([self._position[k] for k in keys], dtype=np.int64)
        pos = np.clip(np.searchsorted(keys, masks), 0, len(keys) - 1)
        found = keys[pos] == masks
        if not found.all():
            bad = int(np.asarray(masks)[~found].flat[0])
            raise NotDualType(f"{bin(bad)} is not increasing and decomposable", witness=bad)
        return values[pos]

    def _identify(self) -> dict[int, int]:
        primal = self.primal
        ident = {}
        for b in primal.active:
            mask = 0
            for c in primal.active:
                if succ(primal.colours(c), primal.colours(b), primal):
                    mask |= 1 << c
            ident[b] = self.index_of_mask(mask)
        if sorted(ident.values()) != list(range(1, len(self))):
            raise NotDualType("Identification with E_b is not a bijection", witness=ident)
        return ident


def enumerate_dual_types(lattice: TypeLattice, warn_above: int = DUAL_WARN_TYPES) -> DualLattice:
    """All increasing, decomposable subsets of active types, by brute force over bitmasks."""
    n = len(lattice)
    if n > warn_above:
        logger.warning("Enumerating dual types over %d types scans 2^%d subsets", n, n - 1)
    increasing = [(a, b) for a in lattice.active for b in lattice.active if lattice.less(a, b)]
    decomposable = [
        (a, b, lattice.join(a, b))
        for a in lattice.active
        for b in lattice.active
        if a < b and lattice.is_incomparable(a, b)
    ]
    total = 1 << (n - 1)
    kept = []
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(total, start + _CHUNK), dtype=np.int64) << 1
        ok = np.ones(len(masks), dtype=bool)
        for a, b in increasing:
            ok &= ~(_bit(masks, a) & ~_bit(masks, b))
        for a, b, c in decomposable:
            ok &= ~(_bit(masks, c) & ~_bit(masks, a) & ~_bit(masks, b))
        kept.extend(int(m) for m in masks[ok])
    logger.debug("Lattice of %d types has %d dual types", n, len(kept))
    return DualLattice(lattice, kept)


def compatible(phi, theta, dual: DualLattice) -> bool:
    """``phi ~ theta``: some site carries an active type belonging to the dual set there."""
    phi, theta = np.asarray(phi), np.asarray(theta)
    return bool(dual.contains[theta, phi].any())


def compatibility_matrix(configs: np.ndarray, dual_configs: np.ndarray, dual: DualLattice) -> np.ndarray:
    """``result[i, j] = configs[i] ~ dual_configs[j]``."""
    rows = max(1, _COMPAT_CELLS // max(1, len(dual_configs)))
    out = np.zeros((len(configs), len(dual_configs)), dtype=bool)
    for start in range(0, len(configs), rows):
        block = configs[start : start + rows]
        acc = np.zeros((len(block), len(dual_configs)), dtype=bool)
        for x in range(configs.shape[1]):
            acc |= dual.contains[dual_configs[None, :, x], block[:, None, x]]
        out[start : start + rows] = acc
    return out


def _dual_masks(e: LocalMapping, lattice: TypeLattice, dual: DualLattice) -> np.ndarray:
    k = e.arity
    thetas = all_configurations(len(dual), k)
    images = e.single_site_images()
    masks = np.zeros((len(thetas), k), dtype=np.int64)
    for y in range(k):
        for a in lattice.active:
            hit = np.zeros(len(thetas), dtype=bool)
            for x in range(k):
                hit |= dual.contains[thetas[:, x], images[y, a, x]]
            masks[:, y] |= hit.astype(np.int64) << a
    return masks


def _equivalence_witness(e: LocalMapping, dual_table: np.ndarray, dual: DualLattice):
    """First ``(phi, theta)`` with ``e(phi) ~ theta`` differing from ``phi ~ e~(theta)``."""
    phis = all_configurations(e.n_types, e.arity)
    thetas = all_configurations(len(dual), e.arity)
    forward = compatibility_matrix(e.table, thetas, dual)
    backward = compatibility_matrix(phis, dual_table, dual)
    bad = np.argwhere(forward != backward)
    if bad.size == 0:
        return None
    i, j = bad[0]
    return tuple(map(int, phis[i])), tuple(map(int, thetas[j]))


def dual_mapping(
    e: LocalMapping,
    lattice: TypeLattice,
    dual: DualLattice | None = None,
    max_entries: int = MAX_TABLE_ENTRIES,
) -> LocalMapping:
    """Dual of an additive mapping: ``e~(theta)(x) = {a : e(delta_x(a)) ~ theta}``.

    The compatibility equivalence ``e(phi) ~ theta <=> phi ~ e~(theta)`` is verified on every
    pair before the mapping is returned.

    Raises:
        NotAdditive: ``e`` is not additive.
        NotDualType: A computed set is not a dual type, or the equivalence fails.
    """
    check = is_additive(e, lattice)
    if not check:
        raise NotAdditive(f"Mapping {e.name} is not additive", witness=check.witness)
    dual = dual or enumerate_dual_types(lattice)
    check_table_size(len(dual), e.arity, max_entries)
    table = dual.indices_of_masks(_dual_masks(e, lattice, dual))
    witness = _equivalence_witness(e, table, dual)
    if witness is not None:
        raise NotDualType(f"Dual of {e.name} breaks compatibility", witness=witness)
    return LocalMapping(e.template, table, len(dual), e.rate, f"{e.name}~")


def admits_dual(e: LocalMapping, lattice: TypeLattice, dual: DualLattice | None = None) -> PropertyCheck:
    """Whether the dual-mapping formula yields a mapping satisfying the compatibility equivalence.

    No additivity precondition; on multi-colour lattices this agrees with ``is_additive``.
    """
    dual = dual or enumerate_dual_types(lattice)
    masks = _dual_masks(e, lattice, dual)
    try:
        table = dual.indices_of_masks(masks)
    except NotDualType as err:
        return PropertyCheck(False, ("not a dual type", err.witness))
    witness = _equivalence_witness(e, table, dual)
    return PropertyCheck(witness is None, witness)


def dual_model(model: GrowthModel, dual: DualLattice | None = None) -> GrowthModel:
    """The dual growth model on the dual lattice, mapping by mapping."""
    dual = dual or enumerate_dual_types(model.lattice)
    return replace(
        model,
        name=f"dual({model.name})",
        lattice=dual,
        **model.map_mappings(lambda e: dual_mapping(e, model.lattice, dual)),
        description=f"Dual of {model.name}",
        projection=None,
    )


def _signature(lattice: TypeLattice, a: int) -> tuple[int, int]:
    return int(lattice.order[:, a].sum()), int(lattice.order[a, :].sum())


def lattice_isomorphisms(
    source: TypeLattice, target: TypeLattice, limit: int = ISOMORPHISM_SEARCH_TYPES
) -> Iterator[np.ndarray]:
    """Order isomorphisms ``source -> target`` as relabelling arrays.

    Exhaustive backtracking up to ``limit`` types; above it only the candidate matching types by
    their down-set and up-set sizes is tried.
    """
    n = len(source)
    if n != len(target):
        return
    sig_s = [_signature(source, a) for a in range(n)]
    sig_t = [_signature(target, b) for b in range(n)]
    if sorted(sig_s) != sorted(sig_t):
        return
    if n > limit:
        logger.warning("Isomorphism search over %d types tries a single candidate", n)
        sigma = np.empty(n, dtype=np.int64)
        sigma[sorted(range(n), key=lambda a: (sig_s[a], a))] = sorted(range(n), key=lambda b: (sig_t[b], b))
        if np.array_equal(source.order, target.order[np.ix_(sigma, sigma)]):
            yield sigma
        return

    sigma = [-1] * n
    used = [False] * n

    def extend(a: int):
        if a == n:
            yield np.array(sigma, dtype=np.int64)
            return
        for b in range(n):
            if used[b] or sig_t[b] != sig_s[a]:
                continue
            if all(
                source.order[c, a] == target.order[sigma[c], b] and source.order[a, c] == target.order[b, sigma[c]]
                for c in range(a)
            ):
                sigma[a], used[b] = b, True
                yield from extend(a + 1)
                sigma[a], used[b] = -1, False

    yield from extend(0)


def isomorphic_models(first: GrowthModel, second: GrowthModel) -> dict[int, int] | None:
    """A type relabelling carrying ``first`` onto ``second``, if any.

    Models are compared as rate-weighted multisets of mappings up to site order and
    translation; identity mappings are ignored.
    """
    target = canonical_model(second.mappings)
    for sigma in lattice_isomorphisms(first.lattice, second.lattice):
        if same_weights(canonical_model(first.mappings, sigma), target):
            return {a: int(b) for a, b in enumerate(sigma)}
    return None


def is_self_dual(model: GrowthModel) -> dict[int, int] | None:
    """Relabelling from dual types to types under which the dual model equals the model."""
    return isomorphic_models(dual_model(model), model)


def double_dual_check(model: GrowthModel) -> PropertyCheck:
    """Verify the identification ``b <-> lambda_b`` with the double dual on every template.

    Checks ``phi ~ theta <=> theta ~ Xi_phi`` and ``e^(Xi_phi) = Xi_e(phi)`` exhaustively.

    Raises:
        NotMultiColour: The lattice has a compound type with several decompositions.
    """
    lattice = model.lattice
    if not lattice.is_multi_colour():
        raise NotMultiColour(f"{model.name} is not multi-colour", witness=model.name)
    dual = enumerate_dual_types(lattice)
    double = enumerate_dual_types(dual)
    lam = np.zeros(len(lattice), dtype=np.int64)
    for b in lattice.active:
        colours = lattice.colours(b)
        mask = 0
        for d in dual.active:
            if dual.members(d) & colours:
                mask |= 1 << d
        lam[b] = double.index_of_mask(mask)

    for e in model.mappings:
        phis = all_configurations(len(lattice), e.arity)
        thetas = all_configurations(len(dual), e.arity)
        xi = lam[phis]
        forward = compatibility_matrix(phis, thetas, dual)
        backward = compatibility_matrix(thetas, xi, double).T
        if not np.array_equal(forward, backward):
            i, j = np.argwhere(forward != backward)[0]
            return PropertyCheck(False, (e.name, tuple(map(int, phis[i])), tuple(map(int, thetas[j]))))
        e_dual = dual_mapping(e, lattice, dual)
        e_double = dual_mapping(e_dual, dual, double)
        lhs = e_double.table[encode(xi, len(double))]
        rhs = lam[e.table]
        if not np.array_equal(lhs, rhs):
            i = int(np.flatnonzero((lhs != rhs).any(axis=1))[0])
            return PropertyCheck(False, (e.name, tuple(map(int, phis[i]))))
    return PropertyCheck(True, details={"identification": {int(b): int(lam[b]) for b in lattice.active}})


def square_join(first: ColourCombination, second: ColourCombination, lattice: TypeLattice) -> ColourCombination:
    """Minimal elements of the union; empty (passive) only when both are empty."""
    return lattice.minimal(first | second)


def succ(upper: ColourCombination, lower: ColourCombination, lattice: TypeLattice) -> bool:
    """``upper > lower``: some member of ``upper`` is at or above some member of ``lower``."""
    return any(lattice.order[a, b] for a in lower for b in upper)
