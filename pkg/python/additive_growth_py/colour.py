"""Multi-colour expansion of a type lattice and the lift of additive models onto it."""

import logging
from dataclasses import dataclass, replace

import numpy as np

from .eventmodel import GrowthModel, LocalMapping, is_additive
from .typelattice import ColourCombination, TypeLattice
from .types import MAX_TABLE_ENTRIES, PASSIVE, CommutationFailure, NotAdditive
from .utils import all_configurations, check_table_size

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Expansion:
    """The lattice of colour combinations and its projection onto the base lattice.

    Attributes:
        base: The lattice that was expanded.
        star_lattice: Types are ``0`` and every colour combination of ``base``.
        combinations: ``combinations[c]`` is the colour combination of star type ``c``.
        projection: ``projection[c]`` is the join in ``base`` of the members of ``c``.
    """

    base: TypeLattice
    star_lattice: TypeLattice
    combinations: tuple[ColourCombination, ...]
    projection: np.ndarray

    def star_type(self, combination) -> int:
        return self.combinations.index(frozenset(combination))

    def preimage(self, b: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self.projection == b))


def expand(lattice: TypeLattice) -> Expansion:
    """Build the multi-colour expansion of ``lattice``."""
    combos = sorted(lattice.colour_combinations(), key=lambda c: (len(c), sorted(c)))
    combos = [frozenset()] + combos
    n = len(combos)
    order = np.zeros((n, n), dtype=bool)
    for i, ci in enumerate(combos):
        for j, cj in enumerate(combos):
            order[i, j] = all(any(lattice.order[a, b] for b in cj) for a in ci)
    position = {c: i for i, c in enumerate(combos)}
    join = np.empty((n, n), dtype=np.int64)
    for i, ci in enumerate(combos):
        for j, cj in enumerate(combos):
            join[i, j] = position[lattice.colour_join(ci, cj)]
    labels = [lattice.labels[PASSIVE]] + [
        "∨".join(lattice.labels[a] for a in sorted(c)) for c in combos[1:]
    ]
    star = TypeLattice(labels, order, join)
    projection = np.array([lattice.join_all(c) for c in combos], dtype=np.int64)
    projection.setflags(write=False)
    logger.debug("Expanded %d types into %d colour combinations", len(lattice), n)
    return Expansion(lattice, star, tuple(combos), projection)


def _join_preimage(expansion: Expansion, config) -> np.ndarray:
    """Pointwise join of every star type projecting onto each entry of ``config``."""
    star = expansion.star_lattice
    return np.array([star.join_all(expansion.preimage(int(v))) for v in config], dtype=np.int64)


def lift_mapping(
    e: LocalMapping,
    expansion: Expansion,
    max_entries: int = MAX_TABLE_ENTRIES,
) -> LocalMapping:
    """Lift an additive mapping to the expansion, layer by layer over the primitive types.

    Raises:
        NotAdditive: ``e`` is not additive on the base lattice.
        CommutationFailure: The lift does not project onto ``e``.
    """
    base, star = expansion.base, expansion.star_lattice
    check = is_additive(e, base)
    if not check:
        raise NotAdditive(f"Mapping {e.name} is not additive", witness=check.witness)
    k, m = e.arity, len(star)
    check_table_size(m, k, max_entries)
    images = e.single_site_images()
    join = star.join_table

    lifted = np.zeros((k, m, k), dtype=np.int64)
    for x in range(k):
        done: list[int] = []
        for layer in base.layer_partition(base.primitives):
            for a in sorted(layer):
                value = _join_preimage(expansion, images[x, a])
                for smaller in done:
                    if base.less(smaller, a):
                        value = join[value, lifted[x, expansion.star_type({smaller})]]
                lifted[x, expansion.star_type({a})] = value
            done.extend(sorted(layer))
        for c, combo in enumerate(expansion.combinations):
            if len(combo) > 1:
                value = np.zeros(k, dtype=np.int64)
                for a in combo:
                    value = join[value, lifted[x, expansion.star_type({a})]]
                lifted[x, c] = value

    configs = all_configurations(m, k)
    table = lifted[0, configs[:, 0]] if k else np.zeros((1, 0), dtype=np.int64)
    for x in range(1, k):
        table = join[table, lifted[x, configs[:, x]]]
    result = LocalMapping(e.template, table, m, e.rate, e.name)

    proj = expansion.projection
    base_codes = proj[configs] @ (len(base) ** np.arange(k - 1, -1, -1, dtype=np.int64))
    mismatch = (proj[table] != e.table[base_codes]).any(axis=1)
    if mismatch.any():
        i = int(np.flatnonzero(mismatch)[0])
        raise CommutationFailure(
            f"Lift of {e.name} does not commute with the projection", witness=tuple(map(int, configs[i]))
        )
    if not is_additive(result, star):
        raise CommutationFailure(f"Lift of {e.name} is not additive", witness=e.name)
    return result


def lift_model(model: GrowthModel, expansion: Expansion | None = None) -> GrowthModel:
    """The additive multi-colour model projecting onto ``model``."""
    expansion = expansion or expand(model.lattice)
    return replace(
        model,
        name=f"lift({model.name})",
        lattice=expansion.star_lattice,
        **model.map_mappings(lambda e: lift_mapping(e, expansion)),
        description=f"Multi-colour lift of {model.name}",
        projection=tuple(int(p) for p in expansion.projection),
    )


def project_configuration(config, expansion: Expansion) -> np.ndarray:
    """Pointwise projection of a configuration over the expansion."""
    return expansion.projection[np.asarray(config, dtype=np.int64)]
