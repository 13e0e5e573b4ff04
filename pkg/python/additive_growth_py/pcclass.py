"""Production relation, wax/wane classification, positive correlations and convergence preconditions."""

import itertools
import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .eventmodel import (
    GrowthModel,
    LocalMapping,
    SiteTemplate,
    canonical_model,
    same_weights,
)
from .typelattice import TypeLattice
from .types import (
    DEFAULT_MAX_SITES,
    FateVerdict,
    MappingClass,
    NotMultiColour,
    ProductionCategory,
    Verdict,
)
from .utils import PropertyCheck, ValidationReport, all_configurations

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProductionRecord:
    """Organism ``source`` produces organism ``product`` under mapping ``mapping``."""

    source: tuple[int, int]
    product: tuple[int, int]
    mapping: str


@dataclass(frozen=True)
class OrganismFate:
    """Wax/wane verdict and production pattern of one organism under one mapping."""

    organism: tuple[int, int]
    waxes: bool
    wanes: bool
    category: ProductionCategory
    products: frozenset

    @property
    def verdict(self) -> FateVerdict:
        if self.waxes:
            return FateVerdict.WAXES
        if self.wanes:
            return FateVerdict.WANES
        return FateVerdict.NEITHER


def _require_multi_colour(lattice: TypeLattice) -> None:
    if not lattice.is_multi_colour():
        raise NotMultiColour("Production needs unique colour decompositions", witness=lattice.labels)


def produces(e: LocalMapping, x: int, a: int, lattice: TypeLattice) -> frozenset:
    """Organisms ``(y, b)`` with ``b`` in the colours of ``e(delta_x(a))(y)``; sites are template positions."""
    _require_multi_colour(lattice)
    image = e.single_site_images()[x, a]
    return frozenset((y, b) for y, value in enumerate(image) for b in lattice.colours(int(value)))


def production_records(e: LocalMapping, lattice: TypeLattice) -> list[ProductionRecord]:
    return [
        ProductionRecord((x, a), product, e.name)
        for x in range(e.arity)
        for a in lattice.primitives
        for product in sorted(produces(e, x, a, lattice))
    ]


def _waxes(products, x, a, lattice) -> bool:
    return any(y == x and lattice.order[a, b] for y, b in products)


def _wanes(products, x, a, lattice) -> bool:
    return all(y == x and lattice.order[b, a] for y, b in products)


def classify_organism(e: LocalMapping, x: int, a: int, lattice: TypeLattice) -> OrganismFate:
    """Verdict and best-matching production pattern of organism ``(x, a)``."""
    products = produces(e, x, a, lattice)
    waxes, wanes = _waxes(products, x, a, lattice), _wanes(products, x, a, lattice)
    here = {b for y, b in products if y == x}
    elsewhere = {(y, b) for y, b in products if y != x}

    if products == {(x, a)}:
        category = ProductionCategory.PERSISTENCE
    elif not products:
        category = ProductionCategory.DEATH
        # some neighbour restores the organism
        for z in range(e.arity):
            for c in lattice.primitives:
                if (z, c) != (x, a) and any(
                    y == x and lattice.order[a, b] for y, b in produces(e, z, c, lattice)
                ):
                    category = ProductionCategory.NEIGHBOUR_ASSISTED_SURVIVAL
    elif not here:
        if len(elsewhere) == 1 and next(iter(elsewhere))[1] == a:
            category = ProductionCategory.MOVEMENT
        else:
            category = ProductionCategory.DEATH_WITH_DISPERSAL
    elif a in here and (elsewhere or len(here) > 1):
        category = ProductionCategory.BIRTH
    elif len(here) == 1 and not elsewhere:
        (b,) = here
        if lattice.less(a, b):
            category = ProductionCategory.PROMOTION
        elif lattice.less(b, a):
            category = ProductionCategory.DEMOTION
        else:
            category = ProductionCategory.TRANSMUTATION
    else:
        category = ProductionCategory.OTHER
    return OrganismFate((x, a), waxes, wanes, category, products)


def organism_fates(e: LocalMapping, lattice: TypeLattice) -> list[OrganismFate]:
    return [classify_organism(e, x, a, lattice) for x in range(e.arity) for a in lattice.primitives]


def classify_mapping(e: LocalMapping, lattice: TypeLattice) -> MappingClass:
    """Productive if every organism waxes, destructive if every organism wanes."""
    fates = organism_fates(e, lattice)
    if all(f.waxes for f in fates):
        return MappingClass.PRODUCTIVE
    if all(f.wanes for f in fates):
        return MappingClass.DESTRUCTIVE
    return MappingClass.MIXED


def _mapping_pc(e: LocalMapping, lattice: TypeLattice) -> tuple | None:
    fates = organism_fates(e, lattice)
    for fate in fates:
        if not fate.waxes and not fate.wanes:
            return ("neither waxes nor wanes", e.name, fate.organism)
    images = e.single_site_images()
    waxers = [f.organism for f in fates if f.waxes and not f.wanes]
    waners = [f.organism for f in fates if f.wanes and not f.waxes]
    for (x, a), (y, b) in itertools.product(waxers, waners):
        if x == y and not lattice.is_incomparable(a, b):
            continue
        produced = images[x, a]
        if lattice.order[b, produced[y]]:
            continue  # compensated
        pair = np.zeros(e.arity, dtype=np.int64)
        pair[x] = a
        pair[y] = lattice.join(int(pair[y]), b)
        if lattice.config_leq(produced, pair):
            continue  # the waxer only rearranges what the pair already holds
        return ("loss not compensated", e.name, (x, a), (y, b))
    return None


def has_pc(model: GrowthModel) -> PropertyCheck:
    """Positive correlations of an additive multi-colour model, mapping by mapping.

    Raises:
        NotMultiColour: The lattice is not multi-colour.
    """
    _require_multi_colour(model.lattice)
    for e in model.mappings:
        witness = _mapping_pc(e, model.lattice)
        if witness is not None:
            return PropertyCheck(False, witness)
    return PropertyCheck(True)


def brute_pc(model: GrowthModel) -> PropertyCheck:
    """Every transition is between comparable states: ``e(phi) >= phi`` or ``e(phi) <= phi``."""
    order = model.lattice.order
    for e in model.mappings:
        configs = all_configurations(e.n_types, e.arity)
        up = order[configs, e.table].all(axis=1)
        down = order[e.table, configs].all(axis=1)
        bad = np.flatnonzero(~(up | down))
        if bad.size:
            i = bad[0]
            return PropertyCheck(False, (e.name, tuple(map(int, configs[i])), tuple(map(int, e.table[i]))))
    return PropertyCheck(True)


def is_simple(model: GrowthModel) -> bool:
    """Every mapping is productive or destructive."""
    return all(classify_mapping(e, model.lattice) != MappingClass.MIXED for e in model.mappings)


@dataclass(frozen=True)
class ConvergenceConditions:
    """Preconditions for complete convergence."""

    irreducible: ValidationReport
    translation_invariant: bool
    symmetric: bool
    simple: bool

    @property
    def all_pass(self) -> bool:
        return self.irreducible.ok and self.translation_invariant and self.symmetric and self.simple

    @property
    def failed(self) -> list[str]:
        names = []
        if self.irreducible.verdict == Verdict.FAIL:
            names.append("irreducible")
        if not self.translation_invariant:
            names.append("translation-invariant")
        if not self.symmetric:
            names.append("symmetric")
        if not self.simple:
            names.append("simple")
        return names

    def to_dict(self) -> dict:
        return {
            "irreducible": self.irreducible.verdict.value,
            "translation_invariant": self.translation_invariant,
            "symmetric": self.symmetric,
            "simple": self.simple,
        }


def _reflect(e: LocalMapping, axis: int) -> LocalMapping:
    sites = tuple(tuple(-c if i == axis else c for i, c in enumerate(s)) for s in e.sites)
    return LocalMapping(SiteTemplate(sites), e.table, e.n_types, e.rate, e.name)


def is_symmetric(model: GrowthModel) -> bool:
    """Offset templates are closed, rate for rate, under every coordinate reflection."""
    if not model.translation_invariant or model.dim is None:
        return False
    target = canonical_model(model.mappings)
    return all(
        same_weights(canonical_model(_reflect(e, axis) for e in model.mappings), target)
        for axis in range(model.dim)
    )


def _production_steps(model: GrowthModel) -> dict:
    """``steps[a]`` lists ``(b, displacement)`` for every organism type ``a`` can produce."""
    lattice = model.lattice
    steps: dict[int, set] = {a: set() for a in lattice.primitives}
    for e in model.mappings:
        offsets = np.array(e.sites)
        for x in range(e.arity):
            for a in lattice.primitives:
                for y, b in produces(e, x, a, lattice):
                    steps[a].add((b, tuple(int(c) for c in offsets[y] - offsets[x])))
    return steps


def check_irreducible(model: GrowthModel, max_sites: int = DEFAULT_MAX_SITES) -> ValidationReport:
    """Any organism can produce, through a chain of events, any organism type at any site.

    Explicit-site models: strong connectivity of the production graph on (type, site).
    Offset models: from each type at the origin, every type must be reached at the origin and at
    each unit displacement, searching displacements within ``max_sites`` and at most
    ``K = |F| (2M+1)^d`` nodes.
    """
    lattice = model.lattice
    _require_multi_colour(lattice)
    if not model.translation_invariant:
        graph = nx.DiGraph()
        for e in model.mappings:
            for x in range(e.arity):
                for a in lattice.primitives:
                    graph.add_node((a, e.sites[x]))
                    for y, b in produces(e, x, a, lattice):
                        graph.add_edge((a, e.sites[x]), (b, e.sites[y]))
        if graph.number_of_nodes() and nx.is_strongly_connected(graph):
            return ValidationReport(Verdict.OK, "irreducible", "production graph is strongly connected")
        components = list(nx.strongly_connected_components(graph))
        return ValidationReport(
            Verdict.FAIL, "irreducible", f"{len(components)} strongly connected components", components[:2]
        )

    dim = model.dim or 1
    budget = len(lattice) * (2 * max_sites + 1) ** dim
    steps = _production_steps(model)
    origin = (0,) * dim
    units = [origin] + [
        tuple(sign if i == axis else 0 for i in range(dim)) for axis in range(dim) for sign in (1, -1)
    ]
    clipped = False
    for a in lattice.primitives:
        targets = {(b, u) for b in lattice.primitives for u in units}
        graph = nx.DiGraph()
        graph.add_node((a, origin))
        frontier = [(a, origin)]
        while frontier and graph.number_of_nodes() < budget:
            node = frontier.pop()
            b, pos = node
            for c, step in steps[b]:
                nxt = (c, tuple(p + s for p, s in zip(pos, step)))
                if max(abs(v) for v in nxt[1]) > max_sites:
                    clipped = True
                    continue
                if nxt not in graph:
                    frontier.append(nxt)
                graph.add_edge(node, nxt)
        reached = nx.descendants(graph, (a, origin)) | {(a, origin)}
        missing = targets - reached
        if missing:
            if frontier or clipped:
                logger.warning("Irreducibility search from type %s stopped at its bound", a)
                return ValidationReport(
                    Verdict.INCONCLUSIVE, "irreducible", "search bound reached", (a, sorted(missing)[0])
                )
            return ValidationReport(
                Verdict.FAIL, "irreducible", f"type {lattice.labels[a]} cannot reach {sorted(missing)[0]}",
                (a, sorted(missing)[0]),
            )
    return ValidationReport(Verdict.OK, "irreducible", "every type reaches every type at every displacement")


def check_cc_conditions(model: GrowthModel, max_sites: int = DEFAULT_MAX_SITES) -> ConvergenceConditions:
    """Irreducibility, translation invariance, reflection symmetry and simplicity."""
    return ConvergenceConditions(
        irreducible=check_irreducible(model, max_sites),
        translation_invariant=model.translation_invariant,
        symmetric=is_symmetric(model),
        simple=is_simple(model),
    )


def production_generator(model: GrowthModel) -> np.ndarray:
    """Net expected production rate matrix over primitive types.

    ``G[i, j]`` is the rate at which one organism of the ``i``-th primitive type produces
    organisms of the ``j``-th, minus its own replacement. Explicit-site models are averaged
    over sites.
    """
    lattice = model.lattice
    prims = list(lattice.primitives)
    pos = {a: i for i, a in enumerate(prims)}
    gen = np.zeros((len(prims), len(prims)))
    sites = set()
    for e in model.mappings:
        sites.update(e.sites)
        for x in range(e.arity):
            for a in prims:
                gen[pos[a], pos[a]] -= e.rate
                for _, b in produces(e, x, a, lattice):
                    gen[pos[a], pos[b]] += e.rate
    if not model.translation_invariant and sites:
        gen /= len(sites)
    return gen


def growth_rate(model: GrowthModel) -> float:
    """Largest real part of the production generator's eigenvalues."""
    gen = production_generator(model)
    return float(np.linalg.eigvals(gen).real.max()) if gen.size else 0.0
