"""Built-in growth models.

Every constructor returns a :class:`GrowthModel` whose mappings are additive, with the rates of each
named parameter bound to the mappings they scale. Mappings of a parameter set to 0 are kept dormant
so that the parameter can be raised later. Constructors take either a lattice dimension (offset
templates, simulated on a torus) or a networkx graph (explicit templates, simulated on that graph).
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import networkx as nx

from .engine import GraphGeometry, Torus
from .eventmodel import EventStructure, GrowthModel, LocalMapping, SiteTemplate
from .typelattice import TypeLattice
from .utils import validate_positive_int, validate_rate

DEFAULT_SIDE = 10


def _origin(dim: int) -> tuple[int, ...]:
    return (0,) * dim


def _unit_offsets(dim: int) -> list[tuple[int, ...]]:
    offsets = []
    for axis in range(dim):
        for sign in (1, -1):
            offsets.append(tuple(sign if i == axis else 0 for i in range(dim)))
    return offsets


def _single_sites(dim: int, graph: nx.Graph | None) -> list[tuple[str, SiteTemplate]]:
    if graph is None:
        return [("", SiteTemplate((_origin(dim),)))]
    return [(f"@{x}", SiteTemplate((x,), explicit=True)) for x in graph.nodes]


def _directed_pairs(dim: int, graph: nx.Graph | None) -> list[tuple[str, SiteTemplate]]:
    """Source/target templates: every unit offset, or both orientations of every edge."""
    if graph is None:
        return [(str(u), SiteTemplate((_origin(dim), u))) for u in _unit_offsets(dim)]
    pairs = []
    for u, v in graph.edges:
        pairs.append((f"@{u}->{v}", SiteTemplate((u, v), explicit=True)))
        pairs.append((f"@{v}->{u}", SiteTemplate((v, u), explicit=True)))
    return pairs


def _geometry(dim: int, graph: nx.Graph | None, side: int = DEFAULT_SIDE):
    return Torus((side,) * dim) if graph is None else GraphGeometry(graph)


@dataclass
class _ModelBuilder:
    lattice: TypeLattice
    parameters: dict[str, float] = field(default_factory=dict)
    mappings: list[LocalMapping] = field(default_factory=list)
    bindings: dict[str, list[int]] = field(default_factory=lambda: defaultdict(list))
    dormant: dict[str, list[LocalMapping]] = field(default_factory=lambda: defaultdict(list))

    def add(
        self,
        template: SiteTemplate,
        name: str,
        rule: Callable[[tuple], Sequence[int]],
        rate: float = 1.0,
        parameter: str | None = None,
    ) -> None:
        """Add a mapping at ``rate``, or at ``rate`` times the value of ``parameter`` when one is named.

        Mappings of a parameter that is 0 are kept dormant at unit parameter value.
        """
        if rate == 0:
            return
        rate = float(rate)
        mapping = LocalMapping.from_rule(template, len(self.lattice), rule, rate, name)
        if parameter is None:
            self.mappings.append(mapping)
            return
        value = self.parameters[parameter]
        if value == 0:
            self.dormant[parameter].append(mapping)
            return
        self.bindings[parameter].append(len(self.mappings))
        self.mappings.append(mapping.with_rate(rate * value))

    def build(self, name: str, geometry, description: str, citation: str = "") -> GrowthModel:
        return GrowthModel(
            name=name,
            lattice=self.lattice,
            structure=EventStructure(tuple(self.mappings)),
            parameters=dict(self.parameters),
            bindings={p: tuple(self.bindings.get(p, ())) for p in self.parameters},
            dormant={p: tuple(ms) for p, ms in self.dormant.items()},
            geometry=geometry,
            description=description,
            citation=citation,
        )


def _kill(config: tuple) -> tuple:
    return (0,) * len(config)


def _flip(before: int, after: int) -> Callable[[tuple], tuple]:
    return lambda c: (after,) if c[0] == before else c


def _infect_if(source_ok: Callable[[int], bool], join: Callable[[int, int], int], value: int):
    """Pair rule: when the source qualifies, the target becomes ``target v value``."""
    return lambda c: (c[0], join(c[1], value)) if source_ok(c[0]) else c


def contact_process(lam: float = 2.0, dim: int = 1, graph: nx.Graph | None = None) -> GrowthModel:
    """Two types; each occupied site dies at rate 1 and infects each neighbour at rate ``lam``."""
    validate_rate(lam, "lambda")
    builder = _ModelBuilder(TypeLattice.chain(2), {"lambda": lam})
    for suffix, template in _single_sites(dim, graph):
        builder.add(template, f"death{suffix}", _kill)
    for suffix, template in _directed_pairs(dim, graph):
        builder.add(template, f"transmission{suffix}", _infect_if(lambda a: a == 1, max, 1), parameter="lambda")
    return builder.build("contact", _geometry(dim, graph), "Contact process", "Harris (1974)")


def n_stage_contact(
    n: int = 2, lam: float = 2.0, gamma: float = 1.0, dim: int = 1, graph: nx.Graph | None = None
) -> GrowthModel:
    """Types ``0..n``; ``i -> i+1`` at rate ``gamma``, any active type dies at rate 1, and type ``n``
    infects empty neighbours with type 1 at rate ``lam``.

    Deaths are a single mapping sending every active type to 0, so the death events of the
    different stages are shared.
    """
    validate_positive_int(n, "N")
    validate_rate(lam, "lambda")
    validate_rate(gamma, "gamma")
    builder = _ModelBuilder(TypeLattice.chain(n + 1), {"lambda": lam, "gamma": gamma})
    for suffix, template in _single_sites(dim, graph):
        builder.add(template, f"death{suffix}", _kill)
        for i in range(1, n):
            builder.add(template, f"onset{i}{suffix}", _flip(i, i + 1), parameter="gamma")
    for suffix, template in _directed_pairs(dim, graph):
        builder.add(template, f"transmission{suffix}", _infect_if(lambda a: a == n, max, 1), parameter="lambda")
    return builder.build(f"nstage{n}", _geometry(dim, graph), f"{n}-stage contact process")


def _diamond() -> TypeLattice:
    return TypeLattice.from_covers(["0", "1", "2", "3", "4"], [(1, 4), (2, 4), (3, 4)])


def three_type_system(lam: float = 2.0, dim: int = 1, graph: nx.Graph | None = None) -> GrowthModel:
    """Three primitive types whose pairwise joins are all the top type.

    Every active site dies at rate 1 and, for each ``k`` in 1..3, adds ``k`` to each neighbour at
    rate ``lam / 3``. The lattice is not multi-colour; its lift has eight types.
    """
    validate_rate(lam, "lambda")
    lattice = _diamond()
    builder = _ModelBuilder(lattice, {"lambda": lam})
    for suffix, template in _single_sites(dim, graph):
        builder.add(template, f"death{suffix}", _kill)
    for suffix, template in _directed_pairs(dim, graph):
        for k in (1, 2, 3):
            birth = _infect_if(lambda a: a != 0, lattice.join, k)
            builder.add(template, f"birth{k}{suffix}", birth, 1 / 3, "lambda")
    return builder.build("three-type", _geometry(dim, graph), "Three-type system on the diamond lattice")


def two_stage_contact(
    lam: float = 2.0,
    gamma: float = 2.0,
    delta: float = 0.0,
    dim: int = 1,
    graph: nx.Graph | None = None,
) -> GrowthModel:
    """Juveniles (1) mature into adults (2) at rate ``gamma``; only adults infect.

    Both types recover at rate 1 through one shared mapping; juveniles recover at an extra rate ``delta``.
    """
    parameters = {"lambda": lam, "gamma": gamma, "delta": delta}
    for name, value in parameters.items():
        validate_rate(value, name)
    builder = _ModelBuilder(TypeLattice.chain(3), parameters)
    for suffix, template in _single_sites(dim, graph):
        builder.add(template, f"recovery{suffix}", _kill)
        builder.add(template, f"juvenile-recovery{suffix}", _flip(1, 0), parameter="delta")
        builder.add(template, f"onset{suffix}", _flip(1, 2), parameter="gamma")
    for suffix, template in _directed_pairs(dim, graph):
        builder.add(template, f"transmission{suffix}", _infect_if(lambda a: a == 2, max, 1), parameter="lambda")
    return builder.build("two-stage", _geometry(dim, graph), "Two-stage contact process", "Krone (1999)")


def _bipartite() -> TypeLattice:
    return TypeLattice.from_covers(["0", "m", "f", "m∨f"], [("m", "m∨f"), ("f", "m∨f")])


def bipartite_infection(lam: float = 2.0, dim: int = 1, graph: nx.Graph | None = None) -> GrowthModel:
    """Males (m) and females (f) may share a site; each infects the other sex.

    Each sex recovers at rate 1, a site holding one sex acquires the other at rate ``lam``, and an
    infected sex infects the other sex at each neighbour at rate ``lam``.
    """
    validate_rate(lam, "lambda")
    lattice = _bipartite()
    m, f, both = lattice.index("m"), lattice.index("f"), lattice.index("m∨f")
    drop = {m: {m: 0, both: f}, f: {f: 0, both: m}}
    builder = _ModelBuilder(lattice, {"lambda": lam})
    for suffix, template in _single_sites(dim, graph):
        builder.add(template, f"recovery-m{suffix}", lambda c: (drop[m].get(c[0], c[0]),))
        builder.add(template, f"recovery-f{suffix}", lambda c: (drop[f].get(c[0], c[0]),))
        builder.add(template, f"local-f{suffix}", _flip(m, both), parameter="lambda")
        builder.add(template, f"local-m{suffix}", _flip(f, both), parameter="lambda")
    for suffix, template in _directed_pairs(dim, graph):
        m_infects = _infect_if(lambda a: lattice.leq(m, a), lattice.join, f)
        f_infects = _infect_if(lambda a: lattice.leq(f, a), lattice.join, m)
        builder.add(template, f"m-infects-f{suffix}", m_infects, parameter="lambda")
        builder.add(template, f"f-infects-m{suffix}", f_infects, parameter="lambda")
    return builder.build("bipartite", _geometry(dim, graph), "Bipartite infection model")


def household(
    n: int = 2,
    lam: float = 2.0,
    gamma: float = 1.0,
    variant: int = 1,
    dim: int = 1,
    graph: nx.Graph | None = None,
) -> GrowthModel:
    """Households of up to ``n`` infected; ``i -> i+1`` at rate ``i * gamma``, any household recovers at rate 1.

    Variant 1 infects an empty neighbour at rate ``lam`` from a full household. Variant 2 uses one
    transmission mapping per ``k`` in 1..n, firing from households of size at least ``k``, so an
    ``i``-household infects at rate ``i * lam``.
    """
    validate_positive_int(n, "N")
    validate_rate(lam, "lambda")
    validate_rate(gamma, "gamma")
    if variant not in (1, 2):
        raise ValueError(f"Household variant must be 1 or 2, got {variant}")
    builder = _ModelBuilder(TypeLattice.chain(n + 1), {"lambda": lam, "gamma": gamma})
    for suffix, template in _single_sites(dim, graph):
        builder.add(template, f"recovery{suffix}", _kill)
        for i in range(1, n):
            builder.add(template, f"onset{i}{suffix}", _flip(i, i + 1), i, "gamma")
    thresholds = [n] if variant == 1 else range(1, n + 1)
    for suffix, template in _directed_pairs(dim, graph):
        for k in thresholds:
            transmission = _infect_if(lambda a, k=k: a >= k, max, 1)
            builder.add(template, f"transmission{k}{suffix}", transmission, parameter="lambda")
    return builder.build(f"household{n}v{variant}", _geometry(dim, graph), f"Household model, variant {variant}")


Dispersal = Iterable[tuple[object, Iterable[object], float]]


def _dispersal_model(
    dispersal: Dispersal, graph: nx.Graph | None, kind: str, rule_for: Callable[[bool, int], Callable]
) -> GrowthModel:
    entries = [(x, frozenset(targets), float(rate)) for x, targets, rate in dispersal]
    if graph is None:
        graph = nx.Graph()
        for x, targets, _ in entries:
            graph.add_node(x)
            graph.add_edges_from((x, y) for y in targets if y != x)
    builder = _ModelBuilder(TypeLattice.chain(2))
    for i, (x, targets, rate) in enumerate(entries):
        validate_rate(rate, f"dispersal rate of {x}")
        others = sorted(targets - {x}, key=repr)
        template = SiteTemplate((x, *others), explicit=True)
        builder.add(template, f"{kind}@{x}#{i}", rule_for(x in targets, len(others)), rate)
    return builder.build(kind, GraphGeometry(graph), f"{kind.capitalize()} process")


def _dandelion_rule(keeps_self: bool, n_targets: int):
    def rule(c):
        if c[0] == 0:
            return c
        return (1 if keeps_self else 0,) + (1,) * n_targets

    return rule


def _helper_rule(keeps_self: bool, n_targets: int):
    def rule(c):
        helped = any(c[1:]) or (keeps_self and c[0] == 1)
        return (1 if helped else 0,) + tuple(c[1:])

    return rule


def dandelion(dispersal: Dispersal | None = None, graph: nx.Graph | None = None) -> GrowthModel:
    """At rate ``p(x, A)`` an occupied ``x`` dies and occupies every site of ``A``.

    ``dispersal`` lists ``(x, A, p(x, A))``; an empty ``A`` is a plain death. Defaults to the
    dispersal of :func:`default_dispersal` on a 4-cycle.
    """
    dispersal = default_dispersal(nx.cycle_graph(4)) if dispersal is None else dispersal
    return _dispersal_model(dispersal, graph, "dandelion", _dandelion_rule)


def helper(dispersal: Dispersal | None = None, graph: nx.Graph | None = None) -> GrowthModel:
    """At rate ``p(x, A)`` site ``x`` becomes occupied if some site of ``A`` is occupied, else empty."""
    dispersal = default_dispersal(nx.cycle_graph(4)) if dispersal is None else dispersal
    return _dispersal_model(dispersal, graph, "helper", _helper_rule)


def default_dispersal(graph: nx.Graph, rate: float = 1.0) -> list[tuple[object, frozenset, float]]:
    """Each site dies at ``rate / 2`` and disperses to all its neighbours at ``rate / 2``.

    A site without neighbours only dies, at ``rate``.
    """
    entries = []
    for x in graph.nodes:
        neighbours = frozenset(graph.neighbors(x)) - {x}
        if neighbours:
            entries.extend(((x, frozenset(), rate / 2), (x, neighbours, rate / 2)))
        else:
            entries.append((x, frozenset(), rate))
    return entries


@dataclass(frozen=True)
class ZooEntry:
    """A named constructor and the keyword arguments it accepts from the command line."""

    name: str
    build: Callable[..., GrowthModel]
    arguments: dict[str, type]
    summary: str


ZOO: dict[str, ZooEntry] = {
    entry.name: entry
    for entry in (
        ZooEntry("contact", contact_process, {"lam": float, "dim": int}, "Contact process"),
        ZooEntry(
            "nstage",
            n_stage_contact,
            {"n": int, "lam": float, "gamma": float, "dim": int},
            "N-stage contact process",
        ),
        ZooEntry("three-type", three_type_system, {"lam": float, "dim": int}, "Three-type system, not multi-colour"),
        ZooEntry(
            "two-stage",
            two_stage_contact,
            {"lam": float, "gamma": float, "delta": float, "dim": int},
            "Two-stage contact process",
        ),
        ZooEntry("bipartite", bipartite_infection, {"lam": float, "dim": int}, "Bipartite infection model"),
        ZooEntry(
            "household",
            household,
            {"n": int, "lam": float, "gamma": float, "variant": int, "dim": int},
            "Household model",
        ),
        ZooEntry("dandelion", dandelion, {}, "Death with dispersal on a 4-cycle"),
        ZooEntry("helper", helper, {}, "Dual of the dandelion process on a 4-cycle"),
    )
}

_ALIASES = {"lambda": "lam", "N": "n"}


def zoo_model(name: str, **overrides: float) -> GrowthModel:
    """Build a zoo model by name, converting overrides such as ``lambda=2`` to constructor arguments."""
    try:
        entry = ZOO[name]
    except KeyError:
        raise ValueError(f"Unknown zoo model {name!r}; choose one of {', '.join(ZOO)}") from None
    kwargs = {}
    for key, value in overrides.items():
        arg = _ALIASES.get(key, key)
        if arg not in entry.arguments:
            raise ValueError(f"Zoo model {name!r} takes no parameter {key!r}")
        cast = entry.arguments[arg]
        if cast is int and float(value) != int(float(value)):
            raise ValueError(f"Parameter {key!r} must be an integer, got {value}")
        kwargs[arg] = cast(float(value)) if cast is int else cast(value)
    return entry.build(**kwargs)


def all_zoo_models() -> list[GrowthModel]:
    """One instance of every zoo model with default parameters."""
    return [entry.build() for entry in ZOO.values()]

