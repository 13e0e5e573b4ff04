"""Local mappings, event structures, transition rates, couplings and their validators."""

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .typelattice import TypeLattice
from .types import (
    DEFAULT_MAX_RATE,
    DEFAULT_MAX_SITES,
    DEFAULT_NODE_BUDGET,
    MAX_TABLE_ENTRIES,
    PASSIVE,
    ArityMismatch,
    BoundExceeded,
    DuplicateMapping,
    NegativeRate,
    OverlapViolation,
    RateMismatch,
    SideEffect,
    Verdict,
)
from .utils import (
    PropertyCheck,
    ValidationReport,
    all_configurations,
    check_table_size,
    encode,
    validate_rate,
)

logger = logging.getLogger(__name__)


def _site_key(site):
    return (type(site).__name__, site)


@dataclass(frozen=True)
class SiteTemplate:
    """Ordered tuple of distinct sites a mapping reads and writes.

    Offset templates (``explicit=False``) hold integer offset vectors and are placed at every
    translate of a torus. Explicit templates name concrete sites of a finite graph.
    """

    sites: tuple
    explicit: bool = False

    def __post_init__(self):
        sites = tuple(self.sites)
        if not self.explicit:
            sites = tuple((int(s),) if np.isscalar(s) else tuple(int(c) for c in s) for s in sites)
            if len({len(s) for s in sites}) > 1:
                raise ArityMismatch("Offsets must share one dimension", witness=sites)
        if len(set(sites)) != len(sites):
            raise ArityMismatch("Template sites must be distinct", witness=sites)
        object.__setattr__(self, "sites", sites)

    @property
    def arity(self) -> int:
        return len(self.sites)

    @property
    def dim(self) -> int | None:
        if self.explicit or not self.sites:
            return None
        return len(self.sites[0])

    def sorted_order(self) -> list[int]:
        return sorted(range(self.arity), key=lambda i: _site_key(self.sites[i]))

    def position(self, site) -> int:
        return self.sites.index(site)


@dataclass(frozen=True, eq=False)
class LocalMapping:
    """A map ``F^T -> F^T`` stored as a dense table, fired at ``rate`` per instantiation.

    Row ``i`` of ``table`` is the image of the local configuration with mixed-radix code ``i``
    (site 0 most significant).
    """

    template: SiteTemplate
    table: np.ndarray
    n_types: int
    rate: float
    name: str = ""

    def __post_init__(self):
        validate_rate(self.rate, f"rate of mapping {self.name or '<unnamed>'}")
        if self.rate == 0:
            raise NegativeRate(
                f"Mapping {self.name or '<unnamed>'} must have a positive rate", witness=self.name
            )
        size = check_table_size(self.n_types, self.arity)
        table = np.array(self.table, dtype=np.int64).reshape(size, self.arity)
        if table.size and (table.min() < 0 or table.max() >= self.n_types):
            raise ArityMismatch(
                f"Mapping {self.name} produces a value outside 0..{self.n_types - 1}",
                witness=self.name,
            )
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_rule(
        cls,
        template: SiteTemplate,
        n_types: int,
        rule: Callable[[tuple], Sequence[int]],
        rate: float,
        name: str = "",
        max_entries: int = MAX_TABLE_ENTRIES,
    ) -> "LocalMapping":
        """Tabulate ``rule`` on every local configuration."""
        check_table_size(n_types, template.arity, max_entries)
        configs = all_configurations(n_types, template.arity)
        table = np.array([tuple(rule(tuple(int(v) for v in row))) for row in configs], dtype=np.int64)
        return cls(template, table.reshape(len(configs), template.arity), n_types, rate, name)

    @classmethod
    def from_flips(
        cls,
        template: SiteTemplate,
        n_types: int,
        flips: Mapping[tuple, tuple],
        rate: float,
        name: str = "",
    ) -> "LocalMapping":
        """Identity except on the listed configurations."""
        table = all_configurations(n_types, template.arity).copy()
        for before, after in flips.items():
            if len(before) != template.arity or len(after) != template.arity:
                raise ArityMismatch(
                    f"Flip {before} -> {after} does not match {template.arity} sites",
                    witness=(before, after),
                )
            table[int(encode(before, n_types))] = after
        return cls(template, table, n_types, rate, name)

    @property
    def arity(self) -> int:
        return self.template.arity

    @property
    def sites(self) -> tuple:
        return self.template.sites

    def apply(self, phi: Sequence[int]) -> tuple[int, ...]:
        return apply_mapping(self, phi)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.table, all_configurations(self.n_types, self.arity)))

    def with_rate(self, rate: float) -> "LocalMapping":
        return replace(self, rate=rate)

    def key(self) -> tuple:
        """Content key used for distinctness: sites and table, not rate."""
        return (self.template, self.n_types, self.table.tobytes())

    def single_site_images(self) -> np.ndarray:
        """``images[x, a]`` is ``e(delta_x(a))`` as a local configuration."""
        k, n = self.arity, self.n_types
        weights = n ** np.arange(k - 1, -1, -1, dtype=np.int64)
        codes = weights[:, None] * np.arange(n, dtype=np.int64)[None, :]
        return self.table[codes]

    def __repr__(self) -> str:
        return f"LocalMapping({self.name!r}, sites={self.sites}, rate={self.rate})"


@dataclass(frozen=True)
class EventStructure:
    """A family of distinct local mappings with their rates."""

    mappings: tuple[LocalMapping, ...] = ()

    def __post_init__(self):
        mappings = tuple(self.mappings)
        seen: dict[tuple, int] = {}
        for i, mapping in enumerate(mappings):
            key = mapping.key()
            if key in seen:
                raise DuplicateMapping(
                    f"Mappings {seen[key]} and {i} ({mapping.name}) are identical",
                    witness=(seen[key], i),
                )
            seen[key] = i
        object.__setattr__(self, "mappings", mappings)

    def __len__(self) -> int:
        return len(self.mappings)

    def __iter__(self):
        return iter(self.mappings)

    def __getitem__(self, index: int) -> LocalMapping:
        return self.mappings[index]


class Transition(NamedTuple):
    """One transition ``phi -> psi`` on the (sorted) sites of ``template``."""

    template: SiteTemplate
    before: tuple
    after: tuple


def transition_key(template: SiteTemplate, before: Sequence[int], after: Sequence[int]) -> Transition:
    """Canonical key: sites sorted, configurations permuted to match."""
    order = template.sorted_order()
    return Transition(
        SiteTemplate(tuple(template.sites[i] for i in order), template.explicit),
        tuple(int(before[i]) for i in order),
        tuple(int(after[i]) for i in order),
    )


@dataclass(frozen=True)
class TransitionRateSet:
    """Rates ``c_T(phi, psi)`` keyed by canonical transitions."""

    n_types: int
    entries: Mapping[Transition, float] = field(default_factory=dict)

    def __post_init__(self):
        for key, rate in self.entries.items():
            if key.before == key.after:
                raise RateMismatch("A transition must change the configuration", witness=key)
            validate_rate(rate, f"rate of {key}")
            if rate == 0:
                raise NegativeRate(f"Transition {key} must have a positive rate", witness=key)
        object.__setattr__(self, "entries", dict(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionRateSet) or self.n_types != other.n_types:
            return False
        if self.entries.keys() != other.entries.keys():
            return False
        return all(math.isclose(r, other.entries[k], rel_tol=1e-12) for k, r in self.entries.items())

    def rate(self, template: SiteTemplate, before: Sequence[int], after: Sequence[int]) -> float:
        return self.entries.get(transition_key(template, before, after), 0.0)


def apply_mapping(e: LocalMapping, phi: Sequence[int]) -> tuple[int, ...]:
    """Image of a local configuration under ``e``."""
    if len(phi) != e.arity:
        raise ArityMismatch(
            f"Mapping {e.name} acts on {e.arity} sites, got a configuration of length {len(phi)}",
            witness=tuple(phi),
        )
    if any(not 0 <= int(v) < e.n_types for v in phi):
        raise ArityMismatch(f"Configuration {tuple(phi)} holds an unknown type", witness=tuple(phi))
    return tuple(int(v) for v in e.table[int(encode(phi, e.n_types))])


def is_attractive(e: LocalMapping, lattice: TypeLattice) -> PropertyCheck:
    """Exhaustive check of ``phi <= phi' => e(phi) <= e(phi')``.

    Any comparable pair is linked by a chain of single-site increases, so those suffice.
    """
    n, k = len(lattice), e.arity
    configs = all_configurations(n, k)
    order = lattice.order
    less_pairs = np.argwhere(order & ~np.eye(n, dtype=bool))
    for x in range(k):
        weight = n ** (k - 1 - x)
        for a, b in less_pairs:
            rows = np.flatnonzero(configs[:, x] == a)
            raised = rows + (b - a) * weight
            ok = order[e.table[rows], e.table[raised]].all(axis=1)
            if not ok.all():
                i, j = rows[~ok][0], raised[~ok][0]
                return PropertyCheck(False, (tuple(map(int, configs[i])), tuple(map(int, configs[j]))))
    return PropertyCheck(True)


def is_additive(e: LocalMapping, lattice: TypeLattice) -> PropertyCheck:
    """Exhaustive check of ``e(phi v phi') = e(phi) v e(phi')``.

    Equivalent to additivity of every single-site image plus ``e(phi) = V_x e(phi_x)``;
    a failure of the latter at a configuration of minimal support yields a failing pair.
    """
    n, k = len(lattice), e.arity
    join = lattice.join_table
    if k == 0:
        return PropertyCheck(True)
    images = e.single_site_images()  # (k, n, k)
    for x in range(k):
        for a in range(n):
            for b in range(a, n):
                lhs = images[x, join[a, b]]
                rhs = join[images[x, a], images[x, b]]
                if not np.array_equal(lhs, rhs):
                    phi = [0] * k
                    psi = [0] * k
                    phi[x], psi[x] = a, b
                    return PropertyCheck(False, (tuple(phi), tuple(psi)))

    configs = all_configurations(n, k)
    combined = images[0, configs[:, 0]]
    for x in range(1, k):
        combined = join[combined, images[x, configs[:, x]]]
    bad = np.flatnonzero((combined != e.table).any(axis=1))
    if bad.size == 0:
        return PropertyCheck(True)
    support = (configs[bad] != PASSIVE).sum(axis=1)
    phi = configs[bad[np.argmin(support)]]
    x = int(np.flatnonzero(phi)[-1])
    rest, single = phi.copy(), np.zeros_like(phi)
    rest[x], single[x] = PASSIVE, phi[x]
    return PropertyCheck(False, (tuple(map(int, rest)), tuple(map(int, single))))


def rates_from_events(structure: EventStructure) -> TransitionRateSet:
    """Sum the rates of every mapping realizing each transition on its template."""
    n_types = structure.mappings[0].n_types if len(structure) else 0
    rates: dict[Transition, float] = {}
    for mapping in structure:
        configs = all_configurations(mapping.n_types, mapping.arity)
        changed = np.flatnonzero((configs != mapping.table).any(axis=1))
        for row in changed:
            key = transition_key(mapping.template, configs[row], mapping.table[row])
            rates[key] = rates.get(key, 0.0) + mapping.rate
    return TransitionRateSet(n_types, rates)


def independent_construction(
    rates: TransitionRateSet,
    max_sites: int = DEFAULT_MAX_SITES,
    max_rate: float = DEFAULT_MAX_RATE,
) -> EventStructure:
    """One mapping per transition, flipping ``phi`` to ``psi`` and fixing everything else."""
    mappings = []
    for key, rate in rates:
        if key.template.arity > max_sites:
            raise BoundExceeded(
                f"Transition on {key.template.arity} sites exceeds the bound M={max_sites}",
                witness=key,
            )
        if rate > max_rate:
            raise BoundExceeded(f"Rate {rate} exceeds the bound L={max_rate}", witness=key)
        mappings.append(
            LocalMapping.from_flips(
                key.template,
                rates.n_types,
                {key.before: key.after},
                rate,
                name=f"{key.before}->{key.after}",
            )
        )
    return EventStructure(tuple(mappings))


@dataclass(frozen=True)
class EventCoupling:
    """Assignment of mappings to the transitions they realize."""

    structure: EventStructure
    rates: TransitionRateSet
    assignment: Mapping[Transition, tuple[int, ...]]


def independent_coupling(rates: TransitionRateSet, **bounds) -> EventCoupling:
    structure = independent_construction(rates, **bounds)
    assignment = {key: (i,) for i, (key, _) in enumerate(rates)}
    return EventCoupling(structure, rates, assignment)


def coupling_from_structure(structure: EventStructure) -> EventCoupling:
    """The coupling an event structure induces on the rates it realizes."""
    assignment: dict[Transition, list[int]] = {}
    for i, mapping in enumerate(structure):
        configs = all_configurations(mapping.n_types, mapping.arity)
        for row in np.flatnonzero((configs != mapping.table).any(axis=1)):
            key = transition_key(mapping.template, configs[row], mapping.table[row])
            assignment.setdefault(key, []).append(i)
    return EventCoupling(
        structure,
        rates_from_events(structure),
        {key: tuple(ids) for key, ids in assignment.items()},
    )


def _trigger_rows(mapping: LocalMapping, transition: Transition) -> tuple[np.ndarray, dict]:
    """Rows of ``mapping`` whose configuration matches the transition's trigger on shared sites."""
    configs = all_configurations(mapping.n_types, mapping.arity)
    mask = np.ones(len(configs), dtype=bool)
    shared = {}
    for j, site in enumerate(transition.template.sites):
        if site in mapping.sites:
            pos = mapping.template.position(site)
            shared[pos] = (transition.before[j], transition.after[j])
            mask &= configs[:, pos] == transition.before[j]
        elif transition.before[j] != transition.after[j]:
            raise SideEffect(
                f"Mapping {mapping.name} cannot change site {site} outside its template",
                witness=(mapping.name, transition),
            )
    return np.flatnonzero(mask), shared


def validate_coupling(coupling: EventCoupling) -> ValidationReport:
    """Check trigger disjointness, the restriction condition and the rate sums.

    Raises:
        OverlapViolation: A mapping serves two transitions whose triggers can hold together.
        SideEffect: A mapping changes sites or configurations outside its assigned transitions.
        RateMismatch: Assigned rates do not add up to a transition rate.
    """
    structure, rates = coupling.structure, coupling.rates
    by_mapping: dict[int, list[Transition]] = {}
    for key, ids in coupling.assignment.items():
        for i in ids:
            by_mapping.setdefault(i, []).append(key)

    for i, keys in by_mapping.items():
        for tj, tk in itertools.combinations(keys, 2):
            sites_k = dict(zip(tk.template.sites, tk.before))
            if not any(
                site in sites_k and sites_k[site] != value
                for site, value in zip(tj.template.sites, tj.before)
            ):
                raise OverlapViolation(
                    f"Mapping {structure[i].name} realizes {tj} and {tk}, whose triggers can hold together",
                    witness=(i, tj, tk),
                )

    for i, keys in by_mapping.items():
        mapping = structure[i]
        configs = all_configurations(mapping.n_types, mapping.arity)
        covered = np.zeros(len(configs), dtype=bool)
        for key in keys:
            rows, shared = _trigger_rows(mapping, key)
            expected = configs[rows].copy()
            for pos, (_, after) in shared.items():
                expected[:, pos] = after
            wrong = (mapping.table[rows] != expected).any(axis=1)
            if wrong.any():
                row = rows[np.flatnonzero(wrong)[0]]
                raise SideEffect(
                    f"Mapping {mapping.name} sends {tuple(configs[row])} to {tuple(mapping.table[row])}, "
                    f"not the assigned transition {key}",
                    witness=(i, key, tuple(map(int, configs[row]))),
                )
            covered[rows] = True
        stray = np.flatnonzero(~covered & (configs != mapping.table).any(axis=1))
        if stray.size:
            row = stray[0]
            raise SideEffect(
                f"Mapping {mapping.name} changes {tuple(configs[row])} outside its assigned transitions",
                witness=(i, tuple(map(int, configs[row]))),
            )

    for key, rate in rates:
        total = sum(structure[i].rate for i in coupling.assignment.get(key, ()))
        if not math.isclose(total, rate, rel_tol=1e-9, abs_tol=1e-12):
            raise RateMismatch(
                f"Mappings assigned to {key} have total rate {total}, expected {rate}",
                witness=(key, total, rate),
            )
    for key in coupling.assignment:
        if key not in rates.entries:
            raise RateMismatch(f"Transition {key} is assigned but has no rate", witness=(key,))
    return ValidationReport(Verdict.OK, "coupling", f"{len(rates)} transitions coupled")


def check_boundedness(
    structure: EventStructure, max_sites: int = DEFAULT_MAX_SITES, max_rate: float = DEFAULT_MAX_RATE
) -> PropertyCheck:
    """Every mapping reads at most ``max_sites`` sites and fires at rate at most ``max_rate``."""
    for i, mapping in enumerate(structure):
        if mapping.arity > max_sites or mapping.rate > max_rate:
            return PropertyCheck(False, (i, mapping.name, mapping.arity, mapping.rate))
    return PropertyCheck(True)


@dataclass(frozen=True, eq=False)
class GrowthModel:
    """A type lattice, an event structure and the parameters scaling its rates.

    Attributes:
        name: Model name.
        lattice: The state alphabet.
        structure: Mappings and rates.
        parameters: Current value of each named parameter.
        bindings: Indices of the mappings whose rate is proportional to each parameter.
        dormant: For parameters currently 0, their mappings at parameter value 1. They take no
            part in the dynamics until :meth:`with_parameter` raises the parameter.
        geometry: Default finite site set for simulation, if any.
        description: One-line description.
        citation: Where the model comes from.
        projection: For lifted models, the projection of each type onto the base lattice.
    """

    name: str
    lattice: TypeLattice
    structure: EventStructure
    parameters: Mapping[str, float] = field(default_factory=dict)
    bindings: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    dormant: Mapping[str, tuple[LocalMapping, ...]] = field(default_factory=dict)
    geometry: Any = None
    description: str = ""
    citation: str = ""
    projection: tuple[int, ...] | None = None

    def __post_init__(self):
        for name, value in self.parameters.items():
            validate_rate(value, name)
        for name, ids in self.bindings.items():
            if name not in self.parameters:
                raise ValueError(f"Binding names undeclared parameter {name!r}")
            if any(not 0 <= i < len(self.structure) for i in ids):
                raise ValueError(f"Parameter {name!r} is bound to an unknown mapping")
        for name, mappings in self.dormant.items():
            if self.parameters.get(name) != 0:
                raise ValueError(f"Only a parameter at 0 may hold dormant mappings, got {name!r}")
            if self.bindings.get(name):
                raise ValueError(f"Parameter {name!r} is 0 but still bound to active mappings")
        for mapping in (*self.structure, *(m for ms in self.dormant.values() for m in ms)):
            if mapping.n_types != len(self.lattice):
                raise ArityMismatch(
                    f"Mapping {mapping.name} has {mapping.n_types} types, lattice has {len(self.lattice)}",
                    witness=mapping.name,
                )
        object.__setattr__(self, "parameters", dict(self.parameters))
        object.__setattr__(
            self, "bindings", {k: tuple(v) for k, v in self.bindings.items()}
        )
        object.__setattr__(self, "dormant", {k: tuple(v) for k, v in self.dormant.items() if v})

    @property
    def mappings(self) -> tuple[LocalMapping, ...]:
        return self.structure.mappings

    @property
    def translation_invariant(self) -> bool:
        return all(not m.template.explicit for m in self.structure)

    @property
    def dim(self) -> int | None:
        dims = {m.template.dim for m in self.structure if not m.template.explicit}
        return dims.pop() if len(dims) == 1 else None

    def map_mappings(self, transform: Callable[[LocalMapping], LocalMapping]) -> dict:
        """``structure`` and ``dormant`` with ``transform`` applied to every mapping, for :func:`replace`."""
        return {
            "structure": EventStructure(tuple(transform(m) for m in self.mappings)),
            "dormant": {k: tuple(transform(m) for m in ms) for k, ms in self.dormant.items()},
        }

    def with_parameter(self, name: str, value: float) -> "GrowthModel":
        """Rescale the mappings bound to ``name`` to a new parameter value.

        Setting a parameter to 0 moves its mappings to ``dormant``; raising it from 0 brings
        them back, appended after the other mappings.
        """
        if name not in self.parameters:
            raise ValueError(f"Model {self.name} has no parameter {name!r}")
        validate_rate(value, name)
        current = self.parameters[name]
        bound = set(self.bindings.get(name, ()))
        if value == current:
            return self
        dormant = dict(self.dormant)
        if value == 0:
            dormant[name] = tuple(self.mappings[i].with_rate(self.mappings[i].rate / current) for i in sorted(bound))
            mappings = [m for i, m in enumerate(self.mappings) if i not in bound]
            remap = {old: new for new, old in enumerate(i for i in range(len(self.mappings)) if i not in bound)}
            bindings = {
                k: tuple(remap[i] for i in ids if i in remap) for k, ids in self.bindings.items()
            }
            bindings[name] = ()
        elif current == 0:
            revived = [m.with_rate(m.rate * value) for m in dormant.pop(name, ())]
            mappings = [*self.mappings, *revived]
            bindings = dict(self.bindings)
            bindings[name] = tuple(range(len(self.mappings), len(mappings)))
        else:
            factor = value / current
            mappings = [
                m.with_rate(m.rate * factor) if i in bound else m for i, m in enumerate(self.mappings)
            ]
            bindings = dict(self.bindings)
        parameters = {**self.parameters, name: value}
        return replace(
            self,
            structure=EventStructure(tuple(mappings)),
            parameters=parameters,
            bindings=bindings,
            dormant=dormant,
        )


def _instances_touching(structure, site, radius):
    """Offset instances (mapping index, sites) that contain ``site`` and fit in the ball."""
    found, clipped = set(), False
    for i, mapping in enumerate(structure):
        offsets = np.array(mapping.sites)
        for p in range(mapping.arity):
            origin = np.array(site) - offsets[p]
            placed = origin + offsets
            if np.abs(placed).max() > radius:
                clipped = True
                continue
            found.add((i, tuple(tuple(int(c) for c in s) for s in placed)))
    return found, clipped


def validate_growth_model(
    structure: EventStructure,
    lattice: TypeLattice,
    radius: int = DEFAULT_MAX_SITES,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> ValidationReport:
    """Check that 0 is the bottom type, the all-passive state is absorbing and reachable.

    Reachability runs a breadth-first search over configurations from every single-site
    primitive start; offset models are confined to the ball of ``radius`` around the origin.
    """
    if not lattice.order[PASSIVE].all():
        a = int(np.flatnonzero(~lattice.order[PASSIVE])[0])
        return ValidationReport(Verdict.FAIL, "bottom", f"0 is not below {lattice.labels[a]}", (0, a))
    for i, mapping in enumerate(structure):
        if np.any(mapping.table[0] != PASSIVE):
            return ValidationReport(
                Verdict.FAIL,
                "absorbing",
                f"Mapping {mapping.name} does not fix the all-passive configuration",
                (i, tuple(map(int, mapping.table[0]))),
            )
    if len(structure) == 0:
        return ValidationReport(Verdict.OK, "reachability", "no events")

    explicit = structure[0].template.explicit
    if explicit:
        by_site: dict[Any, set] = {}
        for i, mapping in enumerate(structure):
            for site in mapping.sites:
                by_site.setdefault(site, set()).add((i, mapping.sites))
        starts = sorted(by_site, key=_site_key)
    else:
        dim = structure[0].template.dim
        starts = [(0,) * dim]

    budget_hit = False
    for start in starts:
        for a in lattice.primitives:
            initial = ((start, a),)
            frontier = deque([initial])
            seen = {initial}
            reached, clipped = False, False
            while frontier and not reached:
                state = frontier.popleft()
                config = dict(state)
                instances = set()
                for site in config:
                    if explicit:
                        instances |= by_site.get(site, set())
                    else:
                        found, cut = _instances_touching(structure, site, radius)
                        instances |= found
                        clipped |= cut
                for i, sites in instances:
                    mapping = structure[i]
                    phi = [config.get(s, PASSIVE) for s in sites]
                    psi = mapping.table[int(encode(phi, mapping.n_types))]
                    if np.array_equal(phi, psi):
                        continue
                    nxt = dict(config)
                    for s, v in zip(sites, psi):
                        if v == PASSIVE:
                            nxt.pop(s, None)
                        else:
                            nxt[s] = int(v)
                    key = tuple(sorted(nxt.items(), key=lambda item: _site_key(item[0])))
                    if not key:
                        reached = True
                        break
                    if key not in seen:
                        if len(seen) >= node_budget:
                            budget_hit = True
                            break
                        seen.add(key)
                        frontier.append(key)
                if budget_hit:
                    break
            if reached:
                continue
            if budget_hit:
                logger.warning("Reachability search from %s hit the node budget %d", initial, node_budget)
                return ValidationReport(
                    Verdict.INCONCLUSIVE,
                    "reachability",
                    f"Node budget {node_budget} exhausted from {lattice.labels[a]} at {start}",
                    initial,
                )
            if clipped:
                logger.warning("Reachability search from %s was confined by radius %d", initial, radius)
                return ValidationReport(
                    Verdict.INCONCLUSIVE,
                    "reachability",
                    f"No extinction path within radius {radius} from {lattice.labels[a]}",
                    initial,
                )
            return ValidationReport(
                Verdict.FAIL,
                "reachability",
                f"The all-passive state is unreachable from {lattice.labels[a]} at {start}",
                initial,
            )
    return ValidationReport(Verdict.OK, "growth-model", "0 is absorbing and reachable")


def canonical_mapping(mapping: LocalMapping, relabel: np.ndarray | None = None) -> tuple | None:
    """Content key of a mapping up to site order, translation and a type relabelling.

    Returns None for identity mappings.
    """
    n, k = mapping.n_types, mapping.arity
    sigma = np.arange(n) if relabel is None else np.asarray(relabel)
    order = mapping.template.sorted_order()
    sites = [mapping.sites[i] for i in order]
    if not mapping.template.explicit and sites:
        base = np.array(sites[0])
        sites = [tuple(int(c) for c in np.array(s) - base) for s in sites]
    configs = all_configurations(n, k)
    new_in = sigma[configs][:, order]
    new_out = sigma[mapping.table][:, order]
    table = np.empty_like(new_out)
    table[encode(new_in, n)] = new_out
    if np.array_equal(table, configs):
        return None
    return (mapping.template.explicit, tuple(sites), table.tobytes())


def canonical_model(structure: Iterable[LocalMapping], relabel=None) -> dict:
    """Rate-weighted multiset of canonical mappings."""
    weights: dict[tuple, float] = {}
    for mapping in structure:
        key = canonical_mapping(mapping, relabel)
        if key is not None:
            weights[key] = weights.get(key, 0.0) + mapping.rate
    return weights


def same_weights(left: dict, right: dict) -> bool:
    if left.keys() != right.keys():
        return False
    return all(math.isclose(v, right[k], rel_tol=1e-9) for k, v in left.items())
