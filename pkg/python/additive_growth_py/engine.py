"""Spacetime event maps on finite site sets: forward and dual evolution, percolation, Monte-Carlo."""

import logging
import math
from abc import ABC, abstractmethod
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

import networkx as nx
import numpy as np

from .duality import DualLattice, compatible, dual_model
from .eventmodel import GrowthModel
from .pcclass import check_cc_conditions, classify_mapping, produces
from .types import (
    DEFAULT_CONFIDENCE,
    PASSIVE,
    GeometryError,
    GeometryKind,
    GrowthModelError,
    MappingClass,
    NotMultiColour,
    PreconditionFailed,
    Verdict,
)
from .utils import wilson_interval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Instance:
    """A mapping placed on concrete site indices."""

    mapping: int
    sites: tuple[int, ...]


class Geometry(ABC):
    """Finite set of sites a model is simulated on."""

    kind: GeometryKind

    @property
    @abstractmethod
    def n_sites(self) -> int: ...

    @abstractmethod
    def instantiate(self, model: GrowthModel) -> tuple[Instance, ...]: ...

    @abstractmethod
    def site_label(self, index: int): ...

    @abstractmethod
    def describe(self) -> str: ...

    def empty(self) -> np.ndarray:
        return np.zeros(self.n_sites, dtype=np.int64)

    def delta(self, site: int, a: int) -> np.ndarray:
        """Configuration with type ``a`` at ``site`` and passive elsewhere."""
        config = self.empty()
        config[site] = a
        return config


@dataclass(frozen=True)
class Torus(Geometry):
    """Periodic box ``Z_{n1} x ... x Z_{nd}``; offset templates are placed at every translate."""

    shape: tuple[int, ...]
    kind = GeometryKind.TORUS

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not shape or min(shape) < 1:
            raise GeometryError(f"Torus sides must be positive, got {shape}", witness=shape)
        object.__setattr__(self, "shape", shape)

    @property
    def n_sites(self) -> int:
        return math.prod(self.shape)

    @property
    def dim(self) -> int:
        return len(self.shape)

    def site_index(self, coords) -> int:
        coords = (coords,) if np.isscalar(coords) else tuple(coords)
        if len(coords) != self.dim:
            raise GeometryError(f"Site {coords} does not fit torus {self.shape}", witness=coords)
        return int(np.ravel_multi_index(coords, self.shape, mode="wrap"))

    def site_label(self, index: int):
        coords = tuple(int(c) for c in np.unravel_index(index, self.shape))
        return coords[0] if self.dim == 1 else coords

    def graph(self) -> nx.Graph:
        return nx.grid_graph(dim=list(reversed(self.shape)), periodic=True)

    def describe(self) -> str:
        return "torus:" + "x".join(str(s) for s in self.shape)

    def instantiate(self, model: GrowthModel) -> tuple[Instance, ...]:
        instances = []
        origins = np.indices(self.shape).reshape(self.dim, -1).T
        for i, mapping in enumerate(model.mappings):
            if mapping.template.explicit:
                instances.append(Instance(i, tuple(self.site_index(s) for s in mapping.sites)))
                continue
            if mapping.template.dim != self.dim:
                raise GeometryError(
                    f"Mapping {mapping.name} has {mapping.template.dim}-dimensional offsets, "
                    f"torus is {self.dim}-dimensional",
                    witness=mapping.name,
                )
            offsets = np.array(mapping.sites)
            placed = origins[:, None, :] + offsets[None, :, :]
            idx = np.ravel_multi_index(tuple(np.moveaxis(placed, -1, 0)), self.shape, mode="wrap")
            if mapping.arity > 1:
                ordered = np.sort(idx, axis=1)
                if (ordered[:, 1:] == ordered[:, :-1]).any():
                    raise GeometryError(
                        f"Torus {self.shape} is too small for the sites of {mapping.name}",
                        witness=(mapping.name, self.shape),
                    )
            instances.extend(Instance(i, tuple(int(s) for s in row)) for row in idx)
        return tuple(instances)


@dataclass(frozen=True, eq=False)
class GraphGeometry(Geometry):
    """Nodes of a finite graph; only explicit-site templates can be placed on it."""

    graph: nx.Graph
    kind = GeometryKind.GRAPH

    @cached_property
    def nodes(self) -> tuple:
        return tuple(self.graph.nodes)

    @cached_property
    def _index(self) -> dict:
        return {node: i for i, node in enumerate(self.nodes)}

    @property
    def n_sites(self) -> int:
        return self.graph.number_of_nodes()

    def site_index(self, node) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise GeometryError(f"Site {node!r} is not a node of the graph", witness=node) from None

    def site_label(self, index: int):
        return self.nodes[index]

    def describe(self) -> str:
        return f"graph:{self.graph.number_of_nodes()}n{self.graph.number_of_edges()}e"

    def instantiate(self, model: GrowthModel) -> tuple[Instance, ...]:
        instances = []
        for i, mapping in enumerate(model.mappings):
            if not mapping.template.explicit:
                raise GeometryError(
                    f"Mapping {mapping.name} uses offsets; a graph needs explicit sites",
                    witness=mapping.name,
                )
            instances.append(Instance(i, tuple(self.site_index(s) for s in mapping.sites)))
        return tuple(instances)


def find_instance(event_map_or_instances, model: GrowthModel, name: str, sites: Sequence[int] | None = None) -> int:
    """Index of the instance of the mapping called ``name`` (on ``sites``, when given)."""
    instances = getattr(event_map_or_instances, "instances", event_map_or_instances)
    for i, inst in enumerate(instances):
        if model.mappings[inst.mapping].name == name and (sites is None or tuple(sites) == inst.sites):
            return i
    raise GeometryError(f"No instance of mapping {name!r} on sites {sites}", witness=name)


def _poisson_arrivals(rng: np.random.Generator, rate: float, horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """Arrival times in (0, horizon] and one uniform mark per arrival."""
    expected = rate * horizon
    batch = int(expected + 4 * math.sqrt(expected) + 8)
    times = np.cumsum(rng.exponential(1 / rate, batch))
    while times[-1] <= horizon:
        times = np.concatenate([times, times[-1] + np.cumsum(rng.exponential(1 / rate, batch))])
    times = times[times <= horizon]
    return times, rng.random(len(times))


@dataclass(frozen=True, eq=False)
class SpacetimeEventMap:
    """One realization of every instance's Poisson events over ``(0, horizon]``.

    Events are sorted by time, ties broken by instance id then event index. ``marks`` holds an
    independent uniform per event, used to thin events for coupled parameter scans.
    """

    model: GrowthModel
    geometry: Geometry
    instances: tuple[Instance, ...]
    horizon: float
    seed: int | None
    times: np.ndarray
    instance_ids: np.ndarray
    event_index: np.ndarray
    marks: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.marks is None:
            object.__setattr__(self, "marks", np.zeros(len(self.times)))

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def from_events(
        cls,
        model: GrowthModel,
        geometry: Geometry,
        events: Iterable[tuple[float, int]],
        horizon: float,
    ) -> "SpacetimeEventMap":
        """Build a map from explicit ``(time, instance id)`` pairs."""
        instances = geometry.instantiate(model)
        events = list(events)
        times = np.array([t for t, _ in events], dtype=float)
        ids = np.array([i for _, i in events], dtype=np.int64)
        if len(times) and (times.min() <= 0 or times.max() > horizon):
            raise ValueError(f"Event times must lie in (0, {horizon}]")
        if len(ids) and (ids.min() < 0 or ids.max() >= len(instances)):
            raise GeometryError("Event names an unknown instance", witness=tuple(ids))
        counts: dict[int, int] = {}
        index = []
        for i in ids:
            index.append(counts.get(int(i), 0))
            counts[int(i)] = index[-1] + 1
        index = np.array(index, dtype=np.int64)
        order = np.lexsort((index, ids, times))
        return cls(model, geometry, instances, float(horizon), None, times[order], ids[order], index[order])

    def events(self, t: float | None = None) -> Iterator[tuple[float, Instance]]:
        stop = self.stop(t)
        for pos in range(stop):
            yield float(self.times[pos]), self.instances[self.instance_ids[pos]]

    def stop(self, t: float | None) -> int:
        """Number of events in ``(0, t]``."""
        t = self.horizon if t is None else t
        if t > self.horizon + 1e-12:
            raise ValueError(f"Time {t} is beyond the horizon {self.horizon}")
        return int(np.searchsorted(self.times, t, side="right"))

    def filtered(self, keep: np.ndarray) -> "SpacetimeEventMap":
        """Same map restricted to the events where ``keep`` is true."""
        return replace(
            self,
            times=self.times[keep],
            instance_ids=self.instance_ids[keep],
            event_index=self.event_index[keep],
            marks=self.marks[keep],
        )

    def thinned(self, mapping_ids: Iterable[int], fraction: float) -> "SpacetimeEventMap":
        """Keep events of the given mappings with probability ``fraction`` using their marks."""
        bound = np.zeros(len(self.model.mappings), dtype=bool)
        bound[list(mapping_ids)] = True
        inst_mapping = np.array([inst.mapping for inst in self.instances], dtype=np.int64)
        hit = bound[inst_mapping[self.instance_ids]] if len(self.instance_ids) else np.zeros(0, dtype=bool)
        return self.filtered(~hit | (self.marks < fraction))

    @cached_property
    def dual(self) -> GrowthModel:
        return dual_model(self.model)

    @property
    def dual_lattice(self) -> DualLattice:
        return self.dual.lattice


def sample_event_map(
    model: GrowthModel,
    geometry: Geometry,
    horizon: float,
    seed: int,
    instances: tuple[Instance, ...] | None = None,
) -> SpacetimeEventMap:
    """Sample every instance's Poisson stream from a Philox generator keyed by ``(seed, instance)``."""
    if horizon <= 0:
        raise ValueError(f"Horizon must be positive, got {horizon}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"Seed must fit in 64 bits, got {seed}")
    instances = geometry.instantiate(model) if instances is None else instances
    times, ids, index, marks = [], [], [], []
    for i, inst in enumerate(instances):
        rate = model.mappings[inst.mapping].rate
        rng = np.random.Generator(np.random.Philox(key=(int(seed) << 64) | i))
        arrivals, mark = _poisson_arrivals(rng, rate, horizon)
        times.append(arrivals)
        marks.append(mark)
        ids.append(np.full(len(arrivals), i, dtype=np.int64))
        index.append(np.arange(len(arrivals), dtype=np.int64))
    if instances:
        times, ids, index, marks = (np.concatenate(a) for a in (times, ids, index, marks))
    else:
        times, marks = np.zeros(0), np.zeros(0)
        ids = index = np.zeros(0, dtype=np.int64)
    order = np.lexsort((index, ids, times))
    return SpacetimeEventMap(
        model, geometry, instances, float(horizon), int(seed), times[order], ids[order], index[order], marks[order]
    )


@dataclass(frozen=True)
class Trajectory:
    """Initial configuration plus the per-event changes of one evolution.

    ``change_times`` are process times: ``s`` for forward runs, ``t - s`` for dual runs.
    """

    initial: np.ndarray
    final: np.ndarray
    t: float
    change_times: np.ndarray
    change_sites: np.ndarray
    change_values: np.ndarray

    def at(self, s: float) -> np.ndarray:
        config = self.initial.copy()
        stop = int(np.searchsorted(self.change_times, s, side="right"))
        for site, value in zip(self.change_sites[:stop], self.change_values[:stop]):
            config[site] = value
        return config

    def snapshots(self) -> Iterator[tuple[float, np.ndarray]]:
        """Configuration at time 0 and after each time something changed."""
        yield 0.0, self.initial.copy()
        for s in np.unique(self.change_times):
            yield float(s), self.at(s)

    @property
    def survived(self) -> bool:
        return bool(self.final.any())


def _run(
    tables: list[list],
    n_types: int,
    instances: tuple[Instance, ...],
    order: Iterable[int],
    instance_ids: np.ndarray,
    times: Iterable[float],
    config: list[int],
    absorbing: bool,
    record: bool,
):
    active = sum(1 for v in config if v != PASSIVE)
    c_times, c_sites, c_values = [], [], []
    for pos, s in zip(order, times):
        if absorbing and active == 0:
            break
        inst = instances[instance_ids[pos]]
        code = 0
        for site in inst.sites:
            code = code * n_types + config[site]
        new = tables[inst.mapping][code]
        for site, value in zip(inst.sites, new):
            old = config[site]
            if old != value:
                active += (value != PASSIVE) - (old != PASSIVE)
                config[site] = value
                if record:
                    c_times.append(s)
                    c_sites.append(site)
                    c_values.append(value)
    return config, c_times, c_sites, c_values


def _check_config(config, n_sites: int, n_types: int) -> list[int]:
    config = [int(v) for v in np.asarray(config).ravel()]
    if len(config) != n_sites:
        raise ValueError(f"Configuration has {len(config)} sites, geometry has {n_sites}")
    if any(not 0 <= v < n_types for v in config):
        raise ValueError(f"Configuration holds a type outside 0..{n_types - 1}")
    return config


def _trajectory(initial, config, t, c_times, c_sites, c_values) -> Trajectory:
    return Trajectory(
        np.array(initial, dtype=np.int64),
        np.array(config, dtype=np.int64),
        float(t),
        np.array(c_times, dtype=float),
        np.array(c_sites, dtype=np.int64),
        np.array(c_values, dtype=np.int64),
    )


def evolve_forward(event_map: SpacetimeEventMap, eta0, t: float | None = None, record: bool = True) -> Trajectory:
    """Apply every event in ``(0, t]`` in time order, each to the left limit of the configuration."""
    model = event_map.model
    t = event_map.horizon if t is None else t
    stop = event_map.stop(t)
    initial = _check_config(eta0, event_map.geometry.n_sites, len(model.lattice))
    tables = [m.table.tolist() for m in model.mappings]
    absorbing = all(not any(m.table[0]) for m in model.mappings)
    config, *changes = _run(
        tables,
        len(model.lattice),
        event_map.instances,
        range(stop),
        event_map.instance_ids,
        event_map.times[:stop].tolist(),
        list(initial),
        absorbing,
        record,
    )
    return _trajectory(initial, config, t, *changes)


def evolve_dual(event_map: SpacetimeEventMap, zeta0, t: float | None = None, record: bool = True) -> Trajectory:
    """Run the dual backward from timeline ``t`` to 0 on the same events.

    Raises:
        NotAdditive: The model has a mapping without a dual.
    """
    dual = event_map.dual
    t = event_map.horizon if t is None else t
    stop = event_map.stop(t)
    initial = _check_config(zeta0, event_map.geometry.n_sites, len(dual.lattice))
    tables = [m.table.tolist() for m in dual.mappings]
    positions = range(stop - 1, -1, -1)
    config, *changes = _run(
        tables,
        len(dual.lattice),
        event_map.instances,
        positions,
        event_map.instance_ids,
        (t - event_map.times[stop - 1 :: -1]).tolist() if stop else [],
        list(initial),
        True,
        record,
    )
    return _trajectory(initial, config, t, *changes)


def duality_holds(event_map: SpacetimeEventMap, eta0, zeta0, t: float | None = None) -> bool:
    """``eta_t ~ zeta_0`` iff ``eta_0 ~ zeta_t`` on this map."""
    dual = event_map.dual_lattice
    eta_t = evolve_forward(event_map, eta0, t, record=False).final
    zeta_t = evolve_dual(event_map, zeta0, t, record=False).final
    return compatible(eta_t, zeta0, dual) == compatible(eta0, zeta_t, dual)


def duality_violations(
    event_map: SpacetimeEventMap, etas: Sequence, zetas: Sequence, t: float | None = None
) -> list[tuple[int, int]]:
    """Pairs ``(i, j)`` of initial states for which the duality relation fails."""
    dual = event_map.dual_lattice
    forward = [evolve_forward(event_map, eta, t, record=False).final for eta in etas]
    backward = [evolve_dual(event_map, zeta, t, record=False).final for zeta in zetas]
    return [
        (i, j)
        for i, (eta0, eta_t) in enumerate(zip(etas, forward))
        for j, (zeta0, zeta_t) in enumerate(zip(zetas, backward))
        if compatible(eta_t, zeta0, dual) != compatible(eta0, zeta_t, dual)
    ]


def dependency_cone(event_map: SpacetimeEventMap, x: int, t: float | None = None) -> dict[int, tuple[float, float]]:
    """Sites whose state on ``[0, s]`` can affect site ``x`` at time ``t``."""
    t = event_map.horizon if t is None else t
    cone = {x: t}
    for pos in range(event_map.stop(t) - 1, -1, -1):
        inst = event_map.instances[event_map.instance_ids[pos]]
        if any(s in cone for s in inst.sites):
            s_time = float(event_map.times[pos])
            for site in inst.sites:
                cone.setdefault(site, s_time)
    return {site: (0.0, s) for site, s in cone.items()}


def build_percolation_graph(event_map: SpacetimeEventMap, t: float | None = None) -> nx.DiGraph:
    """Coloured spacetime graph: nodes are ``(site, segment, colour)`` vertical segments.

    An event splits the segments of the sites it touches; colour ``a`` at template position
    ``x`` links to colour ``b`` at ``y`` when ``(x, a)`` produces ``(y, b)``.

    Raises:
        NotMultiColour: The lattice is not multi-colour.
    """
    model, lattice = event_map.model, event_map.model.lattice
    if not lattice.is_multi_colour():
        raise NotMultiColour(f"{model.name} is not multi-colour", witness=model.name)
    t = event_map.horizon if t is None else t
    prims = lattice.primitives
    production = [
        [{a: sorted(produces(e, x, a, lattice)) for a in prims} for x in range(e.arity)] for e in model.mappings
    ]
    n_sites = event_map.geometry.n_sites
    segment = [0] * n_sites
    graph = nx.DiGraph(t=t)
    graph.add_nodes_from(((s, 0, a) for s in range(n_sites) for a in prims), start=0.0)
    for time, inst in event_map.events(t):
        before = [segment[s] for s in inst.sites]
        for s in inst.sites:
            segment[s] += 1
            graph.add_nodes_from(((s, segment[s], a) for a in prims), start=time)
        name = model.mappings[inst.mapping].name
        for x, s in enumerate(inst.sites):
            for a in prims:
                for y, b in production[inst.mapping][x][a]:
                    target = inst.sites[y]
                    graph.add_edge((s, before[x], a), (target, segment[target], b), time=time, mapping=name)
    graph.graph["final_segment"] = dict(enumerate(segment))
    graph.graph["segments"] = sum(segment) + n_sites
    return graph


def percolates(
    event_map: SpacetimeEventMap, x: int, a: int, t: float | None = None, graph: nx.DiGraph | None = None
) -> bool:
    """A colour-respecting path leads from colour ``a`` at ``(x, 0)`` to time ``t``."""
    graph = build_percolation_graph(event_map, t) if graph is None else graph
    final = graph.graph["final_segment"]
    start = (x, 0, a)
    if start not in graph:
        return False
    reached = nx.descendants(graph, start) | {start}
    return any(seg == final[site] for site, seg, _ in reached)


def replicate_seed(seed: int, replicate: int, stream: int = 0) -> int:
    """Independent 64-bit seed for one replicate."""
    seq = np.random.SeedSequence(seed, spawn_key=(replicate, stream))
    return int(seq.generate_state(1, np.uint64)[0])


def _map_tasks(worker: Callable, tasks: list, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


@dataclass(frozen=True)
class SurvivalEstimate:
    """Fraction of replicates still active at the horizon, with a Wilson interval."""

    replicates: int
    successes: int
    estimate: float
    low: float
    high: float
    confidence: float = DEFAULT_CONFIDENCE
    parameter: float | None = None

    @classmethod
    def from_counts(cls, successes: int, replicates: int, confidence=DEFAULT_CONFIDENCE, parameter=None):
        low, high = wilson_interval(successes, replicates, confidence)
        estimate = successes / replicates if replicates else 0.0
        return cls(replicates, successes, estimate, low, high, confidence, parameter)

    @property
    def se(self) -> float:
        if not self.replicates:
            return 0.0
        return math.sqrt(self.estimate * (1 - self.estimate) / self.replicates)


def _survival_task(task) -> bool:
    model, geometry, instances, eta0, horizon, seed = task
    event_map = sample_event_map(model, geometry, horizon, seed, instances)
    return evolve_forward(event_map, eta0, record=False).survived


def estimate_survival(
    model: GrowthModel,
    geometry: Geometry,
    eta0,
    horizon: float,
    replicates: int,
    seed: int = 0,
    threads: int = 1,
    confidence: float = DEFAULT_CONFIDENCE,
) -> SurvivalEstimate:
    """Finite-horizon survival: fraction of replicates with ``eta_horizon`` not all passive."""
    instances = geometry.instantiate(model)
    eta0 = np.asarray(eta0, dtype=np.int64)
    tasks = [(model, geometry, instances, eta0, horizon, replicate_seed(seed, r)) for r in range(replicates)]
    successes = sum(_map_tasks(_survival_task, tasks, threads))
    logger.debug("Survival of %s: %d/%d", model.name, successes, replicates)
    return SurvivalEstimate.from_counts(successes, replicates, confidence)


@dataclass(frozen=True)
class DensitySeries:
    """``P(eta_t(origin) >= a)`` from the largest configuration, per checkpoint and active type."""

    times: np.ndarray
    types: tuple[str, ...]
    estimate: np.ndarray
    se: np.ndarray
    monotone: bool
    replicates: int

    def rows(self) -> Iterator[tuple[float, str, float, float]]:
        for i, t in enumerate(self.times):
            for j, label in enumerate(self.types):
                yield float(t), label, float(self.estimate[i, j]), float(self.se[i, j])


def _density_task(task) -> np.ndarray:
    model, geometry, instances, horizon, times, origin, seed = task
    lattice = model.lattice
    event_map = sample_event_map(model, geometry, horizon, seed, instances)
    top = np.full(geometry.n_sites, lattice.top, dtype=np.int64)
    traj = evolve_forward(event_map, top)
    active = list(lattice.active)
    return np.array([[lattice.order[a, traj.at(s)[origin]] for a in active] for s in times], dtype=float)


def upper_invariant_density(
    model: GrowthModel,
    geometry: Geometry,
    horizon: float,
    replicates: int,
    seed: int = 0,
    checkpoints: int | Sequence[float] = 11,
    origin: int = 0,
    threads: int = 1,
) -> DensitySeries:
    """Density of each active type at ``origin`` from the all-top configuration over time."""
    lattice = model.lattice
    if isinstance(checkpoints, int):
        times = np.linspace(0.0, horizon, checkpoints)
    else:
        times = np.asarray(sorted(checkpoints), dtype=float)
    instances = geometry.instantiate(model)
    tasks = [(model, geometry, instances, horizon, times, origin, replicate_seed(seed, r)) for r in range(replicates)]
    samples = np.stack(_map_tasks(_density_task, tasks, threads))
    estimate = samples.mean(axis=0)
    se = np.sqrt(estimate * (1 - estimate) / replicates)
    tolerance = 3 * np.maximum(se[:-1], se[1:])
    monotone = bool((estimate[:-1] >= estimate[1:] - tolerance - 1e-12).all())
    if not monotone:
        logger.warning("Upper invariant density of %s increased beyond 3 standard errors", model.name)
    labels = tuple(lattice.labels[a] for a in lattice.active)
    return DensitySeries(times, labels, estimate, se, monotone, replicates)


@dataclass(frozen=True)
class ConvergenceReport:
    """Total variation between the window law at ``t`` and the fitted survival mixture."""

    window: tuple[int, ...]
    t: float
    sigma_hat: float
    tv: float
    tolerance: float
    verdict: Verdict
    replicates: int


def _window_task(task) -> tuple[bool, tuple]:
    model, geometry, instances, eta0, t, window, seed = task
    event_map = sample_event_map(model, geometry, t, seed, instances)
    final = evolve_forward(event_map, eta0, record=False).final
    return bool(final.any()), tuple(int(final[s]) for s in window)


def total_variation(p: Counter, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def complete_convergence_test(
    model: GrowthModel,
    geometry: Geometry,
    eta0,
    window: Sequence[int],
    t: float,
    replicates: int,
    seed: int = 0,
    tolerance: float = 0.05,
    threads: int = 1,
) -> ConvergenceReport:
    """Compare the window law from ``eta0`` with ``(1 - s) delta_0 + s nu``.

    ``s`` is the fraction of runs from ``eta0`` still active at ``t`` and ``nu`` the window law
    from the all-top configuration.

    Raises:
        PreconditionFailed: The model fails a complete-convergence precondition.
    """
    conditions = check_cc_conditions(model)
    if conditions.failed:
        raise PreconditionFailed(
            f"{model.name} fails: {', '.join(conditions.failed)}", witness=conditions.to_dict()
        )
    window = tuple(int(s) for s in window)
    instances = geometry.instantiate(model)
    eta0 = np.asarray(eta0, dtype=np.int64)
    top = np.full(geometry.n_sites, model.lattice.top, dtype=np.int64)
    start_tasks = [(model, geometry, instances, eta0, t, window, replicate_seed(seed, r, 0)) for r in range(replicates)]
    top_tasks = [(model, geometry, instances, top, t, window, replicate_seed(seed, r, 1)) for r in range(replicates)]
    started = _map_tasks(_window_task, start_tasks, threads)
    from_top = _map_tasks(_window_task, top_tasks, threads)

    sigma_hat = sum(alive for alive, _ in started) / replicates
    law = Counter()
    for _, w in started:
        law[w] += 1 / replicates
    mixture: dict[tuple, float] = {}
    for _, w in from_top:
        mixture[w] = mixture.get(w, 0.0) + sigma_hat / replicates
    zero = (PASSIVE,) * len(window)
    mixture[zero] = mixture.get(zero, 0.0) + (1 - sigma_hat)
    tv = total_variation(law, mixture)
    verdict = Verdict.OK if tv <= tolerance else Verdict.FAIL
    return ConvergenceReport(window, float(t), sigma_hat, tv, tolerance, verdict, replicates)


@dataclass(frozen=True)
class ScanResult:
    """Survival estimates over a sorted parameter grid and the threshold crossing."""

    parameter: str
    estimates: tuple[SurvivalEstimate, ...]
    threshold: float
    crossing: float | None

    @property
    def grid(self) -> tuple[float, ...]:
        return tuple(e.parameter for e in self.estimates)


def _scan_task(task) -> list[bool]:
    model, geometry, instances, eta0, horizon, bound, fractions, seed = task
    event_map = sample_event_map(model, geometry, horizon, seed, instances)
    return [evolve_forward(event_map.thinned(bound, f), eta0, record=False).survived for f in fractions]


def _crossing(grid: Sequence[float], values: Sequence[float], threshold: float) -> float | None:
    for i, value in enumerate(values):
        if value >= threshold:
            if i == 0:
                return float(grid[0])
            x0, x1, y0, y1 = grid[i - 1], grid[i], values[i - 1], value
            return float(x0 + (threshold - y0) * (x1 - x0) / (y1 - y0)) if y1 != y0 else float(x1)
    return None


def critical_scan(
    model: GrowthModel,
    parameter: str,
    grid: Sequence[float],
    geometry: Geometry,
    eta0,
    horizon: float,
    replicates: int,
    seed: int = 0,
    threshold: float = 0.5,
    threads: int = 1,
    confidence: float = DEFAULT_CONFIDENCE,
) -> ScanResult:
    """Survival curve in one parameter from a single event stream per replicate.

    Each replicate samples the model at the largest grid value and thins the events of the
    parameter's mappings, so survival is pathwise monotone in a productive parameter.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("Scan grid is empty")
    if grid != sorted(grid):
        raise ValueError(f"Scan grid must be sorted, got {grid}")
    top = grid[-1]
    base = model.with_parameter(parameter, top)
    bound = base.bindings.get(parameter, ())
    try:
        if any(classify_mapping(base.mappings[i], base.lattice) != MappingClass.PRODUCTIVE for i in bound):
            logger.warning("Scanned mappings of %s are not all productive; monotonicity may fail", parameter)
    except GrowthModelError:
        logger.warning("Cannot classify the mappings of %s on a lattice that is not multi-colour", parameter)
    fractions = [v / top if top > 0 else 0.0 for v in grid]
    instances = geometry.instantiate(base)
    eta0 = np.asarray(eta0, dtype=np.int64)
    tasks = [
        (base, geometry, instances, eta0, horizon, bound, fractions, replicate_seed(seed, r))
        for r in range(replicates)
    ]
    outcomes = np.array(_map_tasks(_scan_task, tasks, threads), dtype=bool).reshape(replicates, len(grid))
    estimates = tuple(
        SurvivalEstimate.from_counts(int(outcomes[:, j].sum()), replicates, confidence, parameter=v)
        for j, v in enumerate(grid)
    )
    crossing = _crossing(grid, [e.estimate for e in estimates], threshold)
    return ScanResult(parameter, estimates, threshold, crossing)
