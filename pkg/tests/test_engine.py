"""Tests for event maps, forward and dual evolution, percolation and the Monte-Carlo estimators."""

import math
from dataclasses import replace

import networkx as nx
import numpy as np
import pytest
from additive_growth_py.colour import expand, lift_model, project_configuration
from additive_growth_py.engine import (
    GraphGeometry,
    SpacetimeEventMap,
    Torus,
    build_percolation_graph,
    complete_convergence_test,
    critical_scan,
    dependency_cone,
    duality_holds,
    duality_violations,
    estimate_survival,
    evolve_dual,
    evolve_forward,
    find_instance,
    percolates,
    replicate_seed,
    sample_event_map,
    total_variation,
    upper_invariant_density,
)
from additive_growth_py.types import GeometryError, NotMultiColour, PreconditionFailed, Verdict
from additive_growth_py.utils import all_configurations
from additive_growth_py.zoo import all_zoo_models, contact_process, dandelion, three_type_system, two_stage_contact


@pytest.fixture
def pair_map(contact_pair):
    """Infection 0 -> 1 at 0.5, death of 0 at 1.0, death of 1 at 1.5."""
    geometry = GraphGeometry(nx.path_graph(2))
    instances = geometry.instantiate(contact_pair)
    events = [
        (0.5, find_instance(instances, contact_pair, "transmission@0->1")),
        (1.0, find_instance(instances, contact_pair, "death@0")),
        (1.5, find_instance(instances, contact_pair, "death@1")),
    ]
    return SpacetimeEventMap.from_events(contact_pair, geometry, events, horizon=2.0)


def test_torus_sites():
    """Test site indexing on a periodic box."""
    torus = Torus((4, 3))
    assert torus.n_sites == 12
    assert torus.site_index((1, 2)) == 5
    assert torus.site_index((-1, 0)) == 9
    assert torus.site_label(5) == (1, 2)
    assert Torus((4,)).site_label(3) == 3
    assert torus.describe() == "torus:4x3"


def test_torus_instances():
    """Test that offset templates are placed at every translate."""
    model = contact_process()
    torus = Torus((5,))
    instances = torus.instantiate(model)
    assert len(instances) == 15
    assert instances[5 + 4].sites == (4, 0)


def test_torus_too_small():
    """Test that wrapped templates must keep distinct sites."""
    with pytest.raises(GeometryError):
        Torus((1,)).instantiate(contact_process())


def test_torus_dimension_mismatch():
    """Test that offsets must match the torus dimension."""
    with pytest.raises(GeometryError):
        Torus((4, 4)).instantiate(contact_process(dim=1))


def test_graph_needs_explicit_sites():
    """Test that offset models cannot be placed on a graph."""
    with pytest.raises(GeometryError):
        GraphGeometry(nx.path_graph(3)).instantiate(contact_process())
    with pytest.raises(GeometryError):
        GraphGeometry(nx.path_graph(1)).instantiate(contact_process(graph=nx.path_graph(2)))


def test_sample_is_deterministic():
    """Test that the same seed yields the same events."""
    model = contact_process()
    torus = Torus((6,))
    first = sample_event_map(model, torus, 3.0, seed=7)
    second = sample_event_map(model, torus, 3.0, seed=7)
    other = sample_event_map(model, torus, 3.0, seed=8)
    assert np.array_equal(first.times, second.times)
    assert np.array_equal(first.instance_ids, second.instance_ids)
    assert not np.array_equal(first.times, other.times)
    assert np.all(np.diff(first.times) >= 0)
    assert first.times.min() > 0 and first.times.max() <= 3.0


def test_sample_rejects_bad_arguments():
    """Test horizon and seed validation."""
    with pytest.raises(ValueError):
        sample_event_map(contact_process(), Torus((4,)), 0.0, seed=1)
    with pytest.raises(ValueError):
        sample_event_map(contact_process(), Torus((4,)), 1.0, seed=-1)


def test_event_counts_match_rates():
    """Test that the number of events is close to rate times horizon."""
    model = contact_process(lam=2.0)
    event_map = sample_event_map(model, Torus((50,)), 20.0, seed=3)
    expected = 50 * (1.0 + 2 * 2.0) * 20.0
    assert abs(len(event_map) - expected) < 5 * math.sqrt(expected)


def test_from_events_validation(contact_pair):
    """Test that explicit events must fit the horizon."""
    geometry = GraphGeometry(nx.path_graph(2))
    with pytest.raises(ValueError):
        SpacetimeEventMap.from_events(contact_pair, geometry, [(3.0, 0)], horizon=2.0)
    with pytest.raises(ValueError):
        SpacetimeEventMap.from_events(contact_pair, geometry, [(0.0, 0)], horizon=2.0)


def test_forward_evolution(pair_map):
    """Test a hand-built history of the contact process."""
    trajectory = evolve_forward(pair_map, [1, 0])
    assert trajectory.at(0.25).tolist() == [1, 0]
    assert trajectory.at(0.75).tolist() == [1, 1]
    assert trajectory.at(1.0).tolist() == [0, 1]
    assert trajectory.final.tolist() == [0, 0]
    assert not trajectory.survived
    assert [t for t, _ in trajectory.snapshots()] == [0.0, 0.5, 1.0, 1.5]
    assert evolve_forward(pair_map, [1, 0], t=1.2).final.tolist() == [0, 1]


def test_forward_rejects_bad_configuration(pair_map):
    """Test configuration length and type checks."""
    with pytest.raises(ValueError):
        evolve_forward(pair_map, [1, 0, 0])
    with pytest.raises(ValueError):
        evolve_forward(pair_map, [2, 0])
    with pytest.raises(ValueError):
        evolve_forward(pair_map, [1, 0], t=3.0)


def test_dual_evolution(pair_map):
    """Test the dual run backward through the same history."""
    trajectory = evolve_dual(pair_map, [0, 1], t=1.2)
    assert trajectory.final.tolist() == [1, 1]
    assert duality_holds(pair_map, [1, 0], [0, 1], t=1.2)
    assert evolve_dual(pair_map, [0, 1]).final.tolist() == [0, 0]


def test_dependency_cone(pair_map):
    """Test the sites that influence site 1."""
    assert dependency_cone(pair_map, 1, t=1.2) == {1: (0.0, 1.2), 0: (0.0, 0.5)}


def test_percolation(pair_map):
    """Test coloured paths on the hand-built history."""
    assert not percolates(pair_map, 0, 1)
    assert percolates(pair_map, 0, 1, t=1.2)
    assert percolates(pair_map, 1, 1, t=1.2)
    assert not percolates(pair_map, 1, 1)
    graph = build_percolation_graph(pair_map, t=1.2)
    assert graph.graph["final_segment"] == {0: 2, 1: 1}
    assert graph.has_edge((0, 0, 1), (1, 1, 1))


def test_percolation_needs_multi_colour():
    """Test that percolation refuses the diamond lattice."""
    event_map = sample_event_map(three_type_system(), Torus((4,)), 1.0, seed=1)
    with pytest.raises(NotMultiColour):
        build_percolation_graph(event_map)


@pytest.mark.parametrize("build", [contact_process, two_stage_contact])
def test_duality_on_random_maps(build):
    """Test the duality relation for every pair of initial states."""
    model = build()
    torus = Torus((3,))
    n_types = len(model.lattice)
    for r in range(5):
        event_map = sample_event_map(model, torus, 2.0, seed=replicate_seed(11, r))
        n_dual = len(event_map.dual_lattice)
        etas = all_configurations(n_types, 3)
        zetas = all_configurations(n_dual, 3)
        assert duality_violations(event_map, etas, zetas) == []


def test_percolation_matches_survival():
    """Test that percolation from a single organism is equivalent to survival."""
    model = two_stage_contact()
    torus = Torus((4,))
    for r in range(10):
        event_map = sample_event_map(model, torus, 3.0, seed=replicate_seed(5, r))
        graph = build_percolation_graph(event_map)
        for x in range(4):
            for a in model.lattice.primitives:
                alive = evolve_forward(event_map, torus.delta(x, a), record=False).survived
                assert percolates(event_map, x, a, graph=graph) == alive


def test_lift_commutes_along_trajectories():
    """Test that the projected lifted process is the base process."""
    model = three_type_system(dim=2)
    expansion = expand(model.lattice)
    lifted = lift_model(model, expansion)
    torus = Torus((3, 3))
    rng = np.random.default_rng(4)
    for r in range(5):
        base_map = sample_event_map(model, torus, 2.0, seed=replicate_seed(2, r))
        star_map = replace(base_map, model=lifted)
        xi0 = rng.integers(0, len(lifted.lattice), size=torus.n_sites)
        base = evolve_forward(base_map, project_configuration(xi0, expansion))
        star = evolve_forward(star_map, xi0)
        for s in base_map.times:
            assert np.array_equal(project_configuration(star.at(s), expansion), base.at(s))


def test_additivity_along_trajectories():
    """Test pathwise additivity and monotonicity of every zoo model."""
    rng = np.random.default_rng(9)
    for model in all_zoo_models():
        geometry = Torus((4,)) if model.translation_invariant else model.geometry
        lattice = model.lattice
        n = geometry.n_sites
        for r in range(3):
            event_map = sample_event_map(model, geometry, 1.0, seed=replicate_seed(17, r))
            for _ in range(3):
                eta = rng.integers(0, len(lattice), size=n)
                other = rng.integers(0, len(lattice), size=n)
                joined = lattice.config_join(eta, other)
                eta_t = evolve_forward(event_map, eta).final
                other_t = evolve_forward(event_map, other).final
                joined_t = evolve_forward(event_map, joined).final
                assert np.array_equal(joined_t, lattice.config_join(eta_t, other_t)), model.name
                assert lattice.config_leq(eta_t, joined_t)


def test_thinning_keeps_unbound_events():
    """Test that thinning only drops events of the given mappings."""
    model = contact_process()
    event_map = sample_event_map(model, Torus((5,)), 2.0, seed=1)
    bound = model.bindings["lambda"]
    none = event_map.thinned(bound, 0.0)
    mapping_of = np.array([event_map.instances[i].mapping for i in none.instance_ids])
    assert set(mapping_of.tolist()) <= {0}
    assert len(event_map.thinned(bound, 1.0)) == len(event_map)


def test_survival_without_infection():
    """Test that pure death survives with probability exp(-horizon)."""
    model = contact_process(lam=0.0)
    torus = Torus((5,))
    estimate = estimate_survival(model, torus, torus.delta(0, 1), 1.0, 400, seed=2)
    assert abs(estimate.estimate - math.exp(-1.0)) < 3 * math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 400)
    assert estimate.low <= estimate.estimate <= estimate.high
    assert estimate.replicates == 400


def test_survival_is_reproducible():
    """Test that seeded estimates repeat, also across worker processes."""
    model = contact_process(lam=2.0)
    torus = Torus((8,))
    eta0 = torus.delta(0, 1)
    first = estimate_survival(model, torus, eta0, 2.0, 20, seed=5)
    second = estimate_survival(model, torus, eta0, 2.0, 20, seed=5)
    pooled = estimate_survival(model, torus, eta0, 2.0, 20, seed=5, threads=2)
    assert first == second == pooled


def test_upper_invariant_density():
    """Test the density from the full configuration."""
    model = contact_process(lam=2.0)
    series = upper_invariant_density(model, Torus((10,)), 2.0, 50, seed=1, checkpoints=3)
    assert series.times.tolist() == [0.0, 1.0, 2.0]
    assert series.types == ("1",)
    assert series.estimate[0, 0] == 1.0
    assert series.estimate.shape == (3, 1)
    assert len(list(series.rows())) == 3


def test_convergence_report():
    """Test the complete convergence comparison on the contact process."""
    model = contact_process(lam=2.0)
    torus = Torus((12,))
    report = complete_convergence_test(
        model, torus, torus.delta(0, 1), window=(0, 1, 2), t=2.0, replicates=50, seed=3, tolerance=1.0
    )
    assert report.verdict == Verdict.OK
    assert 0.0 <= report.sigma_hat <= 1.0
    assert 0.0 <= report.tv <= 1.0
    assert report.window == (0, 1, 2)


def test_convergence_preconditions():
    """Test that a model failing the preconditions is refused."""
    model = dandelion()
    with pytest.raises(PreconditionFailed):
        complete_convergence_test(model, model.geometry, model.geometry.delta(0, 1), (0,), 1.0, 10)


def test_total_variation():
    """Test the total variation distance."""
    assert total_variation({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0.0
    assert total_variation({"a": 1.0}, {"b": 1.0}) == 1.0


def test_critical_scan_is_monotone():
    """Test the coupled survival curve in the infection rate."""
    model = contact_process()
    torus = Torus((20,))
    result = critical_scan(model, "lambda", [0.0, 1.0, 2.0], torus, torus.delta(0, 1), 2.0, 300, seed=4)
    successes = [e.successes for e in result.estimates]
    assert successes == sorted(successes)
    assert result.grid == (0.0, 1.0, 2.0)
    p = math.exp(-2.0)
    assert abs(result.estimates[0].estimate - p) < 3 * math.sqrt(p * (1 - p) / 300)


def test_critical_scan_errors():
    """Test grid and parameter validation."""
    model = contact_process()
    torus = Torus((5,))
    with pytest.raises(ValueError):
        critical_scan(model, "lambda", [2.0, 1.0], torus, torus.delta(0, 1), 1.0, 10)
    with pytest.raises(ValueError):
        critical_scan(model, "lambda", [], torus, torus.delta(0, 1), 1.0, 10)
    with pytest.raises(ValueError):
        critical_scan(model, "gamma", [1.0], torus, torus.delta(0, 1), 1.0, 10)


def test_critical_scan_from_zero_rate():
    """Test a scan of a model built with its scanned rate at zero."""
    model = contact_process(lam=0.0)
    torus = Torus((8,))
    result = critical_scan(model, "lambda", [0.0, 1.0, 2.0], torus, torus.delta(0, 1), 2.0, 20, seed=1)
    assert result.grid == (0.0, 1.0, 2.0)
    successes = [e.successes for e in result.estimates]
    assert successes == sorted(successes)
    same = critical_scan(contact_process(), "lambda", [0.0, 1.0, 2.0], torus, torus.delta(0, 1), 2.0, 20, seed=1)
    assert [e.successes for e in same.estimates] == successes


def test_maturation_scan_is_monotone():
    """Test that thinning the maturation events gives a nondecreasing survival curve."""
    model = two_stage_contact(lam=2.0)
    torus = Torus((10,))
    result = critical_scan(model, "gamma", [0.0, 0.5, 2.0, 8.0], torus, torus.delta(0, 2), 2.0, 100, seed=6)
    successes = [e.successes for e in result.estimates]
    assert successes == sorted(successes)


def test_two_stage_crossing_falls_with_maturation():
    """Test that faster maturation lowers the infection rate needed for survival."""
    torus = Torus((12,))
    grid = [0.5, 1.0, 2.0, 4.0, 8.0]
    slow, fast = (
        critical_scan(two_stage_contact(gamma=g), "lambda", grid, torus, torus.delta(0, 2), 2.0, 150, seed=8).crossing
        for g in (0.25, 8.0)
    )
    assert fast is not None
    assert slow is None or fast <= slow


def test_replicate_seed():
    """Test that replicate seeds are stable and distinct."""
    assert replicate_seed(1, 0) == replicate_seed(1, 0)
    assert replicate_seed(1, 0) != replicate_seed(1, 1)
    assert replicate_seed(1, 0, 0) != replicate_seed(1, 0, 1)
    assert 0 <= replicate_seed(1, 0) < 2**64
