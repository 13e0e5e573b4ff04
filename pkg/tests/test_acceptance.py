"""Full-scale experiments. Deselected by default; run with ``pytest -m slow``."""

import math
from dataclasses import replace

import numpy as np
import pytest
from additive_growth_py.colour import expand, lift_model, project_configuration
from additive_growth_py.engine import (
    Torus,
    build_percolation_graph,
    complete_convergence_test,
    critical_scan,
    duality_violations,
    evolve_forward,
    percolates,
    replicate_seed,
    sample_event_map,
)
from additive_growth_py.types import Verdict
from additive_growth_py.utils import Settings, all_configurations
from additive_growth_py.zoo import all_zoo_models, contact_process, three_type_system, two_stage_contact

pytestmark = pytest.mark.slow

THREADS = Settings.from_env().threads


def test_duality_on_four_cycle():
    """Test the duality relation for every pair of states on 100 contact maps."""
    model = contact_process()
    torus = Torus((4,))
    etas = all_configurations(2, 4)
    for r in range(100):
        event_map = sample_event_map(model, torus, 2.0, seed=replicate_seed(1, r))
        zetas = all_configurations(len(event_map.dual_lattice), 4)
        assert duality_violations(event_map, etas, zetas) == [], r


def test_lift_commutes_on_500_maps():
    """Test that the projected lift of the three-type system is the base process at every event."""
    model = three_type_system(dim=2)
    expansion = expand(model.lattice)
    lifted = lift_model(model, expansion)
    torus = Torus((3, 3))
    rng = np.random.default_rng(4)
    for r in range(500):
        base_map = sample_event_map(model, torus, 3.0, seed=replicate_seed(4, r))
        xi0 = rng.integers(0, len(lifted.lattice), size=torus.n_sites)
        base = evolve_forward(base_map, project_configuration(xi0, expansion))
        star = evolve_forward(replace(base_map, model=lifted), xi0)
        for s in base_map.times:
            assert np.array_equal(project_configuration(star.at(s), expansion), base.at(s)), r


@pytest.mark.parametrize("build", [contact_process, two_stage_contact])
def test_percolation_matches_survival_on_five_cycle(build):
    """Test percolation against survival from every single organism on 1000 maps."""
    model = build()
    torus = Torus((5,))
    for r in range(1000):
        event_map = sample_event_map(model, torus, 5.0, seed=replicate_seed(7, r))
        graph = build_percolation_graph(event_map)
        for x in range(5):
            for a in model.lattice.primitives:
                alive = evolve_forward(event_map, torus.delta(x, a), record=False).survived
                assert percolates(event_map, x, a, graph=graph) == alive, (r, x, a)


@pytest.mark.parametrize("model", all_zoo_models(), ids=lambda m: m.name)
def test_additivity_on_200_maps(model):
    """Test that evolution preserves joins and order for 100 pairs on each of 200 maps."""
    geometry = Torus((4,)) if model.translation_invariant else model.geometry
    lattice = model.lattice
    n = geometry.n_sites
    rng = np.random.default_rng(9)
    for r in range(200):
        event_map = sample_event_map(model, geometry, 1.0, seed=replicate_seed(17, r))
        for _ in range(100):
            eta = rng.integers(0, len(lattice), size=n)
            other = rng.integers(0, len(lattice), size=n)
            joined = lattice.config_join(eta, other)
            eta_t = evolve_forward(event_map, eta, record=False).final
            other_t = evolve_forward(event_map, other, record=False).final
            joined_t = evolve_forward(event_map, joined, record=False).final
            assert np.array_equal(joined_t, lattice.config_join(eta_t, other_t)), r
            assert lattice.config_leq(eta_t, joined_t)


def test_contact_survival_curve():
    """Test the coupled survival curve of the contact process on a 100-cycle."""
    torus = Torus((100,))
    grid = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5]
    result = critical_scan(
        contact_process(), "lambda", grid, torus, torus.delta(0, 1), 50.0, 2000, seed=12, threads=THREADS
    )
    assert result.grid == tuple(grid)
    successes = [e.successes for e in result.estimates]
    assert successes == sorted(successes)
    p = math.exp(-50.0)
    assert abs(result.estimates[0].estimate - p) <= 3 * math.sqrt(p * (1 - p) / 2000) + 1e-12


@pytest.mark.parametrize(
    "model", [contact_process(lam=2.0), two_stage_contact(lam=2.0, gamma=2.0, delta=0.0)], ids=lambda m: m.name
)
def test_complete_convergence_on_200_cycle(model):
    """Test that the window law from one site is close to the fitted mixture."""
    torus = Torus((200,))
    eta0 = torus.delta(1, model.lattice.top)
    report = complete_convergence_test(
        model, torus, eta0, window=(0, 1, 2), t=50.0, replicates=10_000, seed=21, tolerance=0.05, threads=THREADS
    )
    assert report.tv <= 0.05
    assert report.verdict == Verdict.OK
