"""Tests for dual types, dual mappings and self-duality."""

import networkx as nx
import numpy as np
import pytest
from additive_growth_py.duality import (
    DualLattice,
    admits_dual,
    compatibility_matrix,
    compatible,
    double_dual_check,
    dual_mapping,
    dual_model,
    enumerate_dual_types,
    is_self_dual,
    isomorphic_models,
    lattice_isomorphisms,
    square_join,
    succ,
)
from additive_growth_py.eventmodel import LocalMapping, SiteTemplate, is_additive
from additive_growth_py.pcclass import is_simple
from additive_growth_py.typelattice import TypeLattice
from additive_growth_py.types import NotAdditive, NotDualType, NotMultiColour
from additive_growth_py.utils import all_configurations
from additive_growth_py.zoo import (
    bipartite_infection,
    contact_process,
    dandelion,
    helper,
    household,
    n_stage_contact,
    three_type_system,
    two_stage_contact,
)


def test_chain_dual_types(chain3):
    """Test that the dual types of a chain are its upper sets."""
    dual = enumerate_dual_types(chain3)
    assert isinstance(dual, DualLattice)
    assert dual.masks == (0, 0b100, 0b110)
    assert dual.members(2) == frozenset({1, 2})
    assert dual.index_of({2}) == 1
    assert dual.identification == {1: 2, 2: 1}
    with pytest.raises(NotDualType):
        dual.index_of({1})


def test_bipartite_dual_types(bipartite):
    """Test the dual types of the bipartite lattice."""
    dual = enumerate_dual_types(bipartite)
    assert len(dual.active) == 3
    assert {dual.members(d) for d in dual.active} == {
        frozenset({1, 3}),
        frozenset({2, 3}),
        frozenset({1, 2, 3}),
    }


def test_dual_order_is_inclusion(chain3):
    """Test that the dual order is set inclusion."""
    dual = enumerate_dual_types(chain3)
    assert dual.leq(1, 2)
    assert dual.join(1, 2) == 2
    assert dual.top == 2


def test_compatibility(chain3):
    """Test the compatibility relation and its matrix form."""
    dual = enumerate_dual_types(chain3)
    assert compatible([1, 0], [2, 0], dual)
    assert not compatible([1, 0], [1, 0], dual)
    assert not compatible([1, 0], [0, 2], dual)
    configs = all_configurations(3, 2)
    dual_configs = all_configurations(3, 2)
    matrix = compatibility_matrix(configs, dual_configs, dual)
    for i, phi in enumerate(configs):
        for j, theta in enumerate(dual_configs):
            assert matrix[i, j] == compatible(phi, theta, dual)


def test_dual_of_transmission():
    """Test that the dual of infection copies the target into the source."""
    model = contact_process()
    dual = enumerate_dual_types(model.lattice)
    transmission = model.mappings[1]
    dual_e = dual_mapping(transmission, model.lattice, dual)
    assert dual_e.apply((0, 1)) == (1, 1)
    assert dual_e.apply((1, 0)) == (1, 0)
    assert dual_e.rate == transmission.rate


def test_dual_of_non_additive_mapping():
    """Test that non-additive mappings have no dual."""
    lattice = TypeLattice.chain(2)
    annihilation = LocalMapping.from_flips(SiteTemplate(((0,), (1,))), 2, {(1, 1): (0, 0)}, 1.0)
    with pytest.raises(NotAdditive):
        dual_mapping(annihilation, lattice)
    assert not admits_dual(annihilation, lattice)


def test_admits_dual_agrees_with_additivity():
    """Test the dual criterion on an additive multi-colour model."""
    model = two_stage_contact()
    for mapping in model.mappings:
        assert bool(admits_dual(mapping, model.lattice)) == bool(is_additive(mapping, model.lattice))


def test_dual_model_keeps_structure():
    """Test that the dual model keeps names, rates and parameters."""
    model = two_stage_contact()
    dual = dual_model(model)
    assert dual.name == "dual(two-stage)"
    assert len(dual.mappings) == len(model.mappings)
    assert [m.rate for m in dual.mappings] == [m.rate for m in model.mappings]
    assert dual.parameters == model.parameters
    assert len(dual.lattice) == 3


@pytest.mark.parametrize("build", [contact_process, lambda: n_stage_contact(n=3), two_stage_contact])
def test_dual_of_simple_model_is_simple(build):
    """Test that dualizing keeps every mapping productive or destructive."""
    model = build()
    assert is_simple(model)
    assert is_simple(dual_model(model))


def test_dual_model_keeps_dormant_mappings():
    """Test that mappings of a zero rate are dualized and revived with it."""
    model = two_stage_contact()
    dual = dual_model(model)
    assert len(dual.dormant["delta"]) == len(model.dormant["delta"])
    revived = dual.with_parameter("delta", 0.5)
    assert [m.rate for m in revived.mappings] == [m.rate for m in model.with_parameter("delta", 0.5).mappings]


def test_contact_is_self_dual():
    """Test the self-duality of the contact process."""
    assert is_self_dual(contact_process()) == {0: 0, 1: 1}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_n_stage_is_self_dual(n):
    """Test the self-duality of the N-stage contact process."""
    assert is_self_dual(n_stage_contact(n=n)) == {a: a for a in range(n + 1)}


def test_dandelion_dual_is_helper():
    """Test that the dandelion and helper processes are dual to each other."""
    assert isomorphic_models(dual_model(dandelion()), helper()) is not None
    assert isomorphic_models(dual_model(helper()), dandelion()) is not None
    assert isomorphic_models(dandelion(), helper()) is None


def test_dandelion_on_path():
    """Test duality of a custom dispersal kernel."""
    graph = nx.path_graph(3)
    dispersal = [(0, {1}, 1.0), (1, {0, 2}, 2.0), (2, set(), 1.0)]
    assert isomorphic_models(dual_model(dandelion(dispersal, graph)), helper(dispersal, graph)) is not None


def test_lattice_isomorphisms(chain3, bipartite):
    """Test order isomorphisms of small lattices."""
    assert [s.tolist() for s in lattice_isomorphisms(chain3, chain3)] == [[0, 1, 2]]
    swaps = sorted(s.tolist() for s in lattice_isomorphisms(bipartite, bipartite))
    assert swaps == [[0, 1, 2, 3], [0, 2, 1, 3]]
    assert list(lattice_isomorphisms(chain3, bipartite)) == []


def test_isomorphism_search_above_limit(chain3):
    """Test the single-candidate search for large lattices."""
    found = list(lattice_isomorphisms(chain3, chain3, limit=1))
    assert len(found) == 1
    assert np.array_equal(found[0], [0, 1, 2])


@pytest.mark.parametrize(
    "build",
    [contact_process, two_stage_contact, bipartite_infection, lambda: household(n=2), helper],
)
def test_double_dual(build):
    """Test the identification of types with the double dual."""
    check = double_dual_check(build())
    assert check
    assert set(check.details["identification"]) == set(build().lattice.active)


def test_double_dual_needs_multi_colour():
    """Test that the double dual check refuses the diamond lattice."""
    with pytest.raises(NotMultiColour):
        double_dual_check(three_type_system())


def test_square_join_and_succ(bipartite, diamond_chain):
    """Test the join and order of colour combinations."""
    assert square_join(frozenset({1}), frozenset({2}), bipartite) == frozenset({1, 2})
    assert square_join(frozenset(), frozenset(), bipartite) == frozenset()
    assert square_join(frozenset({1}), frozenset({2}), diamond_chain) == frozenset({1})
    assert succ(frozenset({2}), frozenset({1}), diamond_chain)
    assert not succ(frozenset({3}), frozenset({1}), diamond_chain)
