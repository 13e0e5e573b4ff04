"""Tests for type lattices."""

import numpy as np
import pytest
from additive_growth_py.typelattice import TypeLattice, validate_lattice
from additive_growth_py.types import JoinViolation, LatticeTooLarge, NotMultiColour, PosetViolation, Verdict


def test_chain_basics(chain3):
    """Test order, join and top of a chain."""
    assert len(chain3) == 3
    assert chain3.leq(0, 2)
    assert chain3.less(1, 2)
    assert not chain3.less(2, 2)
    assert chain3.join(1, 2) == 2
    assert chain3.top == 2
    assert chain3.primitives == (1, 2)
    assert chain3.is_multi_colour()
    assert chain3.colours(2) == frozenset({2})
    assert chain3.covers() == [(0, 1), (1, 2)]


def test_chain_labels():
    """Test custom labels and label lookup."""
    lattice = TypeLattice.chain(3, ["empty", "juvenile", "adult"])
    assert lattice.index("adult") == 2
    with pytest.raises(ValueError):
        lattice.index("elder")


def test_diamond_is_not_multi_colour(diamond):
    """Test that the diamond top has several colour decompositions."""
    assert diamond.primitives == (1, 2, 3)
    assert diamond.is_incomparable(1, 2)
    assert diamond.join(1, 2) == 4
    assert not diamond.is_multi_colour()
    assert len(diamond.decompositions(4)) == 4
    with pytest.raises(NotMultiColour) as exc:
        diamond.colours(4)
    assert exc.value.witness == 4


def test_bipartite_colours(bipartite):
    """Test that the compound type decomposes into both sexes."""
    assert bipartite.primitives == (1, 2)
    assert bipartite.is_multi_colour()
    assert bipartite.colours(3) == frozenset({1, 2})
    assert bipartite.colour_join(frozenset({1}), frozenset({2})) == frozenset({1, 2})


def test_covers_with_cycle():
    """Test that a cyclic covering relation is rejected."""
    with pytest.raises(PosetViolation):
        TypeLattice.from_covers(["0", "a", "b"], [("a", "b"), ("b", "a")])


def test_covers_unknown_label():
    """Test that covers naming an unknown type are rejected."""
    with pytest.raises(PosetViolation):
        TypeLattice.from_covers(["0", "a"], [("a", "z")])


def test_duplicate_labels():
    """Test that labels must be distinct."""
    with pytest.raises(PosetViolation):
        TypeLattice.from_covers(["0", "a", "a"], [])


def test_missing_least_upper_bound():
    """Test that two minimal upper bounds raise a join violation."""
    with pytest.raises(JoinViolation) as exc:
        TypeLattice.from_covers(["0", "1", "2", "3", "4"], [(1, 3), (1, 4), (2, 3), (2, 4)])
    assert exc.value.witness == (1, 2)


def test_bad_join_table(chain3):
    """Test that a join table that is not an upper bound is rejected."""
    join = chain3.join_table.copy()
    join[1, 2] = 1
    with pytest.raises(JoinViolation) as exc:
        TypeLattice(chain3.labels, chain3.order, join)
    assert exc.value.witness == (1, 2)


def test_order_not_antisymmetric():
    """Test that validation reports a two-way relation."""
    order = np.ones((2, 2), dtype=bool)
    with pytest.raises(PosetViolation):
        validate_lattice(order, np.zeros((2, 2), dtype=int))


def test_validate_chain(chain3):
    """Test that a valid lattice yields an ok report."""
    report = validate_lattice(chain3.order, chain3.join_table)
    assert report.verdict == Verdict.OK
    assert report.ok


def test_too_many_types():
    """Test the type count limit."""
    with pytest.raises(LatticeTooLarge):
        TypeLattice.chain(33)


def test_layer_partition(diamond_chain):
    """Test splitting primitives into layers of minimal elements."""
    assert diamond_chain.primitives == (1, 2, 3)
    assert diamond_chain.layer_partition(diamond_chain.primitives) == [frozenset({1, 3}), frozenset({2})]


def test_distributive_witness(diamond, chain3):
    """Test the witness of a non-distributive lattice."""
    assert diamond.distributive_witness() == (1, 2, 3)
    assert chain3.distributive_witness() is None


def test_config_order_and_join(bipartite):
    """Test pointwise order and join of configurations."""
    assert bipartite.config_leq([0, 1], [3, 1])
    assert not bipartite.config_leq([1, 2], [2, 2])
    assert bipartite.config_join([1, 0], [2, 2]).tolist() == [3, 2]


def test_equality_and_hash(chain3):
    """Test that lattices compare by labels and order."""
    other = TypeLattice.chain(3)
    assert chain3 == other
    assert hash(chain3) == hash(other)
    assert chain3 != TypeLattice.chain(2)
