"""Pytest configuration. Load .env so GROWTH_* settings apply to tests, and share lattices and models."""

from pathlib import Path

import networkx as nx
import pytest
from additive_growth_py.typelattice import TypeLattice
from additive_growth_py.zoo import contact_process
from dotenv import load_dotenv

_root = Path(__file__).resolve().parents[1]
for _p in (_root / ".env", Path.cwd() / ".env", _root / "tests" / ".env"):
    if _p.exists():
        load_dotenv(_p, override=True)


@pytest.fixture
def chain3():
    """Chain 0 < 1 < 2."""
    return TypeLattice.chain(3)


@pytest.fixture
def diamond():
    """Three incomparable types below a common top."""
    return TypeLattice.from_covers(["0", "1", "2", "3", "4"], [(1, 4), (2, 4), (3, 4)])


@pytest.fixture
def diamond_chain():
    """The diamond with 1 < 2 added."""
    return TypeLattice.from_covers(["0", "1", "2", "3", "4"], [(1, 2), (2, 4), (3, 4)])


@pytest.fixture
def bipartite():
    """Types m and f with their join."""
    return TypeLattice.from_covers(["0", "m", "f", "m∨f"], [("m", "m∨f"), ("f", "m∨f")])


@pytest.fixture
def contact_pair():
    """Contact process on the two-node path graph."""
    return contact_process(lam=1.0, graph=nx.path_graph(2))
