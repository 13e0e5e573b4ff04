"""JSON model files.

Layout of a ``additive-growth/1`` file::

    {
      "format": "additive-growth/1",
      "name": "contact",
      "lattice": {"labels": ["0", "1"], "covers": [["0", "1"]]},
      "mappings": [
        {"name": "death", "sites": [[0]], "rate": 1.0, "rule": {"flips": [[[1], [0]]]}}
      ],
      "parameters": {"lambda": {"value": 2.0, "mappings": [1, 2]}},
      "geometry": {"kind": "torus", "shape": [10]}
    }

A mapping gives either ``table`` (every image, in mixed-radix order) or ``rule.flips`` (the
non-identity rows). Explicit-site mappings set ``"explicit": true`` and list graph nodes. A
parameter at 0 may carry ``"dormant"``: its mappings at rate coefficient 1, restored when the
parameter is raised.
"""

import json
import logging
from pathlib import Path
from typing import Any

import networkx as nx
import numpy as np

from .engine import GraphGeometry, Torus
from .eventmodel import EventStructure, GrowthModel, LocalMapping, SiteTemplate
from .typelattice import TypeLattice
from .types import MODEL_FILE_FORMAT, GeometryKind, ModelFileError
from .utils import all_configurations

logger = logging.getLogger(__name__)


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def _listify(value):
    if isinstance(value, tuple):
        return [_listify(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    return value


def _mapping_to_dict(mapping: LocalMapping) -> dict:
    identity = all_configurations(mapping.n_types, mapping.arity)
    changed = np.flatnonzero((mapping.table != identity).any(axis=1))
    entry = {
        "name": mapping.name,
        "sites": [_listify(s) for s in mapping.sites],
        "rate": mapping.rate,
        "rule": {"flips": [[identity[i].tolist(), mapping.table[i].tolist()] for i in changed]},
    }
    if mapping.template.explicit:
        entry["explicit"] = True
    return entry


def _geometry_to_dict(geometry) -> dict | None:
    if isinstance(geometry, Torus):
        return {"kind": GeometryKind.TORUS.value, "shape": list(geometry.shape)}
    if isinstance(geometry, GraphGeometry):
        return {
            "kind": GeometryKind.GRAPH.value,
            "nodes": [_listify(n) for n in geometry.graph.nodes],
            "edges": [[_listify(u), _listify(v)] for u, v in geometry.graph.edges],
        }
    return None


def _parameter_to_dict(model: GrowthModel, name: str) -> dict:
    entry = {"value": model.parameters[name], "mappings": list(model.bindings.get(name, ()))}
    if name in model.dormant:
        entry["dormant"] = [_mapping_to_dict(m) for m in model.dormant[name]]
    return entry


def model_to_dict(model: GrowthModel) -> dict:
    """The JSON-ready form of ``model``."""
    lattice = model.lattice
    data: dict[str, Any] = {
        "format": MODEL_FILE_FORMAT,
        "name": model.name,
        "description": model.description,
        "citation": model.citation,
        "lattice": {
            "labels": list(lattice.labels),
            "covers": [[lattice.labels[a], lattice.labels[b]] for a, b in lattice.covers()],
        },
        "mappings": [_mapping_to_dict(m) for m in model.mappings],
        "parameters": {name: _parameter_to_dict(model, name) for name in model.parameters},
    }
    geometry = _geometry_to_dict(model.geometry)
    if geometry is not None:
        data["geometry"] = geometry
    if model.projection is not None:
        data["projection"] = list(model.projection)
    return data


def _lattice_from_dict(data: dict) -> TypeLattice:
    labels = data["labels"]
    join = data.get("join")
    return TypeLattice.from_covers(labels, [tuple(c) for c in data.get("covers", [])], join)


def _mapping_from_dict(data: dict, n_types: int) -> LocalMapping:
    explicit = bool(data.get("explicit", False))
    sites = [_tuplify(s) for s in data["sites"]]
    template = SiteTemplate(tuple(sites), explicit=explicit)
    rate, name = float(data["rate"]), data.get("name", "")
    if "table" in data:
        return LocalMapping(template, np.array(data["table"], dtype=np.int64), n_types, rate, name)
    flips = {tuple(before): tuple(after) for before, after in data["rule"]["flips"]}
    return LocalMapping.from_flips(template, n_types, flips, rate, name)


def _geometry_from_dict(data: dict | None):
    if data is None:
        return None
    kind = GeometryKind(data["kind"])
    if kind == GeometryKind.TORUS:
        return Torus(tuple(data["shape"]))
    graph = nx.Graph()
    graph.add_nodes_from(_tuplify(n) for n in data.get("nodes", []))
    graph.add_edges_from((_tuplify(u), _tuplify(v)) for u, v in data.get("edges", []))
    return GraphGeometry(graph)


def model_from_dict(data: dict) -> GrowthModel:
    """Rebuild a model, running every constructor validator on the way.

    Raises:
        ModelFileError: The document does not follow the schema.
    """
    if data.get("format") != MODEL_FILE_FORMAT:
        raise ModelFileError(
            f"Unsupported model file format {data.get('format')!r}, expected {MODEL_FILE_FORMAT!r}",
            witness=data.get("format"),
        )
    try:
        lattice = _lattice_from_dict(data["lattice"])
        mappings = tuple(_mapping_from_dict(m, len(lattice)) for m in data["mappings"])
        parameters = {name: float(p["value"]) for name, p in data.get("parameters", {}).items()}
        bindings = {name: tuple(p.get("mappings", ())) for name, p in data.get("parameters", {}).items()}
        dormant = {
            name: tuple(_mapping_from_dict(m, len(lattice)) for m in p["dormant"])
            for name, p in data.get("parameters", {}).items()
            if "dormant" in p
        }
        geometry = _geometry_from_dict(data.get("geometry"))
        projection = data.get("projection")
    except (KeyError, TypeError, IndexError) as err:
        raise ModelFileError(f"Malformed model file: {err!r}", witness=str(err)) from err
    return GrowthModel(
        name=data.get("name", ""),
        lattice=lattice,
        structure=EventStructure(mappings),
        parameters=parameters,
        bindings=bindings,
        dormant=dormant,
        geometry=geometry,
        description=data.get("description", ""),
        citation=data.get("citation", ""),
        projection=tuple(projection) if projection is not None else None,
    )


def dumps(model: GrowthModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, ensure_ascii=False) + "\n"


def save_model(model: GrowthModel, path: str | Path) -> None:
    """Write ``model`` as JSON to ``path``."""
    Path(path).write_text(dumps(model), encoding="utf-8")
    logger.debug("Saved model %s to %s", model.name, path)


def load_model(source: str | Path | dict) -> GrowthModel:
    """Load a model from a JSON file path or an already-parsed document."""
    if isinstance(source, dict):
        return model_from_dict(source)
    path = Path(source)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ModelFileError(f"Cannot read model file {path}: {err.strerror}", witness=str(path)) from err
    except json.JSONDecodeError as err:
        raise ModelFileError(f"Model file {path} is not valid JSON: {err.msg}", witness=err.lineno) from err
    if not isinstance(data, dict):
        raise ModelFileError(f"Model file {path} must hold a JSON object", witness=str(path))
    return model_from_dict(data)
