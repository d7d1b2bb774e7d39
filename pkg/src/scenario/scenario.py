"""
Scenario files: the JSON documents every command reads.

    {
      "space": {"atoms": ["w1", "w2"], "weights": [0.5, 0.5]},
      "hilbert_dims": {"H": 2},
      "fields": {"A": {"domain": "H", "codomain": "H", "matrices": [...]}},
      "cells": [{"id": "c1", "region": {"kind": "box", "re": [0, 1], "im": [-1, 1]},
                 "representative": [0.5, 0]}],
      "functions": {"f": {"c1": [2, 0], "c2": "inf"}},
      "measures": {"E": {"c1": "P1", "c2": "P2"}},
      "vectors": {"x": [[1, 0], [0, 0]]},
      "seed": 0,
      "tolerances": {"tol": 1e-10}
    }

Complex numbers are [re, im] pairs (a bare number is read as real) and ∞ is
the string "inf". A field may give "constant" (one matrix) instead of
"matrices" (one per atom); it is always saved in the per-atom form.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from config import DEFAULT_SEED
from ..operators.field import OperatorField
from ..probability.sample_space import SampleSpace
from ..spectral.calculus import MeasurableFunction
from ..spectral.measure import BOX, INTERVAL, RPOVM, Cell, MeasurableSpace, Region
from ..utils.errors import (
    InvalidMatrix,
    InvalidParameter,
    InvalidSampleSpace,
    SchemaError,
    ShapeError,
)
from ..utils.helpers import decode_complex, dumps_json, encode_complex, load_json, save_json

logger = logging.getLogger(__name__)

TOLERANCE_KEYS = ("tol", "cluster_tol", "pipeline_tol")


@dataclass(eq=False)
class Scenario:
    space: SampleSpace
    hilbert_dims: Dict[str, int] = field(default_factory=dict)
    fields: Dict[str, OperatorField] = field(default_factory=dict)
    field_dims: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    cells: Optional[MeasurableSpace] = None
    functions: Dict[str, Dict[str, complex]] = field(default_factory=dict)
    measures: Dict[str, Dict[str, str]] = field(default_factory=dict)
    vectors: Dict[str, np.ndarray] = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    tolerances: Dict[str, float] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    # ------------------------------------------------------------
    # Lookups
    # ------------------------------------------------------------
    def operator_field(self, name: str) -> OperatorField:
        if name not in self.fields:
            raise SchemaError(f"fields.{name}", "no such field")
        return self.fields[name]

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def measure(self, name: str) -> RPOVM:
        """The measure whose cells map to the named projection fields."""
        if name not in self.measures:
            raise SchemaError(f"measures.{name}", "no such measure")
        mapping = self.measures[name]
        gamma = self.cells if self.cells is not None else MeasurableSpace.from_ids(mapping.keys())
        return RPOVM.from_fields(gamma, {cid: self.operator_field(fname) for cid, fname in mapping.items()})

    def function(self, name: str, gamma: MeasurableSpace) -> MeasurableFunction:
        if name not in self.functions:
            raise SchemaError(f"functions.{name}", "no such function")
        return MeasurableFunction.from_mapping(gamma, self.functions[name])

    # ------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------
    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "space": {"atoms": list(self.space.atoms), "weights": [float(w) for w in self.space.weights]},
            "hilbert_dims": dict(self.hilbert_dims),
            "fields": {name: field_payload(f, *self.field_dims.get(name, (None, None)))
                       for name, f in self.fields.items()},
        }
        if self.cells is not None:
            data["cells"] = [cell_payload(c) for c in self.cells.cells]
        if self.functions:
            data["functions"] = {name: {cid: encode_complex(v) for cid, v in values.items()}
                                 for name, values in self.functions.items()}
        if self.measures:
            data["measures"] = {name: dict(mapping) for name, mapping in self.measures.items()}
        if self.vectors:
            data["vectors"] = {name: [encode_complex(v) for v in x] for name, x in self.vectors.items()}
        data["seed"] = int(self.seed)
        if self.tolerances:
            data["tolerances"] = dict(self.tolerances)
        return data

    def dumps(self) -> str:
        return dumps_json(self.to_dict())


# ============================================================
# Encoding
# ============================================================
def encode_matrix(m: np.ndarray) -> List[List[Any]]:
    return [[encode_complex(v) for v in row] for row in m]


def field_payload(f: OperatorField, domain: Optional[str] = None, codomain: Optional[str] = None) -> Dict[str, Any]:
    payload: Dict[str, Any] = {}
    if domain is not None:
        payload["domain"] = domain
    if codomain is not None:
        payload["codomain"] = codomain
    payload["matrices"] = [encode_matrix(m) for m in f.matrices]
    return payload


def region_payload(region: Region) -> Dict[str, Any]:
    if region.kind == INTERVAL:
        return {"kind": INTERVAL, "re": [region.re_lo, region.re_hi]}
    return {"kind": BOX, "re": [region.re_lo, region.re_hi], "im": [region.im_lo, region.im_hi]}


def cell_payload(cell: Cell) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"id": cell.cell_id}
    if cell.region is not None:
        payload["region"] = region_payload(cell.region)
    if cell.representative is not None:
        payload["representative"] = encode_complex(cell.representative)
    return payload


# ============================================================
# Decoding
# ============================================================
def _require(data: Mapping, key: str, kind, where: str):
    if not isinstance(data, Mapping) or key not in data:
        raise SchemaError(f"{where}{key}", "missing")
    value = data[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{where}{key}", f"expected {kind.__name__ if isinstance(kind, type) else 'a different type'}")
    return value


def _complex(payload, key: str) -> complex:
    try:
        return decode_complex(payload)
    except (TypeError, ValueError) as e:
        raise SchemaError(key, str(e)) from None


def decode_matrix(payload, key: str) -> np.ndarray:
    if not isinstance(payload, list) or not payload or not all(isinstance(row, list) for row in payload):
        raise ShapeError(key, "matrix must be a non-empty list of rows")
    widths = {len(row) for row in payload}
    if len(widths) != 1:
        raise ShapeError(key, "rows have different lengths")
    return np.array([[_complex(v, key) for v in row] for row in payload], dtype=np.complex128)


def _decode_space(data) -> SampleSpace:
    space = _require(data, "space", dict, "")
    atoms = _require(space, "atoms", list, "space.")
    weights = _require(space, "weights", list, "space.")
    if len(atoms) != len(weights):
        raise SchemaError("space.weights", f"{len(weights)} weights for {len(atoms)} atoms")
    try:
        return SampleSpace(tuple(str(a) for a in atoms), np.array(weights, dtype=float))
    except (InvalidSampleSpace, TypeError, ValueError) as e:
        raise SchemaError("space.weights", str(e)) from None


def _decode_field(name: str, payload, space: SampleSpace, dims: Dict[str, int]) -> Tuple[OperatorField, Tuple[Optional[str], Optional[str]]]:
    key = f"fields.{name}"
    if not isinstance(payload, dict):
        raise SchemaError(key, "expected an object")
    if "matrices" in payload:
        per_atom = payload["matrices"]
        if not isinstance(per_atom, list) or len(per_atom) != len(space):
            raise ShapeError(f"{key}.matrices", f"expected one matrix per atom ({len(space)})")
        matrices = [decode_matrix(m, f"{key}.matrices[{i}]") for i, m in enumerate(per_atom)]
        if len({m.shape for m in matrices}) != 1:
            raise ShapeError(f"{key}.matrices", "matrices have different shapes")
        stack = np.stack(matrices)
    elif "constant" in payload:
        matrix = decode_matrix(payload["constant"], f"{key}.constant")
        stack = np.broadcast_to(matrix, (len(space),) + matrix.shape)
    else:
        raise SchemaError(key, "needs 'matrices' or 'constant'")

    domain, codomain = payload.get("domain"), payload.get("codomain")
    for role, dim_name, actual in (("domain", domain, stack.shape[2]), ("codomain", codomain, stack.shape[1])):
        if dim_name is None:
            continue
        if dim_name not in dims:
            raise SchemaError(f"{key}.{role}", f"unknown Hilbert space {dim_name!r}")
        if dims[dim_name] != actual:
            raise ShapeError(key, f"{role} {dim_name!r} has dimension {dims[dim_name]}, matrices have {actual}")
    try:
        return OperatorField(space, stack), (domain, codomain)
    except InvalidMatrix as e:
        raise ShapeError(key, str(e)) from None


def _decode_region(payload, key: str) -> Region:
    if not isinstance(payload, dict):
        raise SchemaError(key, "expected an object")
    kind = payload.get("kind", BOX)
    try:
        re_lo, re_hi = (float(v) for v in _require(payload, "re", list, f"{key}."))
        if kind == INTERVAL:
            return Region.interval(re_lo, re_hi)
        im_lo, im_hi = (float(v) for v in _require(payload, "im", list, f"{key}."))
        return Region.box(re_lo, re_hi, im_lo, im_hi)
    except (InvalidParameter, TypeError, ValueError) as e:
        raise SchemaError(key, str(e)) from None


def decode_cells(payload, key: str = "cells") -> MeasurableSpace:
    if not isinstance(payload, list):
        raise SchemaError(key, "expected a list of cells")
    cells = []
    for i, item in enumerate(payload):
        where = f"{key}[{i}]"
        cid = _require(item, "id", str, f"{where}.")
        region = _decode_region(item["region"], f"{where}.region") if "region" in item else None
        representative = _complex(item["representative"], f"{where}.representative") if "representative" in item else None
        cells.append(Cell(cid, region, representative))
    try:
        return MeasurableSpace(tuple(cells))
    except InvalidParameter as e:
        raise SchemaError(key, str(e)) from None


def scenario_from_dict(data) -> Scenario:
    if not isinstance(data, dict):
        raise SchemaError("<root>", "expected an object")
    space = _decode_space(data)

    dims = data.get("hilbert_dims", {})
    if not isinstance(dims, dict) or not all(isinstance(v, int) and v >= 1 for v in dims.values()):
        raise SchemaError("hilbert_dims", "expected positive integer dimensions")

    fields, field_dims = {}, {}
    for name, payload in _require(data, "fields", dict, "").items():
        fields[name], field_dims[name] = _decode_field(name, payload, space, dims)

    cells = decode_cells(data["cells"]) if "cells" in data else None

    functions = {}
    for name, values in data.get("functions", {}).items():
        if not isinstance(values, dict):
            raise SchemaError(f"functions.{name}", "expected a cell → value object")
        functions[name] = {cid: _complex(v, f"functions.{name}.{cid}") for cid, v in values.items()}

    measures = {}
    for name, mapping in data.get("measures", {}).items():
        if not isinstance(mapping, dict):
            raise SchemaError(f"measures.{name}", "expected a cell → field object")
        for cid, fname in mapping.items():
            if fname not in fields:
                raise SchemaError(f"measures.{name}.{cid}", f"unknown field {fname!r}")
        measures[name] = dict(mapping)

    vectors = {}
    for name, payload in data.get("vectors", {}).items():
        if not isinstance(payload, list):
            raise ShapeError(f"vectors.{name}", "expected a list of entries")
        vectors[name] = np.array([_complex(v, f"vectors.{name}") for v in payload], dtype=np.complex128)

    seed = data.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int) or seed < 0:
        raise SchemaError("seed", "expected a non-negative integer")

    tolerances = data.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise SchemaError("tolerances", "expected an object")
    for key, value in tolerances.items():
        if key not in TOLERANCE_KEYS:
            raise SchemaError(f"tolerances.{key}", f"unknown tolerance; expected one of {TOLERANCE_KEYS}")
        if not isinstance(value, (int, float)) or not value > 0:
            raise SchemaError(f"tolerances.{key}", "must be a positive number")

    return Scenario(
        space=space,
        hilbert_dims=dict(dims),
        fields=fields,
        field_dims=field_dims,
        cells=cells,
        functions=functions,
        measures=measures,
        vectors=vectors,
        seed=seed,
        tolerances={k: float(v) for k, v in tolerances.items()},
    )


def load_scenario(path: str) -> Scenario:
    """Read and validate a scenario file"""
    scenario = scenario_from_dict(load_json(path))
    logger.info(f"✅ Loaded scenario {path}: {len(scenario.space)} atom(s), {len(scenario.fields)} field(s)")
    return scenario


def save_scenario(scenario: Scenario, path: str):
    save_json(scenario.to_dict(), path)
    logger.info(f"💾 Scenario saved to {path}")
