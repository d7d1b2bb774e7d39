"""
Command implementations behind ``src/main.py``.

Each command reads a loaded scenario and writes one artifact (JSON or CSV)
to ``--out`` or stdout. The return value is the process exit status:
0 on success, 2 when a validation check fails. Library errors propagate
to the caller, which maps them to 1.
"""
import io
import logging
import sys
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from config import CLUSTER_TOL, PIPELINE_TOL, TOL_LIN
from ..operators.field import (
    OperatorField,
    adjoint_field,
    classify,
    compose,
    predicates,
)
from ..spectral.calculus import (
    extended_domain,
    integrate_extended,
    integrate_extended_field,
    spectral_decompose,
)
from ..spectral.measure import RPOVM, density_of_states, lemma_check, scalar_measure, validate_rpovm
from ..spectral.transforms import spectral_theorem_pipeline, tc_field, transform_pair
from ..utils.errors import InvalidParameter, SchemaError
from ..utils.helpers import csv_row, dumps_json, encode_complex, load_json, write_csv
from .scenario import Scenario, cell_payload, decode_cells, field_payload

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION_FAILED = 2

COMMANDS = ("validate", "adjoint", "compose", "classify", "transform", "decompose", "pipeline", "integrate", "dos")


@dataclass
class CommandOptions:
    fields: List[str] = field(default_factory=list)
    function: Optional[str] = None
    measure: Optional[str] = None
    out: Optional[str] = None
    tol: Optional[float] = None
    seed: Optional[int] = None
    cells: Optional[str] = None
    inverse: bool = False


# ============================================================
# Output
# ============================================================
def emit(text: str, out: Optional[str] = None):
    """Write an artifact to the given path or to stdout"""
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    logger.info(f"💾 Written {out}")


def save_results(payload, out: Optional[str] = None):
    emit(dumps_json(payload), out)


def render_csv(rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    write_csv(buffer, rows)
    return buffer.getvalue()


# ============================================================
# Argument resolution
# ============================================================
def _one_field(scenario: Scenario, options: CommandOptions, command: str) -> OperatorField:
    if len(options.fields) != 1:
        raise InvalidParameter(f"{command} needs exactly one --field")
    return scenario.operator_field(options.fields[0])


def _tol(scenario: Scenario, options: CommandOptions, key: str, default: float) -> float:
    if options.tol is not None:
        return options.tol
    return scenario.tolerance(key, default)


def _cells_option(scenario: Scenario, options: CommandOptions):
    """--cells auto, --cells FILE, or the scenario's own cells when present."""
    if options.cells == "auto":
        return "auto"
    if options.cells is not None:
        payload = load_json(options.cells)
        if isinstance(payload, dict):
            payload = payload.get("cells")
        return decode_cells(payload, f"{options.cells}:cells")
    return scenario.cells if scenario.cells is not None else "auto"


def _measure(scenario: Scenario, options: CommandOptions) -> RPOVM:
    """--measure NAME, or the decomposition of --field NAME."""
    if options.measure is not None:
        return scenario.measure(options.measure)
    if len(options.fields) == 1:
        cluster_tol = _tol(scenario, options, "cluster_tol", CLUSTER_TOL)
        return spectral_decompose(scenario.operator_field(options.fields[0]), _cells_option(scenario, options), cluster_tol)
    if len(scenario.measures) == 1:
        return scenario.measure(next(iter(scenario.measures)))
    raise InvalidParameter("give --measure NAME or a single --field NAME")


def _test_vectors(scenario: Scenario, dim: int) -> Dict[str, np.ndarray]:
    """Named scenario vectors of the right length, else the standard basis."""
    named = {name: x for name, x in scenario.vectors.items() if x.shape == (dim,)}
    if named:
        return named
    eye = np.eye(dim, dtype=np.complex128)
    return {f"e{i + 1}": eye[i] for i in range(dim)}


def _measure_payload(E: RPOVM) -> dict:
    return {
        "cells": [cell_payload(c) for c in E.gamma.cells],
        "projections": {cid: field_payload(f) for cid, f in E.fields().items()},
    }


# ============================================================
# Commands
# ============================================================
def cmd_validate(scenario: Scenario, options: CommandOptions) -> int:
    tol = _tol(scenario, options, "tol", TOL_LIN)
    seed = options.seed if options.seed is not None else scenario.seed
    failed = False

    measures = {}
    for name in scenario.measures:
        E = scenario.measure(name)
        report = validate_rpovm(E, tol, seed)
        result = report.as_dict()
        result["lemma"] = lemma_check(E.fields(), tol)
        measures[name] = result
        if report.passed:
            logger.info(f"✅ Measure {name}: all axioms hold")
        else:
            failed = True
            for check in report.failures():
                logger.error(f"❌ Measure {name}: {check.name} fails, residual {check.worst_residual:.3e} {check.detail}")

    fields = {}
    for name, f in scenario.fields.items():
        entry = classify(f).as_dict()
        if f.is_square:
            entry.update(predicates(f, tol).as_dict())
        fields[name] = entry

    save_results({"passed": not failed, "measures": measures, "fields": fields}, options.out)
    return EXIT_VALIDATION_FAILED if failed else EXIT_OK


def cmd_adjoint(scenario: Scenario, options: CommandOptions) -> int:
    name = options.fields[0] if len(options.fields) == 1 else None
    a = _one_field(scenario, options, "adjoint")
    domain, codomain = scenario.field_dims.get(name, (None, None))
    save_results({"name": f"{name}*", **field_payload(adjoint_field(a), codomain, domain)}, options.out)
    return EXIT_OK


def cmd_compose(scenario: Scenario, options: CommandOptions) -> int:
    if len(options.fields) != 2:
        raise InvalidParameter("compose needs --field OUTER --field INNER")
    outer_name, inner_name = options.fields
    outer = scenario.operator_field(outer_name)
    inner = scenario.operator_field(inner_name)
    domain = scenario.field_dims.get(inner_name, (None, None))[0]
    codomain = scenario.field_dims.get(outer_name, (None, None))[1]
    save_results({"name": f"{outer_name}{inner_name}", **field_payload(compose(outer, inner), domain, codomain)}, options.out)
    return EXIT_OK


def cmd_classify(scenario: Scenario, options: CommandOptions) -> int:
    a = _one_field(scenario, options, "classify")
    tol = _tol(scenario, options, "tol", TOL_LIN)
    result = classify(a).as_dict()
    if a.is_square:
        result["predicates"] = predicates(a, tol).as_dict()
    save_results(result, options.out)
    return EXIT_OK


def cmd_transform(scenario: Scenario, options: CommandOptions) -> int:
    a = _one_field(scenario, options, "transform")
    if options.inverse:
        save_results({"transform": "inverse", **field_payload(tc_field(a))}, options.out)
        return EXIT_OK
    pair = transform_pair(a, _tol(scenario, options, "tol", TOL_LIN))
    save_results({
        "transform": "bounded",
        **field_payload(pair.transformed),
        "defect": field_payload(pair.defect)["matrices"],
        "residuals": pair.residuals(),
    }, options.out)
    return EXIT_OK


def cmd_decompose(scenario: Scenario, options: CommandOptions) -> int:
    """CSV of E_{x,x}(γ)(ω) for every test vector x, cell γ and atom ω."""
    a = _one_field(scenario, options, "decompose")
    E = spectral_decompose(a, _cells_option(scenario, options), _tol(scenario, options, "cluster_tol", CLUSTER_TOL))
    rows = []
    for label, x in _test_vectors(scenario, E.dim).items():
        values = scalar_measure(E, x, x).values
        for n, (atom, weight) in enumerate(zip(E.space.atoms, E.space.weights)):
            for c, cid in enumerate(E.gamma.ids):
                rows.append(csv_row(atom, weight, cid, f"E_xx:{label}", values[c, n]))
    emit(render_csv(rows), options.out)
    logger.info(f"✅ Decomposed into {len(E.gamma)} cell(s)")
    return EXIT_OK


def cmd_pipeline(scenario: Scenario, options: CommandOptions) -> int:
    a = _one_field(scenario, options, "pipeline")
    result = spectral_theorem_pipeline(
        a,
        scenario.tolerance("cluster_tol", CLUSTER_TOL),
        _tol(scenario, options, "pipeline_tol", PIPELINE_TOL),
    )
    report = result.report
    save_results({"report": report.as_dict(), "measure": _measure_payload(result.measure)}, options.out)
    if not report.passed:
        logger.error(f"❌ Pipeline check failed: {report.as_dict()}")
        return EXIT_VALIDATION_FAILED
    logger.info(f"✅ Pipeline reconstruction residual {report.reconstruction_residual:.3e}")
    return EXIT_OK


def cmd_integrate(scenario: Scenario, options: CommandOptions) -> int:
    """Ĩ(f) as a field, and Ĩ(f)x for every test vector in its domain."""
    if options.function is None:
        raise InvalidParameter("integrate needs --function NAME")
    E = _measure(scenario, options)
    tol = _tol(scenario, options, "tol", TOL_LIN)
    f = scenario.function(options.function, E.gamma)

    vectors = {}
    for label, x in _test_vectors(scenario, E.dim).items():
        if not extended_domain(E, f, x, tol):
            vectors[label] = {"in_domain": False}
            continue
        image = integrate_extended(E, f, x, tol=tol)
        vectors[label] = {"in_domain": True, "values": [[encode_complex(v) for v in row] for row in image.values]}

    save_results({
        "function": options.function,
        "integral": field_payload(integrate_extended_field(E, f, tol)),
        "vectors": vectors,
    }, options.out)
    return EXIT_OK


def cmd_dos(scenario: Scenario, options: CommandOptions) -> int:
    """CSV of tr e_γ(ω)/dim per atom, then the weighted average under atom_id "*"."""
    E = _measure(scenario, options)
    rows = []
    positive = E.space.positive
    traces = np.trace(E.projections, axis1=2, axis2=3).real / E.dim
    for n, (atom, weight) in enumerate(zip(E.space.atoms, E.space.weights)):
        if not positive[n]:
            continue
        for c, cid in enumerate(E.gamma.ids):
            rows.append(csv_row(atom, weight, cid, "dos", traces[c, n]))
    for cid, value in density_of_states(E).items():
        rows.append(csv_row("*", 1.0, cid, "dos", value))
    emit(render_csv(rows), options.out)
    return EXIT_OK


HANDLERS = {
    "validate": cmd_validate,
    "adjoint": cmd_adjoint,
    "compose": cmd_compose,
    "classify": cmd_classify,
    "transform": cmd_transform,
    "decompose": cmd_decompose,
    "pipeline": cmd_pipeline,
    "integrate": cmd_integrate,
    "dos": cmd_dos,
}


def run_command(command: str, scenario: Scenario, options: Optional[CommandOptions] = None) -> int:
    if command not in HANDLERS:
        raise SchemaError("command", f"unknown command {command!r}; expected one of {COMMANDS}")
    return HANDLERS[command](scenario, options or CommandOptions())
