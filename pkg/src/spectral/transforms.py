"""
The bounded transform and the spectral theorem built on it.

For an operator T the defect C_T = (I + T*T)^{-1} lies between 0 and I, and
Z_T = T·C_T^{1/2} is a pure contraction with I − Z*Z = C_T. The inverse is
T = Z·(I − Z*Z)^{-1/2}; only the negative exponent makes the scalar
roundtrip t ↦ t/√(1+t²) ↦ t close. Applied atom by atom this gives the
field maps 𝒵 and 𝒯. A normal field is decomposed through its transform:
decompose 𝒵A inside the unit disc, then push the measure out with
g₁(λ) = λ(1 − |λ|²)^{-1/2}.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import CLUSTER_TOL, CONTRACTION_MARGIN, PIPELINE_TOL, TOL_LIN
from ..linalg.core import ComplexMatrix, adjoint, as_matrix, batch_op_norm, hermitian_part, op_norm, psd_power
from ..operators.field import OperatorField, field_residual, predicates
from ..utils.errors import NotNormal, NotPureContraction, OutOfDisc
from .calculus import first_non_normal_atom, reconstruct, spectral_decompose
from .measure import RPOVM, Cell, MeasurableSpace, Region, pushforward

logger = logging.getLogger(__name__)


# ============================================================
# Matrix transforms
# ============================================================
def z_of(t: ComplexMatrix, tol: float = TOL_LIN) -> Tuple[ComplexMatrix, ComplexMatrix]:
    """(Z_T, C_T) for a dim_out × dim_in matrix T."""
    t = as_matrix(t)
    gram = hermitian_part(np.eye(t.shape[1]) + adjoint(t) @ t)
    c = psd_power(gram, -1.0, tol)
    z = t @ psd_power(gram, -0.5, tol)
    return z, c


def t_of(z: ComplexMatrix, tol: float = CONTRACTION_MARGIN) -> ComplexMatrix:
    """T_Z = Z·(I − Z*Z)^{-1/2}; Z must satisfy ‖Z‖ < 1 − tol."""
    z = as_matrix(z)
    norm = op_norm(z)
    if norm >= 1.0 - tol:
        raise NotPureContraction(norm)
    defect = hermitian_part(np.eye(z.shape[1]) - adjoint(z) @ z)
    return z @ psd_power(defect, -0.5, tol)


def bounded_transform_scalar(z: complex) -> complex:
    """z/√(1+|z|²)."""
    z = complex(z)
    return z / math.sqrt(1.0 + abs(z) ** 2)


def g1_map(lam: complex, tol: float = CONTRACTION_MARGIN) -> complex:
    """λ/√(1 − |λ|²), the inverse of the scalar bounded transform on the open disc."""
    lam = complex(lam)
    if abs(lam) >= 1.0 - tol:
        raise OutOfDisc(lam)
    return lam / math.sqrt(1.0 - abs(lam) ** 2)


def g1_points(values: np.ndarray) -> np.ndarray:
    """g₁ over an array of disc points; points on or past the circle are clamped just inside."""
    values = np.asarray(values, dtype=np.complex128)
    return values / np.sqrt(np.maximum(1.0 - np.abs(values) ** 2, np.finfo(float).eps))


# ============================================================
# Field transforms
# ============================================================
def _per_atom(field: OperatorField, fn) -> List[Optional[np.ndarray]]:
    """Apply fn to every finite atom matrix; non-finite null atoms become zero."""
    results = []
    for keep, m in zip(field.space.positive, field.matrices):
        if not keep and not np.all(np.isfinite(m)):
            results.append(None)
            continue
        results.append(fn(m))
    return results


def _stack(results, shape) -> np.ndarray:
    return np.stack([np.zeros(shape, dtype=np.complex128) if r is None else r for r in results])


def zc_field(field: OperatorField, tol: float = TOL_LIN) -> OperatorField:
    """𝒵A: z_of atom by atom."""
    shape = field.matrices.shape[1:]
    pairs = _per_atom(field, lambda m: z_of(m, tol)[0])
    return OperatorField(field.space, _stack(pairs, shape))


def defect_field(field: OperatorField, tol: float = TOL_LIN) -> OperatorField:
    """C_T atom by atom."""
    n = field.dim_in
    defects = _per_atom(field, lambda m: z_of(m, tol)[1])
    return OperatorField(field.space, _stack(defects, (n, n)))


def tc_field(field: OperatorField, tol: float = CONTRACTION_MARGIN) -> OperatorField:
    """𝒯B: t_of atom by atom; every positive-weight atom must be a pure contraction."""
    results = []
    for atom, keep, m in zip(field.space.atoms, field.space.positive, field.matrices):
        if not keep:
            finite = np.all(np.isfinite(m))
            results.append(t_of(m, tol) if finite and op_norm(m) < 1.0 - tol else None)
            continue
        try:
            results.append(t_of(m, tol))
        except NotPureContraction as e:
            raise NotPureContraction(e.norm, atom) from None
    return OperatorField(field.space, _stack(results, field.matrices.shape[1:]))


@dataclass(frozen=True, eq=False)
class TransformPair:
    original: OperatorField
    transformed: OperatorField
    defect: OperatorField

    def residuals(self) -> Dict[str, float]:
        """
        Worst case over positive-weight atoms of

        defect        ‖I − z*z − c‖
        order         how far c falls outside [0, I]
        contraction   max ‖z‖ (must stay below 1)
        root          ‖(I + t*t)^{-1/2} − (I − z*z)^{1/2}‖
        """
        mask = self.original.space.positive
        t = self.original.matrices[mask]
        z = self.transformed.matrices[mask]
        c = self.defect.matrices[mask]
        identity = np.eye(c.shape[-1])
        zz = adjoint(z) @ z

        eig_c = np.linalg.eigvalsh(hermitian_part(c))
        order = np.maximum(0.0, np.maximum(-eig_c[:, 0], eig_c[:, -1] - 1.0))

        root = [
            op_norm(psd_power(identity + adjoint(ti) @ ti, -0.5) - psd_power(hermitian_part(identity - zi_zi), 0.5))
            for ti, zi_zi in zip(t, zz)
        ]
        return {
            "defect": float(batch_op_norm(identity - zz - c).max()),
            "order": float(order.max()),
            "contraction": float(batch_op_norm(z).max()),
            "root": float(max(root)),
        }


def transform_pair(field: OperatorField, tol: float = TOL_LIN) -> TransformPair:
    return TransformPair(field, zc_field(field, tol), defect_field(field, tol))


# ============================================================
# Spectral theorem through the bounded transform
# ============================================================
@dataclass(frozen=True)
class PipelineReport:
    selfadjoint: bool
    cells: int
    reconstruction_residual: float
    alignment_residual: float
    max_imag: float
    tol: float

    @property
    def aligned(self) -> bool:
        return self.alignment_residual <= self.tol

    @property
    def passed(self) -> bool:
        real_ok = not self.selfadjoint or self.max_imag <= self.tol
        return self.reconstruction_residual <= self.tol and self.aligned and real_ok

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "selfadjoint": self.selfadjoint,
            "cells": self.cells,
            "reconstruction_residual": self.reconstruction_residual,
            "alignment_residual": self.alignment_residual,
            "aligned": self.aligned,
            "max_imag": self.max_imag,
            "tol": self.tol,
        }


@dataclass(frozen=True, eq=False)
class PipelineResult:
    measure: RPOVM
    report: PipelineReport


def _scale(field: OperatorField) -> float:
    norms = batch_op_norm(field.matrices[field.space.positive])
    return max(1.0, float(norms.max()) if norms.size else 1.0)


def _image_cells(F: RPOVM, selfadjoint: bool, tol: float) -> Tuple[MeasurableSpace, Dict[str, str]]:
    """One cell per disc cell, centred on g₁ of its representative."""
    null = F.null_cells()
    cells = []
    phi = {}
    for k, (cell, is_null) in enumerate(zip(F.gamma.cells, null)):
        lam = cell.point()
        try:
            mu = g1_map(lam)
        except OutOfDisc:
            if not is_null:
                raise
            logger.warning(f"⚠️ Null disc cell {cell.cell_id} sits at {lam}, outside the open disc")
            mu = complex(lam)
        half_width = tol * max(1.0, abs(mu))
        image = Cell(f"e{k}", Region.around(mu, half_width, real=selfadjoint), mu)
        cells.append(image)
        phi[cell.cell_id] = image.cell_id
    return MeasurableSpace(tuple(cells)), phi


def _alignment_residual(E: RPOVM, direct: RPOVM) -> float:
    """Group E's cells by the nearest direct cell and compare the summed projections."""
    direct_points = np.array([c.point() for c in direct.gamma.cells], dtype=np.complex128)
    grouped = np.zeros_like(direct.projections)
    for i, cell in enumerate(E.gamma.cells):
        nearest = int(np.argmin(np.abs(direct_points - cell.point())))
        grouped[nearest] += E.projections[i]
    mask = E.space.positive
    diff = grouped[:, mask] - direct.projections[:, mask]
    return float(batch_op_norm(diff).max()) if diff.size else 0.0


def spectral_theorem_pipeline(
    field: OperatorField,
    tol: float = CLUSTER_TOL,
    pipeline_tol: float = PIPELINE_TOL,
) -> PipelineResult:
    """
    E for a normal field, built through 𝒵A.

    The disc measure F of 𝒵A is clustered on g₁ of its eigenvalues, so its
    cells match those of A, then pushed forward along the cell map induced
    by g₁. The report compares the reconstruction Σ g₁(λ_γ)·f_γ(ω) with
    a(ω) and E with the direct decomposition of A, both relative to
    max(1, ess sup ‖a(ω)‖).
    """
    flags = predicates(field, TOL_LIN)
    if not flags.normal:
        atom, residual = first_non_normal_atom(field, TOL_LIN)
        raise NotNormal(residual, atom)

    transformed = zc_field(field)
    F = spectral_decompose(transformed, "auto", tol, key=g1_points)
    target, phi = _image_cells(F, flags.selfadjoint, tol)
    E = pushforward(F, phi, target)

    scale = _scale(field)
    reconstruction = field_residual(field, reconstruct(E)) / scale
    direct = spectral_decompose(field, "auto", tol)
    alignment = _alignment_residual(E, direct)
    max_imag = max((abs(c.representative.imag) for c in target.cells), default=0.0)

    report = PipelineReport(
        selfadjoint=flags.selfadjoint,
        cells=len(target),
        reconstruction_residual=reconstruction,
        alignment_residual=alignment,
        max_imag=max_imag,
        tol=pipeline_tol,
    )
    logger.debug(f"spectral_theorem_pipeline: {report.as_dict()}")
    return PipelineResult(E, report)
