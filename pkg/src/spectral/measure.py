"""
Random projection-operator-valued measures on finite measurable spaces.

Γ is a finite list of cells and Σ its power set, so a measure is fixed by
one projection field per cell and E(σ) = Σ_{γ∈σ} E(γ). Cells may carry a
half-open region of ℂ (or ℝ) and a representative point; those are what
tie a measure to the spectrum of an operator field.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import (
    CLUSTER_TOL,
    DEFAULT_SEED,
    PAIR_EXHAUSTIVE_LIMIT,
    SUBSET_EXHAUSTIVE_LIMIT,
    SUBSET_SAMPLES,
    TOL_LIN,
)
from ..linalg.core import adjoint, batch_op_norm
from ..operators.field import OperatorField
from ..probability.sample_space import RandomScalar, RandomVector, SampleSpace
from ..utils.errors import (
    DimensionMismatch,
    IncompleteMap,
    InvalidMatrix,
    InvalidParameter,
    SpaceMismatch,
)

logger = logging.getLogger(__name__)

BOX = "box"
INTERVAL = "interval"


# ============================================================
# Measurable spaces
# ============================================================
@dataclass(frozen=True)
class Region:
    """Half-open box [re_lo, re_hi) × [im_lo, im_hi), or a real interval [re_lo, re_hi)."""
    re_lo: float
    re_hi: float
    im_lo: float = 0.0
    im_hi: float = 0.0
    kind: str = BOX

    def __post_init__(self):
        if self.kind not in (BOX, INTERVAL):
            raise InvalidParameter(f"region kind must be {BOX!r} or {INTERVAL!r}, got {self.kind!r}")
        if not self.re_lo < self.re_hi or (self.kind == BOX and not self.im_lo < self.im_hi):
            raise InvalidParameter(f"empty region {self}")

    @classmethod
    def box(cls, re_lo: float, re_hi: float, im_lo: float, im_hi: float) -> "Region":
        return cls(re_lo, re_hi, im_lo, im_hi, BOX)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Region":
        return cls(lo, hi, 0.0, 0.0, INTERVAL)

    @classmethod
    def around(cls, z: complex, half_width: float, real: bool = False) -> "Region":
        z = complex(z)
        if real:
            return cls.interval(z.real - half_width, z.real + half_width)
        return cls.box(z.real - half_width, z.real + half_width, z.imag - half_width, z.imag + half_width)

    def contains(self, z: complex) -> bool:
        z = complex(z)
        if not self.re_lo <= z.real < self.re_hi:
            return False
        if self.kind == INTERVAL:
            return abs(z.imag) <= CLUSTER_TOL * max(1.0, abs(z))
        return self.im_lo <= z.imag < self.im_hi

    @property
    def sort_key(self) -> Tuple[float, float]:
        return (self.re_lo, self.im_lo)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_hi - self.re_lo, self.im_hi - self.im_lo)


@dataclass(frozen=True)
class Cell:
    cell_id: str
    region: Optional[Region] = None
    representative: Optional[complex] = None

    def point(self) -> Optional[complex]:
        if self.representative is not None:
            return complex(self.representative)
        if self.region is not None:
            return self.region.center
        return None


@dataclass(frozen=True)
class MeasurableSpace:
    """Finitely many cells; Σ is implicitly their power set."""
    cells: Tuple[Cell, ...]

    def __post_init__(self):
        cells = tuple(self.cells)
        ids = [c.cell_id for c in cells]
        if len(set(ids)) != len(ids):
            raise InvalidParameter("cell identifiers must be unique")
        object.__setattr__(self, 'cells', cells)

    @classmethod
    def from_ids(cls, ids: Iterable[str]) -> "MeasurableSpace":
        return cls(tuple(Cell(str(i)) for i in ids))

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def ids(self) -> List[str]:
        return [c.cell_id for c in self.cells]

    def index(self, cell_id: str) -> int:
        for i, cell in enumerate(self.cells):
            if cell.cell_id == cell_id:
                return i
        raise InvalidParameter(f"unknown cell {cell_id!r}")

    def cell(self, cell_id: str) -> Cell:
        return self.cells[self.index(cell_id)]

    def locate(self, z: complex) -> Optional[str]:
        """The cell whose region holds z; ties go to the smallest (re_lo, im_lo)."""
        hits = [c for c in self.cells if c.region is not None and c.region.contains(z)]
        if not hits:
            return None
        return min(hits, key=lambda c: c.region.sort_key).cell_id

    def representatives(self) -> Dict[str, Optional[complex]]:
        return {c.cell_id: c.point() for c in self.cells}


# ============================================================
# Measures
# ============================================================
@dataclass(frozen=True, eq=False)
class RPOVM:
    """One projection field per cell; projections has shape (cells, atoms, dim, dim)."""
    gamma: MeasurableSpace
    space: SampleSpace
    projections: np.ndarray

    def __post_init__(self):
        projections = np.array(self.projections, dtype=np.complex128)
        n_cells = len(self.gamma)
        if projections.ndim != 4 or projections.shape[:2] != (n_cells, len(self.space)):
            raise InvalidMatrix(
                f"expected projections of shape ({n_cells}, {len(self.space)}, dim, dim), got {projections.shape}"
            )
        if projections.shape[2] != projections.shape[3]:
            raise InvalidMatrix("projection fields must be square")
        if not np.all(np.isfinite(projections[:, self.space.positive])):
            raise InvalidMatrix("measure has non-finite entries on positive-weight atoms")
        projections.setflags(write=False)
        object.__setattr__(self, 'projections', projections)

    @classmethod
    def from_fields(cls, gamma: MeasurableSpace, fields: Mapping[str, OperatorField]) -> "RPOVM":
        missing = [cid for cid in gamma.ids if cid not in fields]
        if missing:
            raise IncompleteMap(missing[0], "has no projection field")
        stack = [fields[cid] for cid in gamma.ids]
        space = stack[0].space
        for f in stack:
            if f.space != space:
                raise SpaceMismatch("projection fields live on different sample spaces")
            if f.matrices.shape != stack[0].matrices.shape:
                raise DimensionMismatch("projection fields have different shapes")
        return cls(gamma, space, np.stack([f.matrices for f in stack]))

    @property
    def dim(self) -> int:
        return self.projections.shape[2]

    def cell_field(self, cell_id: str) -> OperatorField:
        return OperatorField(self.space, self.projections[self.gamma.index(cell_id)])

    def fields(self) -> Dict[str, OperatorField]:
        return {cid: OperatorField(self.space, self.projections[i]) for i, cid in enumerate(self.gamma.ids)}

    def indicator(self, subset: Iterable[str]) -> np.ndarray:
        mask = np.zeros(len(self.gamma))
        for cid in subset:
            mask[self.gamma.index(cid)] = 1.0
        return mask

    def measure_of(self, subset: Iterable[str]) -> OperatorField:
        """E(σ) = Σ_{γ∈σ} E(γ); E(∅) = O_H."""
        return OperatorField(self.space, weighted_sum(self.indicator(subset), self.projections))

    def null_cells(self, tol: float = TOL_LIN) -> np.ndarray:
        """Mask of cells whose projection vanishes on every positive-weight atom."""
        stack = self.projections[:, self.space.positive]
        if stack.shape[1] == 0:
            return np.ones(len(self.gamma), dtype=bool)
        return batch_op_norm(stack).max(axis=1) <= tol

    def is_null(self, cell_id: str, tol: float = TOL_LIN) -> bool:
        return bool(self.null_cells(tol)[self.gamma.index(cell_id)])


def weighted_sum(coefficients: np.ndarray, projections: np.ndarray) -> np.ndarray:
    """Σ_γ c_γ·e_γ(ω), skipping zero coefficients so null-atom junk never leaks in."""
    out = np.zeros(projections.shape[1:], dtype=np.complex128)
    for c, proj in zip(coefficients, projections):
        if c != 0:
            out = out + c * proj
    return out


# ============================================================
# Validation
# ============================================================
@dataclass(frozen=True)
class AxiomCheck:
    name: str
    passed: bool
    worst_residual: float
    detail: str = ""


@dataclass(frozen=True)
class RPOVMReport:
    checks: Tuple[AxiomCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> List[AxiomCheck]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "worst_residual": c.worst_residual, "detail": c.detail}
                for c in self.checks
            ],
        }


def _worst(residuals: np.ndarray, labels: Sequence[str], tol: float, name: str) -> AxiomCheck:
    residuals = np.asarray(residuals, dtype=float).ravel()
    if residuals.size == 0:
        return AxiomCheck(name, True, 0.0)
    residuals = np.where(np.isfinite(residuals), residuals, np.inf)
    k = int(np.argmax(residuals))
    worst = float(residuals[k])
    passed = worst <= tol
    return AxiomCheck(name, passed, worst, "" if passed else f"worst at {labels[k]}")


def _sample_masks(n_cells: int, rng: np.random.Generator) -> np.ndarray:
    if n_cells <= SUBSET_EXHAUSTIVE_LIMIT:
        return np.array(list(itertools.product((0.0, 1.0), repeat=n_cells))).reshape(-1, n_cells)
    return rng.integers(0, 2, size=(SUBSET_SAMPLES, n_cells)).astype(float)


def _sample_pairs(masks: np.ndarray, rng: np.random.Generator) -> List[Tuple[int, int]]:
    n_cells = masks.shape[1]
    if n_cells <= PAIR_EXHAUSTIVE_LIMIT:
        return list(itertools.product(range(len(masks)), repeat=2))
    picks = rng.integers(0, len(masks), size=(SUBSET_SAMPLES, 2))
    return [(int(a), int(b)) for a, b in picks]


def _mask_label(mask: np.ndarray, ids: Sequence[str]) -> str:
    return "{" + ",".join(cid for cid, keep in zip(ids, mask) if keep) + "}"


def pairwise_orthogonality(E: RPOVM, tol: float = TOL_LIN) -> AxiomCheck:
    """max ‖e_γ(ω)e_γ'(ω)‖ over distinct cells, checking only cells active at ω."""
    positive = np.flatnonzero(E.space.positive)
    worst, label = 0.0, ""
    for n in positive:
        stack = E.projections[:, n]
        active = np.flatnonzero(np.linalg.norm(stack, axis=(1, 2)) > tol)
        if len(active) < 2:
            continue
        sub = stack[active]
        products = np.einsum('aij,bjk->abik', sub, sub)
        norms = batch_op_norm(products)
        np.fill_diagonal(norms, 0.0)
        a, b = np.unravel_index(int(np.argmax(norms)), norms.shape)
        if norms[a, b] > worst:
            worst = float(norms[a, b])
            label = f"cells {E.gamma.ids[active[a]]},{E.gamma.ids[active[b]]} atom {E.space.atoms[n]}"
    passed = worst <= tol
    return AxiomCheck("orthogonality", passed, worst, "" if passed else f"worst at {label}")


def validate_rpovm(E: RPOVM, tol: float = TOL_LIN, seed: int = DEFAULT_SEED) -> RPOVMReport:
    """
    Check the measure axioms on positive-weight atoms.

    projection        each E(γ) selfadjoint and idempotent
    orthogonality     E(γ)E(γ') = O for γ ≠ γ'
    completeness      E(Γ) = J_H
    empty             E(∅) = O_H
    additivity        E(σ) is again a projection for sampled σ
    multiplicativity  E(σ)E(τ) = E(σ∩τ) for sampled pairs
    """
    rng = np.random.default_rng(seed)
    positive = E.space.positive
    atoms = [a for a, keep in zip(E.space.atoms, positive) if keep]
    ids = E.gamma.ids
    proj = E.projections[:, positive]
    identity = np.eye(E.dim)
    checks = []

    # (i)
    skew = batch_op_norm(proj - adjoint(proj))
    idem = batch_op_norm(proj @ proj - proj)
    labels = [f"cell {cid} atom {a}" for cid in ids for a in atoms]
    checks.append(_worst(np.maximum(skew, idem), labels, tol, "projection"))

    # (v) on cells
    checks.append(pairwise_orthogonality(E, tol))

    # (iii)
    total = proj.sum(axis=0)
    checks.append(_worst(batch_op_norm(total - identity), [f"atom {a}" for a in atoms], tol, "completeness"))

    # (iv)
    empty = weighted_sum(np.zeros(len(ids)), proj)
    checks.append(_worst(batch_op_norm(empty), [f"atom {a}" for a in atoms], tol, "empty"))

    # (ii) and (v) on sampled subsets
    masks = _sample_masks(len(ids), rng)
    evaluated = [weighted_sum(mask, proj) for mask in masks]
    subset_residuals = []
    subset_labels = []
    for mask, e in zip(masks, evaluated):
        r = np.maximum(batch_op_norm(e - adjoint(e)), batch_op_norm(e @ e - e))
        subset_residuals.append(r.max() if r.size else 0.0)
        subset_labels.append(_mask_label(mask, ids))
    checks.append(_worst(subset_residuals, subset_labels, tol * max(1, len(ids)), "additivity"))

    lookup = {tuple(mask): e for mask, e in zip(masks, evaluated)}
    pair_residuals = []
    pair_labels = []
    for a, b in _sample_pairs(masks, rng):
        meet = masks[a] * masks[b]
        e_meet = lookup.get(tuple(meet))
        if e_meet is None:
            e_meet = weighted_sum(meet, proj)
        r = batch_op_norm(evaluated[a] @ evaluated[b] - e_meet)
        pair_residuals.append(r.max() if r.size else 0.0)
        pair_labels.append(f"{_mask_label(masks[a], ids)}∩{_mask_label(masks[b], ids)}")
    checks.append(_worst(pair_residuals, pair_labels, tol * max(1, len(ids)), "multiplicativity"))

    report = RPOVMReport(tuple(checks))
    logger.debug(f"validate_rpovm: {len(ids)} cells, {len(masks)} subsets, passed={report.passed}")
    return report


# ============================================================
# Derived measures
# ============================================================
@dataclass(frozen=True, eq=False)
class ScalarRandomMeasure:
    """E_{x,y}(γ)(ω); values has shape (cells, atoms)."""
    gamma: MeasurableSpace
    space: SampleSpace
    values: np.ndarray

    def cell(self, cell_id: str) -> RandomScalar:
        return RandomScalar(self.space, self.values[self.gamma.index(cell_id)])

    def of(self, subset: Iterable[str]) -> RandomScalar:
        idx = [self.gamma.index(cid) for cid in subset]
        return RandomScalar(self.space, self.values[idx].sum(axis=0))

    def total(self) -> RandomScalar:
        return RandomScalar(self.space, self.values.sum(axis=0))


@dataclass(frozen=True, eq=False)
class VectorRandomMeasure:
    """E_x(γ)(ω); values has shape (cells, atoms, dim)."""
    gamma: MeasurableSpace
    space: SampleSpace
    values: np.ndarray

    def cell(self, cell_id: str) -> RandomVector:
        return RandomVector(self.space, self.values[self.gamma.index(cell_id)])

    def of(self, subset: Iterable[str]) -> RandomVector:
        idx = [self.gamma.index(cid) for cid in subset]
        return RandomVector(self.space, self.values[idx].sum(axis=0))

    def total(self) -> RandomVector:
        return RandomVector(self.space, self.values.sum(axis=0))


def _vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (dim,):
        raise DimensionMismatch(f"expected a vector of length {dim}, got shape {x.shape}")
    return x


def scalar_measure(E: RPOVM, x, y) -> ScalarRandomMeasure:
    """E_{x,y}(γ)(ω) = ⟨e_γ(ω)x, y⟩."""
    x = _vector(x, E.dim)
    y = _vector(y, E.dim)
    values = np.einsum('i,cnij,j->cn', np.conj(y), E.projections, x)
    return ScalarRandomMeasure(E.gamma, E.space, values)


def vector_measure(E: RPOVM, x) -> VectorRandomMeasure:
    """E_x(γ)(ω) = e_γ(ω)x."""
    x = _vector(x, E.dim)
    return VectorRandomMeasure(E.gamma, E.space, np.einsum('cnij,j->cni', E.projections, x))


def polarization_vectors(dim: int) -> List[np.ndarray]:
    """Basis vectors plus the real and imaginary polarization pairs."""
    eye = np.eye(dim, dtype=np.complex128)
    vectors = list(eye)
    for i, j in itertools.combinations(range(dim), 2):
        vectors.append((eye[i] + eye[j]) / math.sqrt(2))
        vectors.append((eye[i] + 1j * eye[j]) / math.sqrt(2))
    return vectors


def lemma_check(candidate: Mapping[str, OperatorField], tol: float = TOL_LIN) -> bool:
    """
    A family of projection fields is a measure iff it is multiplicative and
    every E_{x,x} is a positive random measure of total mass ‖x‖².
    """
    if not candidate:
        return False
    gamma = MeasurableSpace.from_ids(candidate.keys())
    try:
        E = RPOVM.from_fields(gamma, candidate)
    except (InvalidMatrix, DimensionMismatch, SpaceMismatch) as e:
        logger.debug(f"lemma_check: malformed candidate: {e}")
        return False

    positive = E.space.positive
    proj = E.projections[:, positive]
    if np.any(batch_op_norm(proj - adjoint(proj)) > tol) or np.any(batch_op_norm(proj @ proj - proj) > tol):
        logger.debug("lemma_check: a cell is not a projection")
        return False
    if not pairwise_orthogonality(E, tol).passed:
        logger.debug("lemma_check: not multiplicative")
        return False

    for x in polarization_vectors(E.dim):
        values = scalar_measure(E, x, x).values[:, positive]
        if np.any(np.abs(values.imag) > tol) or np.any(values.real < -tol):
            logger.debug("lemma_check: E_xx not positive")
            return False
        if np.any(np.abs(values.sum(axis=0) - np.vdot(x, x).real) > tol * max(1, len(gamma))):
            logger.debug("lemma_check: E_xx(Γ) differs from ‖x‖²")
            return False
    return True


# ============================================================
# Transport
# ============================================================
def pushforward(E: RPOVM, phi: Mapping[str, str], target: Optional[MeasurableSpace] = None) -> RPOVM:
    """F(τ) = E(φ⁻¹(τ)); cells of the target with empty preimage get O_H."""
    images = []
    for cid in E.gamma.ids:
        if cid not in phi:
            raise IncompleteMap(cid)
        images.append(phi[cid])
    if target is None:
        target = MeasurableSpace.from_ids(dict.fromkeys(images))
    known = set(target.ids)
    projections = np.zeros((len(target),) + E.projections.shape[1:], dtype=np.complex128)
    for i, (cid, image) in enumerate(zip(E.gamma.ids, images)):
        if image not in known:
            raise IncompleteMap(cid, f"maps to unknown cell {image!r}")
        projections[target.index(image)] += E.projections[i]
    return RPOVM(target, E.space, projections)


def expected_distribution(E: RPOVM, x) -> Dict[str, float]:
    """Σ_ω ℘(ω)·E_{x,x}(γ)(ω) per cell."""
    values = scalar_measure(E, x, x).values[:, E.space.positive].real
    averaged = values @ E.space.weights[E.space.positive]
    return dict(zip(E.gamma.ids, (float(v) for v in averaged)))


def density_of_states(E: RPOVM) -> Dict[str, float]:
    """Σ_ω ℘(ω)·tr e_γ(ω)/dim per cell: the integrated density of states."""
    positive = E.space.positive
    traces = np.trace(E.projections[:, positive], axis1=2, axis2=3).real / E.dim
    averaged = traces @ E.space.weights[positive]
    return dict(zip(E.gamma.ids, (float(v) for v in averaged)))
