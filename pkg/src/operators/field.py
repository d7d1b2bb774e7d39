"""
Operator fields {a(ω)}: the finite-dimensional model of random operators.

A field acts on deterministic vectors (the random operator itself) and,
pointwise, on random vectors (its decomposable extension). The random
adjoint is the fieldwise conjugate transpose; composition is the fieldwise
product. At finite dimension every domain is the whole space, so the
classes 𝒮⁰ ⊃ 𝒮² ⊃ HS become computed flags.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import MAX_DIM, TOL_LIN
from ..linalg.core import adjoint, batch_op_norm, hermitian_part
from ..probability.sample_space import (
    RandomScalar,
    RandomVector,
    SampleSpace,
    ae_equal,
    multiply,
)
from ..utils.errors import (
    DimensionMismatch,
    HypothesisViolated,
    InvalidMatrix,
    SpaceMismatch,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OperatorField:
    """Per-atom matrices of shape dim_out × dim_in."""
    space: SampleSpace
    matrices: np.ndarray

    def __post_init__(self):
        matrices = np.array(self.matrices, dtype=np.complex128)
        if matrices.ndim != 3 or matrices.shape[0] != len(self.space):
            raise InvalidMatrix(
                f"expected matrices of shape ({len(self.space)}, dim_out, dim_in), got {matrices.shape}"
            )
        _, rows, cols = matrices.shape
        if min(rows, cols) < 1 or max(rows, cols) > MAX_DIM:
            raise InvalidMatrix(f"field matrices {rows}x{cols} outside 1..{MAX_DIM}")
        if not np.all(np.isfinite(matrices[self.space.positive])):
            raise InvalidMatrix("field has non-finite entries on positive-weight atoms")
        matrices.setflags(write=False)
        object.__setattr__(self, 'matrices', matrices)

    # ------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------
    @classmethod
    def identity(cls, space: SampleSpace, dim: int) -> "OperatorField":
        """J_H, decomposed by the constant identity field."""
        return cls(space, np.broadcast_to(np.eye(dim, dtype=np.complex128), (len(space), dim, dim)))

    @classmethod
    def zero(cls, space: SampleSpace, dim_out: int, dim_in: Optional[int] = None) -> "OperatorField":
        return cls(space, np.zeros((len(space), dim_out, dim_in or dim_out), dtype=np.complex128))

    @classmethod
    def constant(cls, space: SampleSpace, matrix) -> "OperatorField":
        matrix = np.asarray(matrix, dtype=np.complex128)
        return cls(space, np.broadcast_to(matrix, (len(space),) + matrix.shape))

    # ------------------------------------------------------------
    # Shape
    # ------------------------------------------------------------
    @property
    def dim_out(self) -> int:
        return self.matrices.shape[1]

    @property
    def dim_in(self) -> int:
        return self.matrices.shape[2]

    @property
    def is_square(self) -> bool:
        return self.dim_in == self.dim_out

    def matrix_at(self, atom: str) -> np.ndarray:
        return self.matrices[self.space.index(atom)]

    # ------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------
    def _check_compatible(self, other: "OperatorField"):
        _require_same_space(self.space, other.space)
        if self.matrices.shape != other.matrices.shape:
            raise DimensionMismatch(
                f"field shapes {self.matrices.shape[1:]} and {other.matrices.shape[1:]} differ"
            )

    def __add__(self, other: "OperatorField") -> "OperatorField":
        self._check_compatible(other)
        return OperatorField(self.space, self.matrices + other.matrices)

    def __sub__(self, other: "OperatorField") -> "OperatorField":
        self._check_compatible(other)
        return OperatorField(self.space, self.matrices - other.matrices)

    def __mul__(self, scalar: complex) -> "OperatorField":
        return OperatorField(self.space, complex(scalar) * self.matrices)

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorField":
        return OperatorField(self.space, -self.matrices)

    def __matmul__(self, other: "OperatorField") -> "OperatorField":
        return compose(self, other)


def _require_same_space(a: SampleSpace, b: SampleSpace):
    if a is not b and a != b:
        raise SpaceMismatch("operands live on different sample spaces")


def _positive(field: OperatorField) -> Tuple[np.ndarray, List[str]]:
    mask = field.space.positive
    atoms = [a for a, keep in zip(field.space.atoms, mask) if keep]
    return field.matrices[mask], atoms


def _first_violation(residuals: np.ndarray, atoms: Sequence[str], tol: float) -> Optional[Tuple[str, float]]:
    for atom, residual in zip(atoms, residuals):
        if not residual <= tol:
            return atom, float(residual)
    return None


def field_residual(a: OperatorField, b: OperatorField) -> float:
    """ess sup over ω of ‖a(ω) − b(ω)‖_op."""
    a._check_compatible(b)
    diff, _ = _positive(a - b)
    norms = batch_op_norm(diff)
    return float(norms.max()) if norms.size else 0.0


def fields_equal(a: OperatorField, b: OperatorField, tol: float = TOL_LIN) -> bool:
    return field_residual(a, b) <= tol


# ============================================================
# Application, adjoint, composition
# ============================================================
def apply(field: OperatorField, x: Sequence[complex]) -> RandomVector:
    """(Ax)(ω) = a(ω)x."""
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (field.dim_in,):
        raise DimensionMismatch(f"expected a vector of length {field.dim_in}, got shape {x.shape}")
    return RandomVector(field.space, np.einsum('nij,j->ni', field.matrices, x))


def extend_apply(field: OperatorField, f: RandomVector) -> RandomVector:
    """Pointwise application (𝐀f)(ω) = a(ω)f(ω) of the decomposable extension."""
    _require_same_space(field.space, f.space)
    if f.dim != field.dim_in:
        raise DimensionMismatch(f"expected a random vector of dim {field.dim_in}, got {f.dim}")
    return RandomVector(field.space, np.einsum('nij,nj->ni', field.matrices, f.values))


def adjoint_field(field: OperatorField) -> OperatorField:
    """The random adjoint A^∙, decomposed by {a(ω)*}."""
    return OperatorField(field.space, adjoint(field.matrices))


def compose(outer: OperatorField, inner: OperatorField) -> OperatorField:
    """BA, decomposed by {b(ω)a(ω)}."""
    _require_same_space(outer.space, inner.space)
    if outer.dim_in != inner.dim_out:
        raise DimensionMismatch(
            f"cannot compose: outer takes dim {outer.dim_in}, inner produces dim {inner.dim_out}"
        )
    return OperatorField(outer.space, outer.matrices @ inner.matrices)


# ============================================================
# Classification
# ============================================================
@dataclass(frozen=True)
class FieldClassification:
    r: RandomScalar
    in_s0: bool
    in_s2: bool
    in_hs: bool
    s2_norm_sq: float
    hs_norm_sq: float
    ess_sup: float

    def as_dict(self) -> dict:
        return {
            "in_s0": self.in_s0,
            "in_s2": self.in_s2,
            "in_hs": self.in_hs,
            "s2_norm_sq": self.s2_norm_sq,
            "hs_norm_sq": self.hs_norm_sq,
            "ess_sup": self.ess_sup,
            "norms": {atom: float(v.real) for atom, v in zip(self.r.space.atoms, self.r.values)},
        }


def _atom_norms(field: OperatorField, order) -> np.ndarray:
    norms = np.full(len(field.space), np.inf)
    finite = np.all(np.isfinite(field.matrices), axis=(1, 2))
    if order == 2:
        norms[finite] = batch_op_norm(field.matrices[finite])
    else:
        norms[finite] = np.linalg.norm(field.matrices[finite], ord=order, axis=(1, 2))
    return norms


def classify(field: OperatorField) -> FieldClassification:
    """r(ω) = ‖a(ω)‖ and the 𝒮⁰ ⊃ 𝒮² ⊃ HS membership flags."""
    mask = field.space.positive
    weights = field.space.weights[mask]
    r = _atom_norms(field, 2)
    hs = _atom_norms(field, 'fro')

    s2_norm_sq = float(np.dot(weights, r[mask] ** 2))
    hs_norm_sq = float(np.dot(weights, hs[mask] ** 2))
    in_s0 = bool(np.all(np.isfinite(r[mask])))
    in_s2 = in_s0 and math.isfinite(s2_norm_sq)
    in_hs = in_s2 and math.isfinite(hs_norm_sq)
    return FieldClassification(
        r=RandomScalar(field.space, r),
        in_s0=in_s0,
        in_s2=in_s2,
        in_hs=in_hs,
        s2_norm_sq=s2_norm_sq,
        hs_norm_sq=hs_norm_sq,
        ess_sup=float(r[mask].max()),
    )


def check_intertwine(
    operator: Union[OperatorField, Callable[[RandomVector], RandomVector]],
    phi: RandomScalar,
    samples: Iterable[RandomVector],
    tol: float = 1e-9,
) -> bool:
    """
    True iff the operator commutes with multiplication by φ on every sample.

    Fields are applied pointwise; any other callable on random vectors is
    applied as given.
    """
    act = (lambda f: extend_apply(operator, f)) if isinstance(operator, OperatorField) else operator
    for f in samples:
        _require_same_space(phi.space, f.space)
        if not ae_equal(act(multiply(phi, f)), multiply(phi, act(f)), tol):
            return False
    return True


# ============================================================
# Projection algebra
# ============================================================
class ProjectionMode(str, Enum):
    PRODUCT = "product"
    SUM = "sum"
    COMPLEMENT = "complement"
    SUM_MINUS_PRODUCT = "sum-minus-product"
    DIFFERENCE = "difference"


def _require(residuals: np.ndarray, atoms: Sequence[str], tol: float, hypothesis: str):
    violation = _first_violation(residuals, atoms, tol)
    if violation is not None:
        raise HypothesisViolated(hypothesis, *violation)


def _require_projection(field: OperatorField, tol: float, name: str):
    if not field.is_square:
        raise HypothesisViolated(f"{name} is a projection", None, math.inf)
    m, atoms = _positive(field)
    _require(batch_op_norm(m - adjoint(m)), atoms, tol, f"{name} is selfadjoint")
    _require(batch_op_norm(m @ m - m), atoms, tol, f"{name} is idempotent")


def proj_combine(
    p_field: OperatorField,
    q_field: Optional[OperatorField],
    mode: Union[ProjectionMode, str],
    tol: float = TOL_LIN,
) -> OperatorField:
    """
    Combine random projections P and Q; each mode checks its hypothesis
    atom by atom and the result is verified to be a projection again.

      product            PQ           needs PQ = QP
      sum                P + Q        needs PQ = O
      complement         J_H − P      Q ignored
      sum-minus-product  P + Q − PQ   needs PQ = QP
      difference         P − Q        needs PQ = Q
    """
    mode = ProjectionMode(mode)
    _require_projection(p_field, tol, "P")
    p, atoms = _positive(p_field)

    if mode is ProjectionMode.COMPLEMENT:
        result = OperatorField.identity(p_field.space, p_field.dim_out) - p_field
    else:
        if q_field is None:
            raise HypothesisViolated(f"{mode.value} needs a second projection", None, math.inf)
        p_field._check_compatible(q_field)
        _require_projection(q_field, tol, "Q")
        q, _ = _positive(q_field)
        pq = p @ q
        if mode is ProjectionMode.PRODUCT:
            _require(batch_op_norm(pq - q @ p), atoms, tol, "PQ = QP")
            matrices = p_field.matrices @ q_field.matrices
        elif mode is ProjectionMode.SUM:
            _require(batch_op_norm(pq), atoms, tol, "PQ = O")
            matrices = p_field.matrices + q_field.matrices
        elif mode is ProjectionMode.SUM_MINUS_PRODUCT:
            _require(batch_op_norm(pq - q @ p), atoms, tol, "PQ = QP")
            matrices = p_field.matrices + q_field.matrices - p_field.matrices @ q_field.matrices
        else:
            _require(batch_op_norm(pq - q), atoms, tol, "PQ = Q")
            matrices = p_field.matrices - q_field.matrices
        result = OperatorField(p_field.space, matrices)

    _require_projection(result, 4 * tol, "result")
    return result


def field_leq(a_field: OperatorField, b_field: OperatorField, tol: float = TOL_LIN) -> bool:
    """A ≤ B for selfadjoint fields: b(ω) − a(ω) is PSD on every positive-weight atom."""
    a_field._check_compatible(b_field)
    for name, field in (("A", a_field), ("B", b_field)):
        if not field.is_square:
            raise HypothesisViolated(f"{name} is selfadjoint", None, math.inf)
        m, atoms = _positive(field)
        _require(batch_op_norm(m - adjoint(m)), atoms, tol * max(1.0, _max_norm(m)), f"{name} is selfadjoint")
    diff, _ = _positive(b_field - a_field)
    if diff.size == 0:
        return True
    smallest = np.linalg.eigvalsh(hermitian_part(diff))[:, 0]
    return bool(np.all(smallest >= -tol))


def _max_norm(stack: np.ndarray) -> float:
    norms = batch_op_norm(stack)
    return float(norms.max()) if norms.size else 0.0


def proj_leq(p_field: OperatorField, q_field: OperatorField, tol: float = TOL_LIN) -> bool:
    """P ≤ Q in the order of selfadjoint random operators."""
    _require_same_space(p_field.space, q_field.space)
    _require_projection(p_field, tol, "P")
    _require_projection(q_field, tol, "Q")
    return field_leq(p_field, q_field, tol)


# ============================================================
# Predicates
# ============================================================
@dataclass(frozen=True)
class FieldPredicates:
    selfadjoint: bool
    normal: bool
    unitary: bool
    projection: bool
    pure_contraction: bool

    def as_dict(self) -> dict:
        return {
            "selfadjoint": self.selfadjoint,
            "normal": self.normal,
            "unitary": self.unitary,
            "projection": self.projection,
            "pure_contraction": self.pure_contraction,
        }


def predicates(field: OperatorField, tol: float = TOL_LIN) -> FieldPredicates:
    """Each flag holds iff it holds for a(ω) on every positive-weight atom."""
    if not field.is_square:
        raise DimensionMismatch(f"predicates need a square field, got {field.dim_out}x{field.dim_in}")
    m, _ = _positive(field)
    h = adjoint(m)
    norms = batch_op_norm(m)
    scale = np.maximum(1.0, norms)
    identity = np.eye(field.dim_in)

    skew = batch_op_norm(m - h)
    idempotent = batch_op_norm(m @ m - m)
    return FieldPredicates(
        selfadjoint=bool(np.all(skew <= tol * scale)),
        normal=bool(np.all(batch_op_norm(m @ h - h @ m) <= tol * scale ** 2)),
        unitary=bool(np.all(batch_op_norm(h @ m - identity) <= tol)),
        projection=bool(np.all(skew <= tol) and np.all(idempotent <= tol)),
        pure_contraction=bool(np.all(norms < 1.0)),
    )
