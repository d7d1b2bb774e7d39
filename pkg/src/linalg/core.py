"""
Dense complex matrix kernels.

Everything above this module sees matrices only through the decomposition
contract of ``EigenDecomposition``: clustered spectral projections that are
Hermitian, idempotent, mutually orthogonal and sum to the identity. The
heavy lifting is LAPACK's ``eigh``; normal matrices are split along the Hermitian
part of rotated copies e^{-iθ}·m, which share their eigenvectors.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from config import CLUSTER_TOL, MAX_DIM, TOL_LIN
from ..utils.errors import (
    InvalidMatrix,
    InvalidParameter,
    NoConvergence,
    NotHermitian,
    NotNormal,
    NotPSD,
    SingularMatrix,
)

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]

ALLOWED_EXPONENTS = (0.5, -0.5, -1.0)

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))
MAX_SPLIT_ATTEMPTS = 8
LEAF_ULPS = 1e3


@dataclass(frozen=True)
class EigenDecomposition:
    """Distinct eigenvalues with one spectral projection per cluster."""
    eigenvalues: np.ndarray
    projections: Tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.projections)

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def ranks(self) -> List[int]:
        return [int(round(np.trace(p).real)) for p in self.projections]

    def reconstruct(self) -> ComplexMatrix:
        return np.einsum('k,kij->ij', self.eigenvalues, np.stack(self.projections))


# ============================================================
# Validation helpers
# ============================================================
def as_matrix(entries, max_dim: int = MAX_DIM) -> ComplexMatrix:
    """Coerce entries to a finite complex matrix within the dimension cap."""
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2:
        raise InvalidMatrix(f"expected a 2-d matrix, got {m.ndim} dimension(s)")
    rows, cols = m.shape
    if rows < 1 or cols < 1:
        raise InvalidMatrix(f"matrix must be at least 1x1, got {rows}x{cols}")
    if rows > max_dim or cols > max_dim:
        raise InvalidMatrix(f"matrix {rows}x{cols} exceeds the dimension cap {max_dim}")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix("matrix has non-finite entries")
    return m


def _require_square(m: ComplexMatrix):
    if m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"matrix must be square, got {m.shape[0]}x{m.shape[1]}")


def adjoint(m: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_part(m: ComplexMatrix) -> ComplexMatrix:
    return 0.5 * (m + adjoint(m))


# ============================================================
# Norms
# ============================================================
def op_norm(m: ComplexMatrix) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.complex128), 2))


def batch_op_norm(stack: np.ndarray) -> np.ndarray:
    """Operator norms over the last two axes of a stack of matrices."""
    stack = np.asarray(stack, dtype=np.complex128)
    if stack.size == 0:
        return np.zeros(stack.shape[:-2])
    return np.linalg.norm(stack, ord=2, axis=(-2, -1))


def hs_norm_matrix(m: ComplexMatrix) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(m, dtype=np.complex128), 'fro'))


# ============================================================
# Predicates
# ============================================================
def _scale(m: ComplexMatrix) -> float:
    return max(1.0, op_norm(m))


def is_hermitian(m: ComplexMatrix, tol: float = TOL_LIN) -> bool:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return op_norm(m - adjoint(m)) <= tol * _scale(m)


def is_normal(m: ComplexMatrix, tol: float = TOL_LIN) -> bool:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    h = adjoint(m)
    return op_norm(m @ h - h @ m) <= tol * _scale(m) ** 2


def is_projection(m: ComplexMatrix, tol: float = TOL_LIN) -> bool:
    """True iff m is selfadjoint and idempotent within tol."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return op_norm(m - adjoint(m)) <= tol and op_norm(m @ m - m) <= tol


# ============================================================
# Eigendecompositions
# ============================================================
def _cluster_sorted(values: np.ndarray, gap: float) -> List[np.ndarray]:
    """Group ascending values; neighbours closer than gap share a cluster."""
    groups = []
    start = 0
    for i in range(1, len(values)):
        if values[i] - values[i - 1] >= gap:
            groups.append(np.arange(start, i))
            start = i
    groups.append(np.arange(start, len(values)))
    return groups


def _projector(vectors: np.ndarray) -> ComplexMatrix:
    p = vectors @ adjoint(vectors)
    return hermitian_part(p)


def _eigh(h: ComplexMatrix) -> Tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"Hermitian eigensolver failed: {e}") from e


def eig_hermitian(m: ComplexMatrix, tol: Optional[float] = None) -> EigenDecomposition:
    """
    Spectral decomposition of a Hermitian matrix.

    Eigenvalues come back ascending; neighbours whose gap is below
    tol·max(1, ‖m‖) are merged into one cluster whose eigenvalue is the
    cluster mean.
    """
    m = as_matrix(m)
    _require_square(m)
    scale = _scale(m)
    residual = op_norm(m - adjoint(m))
    if residual > (TOL_LIN if tol is None else tol) * scale:
        raise NotHermitian(residual)
    gap = (CLUSTER_TOL if tol is None else tol) * scale

    w, v = _eigh(hermitian_part(m))
    eigenvalues = []
    projections = []
    for group in _cluster_sorted(w, gap):
        eigenvalues.append(complex(w[group].mean()))
        projections.append(_projector(v[:, group]))
    logger.debug(f"eig_hermitian: dim {m.shape[0]}, {len(projections)} cluster(s)")
    return EigenDecomposition(np.array(eigenvalues, dtype=np.complex128), tuple(projections))


def _find_root(parent: List[int], i: int) -> int:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def link_clusters(points: np.ndarray, link: float) -> List[List[int]]:
    """Union-find over complex points; two are linked when closer than link."""
    points = np.asarray(points, dtype=np.complex128)
    n = len(points)
    parent = list(range(n))
    order = np.argsort(points.real, kind='stable')
    for a_pos, a in enumerate(order):
        for b in order[a_pos + 1:]:
            if points[b].real - points[a].real >= link:
                break
            if abs(points[b] - points[a]) < link:
                ra, rb = _find_root(parent, a), _find_root(parent, b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: Dict[int, List[int]] = {}
    for i in range(n):
        groups.setdefault(_find_root(parent, i), []).append(i)
    return list(groups.values())


def _split_normal(m: ComplexMatrix, leaf: float) -> List[Tuple[complex, np.ndarray]]:
    """
    Invariant subspaces of a normal m on which m is λ·I within leaf.

    Each block is split along the Hermitian part of e^{-iθ}·block, which
    shares the eigenvectors of m; θ advances by the golden angle on every
    solve. A split is taken only when the projected spread is a fair share
    of the block's complex spread and the gap between groups is a fixed
    fraction of it, so eigenvector errors stay near ε‖m‖ however the
    eigenvalues are spaced.
    """
    leaves = []
    turn = 0
    stack = [(np.eye(m.shape[0], dtype=np.complex128), 0)]
    while stack:
        basis, misses = stack.pop()
        block = adjoint(basis) @ m @ basis
        k = block.shape[0]
        mu = complex(np.trace(block)) / k
        spread = op_norm(block - mu * np.eye(k)) if k > 1 else 0.0
        if spread <= leaf or misses >= MAX_SPLIT_ATTEMPTS:
            leaves.append((mu, basis))
            continue
        turn += 1
        w, u = _eigh(hermitian_part(np.exp(-1j * turn * GOLDEN_ANGLE) * block))
        width = w[-1] - w[0]
        groups = _cluster_sorted(w, max(leaf, width / (2 * k)))
        if len(groups) == 1 or (4 * width < spread and misses + 1 < MAX_SPLIT_ATTEMPTS):
            stack.append((basis, misses + 1))
            continue
        for group in groups:
            stack.append((basis @ u[:, group], 0))
    return leaves


def _lexicographic(values: np.ndarray, gap: float) -> List[int]:
    """Order by real part, then imaginary part among real parts closer than gap."""
    by_real = np.argsort(values.real, kind='stable')
    order = []
    for run in _cluster_sorted(values.real[by_real], gap):
        order.extend(sorted(by_real[run], key=lambda i: values[i].imag))
    return order


def diagonalize_normal(
    m: ComplexMatrix,
    tol: Optional[float] = None,
    key: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> EigenDecomposition:
    """
    Spectral decomposition of a normal matrix.

    The matrix is split into invariant subspaces along generic real
    directions of the complex plane, then eigenvalues closer than
    tol·max(1, ‖m‖) are merged by complex distance. With a key, the
    distance is measured between key(λ) values against
    tol·max(1, max |key(λ)|) instead, while the eigenvalues themselves
    stay in m's coordinates. Eigenvalues are ordered lexicographically
    by (re, im).
    """
    m = as_matrix(m)
    _require_square(m)
    scale = _scale(m)
    h = adjoint(m)
    residual = op_norm(m @ h - h @ m)
    if residual > (TOL_LIN if tol is None else tol) * scale ** 2:
        raise NotNormal(residual)
    cluster_tol = CLUSTER_TOL if tol is None else tol
    leaf = min(cluster_tol * scale / 4, LEAF_ULPS * np.finfo(float).eps * scale)

    leaves = _split_normal(m, leaf)
    values = np.array([mu for mu, _ in leaves], dtype=np.complex128)
    ranks = np.array([basis.shape[1] for _, basis in leaves])
    if key is None:
        points = values
        gap = cluster_tol * scale
    else:
        points = np.asarray(key(values), dtype=np.complex128)
        gap = cluster_tol * max(1.0, float(np.abs(points).max()))

    eigenvalues = []
    projections = []
    for members in link_clusters(points, gap):
        eigenvalues.append(np.dot(ranks[members], values[members]) / ranks[members].sum())
        projections.append(_projector(np.hstack([leaves[i][1] for i in members])))
    eigenvalues = np.array(eigenvalues, dtype=np.complex128)
    order = _lexicographic(eigenvalues, cluster_tol * scale)
    logger.debug(f"diagonalize_normal: dim {m.shape[0]}, {len(order)} cluster(s) from {len(leaves)} leaves")
    return EigenDecomposition(eigenvalues[order], tuple(projections[i] for i in order))


# ============================================================
# Matrix functions
# ============================================================
def psd_power(m: ComplexMatrix, exponent: float, tol: float = TOL_LIN) -> ComplexMatrix:
    """
    m ** exponent for Hermitian positive semidefinite m.

    Only the exponents needed by the bounded transform are supported:
    1/2, -1/2 and -1. Negative exponents require λ_min > tol.
    """
    if exponent not in ALLOWED_EXPONENTS:
        raise InvalidParameter(f"exponent must be one of {ALLOWED_EXPONENTS}, got {exponent}")
    m = as_matrix(m)
    _require_square(m)
    scale = _scale(m)
    residual = op_norm(m - adjoint(m))
    if residual > tol * scale:
        raise NotHermitian(residual)

    w, v = _eigh(hermitian_part(m))
    lam_min = float(w[0])
    if lam_min < -tol * scale:
        raise NotPSD(lam_min)
    if exponent < 0 and lam_min <= tol:
        raise SingularMatrix(lam_min)

    powered = np.clip(w, 0.0, None) ** exponent
    return hermitian_part((v * powered) @ adjoint(v))
