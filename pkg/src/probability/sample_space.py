"""
Finite atomic probability spaces and the L^p spaces built over them.

Atoms of weight zero are allowed; they carry the "almost everywhere"
semantics, so every comparison and every integral looks only at atoms of
positive weight. Values on null atoms may even be non-finite.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from config import WEIGHT_TOL
from ..utils.errors import DimensionMismatch, InvalidParameter, InvalidSampleSpace, SpaceMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SampleSpace:
    atoms: Tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        atoms = tuple(str(a) for a in self.atoms)
        weights = np.array(self.weights, dtype=float)
        if len(atoms) == 0:
            raise InvalidSampleSpace("sample space needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise InvalidSampleSpace("atom identifiers must be unique")
        if weights.shape != (len(atoms),):
            raise InvalidSampleSpace(f"expected {len(atoms)} weights, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidSampleSpace("weights must be finite and non-negative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidSampleSpace(f"weights sum to {weights.sum():.15g}, not 1")
        if not np.any(weights > 0):
            raise InvalidSampleSpace("at least one atom must carry positive weight")
        weights.setflags(write=False)
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def uniform(cls, n: int, prefix: str = "w") -> "SampleSpace":
        if n < 1:
            raise InvalidParameter(f"need at least one atom, got {n}")
        return cls(tuple(f"{prefix}{i + 1}" for i in range(n)), np.full(n, 1.0 / n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleSpace):
            return NotImplemented
        return self.atoms == other.atoms and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash((self.atoms, self.weights.tobytes()))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def positive(self) -> np.ndarray:
        """Mask of atoms with positive weight."""
        return self.weights > 0

    def index(self, atom: str) -> int:
        try:
            return self.atoms.index(atom)
        except ValueError:
            raise InvalidParameter(f"unknown atom {atom!r}") from None

    def indicator(self, atoms: Union[str, Iterable[str]]) -> "RandomScalar":
        """χ_α for a set α of atoms."""
        if isinstance(atoms, str):
            atoms = [atoms]
        values = np.zeros(len(self), dtype=np.complex128)
        for atom in atoms:
            values[self.index(atom)] = 1.0
        return RandomScalar(self, values)

    def probability(self, atoms: Iterable[str]) -> float:
        return float(sum(self.weights[self.index(a)] for a in set(atoms)))


def _require_same_space(a: SampleSpace, b: SampleSpace):
    if a is not b and a != b:
        raise SpaceMismatch("operands live on different sample spaces")


@dataclass(frozen=True, eq=False)
class RandomVector:
    """An H-valued random variable: one complex vector per atom."""
    space: SampleSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim != 2 or values.shape[0] != len(self.space):
            raise DimensionMismatch(
                f"expected values of shape ({len(self.space)}, dim), got {values.shape}"
            )
        if not np.all(np.isfinite(values[self.space.positive])):
            raise InvalidParameter("random vector has non-finite values on positive-weight atoms")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, space: SampleSpace, dim: int) -> "RandomVector":
        return cls(space, np.zeros((len(space), dim), dtype=np.complex128))

    def value_at(self, atom: str) -> np.ndarray:
        return self.values[self.space.index(atom)]

    def _combine(self, other: "RandomVector", sign: float) -> "RandomVector":
        _require_same_space(self.space, other.space)
        if self.dim != other.dim:
            raise DimensionMismatch(f"dimensions {self.dim} and {other.dim} differ")
        return RandomVector(self.space, self.values + sign * other.values)

    def __add__(self, other: "RandomVector") -> "RandomVector":
        return self._combine(other, 1.0)

    def __sub__(self, other: "RandomVector") -> "RandomVector":
        return self._combine(other, -1.0)

    def __mul__(self, scalar: complex) -> "RandomVector":
        return RandomVector(self.space, complex(scalar) * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class RandomScalar:
    """A complex random variable: one scalar per atom."""
    space: SampleSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (len(self.space),):
            raise DimensionMismatch(f"expected {len(self.space)} values, got shape {values.shape}")
        if not np.all(np.isfinite(values[self.space.positive])):
            raise InvalidParameter("random scalar has non-finite values on positive-weight atoms")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def constant(cls, space: SampleSpace, value: complex) -> "RandomScalar":
        return cls(space, np.full(len(space), complex(value)))

    def value_at(self, atom: str) -> complex:
        return complex(self.values[self.space.index(atom)])

    def __add__(self, other: "RandomScalar") -> "RandomScalar":
        _require_same_space(self.space, other.space)
        return RandomScalar(self.space, self.values + other.values)

    def __mul__(self, scalar: complex) -> "RandomScalar":
        return RandomScalar(self.space, complex(scalar) * self.values)

    __rmul__ = __mul__


# ============================================================
# L^p structure
# ============================================================
def _check_pair(f: RandomVector, g: RandomVector):
    _require_same_space(f.space, g.space)
    if f.dim != g.dim:
        raise DimensionMismatch(f"dimensions {f.dim} and {g.dim} differ")


def l2_inner(f: RandomVector, g: RandomVector) -> complex:
    """Σ_ω ℘(ω)⟨f(ω), g(ω)⟩_H, linear in f and conjugate-linear in g."""
    _check_pair(f, g)
    mask = f.space.positive
    pointwise = np.einsum('ni,ni->n', f.values[mask], np.conj(g.values[mask]))
    return complex(np.dot(f.space.weights[mask], pointwise))


def lp_seminorm(f: RandomVector, p: int = 2) -> float:
    """
    p = 2: the L² norm.
    p = 0: the Ky Fan functional Σ ℘(ω)·min(1, ‖f(ω)‖), a metric for
    convergence in measure.
    """
    mask = f.space.positive
    norms = np.linalg.norm(f.values[mask], axis=1)
    weights = f.space.weights[mask]
    if p == 2:
        return float(np.sqrt(np.dot(weights, norms ** 2)))
    if p == 0:
        return float(np.dot(weights, np.minimum(1.0, norms)))
    raise InvalidParameter(f"p must be 0 or 2, got {p}")


def ae_equal(f: RandomVector, g: RandomVector, tol: float = 1e-9) -> bool:
    """Pointwise equality within tol on every atom of positive weight."""
    _check_pair(f, g)
    mask = f.space.positive
    diff = np.linalg.norm(f.values[mask] - g.values[mask], axis=1)
    return bool(np.all(diff <= tol))


def expectation(g: RandomVector) -> np.ndarray:
    """𝔼_H g = Σ ℘(ω) g(ω), the Hilbert adjoint of the embedding."""
    mask = g.space.positive
    return g.space.weights[mask] @ g.values[mask]


def embed(x: Sequence[complex], space: SampleSpace) -> RandomVector:
    """J_H x: the constant random vector."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {x.shape}")
    return RandomVector(space, np.tile(x, (len(space), 1)))


def multiply(phi: RandomScalar, f: RandomVector) -> RandomVector:
    """(m_φ f)(ω) = φ(ω) f(ω)."""
    _require_same_space(phi.space, f.space)
    return RandomVector(f.space, phi.values[:, None] * f.values)
