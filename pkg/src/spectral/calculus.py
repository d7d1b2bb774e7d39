"""
Spectral integrals against a random projection-operator-valued measure.

I(f) integrates bounded functions; Ĩ(f) extends it to functions that are
infinite only on E-null cells, through bounding sequences
σ_n = {γ : |f(γ)| ≤ n}. On a finite Γ every bounding sequence stabilizes,
so the limit defining Ĩ(f)x is its last term. The convention ∞·O = O
is used throughout: an infinite value on a null cell contributes nothing.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from config import CLUSTER_TOL, TOL_LIN
from ..linalg.core import diagonalize_normal, link_clusters
from ..operators.field import OperatorField, apply, predicates
from ..probability.sample_space import RandomScalar, RandomVector
from ..utils.errors import (
    CellCoverage,
    DimensionMismatch,
    DomainViolation,
    IncompleteMap,
    InvalidBoundingSequence,
    InvalidMatrix,
    InvalidParameter,
    NotAEFinite,
    NotNormal,
    UnboundedIntegrand,
)
from .measure import (
    RPOVM,
    Cell,
    MeasurableSpace,
    Region,
    scalar_measure,
    vector_measure,
    weighted_sum,
)

logger = logging.getLogger(__name__)

INF = complex(math.inf, 0.0)


# ============================================================
# Measurable functions
# ============================================================
@dataclass(frozen=True, eq=False)
class MeasurableFunction:
    """One value in ℂ ∪ {∞} per cell; ∞ is stored as complex(inf, 0)."""
    gamma: MeasurableSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (len(self.gamma),):
            raise DimensionMismatch(f"expected {len(self.gamma)} values, got shape {values.shape}")
        nan = np.isnan(values)
        if np.any(nan):
            cid = self.gamma.ids[int(np.argmax(nan))]
            raise InvalidParameter(f"function value on cell {cid!r} is NaN; only ±∞ may stand for ∞")
        values[np.isinf(values)] = INF
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_mapping(cls, gamma: MeasurableSpace, mapping: Mapping[str, Union[complex, str]]) -> "MeasurableFunction":
        values = []
        for cid in gamma.ids:
            if cid not in mapping:
                raise IncompleteMap(cid, "has no function value")
            value = mapping[cid]
            values.append(INF if isinstance(value, str) and value.lower() == "inf" else complex(value))
        return cls(gamma, values)

    @classmethod
    def constant(cls, gamma: MeasurableSpace, value: complex) -> "MeasurableFunction":
        return cls(gamma, np.full(len(gamma), complex(value)))

    @classmethod
    def indicator(cls, gamma: MeasurableSpace, subset: Iterable[str]) -> "MeasurableFunction":
        values = np.zeros(len(gamma), dtype=np.complex128)
        for cid in subset:
            values[gamma.index(cid)] = 1.0
        return cls(gamma, values)

    @classmethod
    def from_callable(cls, gamma: MeasurableSpace, g: Callable[[complex], complex]) -> "MeasurableFunction":
        """g evaluated at each cell's representative point (∞ where a cell has none)."""
        return cls(gamma, [INF if p is None else complex(g(p)) for p in gamma.representatives().values()])

    @property
    def infinite(self) -> np.ndarray:
        return ~np.isfinite(self.values)

    @property
    def finite_values(self) -> np.ndarray:
        """Values with ∞ replaced by 0."""
        return np.where(self.infinite, 0.0, self.values)

    def value(self, cell_id: str) -> complex:
        return complex(self.values[self.gamma.index(cell_id)])

    def sup_norm(self) -> float:
        if np.any(self.infinite):
            return math.inf
        return float(np.abs(self.values).max()) if len(self.values) else 0.0

    def _binary(self, other: "MeasurableFunction", op) -> "MeasurableFunction":
        if self.gamma.ids != other.gamma.ids:
            raise InvalidParameter("functions are defined on different cell lists")
        values = op(self.finite_values, other.finite_values)
        values = np.where(self.infinite | other.infinite, INF, values)
        return MeasurableFunction(self.gamma, values)

    def __add__(self, other: "MeasurableFunction") -> "MeasurableFunction":
        return self._binary(other, np.add)

    def __mul__(self, other: Union["MeasurableFunction", complex]) -> "MeasurableFunction":
        if isinstance(other, MeasurableFunction):
            return self._binary(other, np.multiply)
        scaled = complex(other) * self.finite_values
        return MeasurableFunction(self.gamma, np.where(self.infinite, INF, scaled))

    __rmul__ = __mul__

    def conj(self) -> "MeasurableFunction":
        return MeasurableFunction(self.gamma, np.where(self.infinite, INF, np.conj(self.finite_values)))

    def truncate(self, subset: Iterable[str]) -> "MeasurableFunction":
        """f·χ_σ; f must be finite on σ."""
        keep = np.zeros(len(self.gamma), dtype=bool)
        for cid in subset:
            keep[self.gamma.index(cid)] = True
        if np.any(keep & self.infinite):
            raise InvalidParameter("cannot truncate to a set where the function is infinite")
        return MeasurableFunction(self.gamma, np.where(keep, self.finite_values, 0.0))

    def pullback(self, phi: Mapping[str, str], source: MeasurableSpace) -> "MeasurableFunction":
        """g∘φ on the source cells."""
        values = []
        for cid in source.ids:
            if cid not in phi:
                raise IncompleteMap(cid)
            values.append(self.values[self.gamma.index(phi[cid])])
        return MeasurableFunction(source, values)


def _require_same_cells(E: RPOVM, f: MeasurableFunction):
    if E.gamma.ids != f.gamma.ids:
        raise InvalidParameter("function and measure are defined on different cell lists")


def _infinite_on_support(E: RPOVM, f: MeasurableFunction, tol: float) -> Optional[str]:
    null = E.null_cells(tol)
    for cid, inf, is_null in zip(E.gamma.ids, f.infinite, null):
        if inf and not is_null:
            return cid
    return None


# ============================================================
# Bounded integral
# ============================================================
def integrate_bounded(E: RPOVM, f: MeasurableFunction, tol: float = TOL_LIN) -> OperatorField:
    """I(f): the field Σ_γ f(γ)·e_γ(ω)."""
    _require_same_cells(E, f)
    bad = _infinite_on_support(E, f, tol)
    if bad is not None:
        raise UnboundedIntegrand(bad)
    return OperatorField(E.space, weighted_sum(f.finite_values, E.projections))


def integrate_scalar(E: RPOVM, f: MeasurableFunction, x, y, tol: float = TOL_LIN) -> RandomScalar:
    """∫ f dE_{x,y}^ω for every ω."""
    _require_same_cells(E, f)
    bad = _infinite_on_support(E, f, tol)
    if bad is not None:
        raise UnboundedIntegrand(bad)
    measure = scalar_measure(E, x, y)
    return RandomScalar(E.space, f.finite_values @ np.nan_to_num(measure.values))


def integrate_vector(E: RPOVM, f: MeasurableFunction, x, tol: float = TOL_LIN) -> RandomVector:
    """∫ f dE_x^ω for every ω."""
    _require_same_cells(E, f)
    bad = _infinite_on_support(E, f, tol)
    if bad is not None:
        raise UnboundedIntegrand(bad)
    measure = vector_measure(E, x)
    return RandomVector(E.space, np.einsum('c,cni->ni', f.finite_values, np.nan_to_num(measure.values)))


# ============================================================
# Bounding sequences and the extended integral
# ============================================================
@dataclass(frozen=True)
class BoundingSequence:
    """
    Nested cell sets σ_1 ⊆ σ_2 ⊆ ….

    Only the levels where the set changes are stored: σ_n is the set of the
    largest level ≤ n, and the sequence is constant from the last level on.
    """
    sets: Tuple[FrozenSet[str], ...]
    levels: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        sets = tuple(frozenset(s) for s in self.sets)
        if not sets:
            raise InvalidBoundingSequence("a bounding sequence needs at least one set")
        levels = tuple(range(1, len(sets) + 1)) if self.levels is None else tuple(int(n) for n in self.levels)
        if len(levels) != len(sets) or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 1:
            raise InvalidBoundingSequence("levels must be increasing positive integers, one per set")
        for smaller, larger in zip(sets, sets[1:]):
            if not smaller <= larger:
                raise InvalidBoundingSequence("sets must be nested")
        object.__setattr__(self, 'sets', sets)
        object.__setattr__(self, 'levels', levels)

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    @property
    def stable_index(self) -> int:
        return self.levels[-1]

    @property
    def last(self) -> FrozenSet[str]:
        return self.sets[-1]

    def at(self, n: int) -> FrozenSet[str]:
        """σ_n."""
        chosen = frozenset()
        for level, s in zip(self.levels, self.sets):
            if level <= n:
                chosen = s
        return chosen

    def union(self) -> FrozenSet[str]:
        return self.last

    def validate(self, E: RPOVM, f: MeasurableFunction, tol: float = TOL_LIN):
        """f is finite on every σ_n and E(∪σ_n) = J_H."""
        _require_same_cells(E, f)
        for cid in self.last:
            if f.infinite[E.gamma.index(cid)]:
                raise InvalidBoundingSequence(f"function is infinite on cell {cid!r} inside the sequence")
        null = E.null_cells(tol)
        for cid, is_null in zip(E.gamma.ids, null):
            if cid not in self.last and not is_null:
                raise InvalidBoundingSequence(f"cell {cid!r} carries mass but lies outside every σ_n")


def bounding_sequence_for(f: MeasurableFunction, E: RPOVM, tol: float = TOL_LIN) -> BoundingSequence:
    """σ_n = {γ : |f(γ)| ≤ n}, stabilizing at n₀ = ⌈max finite |f|⌉."""
    _require_same_cells(E, f)
    bad = _infinite_on_support(E, f, tol)
    if bad is not None:
        raise NotAEFinite(bad)
    finite = ~f.infinite
    magnitudes = np.abs(f.finite_values)
    thresholds = np.maximum(1, np.ceil(magnitudes[finite])).astype(int) if np.any(finite) else np.array([1])
    levels = tuple(sorted(set(int(t) for t in thresholds)))
    sets = tuple(
        frozenset(cid for cid, ok, m in zip(E.gamma.ids, finite, magnitudes) if ok and m <= n)
        for n in levels
    )
    sequence = BoundingSequence(sets, levels)
    sequence.validate(E, f, tol)
    return sequence


def extended_domain(E: RPOVM, f: MeasurableFunction, x, tol: float = TOL_LIN) -> bool:
    """
    x ∈ D(Ĩ(f)): f is square integrable against E_{x,x}^ω for almost
    every ω. With finitely many cells only the infinite cells matter:
    each must have E_{x,x}(γ)(ω) = 0.
    """
    _require_same_cells(E, f)
    if not np.any(f.infinite):
        return True
    masses = scalar_measure(E, x, x).values[:, E.space.positive].real
    return bool(np.all(masses[f.infinite] <= tol))


def integrate_extended(
    E: RPOVM,
    f: MeasurableFunction,
    x,
    sequence: Optional[BoundingSequence] = None,
    tol: float = TOL_LIN,
) -> RandomVector:
    """Ĩ(f)x = lim_n I(fχ_{σ_n})x, read off where the sequence stabilizes."""
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (E.dim,):
        raise DimensionMismatch(f"expected a vector of length {E.dim}, got shape {x.shape}")
    if not extended_domain(E, f, x, tol):
        raise DomainViolation("x is outside the domain of the extended integral")
    if sequence is None:
        sequence = bounding_sequence_for(f, E, tol)
    else:
        sequence.validate(E, f, tol)
    return apply(integrate_bounded(E, f.truncate(sequence.last), tol), x)


def integrate_extended_field(E: RPOVM, f: MeasurableFunction, tol: float = TOL_LIN) -> OperatorField:
    """Ĩ(f) for f ∈ 𝓜 as a field; at finite dimension its domain is all of H."""
    sequence = bounding_sequence_for(f, E, tol)
    return integrate_bounded(E, f.truncate(sequence.last), tol)


# ============================================================
# Spectral decomposition of normal fields
# ============================================================
def _auto_cells(
    eigenvalues: np.ndarray,
    weights: np.ndarray,
    tol: float,
    real: bool,
    key: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Tuple[MeasurableSpace, np.ndarray]:
    """Cluster eigenvalues across atoms; returns the cells and each eigenvalue's cell index."""
    points = eigenvalues if key is None else np.asarray(key(eigenvalues), dtype=np.complex128)
    groups = link_clusters(points, 2 * tol)
    margin = tol
    if key is not None and len(groups) > 1:
        # keyed clusters can sit far closer than tol in eigenvalue coordinates
        means = np.array([eigenvalues[members].mean() for members in groups])
        margin = min(tol, 0.25 * min(abs(a - b) for i, a in enumerate(means) for b in means[i + 1:]))
        margin = max(margin, 4 * float(np.spacing(np.abs(eigenvalues).max())))

    clusters = []
    for members in groups:
        values = eigenvalues[members]
        w = weights[members]
        representative = complex(np.dot(w, values) / w.sum()) if w.sum() > 0 else complex(values.mean())
        if real:
            representative = complex(representative.real, 0.0)
            region = Region.interval(values.real.min() - margin, values.real.max() + margin)
        else:
            region = Region.box(values.real.min() - margin, values.real.max() + margin,
                                values.imag.min() - margin, values.imag.max() + margin)
        clusters.append((representative, region, members))
    clusters.sort(key=lambda c: (c[0].real, c[0].imag))

    assignment = np.empty(len(eigenvalues), dtype=int)
    cells = []
    for k, (representative, region, members) in enumerate(clusters):
        cells.append(Cell(f"c{k}", region, representative))
        assignment[members] = k
    return MeasurableSpace(tuple(cells)), assignment


def first_non_normal_atom(field: OperatorField, tol: float) -> Tuple[str, float]:
    for atom, keep, m in zip(field.space.atoms, field.space.positive, field.matrices):
        if not keep:
            continue
        h = m.conj().T
        residual = float(np.linalg.norm(m @ h - h @ m, 2))
        if residual > tol * max(1.0, float(np.linalg.norm(m, 2))) ** 2:
            return atom, residual
    return field.space.atoms[0], math.nan


def spectral_decompose(
    field: OperatorField,
    cells: Union[MeasurableSpace, str, None] = None,
    tol: float = CLUSTER_TOL,
    check_tol: float = TOL_LIN,
    key: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> RPOVM:
    """
    The measure E with a(ω) = Σ_γ z_γ e_γ(ω) for a normal field.

    Each atom is diagonalized on its own; every spectral projection goes to
    the cell whose region holds its eigenvalue. With cells=None (or "auto")
    the cells are the clusters of all eigenvalues across atoms, linked at
    distance 2·tol, each with its weighted-mean representative. Selfadjoint
    fields get real intervals instead of boxes. Null atoms that cannot be
    diagonalized put all their mass on the first cell.

    A key moves every clustering decision into key coordinates, so a field
    decomposed after a transform can reproduce the cells of the original.
    """
    if not field.is_square:
        raise DimensionMismatch(f"spectral decomposition needs a square field, got {field.dim_out}x{field.dim_in}")
    flags = predicates(field, check_tol)
    if not flags.normal:
        atom, residual = first_non_normal_atom(field, check_tol)
        raise NotNormal(residual, atom)

    entries = []  # (atom index, eigenvalue, projection, rank)
    undecomposed = []
    for n, (atom, keep) in enumerate(zip(field.space.atoms, field.space.positive)):
        try:
            decomposition = diagonalize_normal(field.matrices[n], tol, key)
        except (NotNormal, InvalidMatrix):
            if keep:
                raise
            undecomposed.append(n)
            continue
        for value, projection, rank in zip(decomposition.eigenvalues, decomposition.projections, decomposition.ranks()):
            entries.append((n, complex(value), projection, rank))

    eigenvalues = np.array([e[1] for e in entries], dtype=np.complex128)
    if cells is None or (isinstance(cells, str) and cells == "auto"):
        weights = np.array([field.space.weights[e[0]] * e[3] for e in entries])
        gamma, assignment = _auto_cells(eigenvalues, weights, tol, flags.selfadjoint, key)
    elif isinstance(cells, MeasurableSpace):
        gamma = cells
        assignment = np.empty(len(entries), dtype=int)
        for k, (n, value, _, _) in enumerate(entries):
            cid = gamma.locate(value)
            if cid is None:
                raise CellCoverage(field.space.atoms[n], value)
            assignment[k] = gamma.index(cid)
    else:
        raise InvalidParameter(f"cells must be a MeasurableSpace or 'auto', got {cells!r}")

    dim = field.dim_in
    projections = np.zeros((len(gamma), len(field.space), dim, dim), dtype=np.complex128)
    for k, (n, _, projection, _) in enumerate(entries):
        projections[assignment[k], n] += projection
    for n in undecomposed:
        projections[0, n] = np.eye(dim)
    logger.debug(f"spectral_decompose: {len(field.space)} atom(s), {len(gamma)} cell(s)")
    return RPOVM(gamma, field.space, projections)


def reconstruct(
    E: RPOVM,
    representative: Optional[Mapping[str, complex]] = None,
    tol: float = TOL_LIN,
) -> OperatorField:
    """Σ_γ z_γ e_γ(ω), with z_γ from the mapping or the cells' own representatives."""
    points = E.gamma.representatives() if representative is None else representative
    values = []
    for cid in E.gamma.ids:
        z = points.get(cid)
        values.append(INF if z is None else complex(z))
    return integrate_bounded(E, MeasurableFunction(E.gamma, values), tol)


def function_of(
    field: OperatorField,
    g: Callable[[complex], complex],
    tol: float = CLUSTER_TOL,
) -> OperatorField:
    """g(A) for a normal field, through its spectral measure."""
    E = spectral_decompose(field, None, tol)
    return integrate_bounded(E, MeasurableFunction.from_callable(E.gamma, g))
