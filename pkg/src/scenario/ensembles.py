"""
Seeded random field ensembles.

All draws go through ``numpy.random.default_rng(seed)``, i.e. the PCG64
bit generator, whose stream is fixed by the seed on every platform. Atoms
are equally weighted and named w1, w2, ….
"""
import logging
from typing import Callable, Dict

import numpy as np

from ..operators.field import OperatorField
from ..probability.sample_space import SampleSpace
from ..spectral.measure import Cell, MeasurableSpace, Region
from ..spectral.transforms import zc_field
from ..utils.errors import InvalidParameter
from .scenario import Scenario

logger = logging.getLogger(__name__)

KINDS = (
    "hermitian-gaussian",
    "normal",
    "projection-valued",
    "anderson-tridiagonal",
    "pure-contraction",
)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar unitary from the QR factorization of a complex Gaussian matrix."""
    q, r = np.linalg.qr(_complex_gaussian(rng, (dim, dim)))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def hermitian_gaussian(rng: np.random.Generator, dim: int, atoms: int) -> np.ndarray:
    x = _complex_gaussian(rng, (atoms, dim, dim))
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))


def normal_draw(rng: np.random.Generator, dim: int, atoms: int) -> np.ndarray:
    """U diag(λ) U* with Haar U and complex Gaussian λ."""
    out = np.empty((atoms, dim, dim), dtype=np.complex128)
    for n in range(atoms):
        u = _unitary(rng, dim)
        eigenvalues = _complex_gaussian(rng, dim)
        out[n] = (u * eigenvalues) @ np.conj(u.T)
    return out


def anderson_tridiagonal(rng: np.random.Generator, dim: int, atoms: int, disorder: float) -> np.ndarray:
    """H = diag(V) + hopping, V i.i.d. uniform on [-w, w], unit off-diagonals."""
    hopping = np.diag(np.ones(dim - 1), k=1) + np.diag(np.ones(dim - 1), k=-1)
    out = np.empty((atoms, dim, dim), dtype=np.complex128)
    for n in range(atoms):
        potential = rng.uniform(-disorder, disorder, dim) if disorder > 0 else np.zeros(dim)
        out[n] = np.diag(potential) + hopping
    return out


def _projection_valued(rng: np.random.Generator, space: SampleSpace, dim: int) -> Scenario:
    """A random eigenbasis per atom split into up to three blocks, plus A = Σ k·E(c_k)."""
    blocks = min(dim, 3)
    bounds = np.linspace(0, dim, blocks + 1).astype(int)
    projections = np.zeros((blocks, len(space), dim, dim), dtype=np.complex128)
    for n in range(len(space)):
        u = _unitary(rng, dim)
        for k in range(blocks):
            basis = u[:, bounds[k]:bounds[k + 1]]
            projections[k, n] = basis @ np.conj(basis.T)

    fields: Dict[str, OperatorField] = {}
    cells = []
    for k in range(blocks):
        fields[f"P{k}"] = OperatorField(space, projections[k])
        cells.append(Cell(f"c{k}", Region.interval(k - 0.5, k + 0.5), complex(k)))
    fields["A"] = OperatorField(space, np.einsum('k,knij->nij', np.arange(blocks), projections))
    return Scenario(
        space=space,
        hilbert_dims={"H": dim},
        fields=fields,
        field_dims={name: ("H", "H") for name in fields},
        cells=MeasurableSpace(tuple(cells)),
        measures={"E": {f"c{k}": f"P{k}" for k in range(blocks)}},
    )


def generate_ensemble(kind: str, dim: int, atoms: int, seed: int, disorder: float = 1.0) -> Scenario:
    """
    A scenario holding one random field "A" of the given kind.

    projection-valued additionally carries the projection fields P0, P1, …
    and the measure "E" built from them.
    """
    if kind not in KINDS:
        raise InvalidParameter(f"unknown ensemble {kind!r}; expected one of {KINDS}")
    if dim < 1 or atoms < 1:
        raise InvalidParameter(f"dim and atoms must be at least 1, got dim={dim}, atoms={atoms}")
    if disorder < 0:
        raise InvalidParameter(f"disorder must be non-negative, got {disorder}")

    rng = np.random.default_rng(seed)
    space = SampleSpace.uniform(atoms)

    if kind == "projection-valued":
        scenario = _projection_valued(rng, space, dim)
    else:
        draws: Dict[str, Callable[[], np.ndarray]] = {
            "hermitian-gaussian": lambda: hermitian_gaussian(rng, dim, atoms),
            "normal": lambda: normal_draw(rng, dim, atoms),
            "anderson-tridiagonal": lambda: anderson_tridiagonal(rng, dim, atoms, disorder),
            "pure-contraction": lambda: normal_draw(rng, dim, atoms),
        }
        a = OperatorField(space, draws[kind]())
        if kind == "pure-contraction":
            a = zc_field(a)
        scenario = Scenario(
            space=space,
            hilbert_dims={"H": dim},
            fields={"A": a},
            field_dims={"A": ("H", "H")},
        )
    scenario.seed = seed
    scenario.vectors = {f"e{i + 1}": np.eye(dim, dtype=np.complex128)[i] for i in range(dim)}
    logger.info(f"🎲 Generated {kind} ensemble: dim {dim}, {atoms} atom(s), seed {seed}")
    return scenario
