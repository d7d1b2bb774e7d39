"""Random builders shared by the test modules; every one takes a numpy Generator."""
import numpy as np
from hypothesis import strategies as st

from src.operators.field import OperatorField
from src.probability.sample_space import SampleSpace
from src.spectral.measure import RPOVM, MeasurableSpace

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(complex_gaussian(rng, (dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_space(rng: np.random.Generator, atoms: int, with_null: bool = False) -> SampleSpace:
    weights = rng.uniform(0.1, 1.0, atoms)
    if with_null and atoms > 1:
        weights[rng.integers(atoms)] = 0.0
    return SampleSpace(tuple(f"w{i + 1}" for i in range(atoms)), weights / weights.sum())


def random_field(rng: np.random.Generator, space: SampleSpace, dim_out: int, dim_in: int = None) -> OperatorField:
    return OperatorField(space, complex_gaussian(rng, (len(space), dim_out, dim_in or dim_out)))


def random_hermitian_field(rng: np.random.Generator, space: SampleSpace, dim: int) -> OperatorField:
    x = complex_gaussian(rng, (len(space), dim, dim))
    return OperatorField(space, 0.5 * (x + np.conj(np.swapaxes(x, -1, -2))))


def random_normal_field(rng: np.random.Generator, space: SampleSpace, dim: int) -> OperatorField:
    matrices = []
    for _ in range(len(space)):
        u = unitary(rng, dim)
        matrices.append((u * complex_gaussian(rng, dim)) @ np.conj(u.T))
    return OperatorField(space, np.stack(matrices))


def random_rpovm(rng: np.random.Generator, space: SampleSpace, dim: int, cells: int) -> RPOVM:
    """A random eigenbasis per atom, each basis vector thrown into a random cell."""
    projections = np.zeros((cells, len(space), dim, dim), dtype=np.complex128)
    for n in range(len(space)):
        u = unitary(rng, dim)
        owners = rng.integers(cells, size=dim)
        for k in range(dim):
            projections[owners[k], n] += np.outer(u[:, k], np.conj(u[:, k]))
    return RPOVM(MeasurableSpace.from_ids(f"g{c}" for c in range(cells)), space, projections)


def coordinate_rpovm(space: SampleSpace, dim: int) -> RPOVM:
    """Cell g{k} carries the constant projection onto e_{k+1}."""
    eye = np.eye(dim, dtype=np.complex128)
    projections = np.stack([np.broadcast_to(np.outer(eye[k], eye[k]), (len(space), dim, dim)) for k in range(dim)])
    return RPOVM(MeasurableSpace.from_ids(f"g{k}" for k in range(dim)), space, projections)


def random_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    return complex_gaussian(rng, dim)
