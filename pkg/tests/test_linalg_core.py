import logging

import numpy as np
import pytest
from hypothesis import assume, given, seed, settings
from hypothesis import strategies as st

from src.linalg.core import (
    as_matrix,
    batch_op_norm,
    diagonalize_normal,
    eig_hermitian,
    hs_norm_matrix,
    is_hermitian,
    is_normal,
    is_projection,
    op_norm,
    psd_power,
)
from src.utils.errors import InvalidMatrix, InvalidParameter, NotHermitian, NotNormal, NotPSD, SingularMatrix
from tests.helpers import complex_gaussian, seeds, unitary


def test_as_matrix_rejects_bad_input():
    with pytest.raises(InvalidMatrix):
        as_matrix([1, 2, 3])
    with pytest.raises(InvalidMatrix):
        as_matrix([[1, np.nan]])
    with pytest.raises(InvalidMatrix):
        as_matrix(np.zeros((3, 3)), max_dim=2)
    with pytest.raises(InvalidMatrix):
        as_matrix(np.zeros((0, 2)))


def test_norms_of_diagonal_matrix():
    m = np.diag([3.0, -4.0])
    assert op_norm(m) == pytest.approx(4.0)
    assert hs_norm_matrix(m) == pytest.approx(5.0)
    assert np.allclose(batch_op_norm(np.stack([m, 2 * m])), [4.0, 8.0])


def test_predicates():
    assert is_hermitian([[1, 1j], [-1j, 2]])
    assert not is_hermitian([[1, 1], [0, 1]])
    assert is_normal([[0, -1], [1, 0]])
    assert not is_normal([[1, 1], [0, 1]])
    assert is_projection([[1, 0], [0, 0]])
    assert not is_projection([[2, 0], [0, 0]])


def test_eig_hermitian_diagonal():
    d = eig_hermitian(np.diag([2.0, 1.0]))
    assert np.allclose(d.eigenvalues, [1.0, 2.0])
    assert np.allclose(d.projections[0], np.diag([0, 1]))
    assert np.allclose(d.projections[1], np.diag([1, 0]))


def test_eig_hermitian_clusters_degenerate_eigenvalues():
    u = unitary(np.random.default_rng(3), 3)
    m = u @ np.diag([1.0, 1.0 + 1e-13, 2.0]) @ np.conj(u.T)
    d = eig_hermitian(m)
    assert len(d) == 2
    assert d.ranks() == [2, 1]
    assert np.allclose(d.reconstruct(), m, atol=1e-10)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eig_hermitian([[1, 1], [0, 1]])


def test_eig_hermitian_swap_matrix():
    d = eig_hermitian([[0, 1], [1, 0]])
    assert np.allclose(d.eigenvalues, [-1.0, 1.0], atol=1e-12)
    assert np.allclose(d.projections[0], 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-12)
    assert np.allclose(d.projections[1], 0.5 * np.array([[1, 1], [1, 1]]), atol=1e-12)


@seed(81)
@settings(max_examples=60, deadline=None)
@given(s=seeds)
def test_eig_hermitian_two_by_two_closed_form(s):
    rng = np.random.default_rng(s)
    a, d = rng.standard_normal(2) * rng.choice([1e-3, 1.0, 1e3])
    b = complex(*rng.standard_normal(2))
    mean = 0.5 * (a + d)
    radius = np.hypot(0.5 * (a - d), abs(b))
    assume(radius > 1e-6)

    got = eig_hermitian([[a, b], [np.conj(b), d]])
    scale = max(1.0, abs(mean) + radius)
    assert np.allclose(got.eigenvalues, [mean - radius, mean + radius], rtol=0, atol=1e-12 * scale)


def test_diagonalize_rotation():
    d = diagonalize_normal([[0, -1], [1, 0]])
    assert np.allclose(d.eigenvalues, [-1j, 1j])
    assert np.allclose(d.reconstruct(), [[0, -1], [1, 0]])


def test_diagonalize_rejects_jordan_block():
    with pytest.raises(NotNormal) as info:
        diagonalize_normal([[1, 1], [0, 1]])
    assert info.value.residual > 0


@seed(20240601)
@settings(max_examples=60, deadline=None)
@given(s=seeds, dim=st.integers(min_value=1, max_value=8))
def test_diagonalize_normal_reconstructs(s, dim):
    rng = np.random.default_rng(s)
    u = unitary(rng, dim)
    eigenvalues = complex_gaussian(rng, dim)
    m = (u * eigenvalues) @ np.conj(u.T)

    d = diagonalize_normal(m)
    assert np.allclose(d.reconstruct(), m, atol=1e-9)
    total = sum(d.projections)
    assert np.allclose(total, np.eye(dim), atol=1e-9)
    for p in d.projections:
        assert is_projection(p, 1e-9)
    # brute-force oracle: numpy's general eigensolver
    assert np.allclose(np.sort_complex(np.repeat(d.eigenvalues, d.ranks())), np.sort_complex(np.linalg.eigvals(m)), atol=1e-9)


@seed(7)
@settings(max_examples=50, deadline=None)
@given(s=seeds, dim=st.integers(min_value=1, max_value=6))
def test_psd_powers_agree(s, dim):
    rng = np.random.default_rng(s)
    x = complex_gaussian(rng, (dim, dim))
    m = x @ np.conj(x.T) + np.eye(dim)

    root = psd_power(m, 0.5)
    inverse = psd_power(m, -1.0)
    inverse_root = psd_power(m, -0.5)
    assert np.allclose(root @ root, m, atol=1e-9)
    assert np.allclose(inverse @ m, np.eye(dim), atol=1e-9)
    assert np.allclose(inverse_root @ inverse_root, inverse, atol=1e-9)
    assert is_hermitian(root)


def test_psd_power_errors():
    with pytest.raises(InvalidParameter):
        psd_power(np.eye(2), 2.0)
    with pytest.raises(NotPSD):
        psd_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(SingularMatrix):
        psd_power(np.diag([1.0, 0.0]), -1.0)
    with pytest.raises(NotHermitian):
        psd_power([[1, 1], [0, 1]], 0.5)


def test_psd_sqrt_of_singular_matrix_is_allowed():
    assert np.allclose(psd_power(np.diag([4.0, 0.0]), 0.5), np.diag([2.0, 0.0]))


def spectral_residual(d, m) -> float:
    return op_norm(d.reconstruct() - m) / max(1.0, op_norm(m))


@seed(82)
@settings(max_examples=40, deadline=None)
@given(s=seeds)
def test_diagonalize_normal_with_shared_real_parts(s):
    rng = np.random.default_rng(s)
    u = unitary(rng, 4)
    m = (u * np.array([1 + 1j, 1 + 3e-9 - 1j, -2 + 0.5j, 0.3 - 2j])) @ np.conj(u.T)

    d = diagonalize_normal(m)
    assert len(d) == 4
    assert spectral_residual(d, m) <= 1e-10
    assert op_norm(sum(d.projections) - np.eye(4)) <= 1e-10
    for i, p in enumerate(d.projections):
        for q in d.projections[i + 1:]:
            assert op_norm(p @ q) <= 1e-10


@seed(83)
@settings(max_examples=40, deadline=None)
@given(s=seeds, dim=st.integers(min_value=2, max_value=8))
def test_diagonalize_normal_with_clustered_real_parts(s, dim):
    rng = np.random.default_rng(s)
    u = unitary(rng, dim)
    real = rng.choice([-1.0, 0.0, 2.0], size=dim) + 1e-9 * rng.standard_normal(dim)
    imag = 3 * rng.standard_normal(dim)
    m = (u * (real + 1j * imag)) @ np.conj(u.T)

    d = diagonalize_normal(m)
    assert spectral_residual(d, m) <= 1e-10
    for p in d.projections:
        assert is_projection(p, 1e-10)


def test_diagonalize_normal_clusters_in_key_coordinates():
    m = np.diag([0.5, 0.5 + 1e-11])
    assert len(diagonalize_normal(m)) == 1

    d = diagonalize_normal(m, key=lambda v: (v - 0.5) * 1e4)
    assert len(d) == 2
    assert np.allclose(d.eigenvalues, [0.5, 0.5 + 1e-11], rtol=0, atol=1e-15)
    assert np.allclose(d.projections[0], np.diag([1, 0]))


def test_diagonalize_normal_logs_cluster_count(caplog):
    with caplog.at_level(logging.DEBUG, logger="src.linalg.core"):
        diagonalize_normal(np.diag([1.0, 2.0, 2.0]))
    assert "diagonalize_normal: dim 3, 2 cluster(s) from 2 leaves" in caplog.text
