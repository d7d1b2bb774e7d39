import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from src.operators.field import OperatorField, adjoint_field, apply, classify, compose, field_residual, fields_equal
from src.probability.sample_space import SampleSpace, embed, lp_seminorm
from src.spectral.calculus import (
    BoundingSequence,
    MeasurableFunction,
    bounding_sequence_for,
    extended_domain,
    function_of,
    integrate_bounded,
    integrate_extended,
    integrate_extended_field,
    integrate_scalar,
    integrate_vector,
    reconstruct,
    spectral_decompose,
)
from src.spectral.measure import RPOVM, Cell, MeasurableSpace, Region, pushforward, validate_rpovm
from src.utils.errors import (
    CellCoverage,
    DomainViolation,
    IncompleteMap,
    InvalidBoundingSequence,
    InvalidParameter,
    NotAEFinite,
    NotNormal,
    UnboundedIntegrand,
)
from tests.helpers import (
    complex_gaussian,
    coordinate_rpovm,
    random_hermitian_field,
    random_normal_field,
    random_rpovm,
    random_space,
    random_vector,
    seeds,
)


def random_function(rng: np.random.Generator, gamma: MeasurableSpace) -> MeasurableFunction:
    return MeasurableFunction(gamma, complex_gaussian(rng, len(gamma)))


def null_cell_measure() -> RPOVM:
    """Coordinate measure on C² with an extra empty cell "ghost"."""
    space = SampleSpace.uniform(2)
    E = coordinate_rpovm(space, 2)
    projections = np.concatenate([E.projections, np.zeros((1, 2, 2, 2))])
    return RPOVM(MeasurableSpace.from_ids(["g0", "g1", "ghost"]), space, projections)


def boxes(*points, half_width=0.25) -> MeasurableSpace:
    return MeasurableSpace(tuple(
        Cell(f"c{p}", Region.around(p, half_width), complex(p)) for p in points
    ))


# ============================================================
# Bounded integral
# ============================================================
def test_integral_against_coordinate_measure():
    E = coordinate_rpovm(SampleSpace.uniform(2), 2)
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 2, "g1": -1})
    assert fields_equal(integrate_bounded(E, f), OperatorField.constant(E.space, np.diag([2.0, -1.0])))
    assert fields_equal(integrate_bounded(E, MeasurableFunction.constant(E.gamma, 1)), OperatorField.identity(E.space, 2))
    chi = MeasurableFunction.indicator(E.gamma, ["g0"])
    assert fields_equal(integrate_bounded(E, chi), E.cell_field("g0"))


def test_missing_function_value():
    E = coordinate_rpovm(SampleSpace.uniform(1), 2)
    with pytest.raises(IncompleteMap):
        MeasurableFunction.from_mapping(E.gamma, {"g0": 1})


def test_infinite_value_on_supported_cell():
    E = coordinate_rpovm(SampleSpace.uniform(1), 2)
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 1, "g1": "inf"})
    with pytest.raises(UnboundedIntegrand) as info:
        integrate_bounded(E, f)
    assert info.value.cell_id == "g1"
    with pytest.raises(NotAEFinite):
        bounding_sequence_for(f, E)


@seed(51)
@settings(max_examples=40, deadline=None)
@given(s=seeds, cells=st.integers(1, 6), dim=st.integers(1, 4))
def test_star_representation(s, cells, dim):
    rng = np.random.default_rng(s)
    E = random_rpovm(rng, random_space(rng, 3), dim, cells)
    f = random_function(rng, E.gamma)
    g = random_function(rng, E.gamma)
    lam = complex(rng.standard_normal(), rng.standard_normal())
    i_f, i_g = integrate_bounded(E, f), integrate_bounded(E, g)

    assert field_residual(integrate_bounded(E, f + g), i_f + i_g) <= 1e-12
    assert field_residual(integrate_bounded(E, lam * f), lam * i_f) <= 1e-12
    assert field_residual(integrate_bounded(E, f * g), compose(i_f, i_g)) <= 1e-12 * max(1.0, f.sup_norm() * g.sup_norm())
    assert field_residual(integrate_bounded(E, f.conj()), adjoint_field(i_f)) <= 1e-12


@seed(52)
@settings(max_examples=40, deadline=None)
@given(s=seeds, cells=st.integers(1, 6))
def test_integral_identities(s, cells):
    rng = np.random.default_rng(s)
    E = random_rpovm(rng, random_space(rng, 4), 3, cells)
    f = random_function(rng, E.gamma)
    x = random_vector(rng, 3)
    y = random_vector(rng, 3)
    b = integrate_bounded(E, f)
    bx = apply(b, x)

    inner = np.einsum('ni,i->n', bx.values, np.conj(y))
    assert np.allclose(integrate_scalar(E, f, x, y).values, inner)
    squared = integrate_scalar(E, MeasurableFunction(E.gamma, np.abs(f.values) ** 2), x, x).values.real
    assert np.allclose(np.linalg.norm(bx.values, axis=1) ** 2, squared)

    # contractivity
    assert lp_seminorm(bx, 2) <= f.sup_norm() * np.linalg.norm(x) * (1 + 1e-12)
    assert classify(b).ess_sup <= f.sup_norm() * (1 + 1e-12)


@seed(84)
@settings(max_examples=30, deadline=None)
@given(s=seeds, cells=st.integers(1, 6), dim=st.integers(1, 4))
def test_vector_integral_applies_the_operator_integral(s, cells, dim):
    rng = np.random.default_rng(s)
    E = random_rpovm(rng, random_space(rng, 3, with_null=True), dim, cells)
    f = random_function(rng, E.gamma)
    x = random_vector(rng, dim)
    expected = apply(integrate_bounded(E, f), x).values
    assert np.abs(integrate_vector(E, f, x).values - expected).max() <= 1e-12 * max(1.0, f.sup_norm())


def test_vector_integral_rejects_infinite_supported_cell():
    E = coordinate_rpovm(SampleSpace.uniform(2), 2)
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 1, "g1": "inf"})
    with pytest.raises(UnboundedIntegrand) as info:
        integrate_vector(E, f, [0.0, 1.0])
    assert info.value.cell_id == "g1"


def test_function_values_reject_nan():
    gamma = MeasurableSpace.from_ids(["a", "b"])
    with pytest.raises(InvalidParameter) as info:
        MeasurableFunction(gamma, [1.0, complex(math.nan, 0.0)])
    assert "'b'" in str(info.value)
    with pytest.raises(InvalidParameter):
        MeasurableFunction(gamma, [complex(0.0, math.nan), 1.0])
    f = MeasurableFunction(gamma, [complex(-math.inf, 0.0), complex(2.0, math.inf)])
    assert list(f.infinite) == [True, True]
    assert f.value("a") == f.value("b") == complex(math.inf, 0.0)


@seed(53)
@settings(max_examples=30, deadline=None)
@given(s=seeds)
def test_integral_matches_brute_force_sum(s):
    rng = np.random.default_rng(s)
    E = random_rpovm(rng, random_space(rng, 3), 3, 4)
    f = random_function(rng, E.gamma)
    expected = np.zeros((3, 3, 3), dtype=complex)
    for c in range(4):
        for n in range(3):
            expected[n] += f.values[c] * E.projections[c, n]
    assert np.abs(integrate_bounded(E, f).matrices - expected).max() <= 1e-13


@seed(54)
@settings(max_examples=30, deadline=None)
@given(s=seeds)
def test_truncation_commutes_with_cell_projection(s):
    rng = np.random.default_rng(s)
    E = random_rpovm(rng, random_space(rng, 3), 3, 4)
    f = random_function(rng, E.gamma)
    sigma = ["g0", "g2"]
    truncated = integrate_bounded(E, f.truncate(sigma))
    assert field_residual(truncated, compose(integrate_bounded(E, f), E.measure_of(sigma))) <= 1e-12
    assert field_residual(truncated, compose(E.measure_of(sigma), integrate_bounded(E, f))) <= 1e-12


def test_truncations_converge():
    rng = np.random.default_rng(8)
    E = random_rpovm(rng, random_space(rng, 3), 3, 4)
    f = random_function(rng, E.gamma)
    x = random_vector(rng, 3)
    target = apply(integrate_bounded(E, f), x)
    previous = math.inf
    for n in range(1, 5):
        gap = lp_seminorm(apply(integrate_bounded(E, f.truncate(E.gamma.ids[:n])), x) - target, 2)
        assert gap <= previous + 1e-12
        previous = gap
    assert previous <= 1e-12


# ============================================================
# Bounding sequences and the extended integral
# ============================================================
def test_bounding_sequence_stabilizes():
    E = coordinate_rpovm(SampleSpace.uniform(1), 3)
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 0.5, "g1": 3.5, "g2": -2})
    sequence = bounding_sequence_for(f, E)
    assert sequence.stable_index == 4
    assert sequence.at(1) == {"g0"}
    assert sequence.at(2) == {"g0", "g2"}
    assert sequence.at(3) == {"g0", "g2"}
    assert sequence.at(4) == set(E.gamma.ids)
    assert sequence.at(100) == set(E.gamma.ids)


def test_zero_function_sequence():
    E = coordinate_rpovm(SampleSpace.uniform(1), 2)
    sequence = bounding_sequence_for(MeasurableFunction.constant(E.gamma, 0), E)
    assert sequence.levels == (1,)
    assert sequence.at(1) == set(E.gamma.ids)


def test_infinite_on_null_cell():
    E = null_cell_measure()
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 1, "g1": 1, "ghost": "inf"})
    sequence = bounding_sequence_for(f, E)
    assert "ghost" not in sequence.union()
    assert fields_equal(E.measure_of(sequence.union()), OperatorField.identity(E.space, 2))

    x = np.array([1.0, 2.0])
    assert extended_domain(E, f, x)
    assert np.allclose(integrate_extended(E, f, x).values, embed(x, E.space).values)
    assert fields_equal(integrate_extended_field(E, f), OperatorField.identity(E.space, 2))


def test_domain_excludes_vectors_seen_by_infinite_cell():
    E = coordinate_rpovm(SampleSpace.uniform(1), 2)
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 1, "g1": "inf"})
    assert extended_domain(E, f, [1.0, 0.0])
    assert not extended_domain(E, f, [0.0, 1.0])
    with pytest.raises(DomainViolation):
        integrate_extended(E, f, [0.0, 1.0], sequence=BoundingSequence([{"g0"}]))
    assert extended_domain(E, MeasurableFunction.constant(E.gamma, 7), [3.0, 4.0])


def test_extended_integral_is_independent_of_the_sequence():
    E = null_cell_measure()
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 5.5, "g1": -0.25, "ghost": "inf"})
    x = np.array([1.0, -1.0j])
    default = integrate_extended(E, f, x)
    slow = BoundingSequence([{"g1"}, {"g1"}, {"g0", "g1"}], levels=(1, 3, 9))
    other = integrate_extended(E, f, x, sequence=slow)
    assert np.array_equal(default.values, other.values)
    assert np.allclose(default.values, apply(OperatorField.constant(E.space, np.diag([5.5, -0.25])), x).values)


def test_invalid_bounding_sequences():
    E = null_cell_measure()
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 1, "g1": 1, "ghost": "inf"})
    with pytest.raises(InvalidBoundingSequence):
        BoundingSequence([{"g0", "g1"}, {"g0"}])
    with pytest.raises(InvalidBoundingSequence):
        BoundingSequence([{"g0"}]).validate(E, f)
    with pytest.raises(InvalidBoundingSequence):
        BoundingSequence([{"g0", "g1", "ghost"}]).validate(E, f)


def test_extended_integral_algebra():
    E = null_cell_measure()
    f = MeasurableFunction.from_mapping(E.gamma, {"g0": 2, "g1": 1j, "ghost": "inf"})
    g = MeasurableFunction.from_mapping(E.gamma, {"g0": -1, "g1": 3, "ghost": 4})
    x = np.array([1.0, 1.0])
    sum_fg = integrate_extended(E, f + g, x)
    assert np.allclose(sum_fg.values, (integrate_extended(E, f, x) + integrate_extended(E, g, x)).values)
    product = integrate_extended(E, f * g, x)
    nested = OperatorField(E.space, integrate_extended_field(E, g).matrices @ integrate_extended_field(E, f).matrices)
    assert np.allclose(product.values, apply(nested, x).values)
    assert fields_equal(integrate_extended_field(E, 2j * f), 2j * integrate_extended_field(E, f))
    assert fields_equal(integrate_extended_field(E, f.conj()), adjoint_field(integrate_extended_field(E, f)))


# ============================================================
# Spectral decomposition
# ============================================================
def test_decompose_constant_diagonal_field():
    space = SampleSpace.uniform(2)
    a = OperatorField.constant(space, np.diag([1.0, 2.0]))
    E = spectral_decompose(a, boxes(1, 2))
    assert fields_equal(E.cell_field("c1"), OperatorField.constant(space, np.diag([1.0, 0.0])))
    assert validate_rpovm(E).passed
    assert fields_equal(reconstruct(E), a)
    assert fields_equal(reconstruct(E, {"c1": 0, "c2": 0}), OperatorField.zero(space, 2))


def test_decompose_atom_dependent_field():
    space = SampleSpace.uniform(2)
    a = OperatorField(space, [np.diag([1.0, 2.0]), np.diag([1.0, 3.0])])
    E = spectral_decompose(a, boxes(1, 2, 3))
    assert np.allclose(E.cell_field("c2").matrix_at("w2"), 0.0)
    assert np.allclose(E.cell_field("c3").matrix_at("w2"), np.diag([0.0, 1.0]))
    assert fields_equal(reconstruct(E), a)


def test_uncovered_eigenvalue():
    space = SampleSpace.uniform(2)
    a = OperatorField(space, [np.diag([1.0, 2.0]), np.diag([1.0, 3.0])])
    with pytest.raises(CellCoverage) as info:
        spectral_decompose(a, boxes(1, 2))
    assert info.value.atom == "w2"
    assert info.value.eigenvalue == pytest.approx(3.0)


def test_non_normal_field_names_the_atom():
    space = SampleSpace.uniform(2)
    a = OperatorField(space, [np.eye(2), [[1.0, 1.0], [0.0, 1.0]]])
    with pytest.raises(NotNormal) as info:
        spectral_decompose(a)
    assert info.value.atom == "w2"


def test_auto_cells_cluster_across_atoms():
    space = SampleSpace.uniform(3)
    a = OperatorField(space, [np.diag([1.0, 2.0]), np.diag([1.0 + 1e-12, 2.0]), np.diag([1.0, 5.0])])
    E = spectral_decompose(a, "auto")
    assert E.gamma.ids == ["c0", "c1", "c2"]
    points = [c.representative for c in E.gamma.cells]
    assert np.allclose(points, [1.0, 2.0, 5.0])
    assert all(c.region.kind == "interval" for c in E.gamma.cells)
    assert fields_equal(reconstruct(E), a, 1e-10)


def test_null_atom_may_be_undiagonalizable():
    space = SampleSpace(("a", "b"), np.array([1.0, 0.0]))
    a = OperatorField(space, [np.diag([1.0, 2.0]), np.full((2, 2), np.nan)])
    E = spectral_decompose(a)
    assert validate_rpovm(E).passed
    assert fields_equal(reconstruct(E), a)


@seed(55)
@settings(max_examples=40, deadline=None)
@given(s=seeds, dim=st.integers(1, 8), atoms=st.integers(1, 10))
def test_spectral_roundtrip(s, dim, atoms):
    rng = np.random.default_rng(s)
    a = random_normal_field(rng, random_space(rng, atoms), dim)
    E = spectral_decompose(a, "auto", 1e-9)
    assert validate_rpovm(E, tol=1e-9).passed
    assert field_residual(reconstruct(E), a) <= 1e-8


@seed(56)
@settings(max_examples=30, deadline=None)
@given(s=seeds, dim=st.integers(1, 6))
def test_selfadjoint_reconstruction_is_hermitian(s, dim):
    rng = np.random.default_rng(s)
    a = random_hermitian_field(rng, random_space(rng, 4), dim)
    E = spectral_decompose(a)
    assert all(c.region.kind == "interval" and c.representative.imag == 0 for c in E.gamma.cells)
    b = reconstruct(E)
    assert fields_equal(b, adjoint_field(b), 1e-10)
    assert field_residual(b, a) <= 1e-8


def test_decompositions_with_the_same_cells_agree():
    rng = np.random.default_rng(9)
    a = random_hermitian_field(rng, random_space(rng, 3), 4)
    auto = spectral_decompose(a)
    again = spectral_decompose(a, auto.gamma)
    assert np.abs(auto.projections - again.projections).max() <= 1e-10


def test_function_of_field():
    rng = np.random.default_rng(10)
    a = random_normal_field(rng, random_space(rng, 3), 3)
    assert field_residual(function_of(a, lambda z: z * z), compose(a, a)) <= 1e-8
    assert field_residual(function_of(a, np.conj), adjoint_field(a)) <= 1e-8


@seed(57)
@settings(max_examples=30, deadline=None)
@given(s=seeds, cells=st.integers(1, 6), images=st.integers(1, 4))
def test_change_of_variables(s, cells, images):
    rng = np.random.default_rng(s)
    E = random_rpovm(rng, random_space(rng, 3), 3, cells)
    target = MeasurableSpace.from_ids(f"t{k}" for k in range(images))
    phi = {cid: f"t{rng.integers(images)}" for cid in E.gamma.ids}
    F = pushforward(E, phi, target)
    g = random_function(rng, target)
    assert field_residual(integrate_bounded(F, g), integrate_bounded(E, g.pullback(phi, E.gamma))) <= 1e-11
