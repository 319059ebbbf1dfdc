import cmath

import numpy as np
import pytest
from numpy.testing import assert_allclose

from config.settings import settings
from core.errors import DepthExceeded, NotFiniteOrder, NotUnimodular
from core.hardy import BoundaryGrid, PNormSpec
from core.moebius import DiscAutomorphism, derivative_at, elliptic_of_order, power
from core.operators import (
    Atom,
    Compose,
    Identity,
    Scale,
    UnimodularMonomial,
    WeightedCompositionOp1D,
    WeightedCompositionOp2D,
    act,
    apply,
    calibrate_alpha,
    compose_expr,
    expression_depth,
    expression_dimension,
    iterated_weight,
    materialize_matrix,
    monomial_eigenvalue,
    verify_isometry,
)
from core.series import TruncatedSeries1D, TruncatedSeries2D
from utils.sampling import generate_samples, generate_samples_2d


TAU = DiscAutomorphism(0.7, 0.3 + 0.2j)


def points(radius=0.5, count=24):
    return radius * np.exp(2j * np.pi * (np.arange(count) + 0.25) / count)


def test_constants_must_be_unimodular():
    with pytest.raises(NotUnimodular):
        WeightedCompositionOp1D(1.1, TAU, 2)
    with pytest.raises(NotUnimodular):
        UnimodularMonomial(2.0, 1)
    with pytest.raises(ValueError):
        UnimodularMonomial(1.0, -1)


@pytest.mark.parametrize("p", [1, 3, 4.5])
def test_weight_is_root_of_derivative(p):
    op = WeightedCompositionOp1D(1.0, TAU, p)
    z = points(0.9)
    assert_allclose(op.weight(z) ** p, derivative_at(TAU, z), atol=1e-12)


def test_weight_is_one_without_weighting():
    z = points()
    assert_allclose(WeightedCompositionOp1D(1.0, TAU, "inf").weight(z), 1.0)
    assert_allclose(WeightedCompositionOp1D(1.0, TAU, 3, weighted=False).weight(z), 1.0)


def test_weight_series_matches_weight():
    op = WeightedCompositionOp1D(1.0, TAU, 3)
    z = points()
    assert_allclose(op.weight_series(60)(z), op.weight(z), atol=1e-12)


def test_action_is_pointwise_formula():
    alpha = cmath.exp(0.4j)
    op = WeightedCompositionOp1D(alpha, TAU, 2)
    f = TruncatedSeries1D([1, -2, 0.5j])
    z = points()
    expected = alpha * np.sqrt(derivative_at(TAU, z) + 0j) * f(TAU(z))
    # principal sqrt agrees with the canonical branch for small |a|
    assert_allclose(apply(op, f, z), expected, atol=1e-13)


@pytest.mark.parametrize("p", [1, 3, "inf"])
def test_isometry_on_disc(p):
    op = WeightedCompositionOp1D(cmath.exp(1.1j), TAU, p)
    samples = generate_samples(21, 5, 6, zero_free=True)
    report = verify_isometry(op, samples, grid=BoundaryGrid(1024), tol=1e-8)
    assert report.passed, report.residuals
    assert report.details["p"] == PNormSpec.parse(p).to_json()


def test_unweighted_operator_is_not_isometric_at_finite_p():
    op = WeightedCompositionOp1D(1.0, DiscAutomorphism(0.0, 0.6), 2, weighted=False)
    samples = generate_samples(2, 4, 5)
    assert not verify_isometry(op, samples, grid=BoundaryGrid(256)).passed


def test_isometry_on_bidisc():
    op = WeightedCompositionOp2D(cmath.exp(0.2j), TAU, UnimodularMonomial(cmath.exp(0.9j), 2), 2)
    samples = generate_samples_2d(4, 3, (3, 3))
    assert verify_isometry(op, samples, grid=BoundaryGrid(64), tol=1e-10).passed


def test_expression_needs_explicit_p():
    T = Atom(WeightedCompositionOp1D(1.0, TAU, 3))
    with pytest.raises(ValueError):
        verify_isometry(T @ T, [TruncatedSeries1D([1, 1])])


def test_expression_algebra_matches_pointwise():
    A = Atom(WeightedCompositionOp1D(cmath.exp(0.3j), TAU, 3))
    B = Atom(WeightedCompositionOp1D(1j, DiscAutomorphism.rotation(1.0), 3))
    f = TruncatedSeries1D([0.5, 1, -1j])
    z = points()
    Af, Bf = act(A, f), act(B, f)
    assert_allclose(apply(A @ B, f, z), act(A, Bf)(z), atol=1e-13)
    assert_allclose(apply(A * B, f, z), act(A, Bf)(z), atol=1e-13)
    assert_allclose(apply(A + 2 * B - 1, f, z), Af(z) + 2 * Bf(z) - f(z), atol=1e-13)
    assert_allclose(apply(-A, f, z), -Af(z), atol=1e-15)
    assert_allclose(apply(A**2, f, z), act(A, Af)(z), atol=1e-13)
    assert_allclose(apply(A - A, f, z), 0, atol=1e-15)


def test_expression_structure():
    A = Atom(WeightedCompositionOp1D(1.0, TAU, 3))
    assert isinstance(A**0, Identity)
    assert isinstance(2 * A, Scale)
    chain = compose_expr(A, compose_expr(A, A))
    assert isinstance(chain, Compose) and isinstance(chain.right, Atom)
    assert compose_expr(Identity(), A) is A
    assert expression_depth(A @ A + A) == 2
    assert expression_depth(A**3 @ A) == 4
    assert expression_dimension(Identity()) is None
    with pytest.raises(ValueError):
        A ** -1
    with pytest.raises(TypeError):
        A + "T"


def test_mixed_dimensions_are_rejected():
    A = Atom(WeightedCompositionOp1D(1.0, TAU, 3))
    B = Atom(WeightedCompositionOp2D(1.0, TAU, UnimodularMonomial(1.0, 0), 3))
    with pytest.raises(ValueError):
        expression_dimension(A + B)


def test_depth_bound():
    A = Atom(WeightedCompositionOp1D(1.0, TAU, 3))
    f = TruncatedSeries1D([1, 1])
    limit = settings.max_composition_depth
    act(A**limit, f)
    with pytest.raises(DepthExceeded):
        act(A ** (limit + 1), f)


def test_calibrated_operator_has_exact_order(order3_op):
    T = order3_op.as_expr()
    f = TruncatedSeries1D([0.2, 1, -0.5j, 0.3])
    z = points(1.0)
    assert_allclose(apply(T**3, f, z), f(z), atol=1e-10)
    assert np.max(np.abs(apply(T, f, z) - f(z))) > 1e-3
    assert iterated_weight(order3_op, 3, 0.0) == pytest.approx(1.0, abs=1e-10)


def test_calibration_edge_cases():
    assert calibrate_alpha(elliptic_of_order(4, 0.3), 4, "inf") == pytest.approx(1.0)
    with pytest.raises(NotFiniteOrder):
        calibrate_alpha(elliptic_of_order(4, 0.3), 3, 4)
    with pytest.raises(ValueError):
        iterated_weight(WeightedCompositionOp1D(1.0, TAU, 3), 0, 0.0)


def test_monomial_eigenvalue():
    op = WeightedCompositionOp2D(cmath.exp(0.2j), DiscAutomorphism.rotation(0.5), UnimodularMonomial(cmath.exp(0.9j), 0), 4)
    f = TruncatedSeries2D.monomial(2, 3)
    z, w = points(0.8), points(0.6)[::-1]
    assert_allclose(apply(op, f, z, w), monomial_eigenvalue(op, 2, 3) * f(z, w), atol=1e-13)
    with pytest.raises(ValueError):
        monomial_eigenvalue(WeightedCompositionOp2D(1.0, TAU, UnimodularMonomial(1.0, 0), 4), 1, 1)


def test_matrix_reproduces_action():
    op = WeightedCompositionOp1D(cmath.exp(0.6j), DiscAutomorphism(0.7, 0.3), 3)
    f = TruncatedSeries1D([1, 2, -1j, 0.5])
    matrix = materialize_matrix(op, 12)
    assert not matrix.is_block
    assert matrix.matrix.shape == (13, 13)
    z = points(0.2)
    assert_allclose(matrix.apply_to(f)(z), apply(op, f, z), atol=1e-10)


def test_matrix_of_rotation_is_diagonal():
    u = cmath.exp(0.5j)
    op = WeightedCompositionOp1D(1.0, DiscAutomorphism.rotation(0.5), "inf")
    matrix = materialize_matrix(op, 5)
    assert_allclose(matrix.matrix, np.diag(u ** np.arange(6)), atol=1e-14)
    assert matrix.truncation_error == 0.0


def test_block_matrix_for_two_variables():
    op = WeightedCompositionOp2D(1j, DiscAutomorphism.rotation(0.4), UnimodularMonomial(cmath.exp(0.3j), 1), "inf")
    matrix = materialize_matrix(op, 6)
    assert matrix.is_block
    assert matrix.matrix.shape == (7, 7, 7)
    f = TruncatedSeries2D.monomial(1, 2, (6, 6))
    z, w = points(0.5), points(0.7)
    assert_allclose(matrix.apply_to(f)(z, w), apply(op, f, z, w), atol=1e-13)


@pytest.mark.parametrize("m, n", [(1, 1), (2, 3), (1, 4)])
def test_powers_compose(m, n):
    A = Atom(WeightedCompositionOp1D(cmath.exp(0.3j), TAU, 3))
    f = TruncatedSeries1D([0.5, 1, -1j, 0.25])
    z = points(0.9)
    assert_allclose(apply(A ** (m + n), f, z), apply(A**m @ A**n, f, z), atol=1e-12)


@pytest.mark.parametrize("m, n", [(1, 2), (2, 2), (3, 1)])
def test_iterated_weight_cocycle(m, n):
    op = WeightedCompositionOp1D(cmath.exp(0.4j), TAU, 3)
    z = points(0.8)
    shifted = power(TAU, m)(z)
    assert_allclose(
        iterated_weight(op, m + n, z),
        iterated_weight(op, m, z) * iterated_weight(op, n, shifted),
        atol=1e-12,
    )


ISOMETRY_TAUS = [DiscAutomorphism(theta, a) for a in (0, 0.3, 0.5 + 0.2j) for theta in (0.0, 1.1)]


@pytest.mark.parametrize("p", [1, 3, 4, "inf"])
@pytest.mark.parametrize("tau", ISOMETRY_TAUS, ids=lambda t: f"theta={t.theta:g},a={t.a:g}")
def test_isometry_lattice(tau, p):
    op = WeightedCompositionOp1D(cmath.exp(0.5j), tau, p)
    samples = generate_samples(33, 50, 8, zero_free=True)
    report = verify_isometry(op, samples, grid=BoundaryGrid(2048), tol=1e-6)
    assert report.passed, report.residuals


def test_unweighted_operator_is_far_from_isometric_at_p_one():
    op = WeightedCompositionOp1D(1.0, DiscAutomorphism(0.0, 0.6), 1, weighted=False)
    samples = [TruncatedSeries1D([1, 1]), TruncatedSeries1D([1, 0.5, 0.25])]
    report = verify_isometry(op, samples, grid=BoundaryGrid(2048))
    assert not report.passed
    assert report.residuals["norm"] > 1e-2
