import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from config.settings import settings
from core.errors import (
    AnnihilationFails,
    FalsifierPrecondition,
    InvalidEigenPair,
    NoFamilyMatches,
    OrbitDegenerate,
    PEqualsTwo,
    SpectrumMismatch,
)
from core.hardy import BoundaryGrid
from core.moebius import DiscAutomorphism, elliptic_of_order, order_up_to
from core.operators import (
    Atom,
    Identity,
    UnimodularMonomial,
    WeightedCompositionOp1D,
    WeightedCompositionOp2D,
    apply,
    calibrate_alpha,
    monomial_eigenvalue,
)
from core.projections import (
    CUBE_ROOT,
    EigenPair,
    annihilation_residual,
    classify_1d,
    classify_2d,
    eigenprojection_oracle,
    gtcp_from_isometry,
    lagrange_falsifier,
    lemma_coefficients,
    operator_order,
    order3_triple,
    order4_candidates,
    sigma_lagrange_falsifier,
    verify_triple,
)
from core.reports import Family
from core.series import TruncatedSeries2D
from utils.sampling import generate_samples, generate_samples_2d


TRIPLE_CHECKS = {"P^2-P", "Q^2-Q", "R^2-R", "PQ", "QP", "PR", "RP", "QR", "RQ", "P+Q+R-I", "P+l1Q+l2R-T"}


def similar_matrix(rng, diagonal):
    """S diag S^{-1} with S = U diag(s) V, s in [1, 10] and U, V unitary."""
    n = len(diagonal)
    U, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    V, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    S = U @ np.diag(rng.uniform(1, 10, n)) @ V
    return S @ np.diag(diagonal) @ np.linalg.inv(S)


def quadratic(X, c2, c1, c0):
    return c2 * X @ X + c1 * X + c0 * np.eye(X.shape[0])


def rotation_op_2d(theta, c, alpha=1.0):
    return WeightedCompositionOp2D(alpha, DiscAutomorphism.rotation(theta), UnimodularMonomial(c, 0), "inf")


def eigen_samples(op, excluded):
    """Bidisc samples with no component on the eigenvalue ``excluded``."""
    return generate_samples_2d(
        17, 5, (4, 4), keep=lambda n, m: abs(monomial_eigenvalue(op, n, m) - excluded) > 1e-9
    )


def test_eigenpair_validation():
    with pytest.raises(InvalidEigenPair):
        EigenPair(1.0, -1.0)
    with pytest.raises(InvalidEigenPair):
        EigenPair(1j, 1j)
    with pytest.raises(InvalidEigenPair):
        EigenPair(0.5, -1.0)
    pair = EigenPair.cube_roots()
    assert pair.a == pytest.approx(-1.0)
    assert pair.b == pytest.approx(1.0)


def test_lemma_coefficients_are_complete():
    pair = EigenPair.from_angles(0.7, 2.9)
    c = lemma_coefficients(pair)
    total = np.sum([c[k] for k in "PQR"], axis=0)
    assert_allclose(total, [0, 0, 1], atol=1e-14)
    weighted = np.array(c["P"]) + pair.lambda1 * np.array(c["Q"]) + pair.lambda2 * np.array(c["R"])
    assert_allclose(weighted, [0, 1, 0], atol=1e-14)


@pytest.mark.parametrize("angles", [(2 * math.pi / 3, 4 * math.pi / 3), (math.pi, math.pi / 2), (0.4, 2.0)])
def test_quotient_formulas_match_spectral_projections(rng, angles):
    pair = EigenPair.from_angles(*angles)
    T = similar_matrix(rng, [1, 1, pair.lambda1, pair.lambda1, pair.lambda2, pair.lambda2])
    triple = gtcp_from_isometry(T, pair, tol=1e-8)
    P, Q, R = eigenprojection_oracle(T, pair)
    assert_allclose(triple.P, P, atol=1e-9)
    assert_allclose(triple.Q, Q, atol=1e-9)
    assert_allclose(triple.R, R, atol=1e-9)
    report = verify_triple(triple, T, tol=1e-8)
    assert report.passed
    assert set(report.residuals) == TRIPLE_CHECKS


def random_pair(rng, gap=0.3):
    while True:
        t1, t2 = rng.uniform(gap, 2 * math.pi - gap, 2)
        if abs(cmath.exp(1j * t1) - cmath.exp(1j * t2)) > gap:
            return EigenPair.from_angles(t1, t2)


def test_quotient_formulas_agree_with_oracle_on_random_matrices():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 7))
        pair = random_pair(rng)
        T = similar_matrix(rng, rng.choice([1, pair.lambda1, pair.lambda2], size=n))
        triple = gtcp_from_isometry(T, pair, tol=1e-8)
        for part, exact in zip((triple.P, triple.Q, triple.R), eigenprojection_oracle(T, pair)):
            worst = max(worst, float(np.max(np.abs(part - exact))))
    assert worst < 1e-9


def test_oracle_rejects_foreign_spectrum():
    pair = EigenPair.cube_roots()
    with pytest.raises(SpectrumMismatch):
        eigenprojection_oracle(np.diag([1, pair.lambda1, 0.5]), pair)
    with pytest.raises(SpectrumMismatch):
        eigenprojection_oracle(np.array([[1, 1], [0, 1]]), pair)


def test_annihilation_failure_is_reported(rng):
    T = similar_matrix(rng, [1, -1, 1j, -1j])
    with pytest.raises(AnnihilationFails) as info:
        gtcp_from_isometry(T, EigenPair(-1.0, 1j))
    assert info.value.residual >= info.value.tolerance


def test_corrupted_triple_fails(rng):
    pair = EigenPair.cube_roots()
    T = similar_matrix(rng, [1, pair.lambda1, pair.lambda2, pair.lambda2])
    triple = gtcp_from_isometry(T, pair, tol=1e-8)
    triple.P = triple.P + 1e-3 * np.eye(4)
    report = verify_triple(triple, T, tol=1e-8)
    assert not report.passed
    assert report.residuals["P^2-P"] > 1e-4


def test_order4_closed_forms_agree_with_quotients(rng):
    X = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    candidates = order4_candidates(X)
    assert len(candidates) == 6
    for candidate in candidates:
        c = lemma_coefficients(candidate.triple.eigenpair)
        for name, part in candidate.triple.items():
            assert_allclose(part, quadratic(X, *c[name]), atol=1e-12)


def test_order3_operator_annihilates(order3_op):
    assert annihilation_residual(order3_op, EigenPair.cube_roots()) < 1e-9
    samples = generate_samples(3, 4, 6)
    n, residuals = operator_order(order3_op, samples, BoundaryGrid(32))
    assert n == 3
    assert set(residuals) == {1, 2, 3}
    triple = order3_triple(order3_op)
    assert verify_triple(triple, order3_op, samples, BoundaryGrid(32)).passed


def test_classify_order3(order3_op):
    report = classify_1d(order3_op)
    assert report.family is Family.ORDER3
    assert report.verdict == "pass"
    assert report.label == "Order3"
    assert report.lambda1 == pytest.approx(CUBE_ROOT)
    assert set(report.residuals) == TRIPLE_CHECKS | {"T^3-I"}
    assert report.details["matrix_crosscheck"] < 1e-6
    assert report.to_dict()["family"] == "Order3"


def test_classify_identity_is_degenerate():
    op = WeightedCompositionOp1D(1.0, DiscAutomorphism.identity(), 4)
    report = classify_1d(op)
    assert report.family is Family.DEGENERATE
    assert report.verdict == "fail"
    assert report.verified_power == 1
    assert report.vanishing == ["Q", "R"]
    assert report.reason == "T = I: Q = R = 0"


def test_classify_involution_is_degenerate(half_turn):
    report = classify_1d(WeightedCompositionOp1D(1.0, half_turn, "inf"))
    assert report.family is Family.DEGENERATE
    assert report.verified_power == 2
    assert report.vanishing == ["R"]
    assert report.reason == "T^2 = I: R = 0"


def test_classify_minus_identity_names_both_vanishing_projections():
    report = classify_1d(WeightedCompositionOp1D(-1.0, DiscAutomorphism.identity(), 4))
    assert report.family is Family.DEGENERATE
    assert report.verified_power == 2
    assert report.vanishing == ["P", "R"]
    assert report.reason == "T^2 = I: P = R = 0"


def test_classify_rejects_p_two():
    with pytest.raises(PEqualsTwo):
        classify_1d(WeightedCompositionOp1D(1.0, DiscAutomorphism.rotation(1.0), 2))


def test_classify_without_finite_order_attaches_falsifier():
    op = WeightedCompositionOp1D(1.0, DiscAutomorphism(0.5, 0.5), 4)
    report = classify_1d(op)
    assert report.family is Family.DEGENERATE
    assert "no GTCP" in report.reason
    assert report.details["falsifier_residual"] == pytest.approx(1.0, abs=1e-8)


def test_classify_uncalibrated_alpha(order3_op):
    op = order3_op.with_alpha(order3_op.alpha * cmath.exp(0.3j))
    report = classify_1d(op)
    assert report.family is Family.DEGENERATE
    assert report.verified_power is None
    assert "uncalibrated alpha" in report.reason


@pytest.mark.parametrize("angles", [(2 * math.pi / 3, 4 * math.pi / 3), (math.pi, math.pi / 2), (0.3, 5.0)])
def test_lagrange_falsifier_residual_is_one(angles):
    op = WeightedCompositionOp1D(cmath.exp(0.2j), DiscAutomorphism(0.5, 0.5), 3)
    result = lagrange_falsifier(op, EigenPair.from_angles(*angles), seed=4)
    assert result.residual == pytest.approx(1.0, abs=1e-8)
    assert len(result.orbit) == 4


@pytest.mark.parametrize("tau", [
    elliptic_of_order(4, 0.2),
    elliptic_of_order(4, 0.3),
    elliptic_of_order(5, 0.2),
    elliptic_of_order(5, 0.3),
    DiscAutomorphism(1.0, 0.3),
], ids=["order4-0.2", "order4-0.3", "order5-0.2", "order5-0.3", "aperiodic"])
def test_lagrange_falsifier_beyond_order_three(tau):
    op = WeightedCompositionOp1D(1.0, tau, 4)
    result = lagrange_falsifier(op, EigenPair.cube_roots(), seed=3)
    assert result.residual == pytest.approx(1.0, abs=1e-8)
    assert min(abs(a - b) for i, a in enumerate(result.orbit) for b in result.orbit[i + 1:]) >= settings.falsifier_separation


def test_aperiodic_automorphism_has_no_small_order():
    assert order_up_to(DiscAutomorphism(1.0, 0.3), 4) is None


def test_lagrange_falsifier_preconditions(order3_op, monkeypatch):
    with pytest.raises(FalsifierPrecondition):
        lagrange_falsifier(order3_op, EigenPair.cube_roots())
    monkeypatch.setattr(settings, "falsifier_separation", 5.0)
    with pytest.raises(OrbitDegenerate):
        lagrange_falsifier(WeightedCompositionOp1D(1.0, DiscAutomorphism(0.5, 0.5), 3), EigenPair.cube_roots())


def test_sigma_falsifier():
    op = WeightedCompositionOp2D(1.0, DiscAutomorphism.identity(), UnimodularMonomial(1.0, 1), 4)
    result = sigma_lagrange_falsifier(op, EigenPair.cube_roots(), seed=2)
    assert result.residual == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(FalsifierPrecondition):
        sigma_lagrange_falsifier(rotation_op_2d(1.0, 1.0), EigenPair.cube_roots())


def test_classify_2d_order3():
    op = rotation_op_2d(2 * math.pi / 3, 1.0)
    report = classify_2d(op)
    assert report.family is Family.ORDER3
    assert report.verdict == "pass"


def test_classify_2d_order4_plus_sign():
    op = rotation_op_2d(math.pi, 1j)
    report = classify_2d(op, samples=eigen_samples(op, -1j))
    assert report.family is Family.ORDER4_PMQ_IR
    assert report.sign == 1
    assert report.label == "Order4_PmQ_iR+"
    assert report.lambda1 == pytest.approx(-1.0)
    assert report.lambda2 == pytest.approx(1j)
    assert report.alternatives == ["Order4_P_iQ_mR+"]
    assert report.verdict == "pass"
    assert "T^4-I" in report.residuals


def test_classify_2d_order4_minus_sign():
    op = rotation_op_2d(math.pi, 1j)
    report = classify_2d(op, samples=eigen_samples(op, 1j))
    assert report.label == "Order4_PmQ_iR-"
    assert report.alternatives == ["Order4_P_iQ_mR-"]


def test_classify_2d_conjugate_pair_family():
    op = rotation_op_2d(math.pi, 1j)
    report = classify_2d(op, samples=eigen_samples(op, -1.0))
    assert report.family is Family.ORDER4_P_IQ_MIR
    assert report.sign == 1
    assert report.alternatives == ["Order4_P_iQ_miR-"]


def test_classify_2d_full_spectrum_has_no_family():
    op = rotation_op_2d(math.pi, 1j)
    with pytest.raises(NoFamilyMatches):
        classify_2d(op, samples=generate_samples_2d(17, 5, (4, 4)))


def test_classify_2d_order3_with_moving_fixed_point():
    tau = elliptic_of_order(3, 0.3)
    op = WeightedCompositionOp2D(calibrate_alpha(tau, 3, 4), tau, UnimodularMonomial(1.0, 0), 4)
    report = classify_2d(op)
    assert report.family is Family.ORDER3
    assert report.verdict == "pass"
    assert max(report.residuals.values()) < 1e-8


def test_order4_square_flips_second_variable():
    tau = DiscAutomorphism.rotation(math.pi)
    op = WeightedCompositionOp2D(calibrate_alpha(tau, 2, 4), tau, UnimodularMonomial(1j, 0), 4)
    T = Atom(op)
    angles = 2 * np.pi * (np.arange(12) + 0.3) / 12
    z, w = np.exp(1j * angles), np.exp(-2j * angles)
    f = generate_samples_2d(8, 1, (3, 3))[0]
    assert_allclose(apply(T**2, f, z, w), f(z, -w), atol=1e-10)

    R = 0.5 * (Identity() - T**2)
    g = np.array([0.3, 1.0, -0.5j])
    w_times_g = TruncatedSeries2D(np.stack([np.zeros(3), g], axis=1))
    g_only = TruncatedSeries2D(np.stack([g, np.zeros(3)], axis=1))
    assert_allclose(apply(R, w_times_g, z, w), w_times_g(z, w), atol=1e-12)
    assert_allclose(apply(R, g_only, z, w), 0, atol=1e-12)
