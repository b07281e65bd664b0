import math

import pytest

from ellbranch import (
    PSD,
    Affine,
    AllMatrices,
    BranchMap,
    Constant,
    ConstantMap,
    InvalidParameterException,
    KthEigenvalue,
    LinearTrace,
    MatrixField,
    MongeAmpere,
    Norm,
    PerturbedMA,
    PreconditionException,
    SamplerSpec,
    SymMat,
    Verdict,
    caba2_admissible,
    classical_falsify,
    classical_pair_operator,
    gntd_estimate,
    sum_duals_check,
    ucf_check,
)
from ellbranch._conditions import (
    CAP_ESCALATION,
    CLASSICAL_GAP,
    CLASSICAL_VANISHING,
    delta_grid,
)


def test_delta_grid():
    grid = delta_grid(2.0, steps=3)
    assert grid == [1.0, 0.5, 0.25]


@pytest.mark.parametrize("radius", (0.1, 1e-4, 1e-8))
def test_classical_pairs_are_admissible(radius):
    A = SymMat.diag([0.0, 1 / (2 * radius)])
    B = SymMat.diag([0.0, 1 / radius])
    assert caba2_admissible(A, B, 1 / (3 * radius))


@pytest.mark.parametrize(
    ("A", "B", "alpha"),
    (
        pytest.param(
            SymMat.identity(2) * 2, SymMat.identity(2), 1.0, id="A-above-B"
        ),
        pytest.param(
            SymMat.identity(2) * -4,
            SymMat.identity(2) * -5,
            1.0,
            id="too-negative",
        ),
    ),
)
def test_inadmissible_pairs(A, B, alpha):
    assert not caba2_admissible(A, B, alpha)


def test_caba2_needs_a_positive_alpha():
    with pytest.raises(InvalidParameterException, match="alpha"):
        caba2_admissible(SymMat.zeros(2), SymMat.zeros(2), 0.0)


def test_classical_falsifier():
    report = classical_falsify()

    assert report.verdict is Verdict.FAIL
    gaps = [entry["gap"] for entry in report.details["gap_trace"]]
    assert gaps == pytest.approx([CLASSICAL_GAP] * 8, abs=1e-12)
    assert report.witness["radius"] == pytest.approx(1e-8)
    assert report.witness["modulus_argument"] < 1e-7


def test_classical_falsifier_in_another_direction():
    report = classical_falsify(radii=(0.5, 1e-4), direction=(0.0, 2.0))
    assert report.verdict is Verdict.FAIL
    assert report.parameters["direction"].tolist() == [0.0, 1.0]


def test_classical_falsifier_needs_a_small_radius():
    # the modulus argument never drops below the gap
    report = classical_falsify(radii=(1.0,))
    assert report.verdict is Verdict.PASS


@pytest.mark.parametrize(
    "radii",
    (
        pytest.param((0.1,), id="single-radius"),
        pytest.param((0.1, 0.05), id="truncated"),
        pytest.param((1e-4, 1e-2, 1e-6), id="not-decreasing"),
    ),
)
def test_classical_falsifier_needs_a_vanishing_modulus(radii):
    report = classical_falsify(radii=radii)

    gaps = [entry["gap"] for entry in report.details["gap_trace"]]
    assert gaps == pytest.approx([CLASSICAL_GAP] * len(radii), abs=1e-12)
    assert report.verdict is Verdict.PASS
    assert report.witness is None


def test_classical_falsifier_modulus_reaches_the_threshold():
    report = classical_falsify()

    arguments = [e["modulus_argument"] for e in report.details["gap_trace"]]
    assert all(b < a for a, b in zip(arguments, arguments[1:]))
    assert arguments[-1] < 1e-6 < CLASSICAL_VANISHING


def test_classical_falsifier_keeps_the_right_hand_side():
    op = classical_pair_operator(Norm())
    report = classical_falsify(op, radii=(0.1, 1e-4))
    assert report.verdict is Verdict.FAIL


@pytest.mark.parametrize(
    "op",
    (
        PerturbedMA(MatrixField(SymMat.identity(2))),
        PerturbedMA(MatrixField(SymMat.identity(3))),
    ),
)
def test_classical_falsifier_rejects_other_operators(op):
    with pytest.raises(PreconditionException):
        classical_falsify(op)


@pytest.mark.parametrize(
    ("radii", "direction"),
    (
        ((), (1.0, 0.0)),
        ((0.1, -0.1), (1.0, 0.0)),
        ((0.1,), (0.0, 0.0)),
    ),
)
def test_classical_falsifier_rejects_bad_inputs(radii, direction):
    with pytest.raises(InvalidParameterException):
        classical_falsify(radii=radii, direction=direction)


def test_ucf_of_monge_ampere(unit_disk):
    op = MongeAmpere(2, Norm())
    sampler = SamplerSpec(count=256, seed=7, cap=1e2)

    report = ucf_check(op, ConstantMap(unit_disk, PSD()), 0.1, sampler)

    assert report.verdict is Verdict.PASS_UP_TO_CAP
    # det(A + εI) − det(A) ≥ ε², so every delta below ε² is safe
    assert report.details["certified_delta"] >= unit_disk.extent * 2.0**-8
    assert report.details["escalated_cap"] == 1e2 * CAP_ESCALATION


def test_ucf_fails_for_varying_coefficients(unit_square):
    a = MatrixField(
        SymMat.identity(2),
        ((Affine(slope=(0.5, 0.0)), SymMat.diag([1.0, 0.0])),),
    )
    op = LinearTrace(a, Constant(1.0))
    sampler = SamplerSpec(count=256, seed=7, cap=1e3)

    Phi = ConstantMap(unit_square, AllMatrices())
    report = ucf_check(op, Phi, 0.1, sampler)

    assert report.verdict is Verdict.FAIL
    witness = report.witness
    before, after = witness["values"]
    assert after < before
    shifted = witness["A"].shift(0.1)
    assert op.evaluate(witness["y"], shifted) == pytest.approx(after)


def test_ucf_respects_the_declared_bound(unit_disk):
    with pytest.raises(InvalidParameterException, match="eps"):
        ucf_check(
            MongeAmpere(2),
            ConstantMap(unit_disk, PSD()),
            0.5,
            SamplerSpec(),
            eps_max=0.1,
        )


def test_gntd_estimates(unit_disk, small_sampler):
    r = 0.5
    kth = gntd_estimate(
        KthEigenvalue(1, 2),
        ConstantMap(unit_disk, AllMatrices()),
        r,
        small_sampler,
    )
    assert kth == pytest.approx(r)

    ma = gntd_estimate(
        MongeAmpere(2), ConstantMap(unit_disk, PSD()), r, small_sampler
    )
    assert ma >= r**2 - 1e-9
    assert math.isfinite(ma)


def test_gntd_needs_a_positive_radius(unit_disk, small_sampler):
    with pytest.raises(InvalidParameterException):
        gntd_estimate(
            MongeAmpere(2), ConstantMap(unit_disk, PSD()), 0.0, small_sampler
        )


def test_sum_of_duals_for_a_branch(unit_disk, small_sampler):
    theta = BranchMap(
        unit_disk, MongeAmpere(2, Constant(1.0)), ConstantMap(unit_disk, PSD())
    )
    report = sum_duals_check(theta, small_sampler)
    assert report.verdict is Verdict.PASS_UP_TO_CAP
    assert report.witness is None


def test_ucf_certified_delta_shrinks_with_eps(unit_disk):
    op = MongeAmpere(2, Norm())
    Phi = ConstantMap(unit_disk, PSD())
    sampler = SamplerSpec(count=256, seed=7, cap=1e2)

    deltas = []
    for eps in (0.2, 0.1, 0.05):
        report = ucf_check(op, Phi, eps, sampler)
        assert report.verdict is Verdict.PASS_UP_TO_CAP
        deltas.append(report.details["certified_delta"])

    assert all(b <= a for a, b in zip(deltas, deltas[1:]))
    # det(A + εI) − det(A) ≥ ε² bounds |y| − |x| from below
    assert deltas[-1] >= 0.05**2 / 2
