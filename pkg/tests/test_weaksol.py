import numpy as np
import pytest

from ellbranch import (
    PSD,
    Affine,
    Constant,
    ConstantMap,
    ContactTriple,
    DualPSD,
    GridFunction,
    InvalidInputException,
    InvalidParameterException,
    PreconditionException,
    Quadratic,
    SymMat,
    comparison_harness,
    hessian_dictionary,
    slodkowski_K,
    subaffine_check,
    sup_convolution,
    theta_subharmonic_test,
    viscosity_test,
)
from ellbranch._exceptions import StencilOutOfDomainException
from ellbranch._weaksol import (
    BOUNDARY,
    INTERIOR,
    NEG_INF,
    OUTSIDE,
    lattice_ball,
    lattice_directions,
    stencil_gradient,
    stencil_hessian,
)

CONVEX = Quadratic(((1.0, 0.0), (0.0, 1.0)))
CONCAVE = Quadratic(((-1.0, 0.0), (0.0, -1.0)))
SADDLE = Quadratic(((2.0, 0.0), (0.0, -2.0)))
SHIFT = Affine(slope=(0.7, -1.3), intercept=2.0)


def _box_grid(formula, h=0.25):
    return GridFunction.on_box((-1.0, -1.0), (1.0, 1.0), h, formula)


def _abs_x1(h=0.125):
    rising = _box_grid(Affine(slope=(1.0, 0.0)), h)
    return rising.maximum(_box_grid(Affine(slope=(-1.0, 0.0)), h))


def _failing_nodes(u, M):
    return [
        node
        for node in u.interior_nodes()
        if theta_subharmonic_test(u, M, node) is not None
    ]


def _disk_grid(domain, formula, h=0.125):
    return GridFunction.from_domain(domain, h, formula)


def test_lattice_directions():
    assert lattice_directions(2, 1) == [(0, 1), (1, 0), (1, -1), (1, 1)]
    assert (2, 1) in lattice_directions(2, 2)
    assert (2, 2) not in lattice_directions(2, 2)

    with pytest.raises(InvalidParameterException):
        lattice_directions(2, 0)


def test_lattice_ball():
    assert len(lattice_ball(2, 1.5)) == 8
    assert len(lattice_ball(2, 1.0)) == 4
    assert (0, 0) not in lattice_ball(2, 3.0)


def test_grid_from_domain(unit_disk):
    u = _disk_grid(unit_disk, CONVEX, h=0.25)

    center = u.node_of((0.0, 0.0))
    assert u.mask[center] == INTERIOR
    assert u[center] == 0
    # (1, 0) is on the circle, hence a boundary node
    assert u.mask[u.node_of((1.0, 0.0))] == BOUNDARY
    assert u.mask[0, 0] == OUTSIDE
    assert u.values[0, 0] == NEG_INF


def test_grid_boundary_values_by_projection(unit_disk):
    u = GridFunction.from_domain(
        unit_disk, 0.25, CONVEX, boundary_values="projection"
    )
    edge = u.values[u.mask == BOUNDARY]
    assert edge == pytest.approx(np.full(edge.shape, 0.5))


def test_grid_needs_enough_interior_nodes(unit_disk):
    with pytest.raises(InvalidParameterException, match="fewer than 3"):
        _disk_grid(unit_disk, CONVEX, h=1.0)


def test_grid_rejects_mismatched_arrays():
    with pytest.raises(InvalidInputException):
        GridFunction(
            np.zeros(2), 0.1, np.full((5, 5), INTERIOR), np.zeros((4, 5))
        )


def test_stencils_are_exact_on_quadratics():
    formula = Quadratic(((2.0, 1.0), (1.0, 4.0)), slope=(0.5, -1.0))
    u = GridFunction.on_box((-1.0, -1.0), (1.0, 1.0), 0.25, formula)
    node = u.node_of((0.25, -0.5))

    assert stencil_hessian(u, node).entries == pytest.approx(
        np.array([[2.0, 1.0], [1.0, 4.0]])
    )
    expected = np.array([[2.0, 1.0], [1.0, 4.0]]) @ [0.25, -0.5] + [0.5, -1.0]
    assert stencil_gradient(u, node) == pytest.approx(expected)


def test_stencils_stay_in_the_mask():
    u = GridFunction.on_box((0.0, 0.0), (1.0, 1.0), 0.25, CONVEX)
    with pytest.raises(StencilOutOfDomainException):
        stencil_hessian(u, (0, 2))


def test_shift_shrinks_the_grid():
    u = GridFunction.on_box(
        (0.0, 0.0), (1.0, 1.0), 0.125, Affine(slope=(1.0, 0.0))
    )
    moved = u.shift((1, 0))

    assert moved[(1, 1)] == pytest.approx(0.25)
    assert moved.mask[8, 2] == OUTSIDE
    assert moved.mask[7, 2] == BOUNDARY
    assert moved.mask[6, 2] == INTERIOR


def test_csv_round_trip(unit_disk):
    u = _disk_grid(unit_disk, CONVEX, h=0.25)
    text = u.to_csv()

    assert text.splitlines()[0] == "x1,x2,mask,value"
    restored = GridFunction.from_csv(text)
    assert restored.h == pytest.approx(u.h)
    assert np.array_equal(restored.mask, u.mask)
    assert np.array_equal(restored.values, u.values)


@pytest.mark.parametrize(
    "text",
    (
        "",
        "x1,x2,value\n",
        "x1,x2,mask,value\n0.0,0.0,Z,1.0\n",
        "x1,x2,mask,value\n0.0,0.0,I,nope\n",
        "x1,x2,mask,value\n0.0,0.0,I,1.0\n0.0,1.0,I,1.0\n1.0,1.0,I,1.0\n",
    ),
)
def test_csv_rejects_malformed_grids(text):
    with pytest.raises(InvalidInputException):
        GridFunction.from_csv(text)


@pytest.mark.parametrize("formula", (CONVEX, Affine(slope=(1.0, 2.0))))
def test_convex_functions_are_subaffine(formula):
    u = GridFunction.on_box((-1.0, -1.0), (1.0, 1.0), 0.125, formula)
    assert subaffine_check(u) is None


def test_concave_bump_is_not_subaffine():
    u = GridFunction.on_box((-1.0, -1.0), (1.0, 1.0), 0.125, CONCAVE)

    contact = subaffine_check(u)

    assert isinstance(contact, ContactTriple)
    assert contact.eps > 0
    assert contact.replay(u)
    low, high = contact.box
    assert contact.to_dict()["box"] == [list(low), list(high)]


def test_saddle_is_subaffine():
    assert subaffine_check(_box_grid(SADDLE, 0.125)) is None


@pytest.mark.parametrize(
    ("formula", "expected"), ((CONVEX, True), (CONCAVE, False))
)
def test_subaffinity_ignores_affine_terms(formula, expected):
    u = _box_grid(formula, 0.125)
    assert (subaffine_check(u) is None) is expected
    assert (subaffine_check(u.add_formula(SHIFT)) is None) is expected


def test_maximum_of_subaffine_functions_is_subaffine():
    left = _box_grid(Quadratic(((1.0, 0.0), (0.0, 1.0)), slope=(1.0, 0.0)))
    right = _box_grid(
        Quadratic(((1.0, 0.0), (0.0, 1.0)), slope=(-1.0, 0.0), constant=0.1)
    )
    assert subaffine_check(left) is None
    assert subaffine_check(right) is None
    assert subaffine_check(left.maximum(right)) is None


def test_subaffine_region_must_be_inside(unit_disk):
    u = _disk_grid(unit_disk, CONVEX)
    # the corners of the bounding box are outside the disk
    with pytest.raises(InvalidParameterException, match="region"):
        subaffine_check(u)
    with pytest.raises(InvalidParameterException, match="region"):
        subaffine_check(u, ((8, 8), (9, 9)))


def test_hessian_dictionary():
    u = GridFunction.on_box((-1.0, -1.0), (1.0, 1.0), 0.25, CONVEX)
    dictionary = hessian_dictionary(
        u, (4, 4), shift=0.1, multiples=2, rotations=3
    )

    assert len(dictionary) == 1 + 4 + 3
    assert dictionary[0] == SymMat.identity(2)
    assert dictionary[1] == SymMat.identity(2) * 1.1
    assert dictionary[2] == SymMat.identity(2) * 0.9


def test_viscosity_sub_solution(unit_disk):
    psd = ConstantMap(unit_disk, PSD())
    convex = _disk_grid(unit_disk, CONVEX)
    concave = _disk_grid(unit_disk, CONCAVE)
    node = convex.node_of((0.0, 0.0))

    assert viscosity_test(convex, psd, node) is None
    assert theta_subharmonic_test(convex, psd, node) is None

    witness = viscosity_test(concave, psd, node)
    assert witness is not None
    assert witness["side"] == "sub"
    assert not PSD().contains(witness["H"])


def test_viscosity_super_solution(unit_disk):
    psd = ConstantMap(unit_disk, PSD())
    concave = _disk_grid(unit_disk, CONCAVE)
    convex = _disk_grid(unit_disk, CONVEX)
    node = concave.node_of((0.0, 0.0))

    assert viscosity_test(concave, psd, node, side="super") is None
    assert viscosity_test(convex, psd, node, side="super") is not None


def test_viscosity_constraint_filters_test_hessians(unit_disk):
    psd = ConstantMap(unit_disk, PSD())
    concave = _disk_grid(unit_disk, CONCAVE)
    node = concave.node_of((0.0, 0.0))

    # no touching Hessian of a concave function is admissible
    assert viscosity_test(concave, psd, node, constraint=psd) is None


def test_viscosity_rejects_bad_arguments(unit_disk):
    psd = ConstantMap(unit_disk, PSD())
    u = _disk_grid(unit_disk, CONVEX)
    with pytest.raises(InvalidParameterException, match="side"):
        viscosity_test(u, psd, u.node_of((0.0, 0.0)), side="both")
    with pytest.raises(StencilOutOfDomainException):
        viscosity_test(u, psd, (0, 0), [SymMat.identity(2)])


@pytest.mark.parametrize(
    ("formula", "passes"), ((CONVEX, True), (CONCAVE, False))
)
def test_subharmonicity_ignores_affine_terms(unit_square, formula, passes):
    psd = ConstantMap(unit_square, PSD())
    u = _box_grid(formula)
    lifted = u.add_formula(SHIFT)

    for node in u.interior_nodes():
        assert (theta_subharmonic_test(u, psd, node) is None) is passes
        assert (theta_subharmonic_test(lifted, psd, node) is None) is passes


def test_maximum_of_subharmonic_functions_is_subharmonic(unit_square):
    psd = ConstantMap(unit_square, PSD())
    left = _box_grid(Quadratic(((1.0, 0.0), (0.0, 1.0)), slope=(1.0, 0.0)))
    right = _box_grid(Quadratic(((1.0, 0.0), (0.0, 1.0)), slope=(-1.0, 0.0)))

    assert _failing_nodes(left, psd) == []
    assert _failing_nodes(right, psd) == []
    assert _failing_nodes(left.maximum(right), psd) == []


def test_decreasing_limits_stay_subharmonic(unit_square):
    psd = ConstantMap(unit_square, PSD())
    previous = None
    for n in (1, 2, 4, 8):
        u_n = _box_grid(lambda p, n=n: np.sqrt(p[:, 0] ** 2 + 1 / n), 0.125)
        if previous is not None:
            assert np.all(u_n.values <= previous.values)
        assert _failing_nodes(u_n, psd) == []
        previous = u_n

    assert _failing_nodes(_abs_x1(), psd) == []
    lifted = [_box_grid(CONVEX).add_formula(Constant(1 / n)) for n in (1, 4)]
    assert all(_failing_nodes(u, psd) == [] for u in lifted)


def test_kink_is_dual_psd_subharmonic(unit_square):
    dual_psd = ConstantMap(unit_square, DualPSD())
    u = _abs_x1()

    assert _failing_nodes(u, dual_psd) == []
    assert viscosity_test(u, dual_psd, u.node_of((0.0, 0.0))) is None


def test_saddle_is_dual_psd_subharmonic_only(unit_square):
    dual_psd = ConstantMap(unit_square, DualPSD())
    psd = ConstantMap(unit_square, PSD())
    u = _box_grid(SADDLE)
    node = u.node_of((0.0, 0.0))

    assert theta_subharmonic_test(u, dual_psd, node) is None
    witness = theta_subharmonic_test(u, psd, node)
    assert witness is not None
    assert witness["H"].entries[1, 1] < 0

    assert _failing_nodes(_box_grid(CONCAVE), dual_psd)


def test_sup_convolution_is_semiconvex():
    eps = 0.25
    u = GridFunction.on_box((-1.0, -1.0), (1.0, 1.0), 0.125, CONCAVE)
    smoothed = sup_convolution(u, eps)

    inside = u.mask != OUTSIDE
    assert np.all(smoothed.values[inside] >= u.values[inside] - 1e-12)

    lifted = smoothed.add_formula(Quadratic(((2 / eps, 0.0), (0.0, 2 / eps))))
    for node in lifted.interior_nodes():
        hessian = stencil_hessian(lifted, node)
        assert hessian.entries[0, 0] >= -1e-9
        assert hessian.entries[1, 1] >= -1e-9


def test_sup_convolution_needs_a_positive_eps():
    u = GridFunction.on_box((0.0, 0.0), (1.0, 1.0), 0.25, CONVEX)
    with pytest.raises(InvalidParameterException):
        sup_convolution(u, 0.0)


def test_sup_convolution_of_an_affine_function():
    eps, slope = 0.5, np.array([1.0, -0.5])
    u = _box_grid(Affine(slope=(1.0, -0.5)), 0.125)
    # the maximizing shift −ε·slope/2 is a lattice vector
    smoothed = sup_convolution(u, eps)

    expected = eps * float(slope @ slope) / 4
    for node in u.interior_nodes():
        if np.all(np.abs(u.position(node)) <= 0.5):
            assert smoothed[node] - u[node] == pytest.approx(expected, 1e-6)


def test_sup_convolution_decreases_with_eps():
    u = _box_grid(CONCAVE, 0.125)
    inside = u.mask != OUTSIDE

    previous = None
    for eps in (0.5, 0.25, 0.1):
        current = sup_convolution(u, eps).values[inside]
        assert np.all(current >= u.values[inside] - 1e-12)
        if previous is not None:
            assert np.all(current <= previous + 1e-12)
        previous = current


def test_sup_convolution_reach_stays_in_the_grid():
    u = _box_grid(CONCAVE, 0.125)
    inside = u.mask != OUTSIDE

    # shifts are bounded by the grid diagonal however large eps is
    flat = sup_convolution(u, 1e6)
    assert np.max(np.abs(flat.values[inside])) < 1e-5

    capped = sup_convolution(u, 0.5, reach=u.h)
    full = sup_convolution(u, 0.5)
    assert np.all(capped.values[inside] >= u.values[inside])
    assert np.all(capped.values[inside] <= full.values[inside])
    unchanged = sup_convolution(u, 0.5, reach=0.0)
    assert np.array_equal(unchanged.values, u.values)

    with pytest.raises(InvalidParameterException, match="reach"):
        sup_convolution(u, 0.5, reach=-1.0)


def test_slodkowski_K_of_a_quadratic():
    u = GridFunction.on_box(
        (-1.0, -1.0), (1.0, 1.0), 0.0625, Quadratic(((3.0, 0.0), (0.0, 1.0)))
    )
    node = u.node_of((0.0, 0.0))

    K = slodkowski_K(u, node, [0.5, 0.25, 0.125, 0.0625])
    assert K == pytest.approx(3.0)


def test_slodkowski_K_needs_a_ladder():
    u = GridFunction.on_box((0.0, 0.0), (1.0, 1.0), 0.25, CONVEX)
    with pytest.raises(InvalidParameterException):
        slodkowski_K(u, (2, 2), [])
    with pytest.raises(InvalidParameterException):
        slodkowski_K(u, (2, 2), [0.1, -0.1])


def test_slodkowski_K_of_flat_functions():
    quartic = GridFunction.on_box(
        (-1.0, -1.0),
        (1.0, 1.0),
        0.015625,
        lambda p: 0.25 * np.sum(p**2, axis=1) ** 2,
    )
    ladder = [0.125, 0.0625, 0.03125, 0.015625]
    K = slodkowski_K(quartic, quartic.node_of((0.0, 0.0)), ladder)
    assert 0 <= K < 5e-3

    affine = _box_grid(SHIFT, 0.125)
    K = slodkowski_K(affine, affine.node_of((0.0, 0.0)), [0.5, 0.25, 0.125])
    assert K == pytest.approx(0.0, abs=1e-8)


def test_comparison_holds(unit_disk):
    psd = ConstantMap(unit_disk, PSD())
    u = _disk_grid(
        unit_disk, Quadratic(((1.0, 0.0), (0.0, 1.0)), constant=-1.0)
    )
    w = _disk_grid(unit_disk, Affine(slope=(0.0, 0.0)))

    assert comparison_harness(u, w, psd) is None


def test_comparison_violation_comes_with_a_witness(unit_disk):
    psd = ConstantMap(unit_disk, PSD())
    u = _disk_grid(
        unit_disk, Quadratic(((-2.0, 0.0), (0.0, -2.0)), constant=0.5)
    )
    w = _disk_grid(unit_disk, Affine(slope=(0.0, 0.0)))

    violation = comparison_harness(u, w, psd, check_preconditions=False)

    assert violation is not None
    assert violation.node == u.node_of((0.0, 0.0))
    assert violation.excess == pytest.approx(0.5)
    assert violation.contact is not None
    assert violation.to_dict()["node"] == list(violation.node)

    with pytest.raises(PreconditionException, match="subharmonic"):
        comparison_harness(u, w, psd)


def test_comparison_needs_boundary_ordering(unit_disk):
    psd = ConstantMap(unit_disk, PSD())
    u = _disk_grid(unit_disk, Affine(slope=(0.0, 0.0), intercept=1.0))
    w = _disk_grid(unit_disk, Affine(slope=(0.0, 0.0)))

    with pytest.raises(PreconditionException, match="boundary"):
        comparison_harness(u, w, psd)
