import numpy as np
import pytest

from ellbranch import (
    Annulus,
    Ball,
    Box,
    Ellipsoid,
    InvalidParameterException,
    domain_from_dict,
)

DOMAINS = (
    pytest.param(Ball(center=(0.5, -0.5), radius=2.0), id="ball"),
    pytest.param(
        Ellipsoid(axes=(2.0, 1.0), center=(0.0, 1.0)), id="ellipsoid"
    ),
    pytest.param(Box(lower=(0.0, 0.0), upper=(1.0, 2.0)), id="box"),
    pytest.param(
        Annulus(center=(0.0, 0.0), inner=0.5, outer=1.5), id="annulus"
    ),
)


@pytest.mark.parametrize("domain", DOMAINS)
def test_boundary_samples_lie_on_the_boundary(domain, rng):
    points = domain.sample_boundary(rng, 64)
    np.testing.assert_allclose(domain.rho_many(points), 0, atol=1e-12)


@pytest.mark.parametrize("domain", DOMAINS)
def test_interior_samples_are_inside(domain, rng):
    points = domain.sample_interior(rng, 64)
    assert points.shape == (64, 2)
    assert np.all(domain.contains_many(points))


@pytest.mark.parametrize("domain", DOMAINS)
def test_projection_lands_on_the_boundary(domain, rng):
    for point in domain.sample_interior(rng, 16):
        assert domain.rho(domain.project(point)) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("domain", DOMAINS)
def test_descriptors_decode_to_equal_domains(domain):
    assert domain_from_dict(domain.to_dict()) == domain


@pytest.mark.parametrize("domain", DOMAINS)
def test_ray_exit_reaches_the_boundary(domain, rng):
    start = domain.sample_interior(rng, 1)[0]
    direction = np.array([10.0, 3.0])

    fraction = domain.ray_exit(start, direction)

    assert 0 < fraction < 1
    exit_point = start + fraction * direction
    assert domain.rho(exit_point) == pytest.approx(0, abs=1e-8)


def test_ray_exit_is_one_inside():
    assert Ball(center=(0.0, 0.0)).ray_exit((0.0, 0.0), (0.1, 0.0)) == 1.0


@pytest.mark.parametrize("domain", DOMAINS)
def test_gradient_matches_finite_differences(domain, rng):
    step = 1e-6
    for point in domain.sample_boundary(rng, 8):
        numeric = [
            (domain.rho(point + step * e) - domain.rho(point - step * e))
            / (2 * step)
            for e in np.eye(2)
        ]
        np.testing.assert_allclose(domain.gradient(point), numeric, atol=1e-5)


def test_ball_hessian_and_normal():
    ball = Ball(center=(0.0, 0.0), radius=2.0)
    assert ball.hessian((1.0, 0.0)).to_list() == [[1.0, 0.0], [0.0, 1.0]]
    np.testing.assert_allclose(ball.inward_normal((2.0, 0.0)), [-1.0, 0.0])


def test_annulus_inner_boundary_is_concave():
    annulus = Annulus(center=(0.0, 0.0), inner=0.5, outer=1.5)
    hessian = annulus.hessian((0.0, 0.5))
    # tangential direction is e1 at (0, 0.5)
    assert hessian.entries[0, 0] == pytest.approx(-1 / 0.5)


@pytest.mark.parametrize(
    ("data", "message"),
    (
        ({"shape": "torus"}, "unknown domain"),
        (
            {"shape": "ball", "center": [0, 0], "radius": -1},
            "must be positive",
        ),
        ({"shape": "box", "lower": [1, 0], "upper": [0, 1]}, "componentwise"),
        ({"shape": "ball", "center": [0, 0], "colour": "red"}, "colour"),
    ),
)
def test_invalid_descriptors(data, message):
    with pytest.raises(InvalidParameterException, match=message):
        domain_from_dict(data)


def test_extent_and_radius_bound():
    box = Box(lower=(-1.0, 0.0), upper=(3.0, 1.0))
    assert box.extent == 4
    assert box.radius_bound == pytest.approx(np.hypot(3, 1))
