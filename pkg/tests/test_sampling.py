import numpy as np
import pytest

from ellbranch import (
    Ball,
    InvalidParameterException,
    SamplerSpec,
    SymMat,
    opnorm,
)
from ellbranch._sampling import (
    random_psd,
    random_rotations,
    random_symmetric,
    sample_pairs,
)


def _draw(sampler):
    return sampler.map_chunks(
        lambda offset, count, rng: (
            offset,
            count,
            rng.uniform(size=3).tolist(),
        )
    )


def test_chunks_cover_every_sample():
    sampler = SamplerSpec(count=1000, chunk_size=256)
    sizes = [(offset, count) for offset, count, _ in sampler.chunks()]
    assert sizes == [(0, 256), (256, 256), (512, 256), (768, 232)]


def test_same_seed_gives_same_draws():
    assert _draw(SamplerSpec(count=600, seed=3)) == _draw(
        SamplerSpec(count=600, seed=3)
    )
    assert _draw(SamplerSpec(count=600, seed=3)) != _draw(
        SamplerSpec(count=600, seed=4)
    )


def test_thread_count_does_not_change_results():
    single = SamplerSpec(count=2000, seed=5, threads=1)
    assert _draw(single) == _draw(single.replace(threads=4))


@pytest.mark.parametrize(
    "kwargs",
    (
        pytest.param({"count": 0}, id="count"),
        pytest.param({"cap": -1.0}, id="cap"),
        pytest.param({"threads": 0}, id="threads"),
    ),
)
def test_invalid_samplers_are_rejected(kwargs):
    with pytest.raises(InvalidParameterException):
        SamplerSpec(**kwargs)


def test_rotations_are_orthogonal(rng):
    for rotation in random_rotations(rng, 3, 16):
        np.testing.assert_allclose(
            rotation @ rotation.T, np.eye(3), atol=1e-12
        )


@pytest.mark.parametrize("log_uniform", (True, False))
def test_random_symmetric_respects_the_cap(rng, log_uniform):
    matrices = random_symmetric(rng, 3, 200, 50.0, log_uniform=log_uniform)

    assert np.array_equal(matrices, np.transpose(matrices, (0, 2, 1)))
    norms = [opnorm(SymMat(m)) for m in matrices]
    assert max(norms) <= 50.0 * (1 + 1e-12)


def test_log_uniform_norms_reach_small_and_large_scales(rng):
    norms = [opnorm(SymMat(m)) for m in random_symmetric(rng, 2, 500, 1e3)]
    assert min(norms) < 1
    assert max(norms) > 100


def test_random_psd_is_positive(rng):
    for entries in random_psd(rng, 2, 100, 10.0):
        assert np.linalg.eigvalsh(entries)[0] >= -1e-12


def test_pairs_are_close_and_inside(rng):
    ball = Ball(center=(0.0, 0.0))
    x, y = sample_pairs(ball, rng, 200, 0.1)

    assert np.all(np.linalg.norm(x - y, axis=1) < 0.1)
    assert np.all(ball.contains_many(x))
    assert np.all(ball.contains_many(y))


def test_pairs_need_a_positive_radius(rng):
    with pytest.raises(InvalidParameterException):
        sample_pairs(Ball(center=(0.0, 0.0)), rng, 10, 0.0)
