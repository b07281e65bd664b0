"""
Seeded samplers for matrices and points.

Samples are drawn in fixed-size chunks, each chunk with its own generator
spawned from a single :class:`numpy.random.SeedSequence`. A sample's value
therefore depends only on the seed and its index, never on the number of
worker threads or on the total count requested.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent import futures
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, Iterator, TypeVar

import numpy as np

from ._exceptions import InvalidParameterException, SamplerExhaustedException

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from ._domains import DomainSpec

_T = TypeVar("_T")

DEFAULT_CHUNK_SIZE = 256
_MIN_NORM = 1e-2


@dataclass(frozen=True)
class SamplerSpec:
    """
    How many samples to draw, and from where.

    :param count: total number of samples.
    :param seed: root seed, identical seeds give identical samples.
    :param cap: largest operator norm of sampled matrices.
    :param radius: radius of the matrix ball used by distance estimates.
    :param threads: number of worker threads evaluating chunks.
    :param chunk_size: samples per spawned generator.
    """

    count: int = 10_000
    seed: int = 0
    cap: float = 1e3
    radius: float = 10.0
    threads: int = 1
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self) -> None:
        if self.count <= 0:
            raise InvalidParameterException(
                "count", self.count, "at least one sample is required"
            )
        if self.cap <= 0 or self.radius <= 0:
            raise InvalidParameterException(
                "cap", (self.cap, self.radius), "must be positive"
            )
        if self.threads < 1 or self.chunk_size < 1:
            raise InvalidParameterException(
                "threads", (self.threads, self.chunk_size), "must be positive"
            )

    def replace(self, **changes: Any) -> SamplerSpec:
        return dataclasses.replace(self, **changes)

    def chunks(self) -> Iterator[tuple[int, int, np.random.Generator]]:
        """Yield ``(offset, size, generator)`` for each chunk, in order."""
        n_chunks = math.ceil(self.count / self.chunk_size)
        children = np.random.SeedSequence(self.seed).spawn(n_chunks)
        for index, child in enumerate(children):
            offset = index * self.chunk_size
            size = min(self.chunk_size, self.count - offset)
            yield offset, size, np.random.default_rng(child)

    def map_chunks(
        self, func: Callable[[int, int, np.random.Generator], _T]
    ) -> list[_T]:
        """
        Evaluate ``func(offset, size, rng)`` on every chunk.

        Results are returned in chunk order whatever the thread count.
        """
        chunks = list(self.chunks())
        if self.threads == 1 or len(chunks) == 1:
            return [func(*chunk) for chunk in chunks]

        with futures.ThreadPoolExecutor(self.threads) as executor:
            return list(executor.map(lambda chunk: func(*chunk), chunks))

    def rng(self, stream: int = 0) -> np.random.Generator:
        """A single generator for small auxiliary draws."""
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(2**31 + stream,))
        )


def random_rotations(
    rng: np.random.Generator, dim: int, count: int
) -> NDArray[np.float64]:
    """Haar-distributed orthogonal matrices, shape ``(count, dim, dim)``."""
    gaussian = rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(gaussian)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def _compose(
    rotations: NDArray[np.float64], spectra: NDArray[np.float64]
) -> NDArray[np.float64]:
    matrices = np.einsum("mij,mj,mkj->mik", rotations, spectra, rotations)
    return (matrices + np.transpose(matrices, (0, 2, 1))) / 2


def _log_uniform_norms(
    rng: np.random.Generator, count: int, cap: float
) -> NDArray[np.float64]:
    low = min(_MIN_NORM, cap / 10)
    return np.exp(rng.uniform(math.log(low), math.log(cap), size=count))


def random_symmetric(
    rng: np.random.Generator,
    dim: int,
    count: int,
    cap: float,
    *,
    log_uniform: bool = True,
) -> NDArray[np.float64]:
    """
    Random symmetric matrices ``Q diag(λ) Qᵀ`` with ``‖·‖ ≤ cap``.

    Norms are log-uniform by default so that both small and large matrices
    are well represented, or uniform in ``[0, cap]``.
    """
    directions = rng.standard_normal((count, dim))
    directions /= np.max(np.abs(directions), axis=1)[:, None]
    if log_uniform:
        norms = _log_uniform_norms(rng, count, cap)
    else:
        norms = rng.uniform(0.0, cap, size=count)
    return _compose(
        random_rotations(rng, dim, count), directions * norms[:, None]
    )


def random_psd(
    rng: np.random.Generator, dim: int, count: int, cap: float
) -> NDArray[np.float64]:
    """Random positive semidefinite matrices with ``‖·‖ ≤ cap``."""
    spectra = rng.uniform(0.0, 1.0, size=(count, dim))
    # Some rank deficient samples
    spectra[rng.uniform(size=(count, dim)) < 0.2] = 0.0
    spectra *= rng.uniform(0.0, cap, size=count)[:, None]
    return _compose(random_rotations(rng, dim, count), spectra)


def sample_pairs(
    domain: DomainSpec,
    rng: np.random.Generator,
    count: int,
    delta: float,
    max_rounds: int = 100,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Points ``x, y ∈ Ω`` with ``|x − y| < delta``."""
    if delta <= 0:
        raise InvalidParameterException("delta", delta, "must be positive")

    firsts: list[NDArray[np.float64]] = []
    seconds: list[NDArray[np.float64]] = []
    total = 0
    for _ in range(max_rounds):
        x = domain.sample_interior(rng, count)
        directions = rng.standard_normal((count, domain.dim))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        radii = delta * rng.uniform(size=count) ** (1 / domain.dim)
        y = x + (radii * (1 - 1e-9))[:, None] * directions
        inside = domain.contains_many(y)
        firsts.append(x[inside])
        seconds.append(y[inside])
        total += int(np.count_nonzero(inside))
        if total >= count:
            return (
                np.concatenate(firsts)[:count],
                np.concatenate(seconds)[:count],
            )

    raise SamplerExhaustedException(
        f"could not draw {count} point pairs closer than {delta}", max_rounds
    )
