"""Deterministic, splittable random streams.

Built on numpy's Philox bit generator: a counter-based design whose key is
the pair (master_seed, stream_id). Every stream is therefore a pure
function of those two integers, trajectories can simply take
stream_id = run index, and distinct keys give statistically independent
streams without sequential-seeding correlations.

Normal variates are produced by inverting the uniform through
``special.normal_quantile`` so that sampling and quantile evaluation agree
exactly.
"""

import numpy as np

from .special import normal_quantile

# Replaces an exact 0.0 uniform before quantile inversion; chosen so the
# replacement is the smallest value the generator could otherwise emit.
_TINY_U = 2.0 ** -53

_UINT64_BOUND = 2 ** 64


class RngStream:
    """One reproducible random stream, identified by (master_seed, stream_id).

    Streams are cheap value objects: movable between threads, never to be
    shared concurrently.
    """

    __slots__ = ("master_seed", "stream_id", "_gen")

    def __init__(self, master_seed, stream_id=0):
        master_seed = int(master_seed)
        stream_id = int(stream_id)
        if not 0 <= master_seed < _UINT64_BOUND:
            raise ValueError(f"master_seed must fit in 64 bits, got {master_seed}")
        if not 0 <= stream_id < _UINT64_BOUND:
            raise ValueError(f"stream_id must fit in 64 bits, got {stream_id}")
        self.master_seed = master_seed
        self.stream_id = stream_id
        self._gen = np.random.Generator(
            np.random.Philox(key=[master_seed, stream_id])
        )

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"

    @property
    def counter(self):
        """Current position of the underlying counter, as one integer."""
        words = self._gen.bit_generator.state["state"]["counter"]
        value = 0
        for i, w in enumerate(words):
            value |= int(w) << (64 * i)
        return value

    def uniform(self):
        """One uniform draw on [0, 1)."""
        return self._gen.random()

    def uniforms(self, n):
        """Batch of n uniforms; consumes the stream exactly like n scalar draws."""
        return self._gen.random(int(n))

    def standard_normal(self):
        """One standard normal via inverse-CDF of a uniform."""
        u = self._gen.random()
        if u == 0.0:
            u = _TINY_U
        return normal_quantile(u)

    def standard_normals(self, n):
        """Batch of n standard normals; same values as n scalar draws."""
        us = self._gen.random(int(n))
        us[us == 0.0] = _TINY_U
        return normal_quantile(us)

    def dirichlet_uniform(self, k):
        """Flat Dirichlet weights: k normalized standard exponentials."""
        k = int(k)
        if k < 1:
            raise ValueError(f"dirichlet dimension must be >= 1, got {k}")
        us = self._gen.random(k)
        us[us == 0.0] = _TINY_U
        e = -np.log1p(-us)
        return e / e.sum()


def next_uniform(stream):
    """Uniform variate on [0, 1); advances the stream."""
    return stream.uniform()


def next_standard_normal(stream):
    """Standard normal variate; advances the stream."""
    return stream.standard_normal()


def next_dirichlet_uniform(stream, k):
    """Vector of k nonnegative weights summing to one (flat Dirichlet)."""
    return stream.dirichlet_uniform(k)
