"""Seeded, splittable random streams.

Every stochastic routine takes an explicit :class:`numpy.random.Generator`.
Streams are built on the counter-based Philox bit generator so that a
``(seed, stream)`` pair always maps to the same sequence, regardless of how
many other streams were drawn before it.
"""
import numpy as np


def make_rng(seed, *stream):
    """Return a Philox-backed generator for ``seed`` and an optional stream path.

    ``make_rng(7, 3)`` and ``make_rng(7, 3, 1)`` are independent of each other
    and of ``make_rng(7)``.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def split(rng, n):
    """Split ``rng`` into ``n`` independent child generators."""
    return [np.random.Generator(np.random.Philox(s)) for s in rng.bit_generator.seed_seq.spawn(n)]


def complex_normal(rng, shape, variance=1.0):
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
