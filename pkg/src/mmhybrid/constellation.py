"""Finite-alphabet signal sets.

Constellations are normalized to unit average symbol energy. A signal set is
the full Cartesian product of one constellation over ``n_streams`` streams,
enumerated lexicographically by per-stream symbol index (stream 0 is the most
significant digit).
"""
from dataclasses import dataclass
from enum import Enum
import itertools

import numpy as np

from .errors import BudgetExceeded

#: Default cap on the number of materialized signal vectors.
MAX_VECTORS = 2 ** 24


class Modulation(Enum):
    BPSK = ("bpsk", 2)
    QPSK = ("qpsk", 4)
    QAM16 = ("qam16", 16)

    def __init__(self, label, order):
        self.label = label
        self.order = order

    @classmethod
    def parse(cls, name):
        """Look up a modulation by its config name (``"bpsk"``, ``"qpsk"``, ``"qam16"``)."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for mod in cls:
            if mod.label == key:
                return mod
        raise ValueError(f"unknown modulation {name!r}; expected one of "
                         f"{[m.label for m in cls]}")

    def points(self):
        """Unit-energy constellation points, ordered by symbol index."""
        if self is Modulation.BPSK:
            return np.array([1.0 + 0j, -1.0 + 0j])
        if self is Modulation.QPSK:
            # Gray order: 00, 01, 11, 10 walking around the circle.
            return np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)
        # Square Gray-mapped 16QAM: two Gray-coded 4-PAM rails.
        pam = np.array([-3.0, -1.0, 1.0, 3.0])
        gray = [0, 1, 3, 2]
        pts = np.empty(16, dtype=complex)
        for idx in range(16):
            hi, lo = divmod(idx, 4)
            pts[idx] = pam[gray.index(hi)] + 1j * pam[gray.index(lo)]
        return pts / np.sqrt(10.0)


@dataclass(frozen=True, eq=False)
class SignalSet:
    """All ``K = M**n_streams`` equiprobable transmit vectors.

    Attributes
    ----------
    modulation : Modulation
    n_streams : int
    vectors : ndarray, shape (K, n_streams)
        Row ``m`` is the signal vector ``x_m``. Read-only.
    """

    modulation: Modulation
    n_streams: int
    vectors: np.ndarray

    @property
    def K(self):
        return self.vectors.shape[0]

    @property
    def X(self):
        """Signal vectors as columns, shape (n_streams, K)."""
        return self.vectors.T

    def __len__(self):
        return self.K


def build_signal_set(modulation, n_streams, max_vectors=MAX_VECTORS):
    """Enumerate every transmit vector for ``n_streams`` streams.

    Parameters
    ----------
    modulation : Modulation or str
    n_streams : int
        Number of data streams, at least 1.
    max_vectors : int, optional
        Enumeration budget. Sets with more than this many vectors raise
        :class:`BudgetExceeded`.

    Returns
    -------
    SignalSet
    """
    modulation = Modulation.parse(modulation)
    if int(n_streams) != n_streams or n_streams < 1:
        raise ValueError(f"n_streams must be a positive integer, got {n_streams!r}")
    n_streams = int(n_streams)
    K = modulation.order ** n_streams
    if K > max_vectors:
        raise BudgetExceeded(
            f"{modulation.label} over {n_streams} streams has K={K} vectors "
            f"(cap {max_vectors}); use streamed pair enumeration instead")
    pts = modulation.points()
    idx = np.array(list(itertools.product(range(modulation.order), repeat=n_streams)),
                   dtype=np.intp).reshape(K, n_streams)
    vectors = pts[idx]
    vectors.setflags(write=False)
    return SignalSet(modulation, n_streams, vectors)


def difference_iter(signals):
    """Yield ``(m, k, x_m - x_k)`` for every ordered pair, row-major in ``m``."""
    V = signals.vectors
    for m in range(signals.K):
        for k in range(signals.K):
            yield m, k, V[m] - V[k]


def difference_blocks(signals, block=256):
    """Yield ``(rows, deltas)`` with ``deltas[i, k] = x_{rows[i]} - x_k``.

    ``deltas`` has shape (len(rows), K, n_streams). Blocks cover the K x K
    difference table without materializing it whole.
    """
    V = signals.vectors
    for start in range(0, signals.K, block):
        rows = np.arange(start, min(start + block, signals.K))
        yield rows, V[rows, None, :] - V[None, :, :]
