"""Dynamic antenna-to-RF-chain partitioning from statistical CSI.

The partition is chosen to maximize the average effective channel gain
``tr(F^H A_t A_t^H F)`` over whitened selection matrices. The search relaxes
to the principal left singular subspace of ``A_t`` and then alternates
between rounding to the nearest selection matrix and an orthogonal
Procrustes rotation.
"""
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .errors import DimensionMismatch, NotDivisible, TooLarge


@dataclass(frozen=True)
class Partition:
    """Disjoint, nonempty antenna sets covering ``range(Nt)``.

    Indices are 0-based in memory; the text format uses 1-based indices.
    """

    sets: tuple
    Nt: int

    def __post_init__(self):
        sets = tuple(tuple(sorted(int(i) for i in s)) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        seen = [i for s in sets for i in s]
        if any(len(s) == 0 for s in sets):
            raise ValueError("every RF chain needs at least one antenna")
        if sorted(seen) != list(range(self.Nt)):
            raise ValueError("sets must be disjoint and cover every antenna exactly once")

    @property
    def Nrf(self):
        return len(self.sets)

    @property
    def sizes(self):
        return np.array([len(s) for s in self.sets])

    def mask(self):
        """Boolean support pattern, shape (Nt, Nrf)."""
        M = np.zeros((self.Nt, self.Nrf), dtype=bool)
        for j, s in enumerate(self.sets):
            M[list(s), j] = True
        return M

    def column_of(self):
        """RF-chain index of every antenna."""
        col = np.empty(self.Nt, dtype=int)
        for j, s in enumerate(self.sets):
            col[list(s)] = j
        return col

    def to_text(self):
        return "\n".join(",".join(str(i + 1) for i in s) for s in self.sets) + "\n"

    @classmethod
    def from_text(cls, text):
        sets = [[int(tok) - 1 for tok in line.split(",")]
                for line in text.strip().splitlines() if line.strip()]
        return cls(tuple(sets), sum(len(s) for s in sets))

    @classmethod
    def from_selection(cls, F, tol=1e-12):
        """Read the sets off the nonzero pattern of a selection-form matrix."""
        F = np.asarray(F)
        nz = np.abs(F) > tol
        if not np.all(nz.sum(axis=1) == 1):
            raise ValueError("every row of a selection matrix has exactly one nonzero")
        return cls(tuple(tuple(np.flatnonzero(nz[:, j])) for j in range(F.shape[1])),
                   F.shape[0])


def is_selection_form(F, tol=1e-12):
    """Check ``|F_ij| in {0, 1}`` with exactly one nonzero per row."""
    mag = np.abs(np.asarray(F))
    unit = np.abs(mag - 1.0) <= tol
    zero = mag <= tol
    return bool(np.all(unit | zero) and np.all(unit.sum(axis=1) == 1))


def selection_matrix(partition, phases=None):
    """Unit-modulus selection matrix with the partition's support."""
    mask = partition.mask()
    phases = np.zeros(mask.shape) if phases is None else np.asarray(phases, dtype=float)
    return np.where(mask, np.exp(1j * phases), 0.0)


def analog_precoder(partition, phases):
    """Effective analog precoder ``|S_j|^{-1/2} exp(j*Phi_ij)`` on the support."""
    return selection_matrix(partition, phases) / np.sqrt(partition.sizes)[None, :]


def whiten(F):
    """Return ``F (F^H F)^{-1/2}``."""
    F = np.asarray(F)
    w, V = np.linalg.eigh(F.conj().T @ F)
    return F @ (V * (1.0 / np.sqrt(w))[None, :]) @ V.conj().T


def stirling_count(Nt, Nrf):
    """Number of ways to split ``Nt`` antennas into ``Nrf`` nonempty groups.

    Exact integer arithmetic (Stirling number of the second kind).
    """
    if not 1 <= Nrf <= Nt:
        raise ValueError(f"need 1 <= Nrf <= Nt, got Nt={Nt}, Nrf={Nrf}")
    total = sum((-1) ** (Nrf - k) * comb(Nrf, k) * k ** Nt for k in range(Nrf + 1))
    return total // factorial(Nrf)


def effective_gain(F, A_t, whiten_input=False):
    """Average effective channel gain ``tr(F^H A_t A_t^H F)``.

    The constant factor ``Nr*Nt/L`` is left out. Pass a raw selection matrix
    with ``whiten_input=True`` to apply ``(F^H F)^{-1/2}`` first.
    """
    F = np.asarray(F)
    A_t = np.asarray(A_t)
    if F.shape[0] != A_t.shape[0]:
        raise DimensionMismatch(f"F has {F.shape[0]} rows but A_t has {A_t.shape[0]}")
    if whiten_input:
        F = whiten(F)
    G = A_t.conj().T @ F
    return float(np.sum(np.abs(G) ** 2))


def random_unitary(rng, n):
    """Haar-distributed ``n x n`` unitary (QR of a complex Gaussian, phase-fixed)."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))[None, :]


def principal_subspace(A_t, Nrf, rng=None):
    """Left singular vectors of ``A_t`` for its ``Nrf`` largest singular values.

    When ``A_t`` has fewer than ``Nrf`` columns the basis is completed with a
    random orthonormal block from the orthogonal complement.
    """
    A_t = np.asarray(A_t)
    Nt, L = A_t.shape
    U, s, _ = np.linalg.svd(A_t, full_matrices=False)
    U = U[:, :Nrf]
    if U.shape[1] < Nrf:
        if rng is None:
            raise ValueError("a generator is required to complete the subspace when L < Nrf")
        extra = Nrf - U.shape[1]
        Z = rng.standard_normal((Nt, extra)) + 1j * rng.standard_normal((Nt, extra))
        Z -= U @ (U.conj().T @ Z)
        Q, _ = np.linalg.qr(Z)
        U = np.hstack([U, Q])
    return U


def unconstrained_seed(A_t, Nrf, rng, R=None):
    """Unconstrained maximizer ``U_A R`` of the whitened gain.

    ``R`` defaults to a random unitary drawn from ``rng``.
    """
    U = principal_subspace(A_t, Nrf, rng)
    if R is None:
        R = random_unitary(rng, Nrf)
    return U @ R


def round_to_feasible(U):
    """Nearest selection matrix to ``U`` in Frobenius norm.

    Each row keeps only its largest-magnitude entry (ties to the smallest
    column index), rescaled to unit modulus. Rows that are numerically zero
    are sent to the first column.
    """
    U = np.asarray(U)
    mag = np.abs(U)
    j = np.argmax(mag, axis=1)  # first maximum wins ties
    rows = np.arange(U.shape[0])
    peak = U[rows, j]
    F = np.zeros_like(U, dtype=complex)
    dead = mag[rows, j] < 1e-12
    F[rows, j] = np.where(dead, 1.0, peak / np.where(dead, 1.0, mag[rows, j]))
    if np.any(dead):
        F[dead] = 0.0
        F[dead, 0] = 1.0
    return F


def procrustes_rotation(F, U_A):
    """Unitary ``R`` minimizing ``||F - U_A R||_F``."""
    Z = np.asarray(F).conj().T @ np.asarray(U_A)
    Uz, _, Vzh = np.linalg.svd(Z)
    return Vzh.conj().T @ Uz.conj().T


def repair_empty_columns(F, U):
    """Give every empty column of selection matrix ``F`` one antenna.

    For an empty column ``j`` the row that ranked ``j`` second with the
    largest magnitude ``|U_ij|`` moves to ``j``. Rows are only taken from
    columns that keep at least one antenna.
    """
    F = np.array(F, dtype=complex)
    mag = np.abs(U)
    Nrf = F.shape[1]
    while True:
        counts = (np.abs(F) > 0).sum(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return F
        j = empty[0]
        owner = np.argmax(np.abs(F) > 0, axis=1)
        donor_ok = counts[owner] > 1
        order = np.argsort(-mag, axis=1, kind="stable")
        second = order[:, 1] if Nrf > 1 else order[:, 0]
        pick = donor_ok & (second == j)
        if not np.any(pick):
            pick = donor_ok
        cand = np.flatnonzero(pick)
        i = cand[np.argmax(mag[cand, j])]
        val = U[i, j]
        F[i] = 0.0
        F[i, j] = val / abs(val) if abs(val) > 1e-12 else 1.0


@dataclass
class SubarrayDesign:
    F_bar: np.ndarray
    partition: Partition
    residual_trace: list
    gain: float
    traces: list = field(default_factory=list)


def _single_run(A_t, Nrf, rng, tol, max_iter, R=None):
    U = principal_subspace(A_t, Nrf, rng)
    if R is None:
        R = random_unitary(rng, Nrf)
    trace = []
    prev = None
    for _ in range(max_iter):
        F = round_to_feasible(U @ R)
        R = procrustes_rotation(F, U)
        res = float(np.linalg.norm(F - U @ R) ** 2)
        trace.append(res)
        if prev is not None and prev - res <= tol * max(prev, 1e-300):
            break
        prev = res
    F = round_to_feasible(U @ R)
    F = repair_empty_columns(F, U @ R)
    return F, trace


def algorithm1(A_t, Nrf, rng, restarts=8, tol=1e-8, max_iter=200):
    """Dynamic subarray design by alternating rounding and Procrustes steps.

    Parameters
    ----------
    A_t : ndarray, shape (Nt, L)
        Stacked transmit steering vectors (or any matrix whose column space
        should be captured, e.g. ``H^H`` for instantaneous CSI).
    Nrf : int
        Number of RF chains.
    rng : numpy.random.Generator
        Source of the random initial rotations.
    restarts : int
        Independent runs; the one with the largest ``||A_t^H F_bar||_F^2`` wins.
    tol : float
        Stop once the relative residual decrease falls below ``tol``.
    max_iter : int

    Returns
    -------
    SubarrayDesign
        Whitened analog precoder, partition, the residual trace
        ``||F - U_A R||_F^2`` of the winning run and the traces of all runs.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    A_t = np.asarray(A_t)
    if not 1 <= Nrf <= A_t.shape[0]:
        raise ValueError(f"Nrf={Nrf} must lie in [1, {A_t.shape[0]}]")
    best = None
    traces = []
    for _ in range(restarts):
        F, trace = _single_run(A_t, Nrf, rng, tol, max_iter)
        traces.append(trace)
        part = Partition.from_selection(F)
        F_bar = F / np.sqrt(part.sizes)[None, :]
        gain = effective_gain(F_bar, A_t)
        if best is None or gain > best.gain:
            best = SubarrayDesign(F_bar, part, trace, gain)
    best.traces = traces
    return best


def set_partitions(n, k):
    """Yield every partition of ``range(n)`` into ``k`` nonempty blocks."""
    # Restricted growth strings: a[i] <= 1 + max(a[:i]).
    a = [0] * n

    def rec(i, used):
        if n - i < k - used:
            return
        if i == n:
            if used == k:
                blocks = [[] for _ in range(k)]
                for idx, b in enumerate(a):
                    blocks[b].append(idx)
                yield tuple(tuple(b) for b in blocks)
            return
        for b in range(min(used + 1, k)):
            a[i] = b
            yield from rec(i + 1, max(used, b + 1))

    yield from rec(0, 0)


def best_phases(A_sub, rng, restarts=16, max_iter=200, tol=1e-12):
    """Maximize ``||A_sub^H f||^2`` over unit-modulus vectors ``f``.

    Alternates ``w = A_sub^H f / ||.||`` and ``f = exp(j*angle(A_sub w))``,
    which never decreases the objective. The first start follows the
    principal left singular vector; the rest are random phases.
    """
    n = A_sub.shape[0]
    if n == 1:
        return np.ones(1, dtype=complex), float(np.sum(np.abs(A_sub) ** 2))
    U, _, _ = np.linalg.svd(A_sub, full_matrices=False)
    starts = [np.exp(1j * np.angle(U[:, 0]))]
    starts += [np.exp(2j * np.pi * rng.random(n)) for _ in range(restarts - 1)]
    best_f, best_val = None, -np.inf
    for f in starts:
        val = np.sum(np.abs(A_sub.conj().T @ f) ** 2)
        for _ in range(max_iter):
            w = A_sub.conj().T @ f
            v = A_sub @ w
            f = np.exp(1j * np.angle(np.where(np.abs(v) > 1e-15, v, 1.0)))
            new = np.sum(np.abs(A_sub.conj().T @ f) ** 2)
            if new - val <= tol * max(val, 1e-300):
                val = max(val, new)
                break
            val = new
        if val > best_val:
            best_f, best_val = f, float(val)
    return best_f, best_val


def exhaustive_oracle(A_t, Nrf, rng, restarts=16, max_partitions=10 ** 5):
    """Best partition by enumerating every split into ``Nrf`` nonempty sets.

    Each candidate's phases are optimized column by column with
    :func:`best_phases`; per-set results are cached because the same antenna
    set recurs across many partitions.

    Returns
    -------
    partition : Partition
    gain : float
        ``tr(F_bar^H A_t A_t^H F_bar)`` at the best partition.
    visited : int
        Number of partitions enumerated.
    """
    A_t = np.asarray(A_t)
    Nt = A_t.shape[0]
    count = stirling_count(Nt, Nrf)
    if count > max_partitions:
        raise TooLarge(f"S({Nt},{Nrf}) = {count} partitions exceeds {max_partitions}")
    cache = {}

    def set_gain(s):
        if s not in cache:
            _, val = best_phases(A_t[list(s)], rng, restarts)
            cache[s] = val / len(s)
        return cache[s]

    best_part, best_gain, visited = None, -np.inf, 0
    for sets in set_partitions(Nt, Nrf):
        visited += 1
        g = sum(set_gain(s) for s in sets)
        if g > best_gain + 1e-15:
            best_part, best_gain = sets, g
    return Partition(best_part, Nt), float(best_gain), visited


def fixed_partition(Nt, Nrf):
    """Contiguous blocks of ``Nt / Nrf`` antennas per RF chain."""
    if Nt % Nrf:
        raise NotDivisible(f"{Nrf} RF chains cannot split {Nt} antennas evenly")
    q = Nt // Nrf
    return Partition(tuple(tuple(range(j * q, (j + 1) * q)) for j in range(Nrf)), Nt)


def phases_for_partition(A_t, partition, rng, restarts=16):
    """Per-column phases maximizing the effective gain on a fixed support.

    Returns an ``(Nt, Nrf)`` phase matrix, zero off the support, and the
    whitened analog precoder it induces.
    """
    A_t = np.asarray(A_t)
    Phi = np.zeros((partition.Nt, partition.Nrf))
    for j, s in enumerate(partition.sets):
        f, _ = best_phases(A_t[list(s)], rng, restarts)
        Phi[list(s), j] = np.angle(f)
    return Phi, analog_precoder(partition, Phi)
