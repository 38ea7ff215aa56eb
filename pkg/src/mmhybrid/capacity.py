"""Constellation-constrained mutual information and its closed-form surrogates.

All information quantities are in bits. Exponentials are handled in natural
log-domain with explicit ``1/ln 2`` conversion, and every sum over candidate
symbols goes through a log-sum-exp.

The estimators take the end-to-end precoder either as a
:class:`HybridPrecoder` or as a plain ``(Nt, Ns)`` matrix, since every
quantity here only sees the product ``F_bar @ B_bar``.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .channel import assemble_channel, sample_gains
from .errors import BudgetExceeded, DimensionMismatch, InvalidNoise
from .rng import complex_normal
from .subarray import Partition, analog_precoder

LN2 = np.log(2.0)

# Largest K for which lower_bound keeps the dense K x K log-det table.
DENSE_PAIR_LIMIT = 2 ** 13


def jensen_gap(Nr):
    """Constant offset ``Nr * (1/ln 2 - 1)`` between the bounds and the MI."""
    return Nr * (1.0 / LN2 - 1.0)


@dataclass(frozen=True, eq=False)
class HybridPrecoder:
    """Partially-connected hybrid precoder in whitened coordinates.

    Attributes
    ----------
    partition : Partition
    Phi : ndarray, shape (Nt, Nrf)
        Phase of every analog weight, zero off the partition support.
    F_bar : ndarray, shape (Nt, Nrf)
        ``|S_j|^{-1/2} exp(j Phi_ij)`` on the support, zero elsewhere.
    B_bar : ndarray, shape (Nrf, Ns)
    P : float
        Transmit power budget.
    """

    partition: Partition
    Phi: np.ndarray
    F_bar: np.ndarray
    B_bar: np.ndarray
    P: float

    @classmethod
    def from_phases(cls, partition, Phi, B_bar, P=1.0):
        Phi = np.where(partition.mask(), np.asarray(Phi, dtype=float), 0.0)
        F_bar = analog_precoder(partition, Phi)
        B_bar = np.asarray(B_bar, dtype=complex)
        if B_bar.shape[0] != partition.Nrf:
            raise DimensionMismatch(
                f"B_bar has {B_bar.shape[0]} rows for {partition.Nrf} RF chains")
        return cls(partition, Phi, F_bar, B_bar, float(P))

    @classmethod
    def from_analog(cls, F_bar, B_bar, P=1.0):
        """Build from an analog matrix already in the feasible set."""
        F_bar = np.asarray(F_bar, dtype=complex)
        part = Partition.from_selection(F_bar)
        return cls.from_phases(part, np.angle(F_bar), B_bar, P)

    @property
    def product(self):
        return self.F_bar @ self.B_bar

    @property
    def power(self):
        return float(np.real(np.vdot(self.B_bar, self.B_bar)))

    def raw(self):
        """Unwhitened ``(F, B)`` with unit-modulus analog entries."""
        root = np.sqrt(self.partition.sizes)
        return self.F_bar * root[None, :], self.B_bar / root[:, None]


@dataclass(frozen=True)
class MiEstimate:
    value: float
    stderr: float
    n_noise: int
    n_channel: int


class BoundKind(Enum):
    LowerBound = "lower_bound"
    LowerBoundApprox = "lower_bound_approx"


@dataclass(frozen=True)
class BoundValue:
    value: float
    kind: BoundKind

    def shifted(self, Nr):
        """Bound plus the constant Jensen gap; comparable to the MI itself."""
        return self.value + jensen_gap(Nr)


def _product(precoder):
    if isinstance(precoder, HybridPrecoder):
        return precoder.product
    return np.asarray(precoder, dtype=complex)


def _check_noise(sigma2):
    if not np.isfinite(sigma2) or sigma2 <= 0:
        raise InvalidNoise(f"noise variance must be positive, got {sigma2!r}")


def _row_blocks(K, per_row, budget=4_000_000):
    step = max(1, int(budget // max(per_row, 1)))
    for start in range(0, K, step):
        yield slice(start, min(start + step, K))


def pair_distances(V, z, sigma2, rows):
    """Normalized distance gaps ``d_mk`` for the symbols in ``rows``.

    ``d[s, i, k] = (||v_m - v_k + n||^2 - ||n||^2) / sigma2`` with
    ``m = rows[i]`` and ``n = sigma * z[s, m]``. Shape (n_noise, len(rows), K).
    """
    sigma = np.sqrt(sigma2)
    n_noise = z.shape[0]
    rows = np.arange(V.shape[1])[rows]
    diff = V[:, rows, None] - V[:, None, :]
    energy = np.sum(diff.real ** 2 + diff.imag ** 2, axis=0) / sigma2     # (b, K)
    Zb = z[:, rows, :]                                                     # (n, b, Nr)
    C = (V.conj().T @ Zb.reshape(-1, V.shape[0]).T).real                   # (K, n*b)
    C = C.reshape(V.shape[1], n_noise, rows.size)
    own = C[rows, :, np.arange(rows.size)]                                 # (b, n)
    cross = own.T[:, :, None] - np.transpose(C, (1, 2, 0))                 # (n, b, K)
    return energy[None, :, :] + (2.0 / sigma) * cross


def _noise_samples(V, z, sigma2):
    """Per-noise-draw MI samples for noiseless outputs ``V`` (Nr x K).

    ``z`` holds standard CN(0, 1) draws of shape (n_noise, K, Nr); draw
    ``z[s, m]`` perturbs the output of symbol ``m``. Returns an array of
    length n_noise whose mean estimates the instantaneous MI.
    """
    K = V.shape[1]
    n_noise = z.shape[0]
    acc = np.zeros(n_noise)
    for rows in _row_blocks(K, n_noise * K * 4):
        lse = logsumexp(-pair_distances(V, z, sigma2, rows), axis=2)    # (n_noise, b)
        acc += np.sum(lse - np.log(K), axis=1)
    return -acc / (K * LN2)


def _mi_from_samples(samples):
    n = samples.size
    stderr = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return float(np.mean(samples)), stderr


def instantaneous_mi(rng, H, precoder, signals, sigma2, n_noise=200):
    """Monte Carlo mutual information for one channel matrix.

    Parameters
    ----------
    rng : numpy.random.Generator
    H : ndarray, shape (Nr, Nt)
        Channel, or an already-reduced effective channel when ``precoder`` is
        a digital-only matrix of matching width.
    precoder : HybridPrecoder or ndarray
    signals : SignalSet
    sigma2 : float
    n_noise : int
        Noise draws per transmitted symbol.

    Returns
    -------
    MiEstimate
    """
    _check_noise(sigma2)
    if n_noise < 1:
        raise ValueError("n_noise must be at least 1")
    V = np.asarray(H) @ _product(precoder) @ signals.X
    z = complex_normal(rng, (n_noise, signals.K, V.shape[0]))
    value, stderr = _mi_from_samples(_noise_samples(V, z, sigma2))
    return MiEstimate(value, stderr, n_noise, 1)


def average_mi(rng, csi, precoder, signals, sigma2, n_channel=300, n_noise=200):
    """Monte Carlo average MI over fresh channel and noise draws.

    The per-channel estimates are i.i.d., so their spread captures both the
    channel and the noise sampling stages.
    """
    _check_noise(sigma2)
    if n_channel < 1 or n_noise < 1:
        raise ValueError("sample counts must be positive")
    PX = _product(precoder) @ signals.X
    per_channel = np.empty(n_channel)
    noise_se = np.empty(n_channel)
    for c in range(n_channel):
        H = assemble_channel(csi, sample_gains(rng, csi)).H
        z = complex_normal(rng, (n_noise, signals.K, csi.Nr))
        per_channel[c], noise_se[c] = _mi_from_samples(_noise_samples(H @ PX, z, sigma2))
    if n_channel == 1:
        return MiEstimate(float(per_channel[0]), float(noise_se[0]), n_noise, 1)
    value, stderr = _mi_from_samples(per_channel)
    return MiEstimate(value, stderr, n_noise, n_channel)


def _bound_scale(csi, sigma2):
    return csi.Nr * csi.Nt / (2.0 * sigma2 * csi.L)


def _bound_from_lse(K, Nr, lse_rows):
    """``log2 K - gap - (1/K) sum_m log2 sum_k exp(.)`` given per-row lse."""
    return -jensen_gap(Nr) - float(np.sum(lse_rows - np.log(K))) / (K * LN2)


def _logdet_hpd(M):
    """Batched log-determinant of Hermitian positive-definite matrices."""
    try:
        C = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        _, ld = np.linalg.slogdet(M)
        return ld.real
    diag = np.diagonal(C, axis1=-2, axis2=-1).real
    return 2.0 * np.sum(np.log(diag), axis=-1)


def pair_logdet(csi, U, c, pairs_m, pairs_k):
    """``log det(I + (A_r^H A_r)^T o W_mk)`` for the listed pairs.

    ``U = A_t^H F_bar B_bar X`` (L x K); ``W_mk = c * w w^H`` with
    ``w = U[:, m] - U[:, k]``.
    """
    GT = csi.receive_gram().T
    w = (U[:, pairs_m] - U[:, pairs_k]).T * np.sqrt(c)      # (n, L)
    M = GT[None, :, :] * (w[:, :, None] * w.conj()[:, None, :])
    M = M + np.eye(csi.L)[None, :, :]
    return _logdet_hpd(M)


def lower_bound(csi, precoder, signals, sigma2):
    """Closed-form lower bound on the average MI (bits).

    Symmetric pairs share one determinant and the diagonal terms are exactly
    one, so only the ``K(K-1)/2`` pairs with ``m < k`` are factorized.
    """
    _check_noise(sigma2)
    K = signals.K
    if K > DENSE_PAIR_LIMIT:
        raise BudgetExceeded(f"lower_bound needs a dense {K}x{K} table; use lower_bound_approx")
    U = csi.A_t.conj().T @ _product(precoder) @ signals.X
    c = _bound_scale(csi, sigma2)
    iu, ju = np.triu_indices(K, k=1)
    table = np.zeros((K, K))
    chunk = max(1, 2_000_000 // (csi.L * csi.L))
    for start in range(0, iu.size, chunk):
        sl = slice(start, start + chunk)
        ld = pair_logdet(csi, U, c, iu[sl], ju[sl])
        table[iu[sl], ju[sl]] = ld
        table[ju[sl], iu[sl]] = ld
    lse = logsumexp(-table, axis=1)
    return BoundValue(_bound_from_lse(K, csi.Nr, lse), BoundKind.LowerBound)


def _approx_rows(U, c, rows):
    """Per-path ``log1p(c |beta_mkl|^2)`` for a block of rows, shape (L, b, K)."""
    beta = U[:, rows, None] - U[:, None, :]
    return np.log1p(c * (beta.real ** 2 + beta.imag ** 2)), beta


def lower_bound_approx(csi, precoder, signals, sigma2):
    """Low-complexity approximation of :func:`lower_bound`.

    Replaces the receive Gram matrix by the identity, which turns each
    determinant into a product over paths.
    """
    _check_noise(sigma2)
    K = signals.K
    U = csi.A_t.conj().T @ _product(precoder) @ signals.X
    c = _bound_scale(csi, sigma2)
    total = 0.0
    for rows in _row_blocks(K, K * csi.L):
        logs, _ = _approx_rows(U, c, rows)
        lse = logsumexp(-np.sum(logs, axis=0), axis=1)
        total += float(np.sum(lse - np.log(K)))
    return BoundValue(-jensen_gap(csi.Nr) - total / (K * LN2), BoundKind.LowerBoundApprox)


def approx_value_and_gradient(csi, product, signals, sigma2):
    """Value of the approximate bound and its gradient in the product ``F_bar B_bar``.

    Returns ``(value, G)`` where ``G = sum_l a_l a_l^H P E_l`` so that
    ``dL = 2 Re tr(G^H dP)``.
    """
    _check_noise(sigma2)
    X = signals.X
    K = signals.K
    Ns = X.shape[0]
    L = csi.L
    AhP = csi.A_t.conj().T @ product           # (L, Ns)
    U = AhP @ X
    c = _bound_scale(csi, sigma2)
    total = 0.0
    weight_sum = np.zeros((L, K))               # row + column sums of zeta
    Q = np.zeros((L, Ns, Ns), dtype=complex)    # X Z_l X^H
    for rows in _row_blocks(K, K * L * 3):
        logs, beta = _approx_rows(U, c, rows)
        logs_sum = -np.sum(logs, axis=0)            # (b, K)
        lse = logsumexp(logs_sum, axis=1)
        total += float(np.sum(lse - np.log(K)))
        soft = np.exp(logs_sum - lse[:, None])      # (b, K)
        zeta = soft[None, :, :] * (c / (1.0 + c * (beta.real ** 2 + beta.imag ** 2)))
        weight_sum[:, rows] += zeta.sum(axis=2)
        weight_sum += zeta.sum(axis=1)
        Q += np.einsum("sm,lmk,tk->lst", X[:, rows], zeta, X.conj())
    E = np.einsum("sk,lk,tk->lst", X, weight_sum, X.conj()) - Q - np.conj(np.swapaxes(Q, 1, 2))
    E /= LN2 * K
    Rm = np.einsum("ls,lst->lt", AhP, E)        # row l: a_l^H P E_l
    G = csi.A_t @ Rm
    value = -jensen_gap(csi.Nr) - total / (K * LN2)
    return value, G


def chain_to_hybrid(G, F_bar, B_bar, mask=None):
    """Map a gradient in the product ``F_bar B_bar`` to ``(grad_Phi, grad_B)``.

    ``grad_Phi`` is the ordinary real gradient in the phases; ``grad_B`` is
    the conjugate (Wirtinger) gradient, so ``dR = 2 Re tr(grad_B^H dB)``.
    """
    grad_B = F_bar.conj().T @ G
    grad_Phi = 2.0 * np.imag(np.conj(F_bar) * (G @ B_bar.conj().T))
    if mask is not None:
        grad_Phi = np.where(mask, grad_Phi, 0.0)
    return grad_Phi, grad_B


def gradient_LA(csi, precoder, signals, sigma2):
    """Gradients of the approximate bound in the phases and the digital precoder.

    Returns
    -------
    grad_Phi : ndarray, shape (Nt, Nrf)
        Real gradient; zero off the partition support.
    grad_B : ndarray, shape (Nrf, Ns)
        Conjugate gradient, ``dR = 2 Re tr(grad_B^H dB_bar)``.
    """
    _, G = approx_value_and_gradient(csi, precoder.product, signals, sigma2)
    return chain_to_hybrid(G, precoder.F_bar, precoder.B_bar, precoder.partition.mask())


def pairwise_det_term(csi, precoder, signals, sigma2, m, k):
    """Closed-form ``det[I + (A_r^H A_r)^T o W_mk]^{-1}`` for one pair."""
    _check_noise(sigma2)
    U = csi.A_t.conj().T @ _product(precoder) @ signals.X
    ld = pair_logdet(csi, U, _bound_scale(csi, sigma2), np.array([m]), np.array([k]))
    return float(np.exp(-ld[0]))


def pairwise_exponent_oracle(rng, csi, precoder, signals, sigma2, m, k, n_samples=20000):
    """Monte Carlo value of the per-pair expectation behind the closed-form bound.

    Estimates ``2^Nr * E_{Gamma, n} exp(-||e_mk + n||^2 / sigma2)`` with
    ``e_mk = H F_bar B_bar (x_m - x_k)`` and ``n ~ CN(0, sigma2 I)``. The noise
    integral is sampled from the narrower density CN(0, sigma2/2 I), under
    which the importance weight is ``2^{-Nr} exp(||n||^2 / sigma2)`` and each
    sample reduces to ``exp(-(||e + n||^2 - ||n||^2) / sigma2)``. The ``m == k``
    samples are therefore exactly one.

    Returns
    -------
    (mean, stderr) : tuple of float
    """
    _check_noise(sigma2)
    delta = signals.vectors[m] - signals.vectors[k]
    beta = csi.A_t.conj().T @ (_product(precoder) @ delta)          # (L,)
    gains = sample_gains(rng, csi, n_samples)                        # (n, L)
    e = csi.scale * (gains * beta[None, :]) @ csi.A_r.T              # (n, Nr)
    n = complex_normal(rng, (n_samples, csi.Nr), variance=sigma2 / 2.0)
    expo = (np.sum(np.abs(e + n) ** 2, axis=1) - np.sum(np.abs(n) ** 2, axis=1)) / sigma2
    vals = np.exp(-expo)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))


def mixed_csi_objective(rng, csi, F_bar, signals, sigma2, n_channel=50, P=1.0,
                        n_noise=200, solver_options=None, channels=None):
    """Average MI when the digital precoder adapts to each effective channel.

    For every sampled channel the digital-only problem on ``H F_bar`` is
    solved and the achieved MI is re-estimated with fresh noise. Passing
    ``channels`` (an iterable of ``Nr x Nt`` matrices) replaces the internal
    channel sampling, which lets paired comparisons share realizations.
    """
    from .optimizer import digital_only_solve

    _check_noise(sigma2)
    opts = dict(solver_options or {})
    if channels is None:
        channels = (assemble_channel(csi, sample_gains(rng, csi)).H for _ in range(n_channel))
    vals = []
    for H in channels:
        H_eff = np.asarray(H) @ F_bar
        B = digital_only_solve(H_eff, signals, sigma2, P, rng, **opts).B_bar
        vals.append(instantaneous_mi(rng, H_eff, B, signals, sigma2, n_noise).value)
    vals = np.asarray(vals)
    if vals.size == 1:
        return MiEstimate(float(vals[0]), float("nan"), n_noise, 1)
    value, stderr = _mi_from_samples(vals)
    return MiEstimate(value, stderr, n_noise, vals.size)


__all__ = [
    "HybridPrecoder", "MiEstimate", "BoundKind", "BoundValue", "jensen_gap",
    "instantaneous_mi", "average_mi", "lower_bound", "lower_bound_approx",
    "approx_value_and_gradient", "chain_to_hybrid", "gradient_LA",
    "pairwise_det_term", "pairwise_exponent_oracle", "mixed_csi_objective",
]
