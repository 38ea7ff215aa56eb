"""Gradient ascent for hybrid precoders on the power sphere.

The digital precoder lives on ``{B : tr(B^H B) = P}``; each step moves along
the tangent-space projection of the gradient and retracts by rescaling. The
analog phases are unconstrained reals. Stepsizes come from a backtracking
search that starts from the previous stepsize and doubles or halves it.
"""
import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .capacity import (LN2, HybridPrecoder, _row_blocks, approx_value_and_gradient,
                       chain_to_hybrid, lower_bound_approx, pair_distances)
from .errors import InvalidNoise, NotDivisible, SearchStalled, ZeroMatrix
from .rng import complex_normal
from .subarray import Partition, analog_precoder

MAX_DOUBLINGS = 30
MAX_HALVINGS = 60


class Termination(Enum):
    GradientTolerance = "gradient_tolerance"
    MaxIter = "max_iter"
    SearchStalled = "search_stalled"


@dataclass
class AscentState:
    Phi: np.ndarray
    B_bar: np.ndarray
    rho: float
    objective: float
    grad_norms: tuple = (0.0, 0.0)


@dataclass
class AscentReport:
    iterations: int
    objective_trace: list
    precoder: object
    terminated_by: Termination
    grad_phi_trace: list = field(default_factory=list)
    grad_b_trace: list = field(default_factory=list)
    rho_trace: list = field(default_factory=list)
    half_step_trace: list = field(default_factory=list)

    @property
    def objective(self):
        return self.objective_trace[-1]

    @property
    def monotone_violations(self):
        tr = np.asarray(self.half_step_trace or self.objective_trace)
        return int(np.sum(np.diff(tr) < 0))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "grad_phi_sq", "grad_b_sq", "rho"])
            for i, obj in enumerate(self.objective_trace):
                gp = self.grad_phi_trace[i] if i < len(self.grad_phi_trace) else ""
                gb = self.grad_b_trace[i] if i < len(self.grad_b_trace) else ""
                rho = self.rho_trace[i] if i < len(self.rho_trace) else ""
                w.writerow([i, repr(float(obj)), gp, gb, rho])


def project_sphere(B, P):
    """Rescale ``B`` onto ``tr(B^H B) = P``."""
    B = np.asarray(B)
    nrm = np.linalg.norm(B)
    if nrm < 1e-15:
        raise ZeroMatrix("cannot project a zero matrix onto the power sphere")
    return B * (np.sqrt(P) / nrm)


def riemannian_gradient(grad_B, B, P):
    """Project ``grad_B`` onto the tangent space of the power sphere at ``B``."""
    coef = np.real(np.vdot(grad_B, B)) / P
    return grad_B - coef * B


def line_search(f, rho_prev, max_doublings=MAX_DOUBLINGS, max_halvings=MAX_HALVINGS):
    """Stepsize from the doubling/halving rule.

    ``f(rho)`` is the sufficient-increase margin. If ``f(rho_prev) >= 0`` the
    step is doubled until the margin turns negative and the last
    non-negative step is returned; otherwise it is halved until the margin
    is non-negative.

    Raises
    ------
    SearchStalled
        No acceptable step after ``max_halvings`` halvings.
    """
    if rho_prev <= 0:
        raise ValueError("previous stepsize must be positive")
    rho = rho_prev
    if f(rho) >= 0:
        for _ in range(max_doublings):
            if f(2.0 * rho) < 0:
                return rho
            rho *= 2.0
        return rho
    for _ in range(max_halvings):
        rho *= 0.5
        if f(rho) >= 0:
            return rho
    raise SearchStalled(f"no ascent step found down to rho={rho:.3e}")


class ApproxBoundObjective:
    """Approximate average-MI bound as a function of phases and digital precoder."""

    def __init__(self, csi, partition, signals, sigma2):
        if sigma2 <= 0:
            raise InvalidNoise(f"noise variance must be positive, got {sigma2!r}")
        self.csi, self.partition, self.signals, self.sigma2 = csi, partition, signals, sigma2
        self.mask = partition.mask()

    def analog(self, Phi):
        return analog_precoder(self.partition, Phi)

    def value(self, Phi, B):
        return lower_bound_approx(self.csi, self.analog(Phi) @ B, self.signals, self.sigma2).value

    def value_grad(self, Phi, B):
        F = self.analog(Phi)
        val, G = approx_value_and_gradient(self.csi, F @ B, self.signals, self.sigma2)
        gPhi, gB = chain_to_hybrid(G, F, B, self.mask)
        return val, gPhi, gB

    def resample(self, k):
        pass


class UnconstrainedBoundObjective:
    """Approximate bound over the full ``Nt x Ns`` precoder (no analog stage)."""

    def __init__(self, csi, signals, sigma2):
        self.csi, self.signals, self.sigma2 = csi, signals, sigma2

    def value(self, Phi, B):
        return lower_bound_approx(self.csi, B, self.signals, self.sigma2).value

    def value_grad(self, Phi, B):
        val, G = approx_value_and_gradient(self.csi, B, self.signals, self.sigma2)
        return val, np.zeros_like(Phi), G

    def resample(self, k):
        pass


def mmse_terms(V, z, sigma2, X):
    """MI samples and the MMSE matrix for noiseless outputs ``V = H P X``.

    Returns ``(mi, E)`` where ``mi`` is the sample-average MI in bits and
    ``E`` estimates ``E[(x - E[x|y])(x - E[x|y])^H]``.
    """
    K = V.shape[1]
    n = z.shape[0]
    total = 0.0
    Emse = np.zeros((X.shape[0], X.shape[0]), dtype=complex)
    for rows in _row_blocks(K, n * K * 4):
        d = pair_distances(V, z, sigma2, rows)
        lse = logsumexp(-d, axis=2)                              # (n, b)
        total += float(np.sum(lse - np.log(K)))
        w = np.exp(-d - lse[:, :, None])                         # posterior over k
        err = X.T[None, rows, :] - w @ X.T                       # (n, b, Ns)
        Emse += np.einsum("sma,smb->ab", err, err.conj())
    return -total / (n * K * LN2), Emse / (n * K)


class InstantaneousMiObjective:
    """Monte Carlo mutual information for a known channel.

    With a partition the variables are analog phases plus the digital
    precoder; without one ``H`` is taken as the effective channel and only
    the digital precoder is optimized. Noise is redrawn at the start of every
    iteration and held fixed across the line-search probes of that iteration.
    """

    def __init__(self, H, signals, sigma2, rng, partition=None, n_noise=200):
        if sigma2 <= 0:
            raise InvalidNoise(f"noise variance must be positive, got {sigma2!r}")
        self.H, self.signals, self.sigma2 = np.asarray(H), signals, sigma2
        self.partition = partition
        self.mask = partition.mask() if partition is not None else None
        self.rng, self.n_noise = rng, n_noise
        self.resample(0)

    def resample(self, k):
        self.z = complex_normal(self.rng, (self.n_noise, self.signals.K, self.H.shape[0]))

    def _analog(self, Phi):
        return None if self.partition is None else analog_precoder(self.partition, Phi)

    def _product(self, Phi, B):
        F = self._analog(Phi)
        return B if F is None else F @ B

    def value(self, Phi, B):
        V = self.H @ self._product(Phi, B) @ self.signals.X
        return mmse_terms(V, self.z, self.sigma2, self.signals.X)[0]

    def value_grad(self, Phi, B):
        Pm = self._product(Phi, B)
        V = self.H @ Pm @ self.signals.X
        val, Emse = mmse_terms(V, self.z, self.sigma2, self.signals.X)
        G = (self.H.conj().T @ self.H @ Pm @ Emse) / (self.sigma2 * LN2)
        F = self._analog(Phi)
        if F is None:
            return val, np.zeros_like(Phi), G
        gPhi, gB = chain_to_hybrid(G, F, B, self.mask)
        return val, gPhi, gB


def _ascend(objective, Phi0, B0, P, eps, max_iter, rho0, beta, blocks=("joint",),
            shared_rho=False):
    """Shared driver for joint and block-coordinate ascent.

    With ``shared_rho`` every line search starts from the last accepted
    stepsize regardless of block; otherwise each block keeps its own.
    """
    Phi = np.asarray(Phi0, dtype=float).copy()
    B = project_sphere(np.asarray(B0, dtype=complex), P)
    rhos = {b: rho0 for b in blocks}
    val, gPhi, gB = objective.value_grad(Phi, B)
    trace, half, gp_tr, gb_tr, rho_tr = [val], [val], [], [], []
    status = Termination.MaxIter
    it = 0
    for it in range(max_iter + 1):
        gradB = riemannian_gradient(gB, B, P)
        nP, nB = float(np.sum(gPhi ** 2)), float(np.real(np.vdot(gradB, gradB)))
        gp_tr.append(nP)
        gb_tr.append(nB)
        if nP + nB < eps:
            status = Termination.GradientTolerance
            break
        if it == max_iter:
            break
        try:
            for block in blocks:
                dPhi = gPhi if block in ("joint", "phi") else np.zeros_like(gPhi)
                dB = gradB if block in ("joint", "b") else np.zeros_like(gradB)
                gsq = (nP if block in ("joint", "phi") else 0.0) + \
                      (nB if block in ("joint", "b") else 0.0)
                if gsq == 0.0:
                    continue
                cache = {}

                def trial(rho, Phi=Phi, B=B, dPhi=dPhi, dB=dB, cache=cache):
                    if rho not in cache:
                        P1 = Phi + rho * dPhi
                        B1 = project_sphere(B + rho * dB, P)
                        cache[rho] = (objective.value(P1, B1), P1, B1)
                    return cache[rho]

                base = val

                def margin(rho, base=base, gsq=gsq, trial=trial):
                    return trial(rho)[0] - base - rho * beta * gsq

                key = blocks[0] if shared_rho else block
                rho = line_search(margin, rhos[key])
                rhos[key] = rho
                val, Phi, B = trial(rho)
                half.append(val)
                if block != blocks[-1]:
                    val, gPhi, gB = objective.value_grad(Phi, B)
                    gradB = riemannian_gradient(gB, B, P)
                    nP = float(np.sum(gPhi ** 2))
                    nB = float(np.real(np.vdot(gradB, gradB)))
                rho_tr.append(rho)
        except SearchStalled:
            status = Termination.SearchStalled
            break
        objective.resample(it + 1)
        val, gPhi, gB = objective.value_grad(Phi, B)
        trace.append(val)
    return Phi, B, trace, half, gp_tr, gb_tr, rho_tr, status, len(trace) - 1


def _report(objective, P, out):
    Phi_f, B_f, trace, half, gp, gb, rho, status, iters = out
    part = getattr(objective, "partition", None)
    if part is not None:
        pre = HybridPrecoder.from_phases(part, Phi_f, B_f, P)
    else:
        pre = B_f
    return AscentReport(iters, trace, pre, status, gp, gb, rho, half)


def algorithm2(csi, partition, Phi0, B0, signals, sigma2, P=1.0, eps=1e-4,
               max_iter=500, rho0=2.0, beta=0.4, objective=None):
    """Joint manifold gradient ascent on the approximate bound.

    Parameters
    ----------
    csi : StatisticalCsi
    partition : Partition
    Phi0 : ndarray, shape (Nt, Nrf)
        Initial phases; entries off the partition support are ignored.
    B0 : ndarray, shape (Nrf, Ns)
        Initial digital precoder, rescaled onto the power sphere.
    signals : SignalSet
    sigma2 : float
    P : float
    eps : float
        Stop once ``||grad_Phi||^2 + ||grad_B||^2 < eps``.
    max_iter : int
    rho0, beta : float
        Initial stepsize and sufficient-increase constant.
    objective : optional
        Replacement objective exposing ``value``, ``value_grad`` and
        ``resample``; defaults to the approximate bound.

    Returns
    -------
    AscentReport
    """
    obj = objective if objective is not None else ApproxBoundObjective(csi, partition, signals, sigma2)
    Phi0 = np.where(partition.mask(), Phi0, 0.0)
    out = _ascend(obj, Phi0, B0, P, eps, max_iter, rho0, beta)
    return _report(obj, P, out)


def block_coordinate_ascent(csi, partition, Phi0, B0, signals, sigma2, P=1.0, eps=1e-4,
                            max_iter=5000, rho0=2.0, beta=0.4, objective=None,
                            shared_rho=False):
    """Alternate line-searched steps in the phases and in the digital precoder.

    One iteration is a phase step with ``B`` frozen followed by a digital
    step with the phases frozen. ``half_step_trace`` records the objective
    after every half step. By default each block remembers its own
    stepsize; ``shared_rho=True`` carries one stepsize across both.
    """
    obj = objective if objective is not None else ApproxBoundObjective(csi, partition, signals, sigma2)
    Phi0 = np.where(partition.mask(), Phi0, 0.0)
    out = _ascend(obj, Phi0, B0, P, eps, max_iter, rho0, beta, blocks=("phi", "b"),
                  shared_rho=shared_rho)
    return _report(obj, P, out)


def initial_digital(A_t, F_bar, Ns, P=1.0):
    """Right singular vectors of ``A_t^H F_bar`` (first ``Ns``), scaled to power ``P``."""
    M = np.asarray(A_t).conj().T @ np.asarray(F_bar)
    _, _, Vh = np.linalg.svd(M, full_matrices=True)
    return project_sphere(Vh.conj().T[:, :Ns], P)


def random_digital(rng, Nrf, Ns, P=1.0):
    """I.i.d. CN(0, 1) digital precoder normalized to power ``P``."""
    return project_sphere(complex_normal(rng, (Nrf, Ns)), P)


@dataclass
class DigitalSolution:
    B_bar: np.ndarray
    report: AscentReport


def digital_only_solve(H_eff, signals, sigma2, P, rng, B0=None, n_noise=200, eps=1e-4,
                       max_iter=100, rho0=2.0, beta=0.4):
    """Maximize the instantaneous MI over the digital precoder alone.

    The gradient is ``H^H H B E / (sigma2 ln 2)`` with ``E`` the Monte Carlo
    MMSE matrix. The starting point defaults to the dominant right singular
    vectors of ``H_eff`` at full power.
    """
    if sigma2 <= 0:
        raise InvalidNoise(f"noise variance must be positive, got {sigma2!r}")
    H_eff = np.asarray(H_eff)
    Ns = signals.n_streams
    if B0 is None:
        _, _, Vh = np.linalg.svd(H_eff, full_matrices=True)
        B0 = Vh.conj().T[:, :Ns]
    obj = InstantaneousMiObjective(H_eff, signals, sigma2, rng, n_noise=n_noise)
    out = _ascend(obj, np.zeros((0,)), B0, P, eps, max_iter, rho0, beta)
    report = _report(obj, P, out)
    return DigitalSolution(report.precoder, report)


def instantaneous_hybrid(H, Nrf, signals, sigma2, P, rng, restarts=8, n_noise=200,
                         eps=1e-4, max_iter=100):
    """Hybrid design from a known channel: subarrays on ``H^H``, then MI ascent."""
    from .subarray import algorithm1

    design = algorithm1(np.asarray(H).conj().T, Nrf, rng, restarts=restarts)
    Ns = signals.n_streams
    _, _, Vh = np.linalg.svd(np.asarray(H) @ design.F_bar, full_matrices=True)
    B0 = Vh.conj().T[:, :Ns]
    obj = InstantaneousMiObjective(H, signals, sigma2, rng, partition=design.partition,
                                   n_noise=n_noise)
    Phi0 = np.angle(design.F_bar) * design.partition.mask()
    out = _ascend(obj, Phi0, B0, P, eps, max_iter, 2.0, 0.4)
    return _report(obj, P, out)


def unconstrained_ascent(csi, signals, sigma2, P=1.0, B0=None, rng=None, eps=1e-4,
                         max_iter=500, rho0=2.0, beta=0.4):
    """Projected gradient ascent on the approximate bound over a full precoder.

    Benchmark without analog constraints; the report's ``precoder`` is the
    ``Nt x Ns`` matrix.
    """
    if B0 is None:
        B0 = initial_digital(csi.A_t, np.eye(csi.Nt), signals.n_streams, P)
    obj = UnconstrainedBoundObjective(csi, signals, sigma2)
    out = _ascend(obj, np.zeros((0,)), B0, P, eps, max_iter, rho0, beta)
    return _report(obj, P, out)


def no_precoding_baseline(Nt, Nrf, Ns, P=1.0):
    """Equal contiguous blocks with zero phases and an identity digital stage."""
    if Nt % Nrf:
        raise NotDivisible(f"{Nrf} RF chains cannot split {Nt} antennas evenly")
    if Ns != Nrf:
        raise ValueError("the no-precoding baseline needs Ns == Nrf")
    q = Nt // Nrf
    part = Partition(tuple(tuple(range(j * q, (j + 1) * q)) for j in range(Nrf)), Nt)
    B = np.eye(Nrf, dtype=complex) * np.sqrt(P / Ns)
    return HybridPrecoder.from_phases(part, np.zeros((Nt, Nrf)), B, P)
