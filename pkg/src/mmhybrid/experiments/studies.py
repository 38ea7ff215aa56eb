"""Timing, initialization-robustness and exhaustive-oracle studies."""
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..capacity import HybridPrecoder, average_mi, lower_bound, lower_bound_approx
from ..constellation import build_signal_set
from ..optimizer import algorithm2, initial_digital, project_sphere, random_digital
from ..rng import make_rng
from ..subarray import algorithm1, effective_gain, exhaustive_oracle
from .config import load_scenario
from .runner import (S_CDF, S_DESIGN, S_EVAL, S_ORACLE, CurveWriter, scenario_csis)


def _scenario(s):
    return load_scenario(s) if isinstance(s, (str, Path)) else s


def _per_call(fn, min_total=0.2, batches=5):
    """Median seconds per call, batching fast calls to beat timer resolution."""
    t0 = time.perf_counter()
    fn()
    first = time.perf_counter() - t0
    reps = max(1, int(min_total / batches / max(first, 1e-7)))
    samples = []
    for _ in range(batches):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        samples.append((time.perf_counter() - t0) / reps)
    return float(np.median(samples)), float(np.std(samples))


@dataclass(frozen=True)
class TimingRow:
    snr_db: float
    t_mc: float
    t_lb: float
    t_lba: float

    @property
    def ordered(self):
        return self.t_mc > self.t_lb > self.t_lba


def timing_report(scenario, outdir=None, mc_batches=3):
    """Wall-clock seconds per evaluation of the MC MI and both bounds.

    The precoder is the dynamic-subarray analog stage with the digital
    stage taken from the scenario (identity or right singular vectors).
    One MC evaluation uses the scenario's ``n_channel x n_noise`` budget.
    """
    scen = _scenario(scenario)
    csi = scenario_csis(scen)[0]
    signals = build_signal_set(scen.modulation, scen.Ns)
    des = algorithm1(csi.A_t, scen.Nrf, make_rng(scen.seed, S_DESIGN, 0), restarts=scen.restarts)
    if scen.digital == "identity":
        B = project_sphere(np.eye(scen.Nrf, dtype=complex), scen.P)
    else:
        B = initial_digital(csi.A_t, des.F_bar, scen.Ns, scen.P)
    pre = HybridPrecoder.from_analog(des.F_bar, B, scen.P)
    rows, spread = [], []
    for snr, s2 in zip(scen.snr_grid_db, scen.sigma2_grid):
        s2 = float(s2)
        mc = _per_call(lambda: average_mi(make_rng(scen.seed, S_EVAL, 0), csi, pre, signals,
                                          s2, scen.n_channel, scen.n_noise),
                       min_total=0.0, batches=mc_batches)
        lb = _per_call(lambda: lower_bound(csi, pre, signals, s2))
        lba = _per_call(lambda: lower_bound_approx(csi, pre, signals, s2))
        rows.append(TimingRow(snr, mc[0], lb[0], lba[0]))
        spread.append((mc[1], lb[1], lba[1]))
    if outdir is not None:
        target = Path(outdir) / scen.name
        for i, curve in enumerate(("timing_mc", "timing_lb", "timing_lba")):
            w = CurveWriter(target / f"{curve}.csv")
            for r, sp in zip(rows, spread):
                w.row(r.snr_db, (r.t_mc, r.t_lb, r.t_lba)[i], sp[i])
            w.close()
    return rows


@dataclass(frozen=True)
class CdfResult:
    snr_db: float
    values: np.ndarray      # sorted final objectives (shifted approximate bound)
    iterations: np.ndarray

    @property
    def probabilities(self):
        n = self.values.size
        return np.arange(1, n + 1) / n

    @property
    def relative_spread(self):
        return float((self.values.max() - self.values.min()) / abs(self.values.mean()))


def cdf_study(scenario, n_inits, outdir=None, snr_db=None):
    """Final objectives of Algorithm-2 runs from random starting points.

    Each start takes the analog stage from a single randomly rotated
    subarray design and a Gaussian digital stage normalized to the power
    budget. Values are the approximate bound plus the Jensen gap so they are
    on the MI scale.
    """
    scen = _scenario(scenario)
    if n_inits < 1:
        raise ValueError("n_inits must be at least 1")
    if snr_db is None:
        snr_db = float(scen.extra.get("cdf_snr_db", scen.snr_grid_db[0]))
    sigma2 = scen.P / 10.0 ** (snr_db / 10.0)
    csi = scenario_csis(scen)[0]
    signals = build_signal_set(scen.modulation, scen.Ns)
    vals, iters = [], []
    for i in range(n_inits):
        des = algorithm1(csi.A_t, scen.Nrf, make_rng(scen.seed, S_CDF, i, 0), restarts=1)
        B0 = random_digital(make_rng(scen.seed, S_CDF, i, 1), scen.Nrf, scen.Ns, scen.P)
        rep = algorithm2(csi, des.partition, np.angle(des.F_bar), B0, signals, sigma2,
                         scen.P, scen.eps, scen.max_iter)
        vals.append(lower_bound_approx(csi, rep.precoder, signals, sigma2).shifted(scen.Nr))
        iters.append(rep.iterations)
    order = np.argsort(vals, kind="stable")
    res = CdfResult(snr_db, np.asarray(vals)[order], np.asarray(iters)[order])
    if outdir is not None:
        w = CurveWriter(Path(outdir) / scen.name / "cdf.csv")
        for v in res.values:
            w.row(snr_db, v, 0.0)
        w.close()
    return res


@dataclass(frozen=True)
class OracleResult:
    oracle_partition: object
    oracle_gain: float
    algorithm1_partition: object
    algorithm1_gain: float
    visited: int

    @property
    def ratio(self):
        return self.algorithm1_gain / self.oracle_gain if self.oracle_gain > 0 else 1.0


def oracle_study(scenario, outdir=None):
    """Compare the subarray design against exhaustive partition search."""
    scen = _scenario(scenario)
    csi = scenario_csis(scen)[0]
    part, gain, visited = exhaustive_oracle(csi.A_t, scen.Nrf, make_rng(scen.seed, S_ORACLE))
    des = algorithm1(csi.A_t, scen.Nrf, make_rng(scen.seed, S_DESIGN, 0), restarts=scen.restarts)
    res = OracleResult(part, gain, des.partition, effective_gain(des.F_bar, csi.A_t), visited)
    if outdir is not None:
        target = Path(outdir) / scen.name
        target.mkdir(parents=True, exist_ok=True)
        (target / "oracle_partition.txt").write_text(part.to_text())
        (target / "algorithm1_partition.txt").write_text(des.partition.to_text())
        (target / "oracle_summary.csv").write_text(
            "quantity,value\n"
            f"partitions_visited,{visited}\n"
            f"oracle_gain,{gain!r}\n"
            f"algorithm1_gain,{res.algorithm1_gain!r}\n"
            f"ratio,{res.ratio!r}\n")
    return res
