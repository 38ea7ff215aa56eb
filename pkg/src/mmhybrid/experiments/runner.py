"""Scenario orchestration: designs, sweeps and CSV curves.

Random streams are keyed by purpose and CSI draw but not by SNR point, so
every curve of a scenario sees the same channels and noise at every SNR.
"""
import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..capacity import (DENSE_PAIR_LIMIT, HybridPrecoder, average_mi, instantaneous_mi,
                        lower_bound, lower_bound_approx, mixed_csi_objective)
from ..channel import (assemble_channel, build_statistical_csi, sample_gains,
                       sample_path_angles)
from ..constellation import build_signal_set
from ..optimizer import (algorithm2, initial_digital, instantaneous_hybrid,
                         no_precoding_baseline, project_sphere, unconstrained_ascent)
from ..rng import make_rng
from ..subarray import algorithm1, fixed_partition, phases_for_partition
from .config import Mode, load_scenario
from .energy import EnergyModel, energy_efficiency

HEADER = ("snr_db", "value", "stderr")

# stream tags
S_ANGLES, S_DESIGN, S_EVAL, S_CHANNELS, S_SOLVER, S_CDF, S_ORACLE = range(1, 8)

_MODE_TAG = {m: i for i, m in enumerate(Mode)}


@dataclass
class Curve:
    name: str
    rows: list = field(default_factory=list)

    @property
    def snr(self):
        return np.array([r[0] for r in self.rows])

    @property
    def values(self):
        return np.array([r[1] for r in self.rows])

    @property
    def stderr(self):
        return np.array([r[2] for r in self.rows])


@dataclass
class RunResult:
    scenario: object
    curves: dict
    outdir: Path
    checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures and all(passed for _, passed, _ in self.checks)


class CurveWriter:
    """Append-only CSV for one curve, flushed after each row."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(HEADER)
        self._fh.flush()

    def row(self, snr, value, stderr):
        self._w.writerow([_fmt(snr), _fmt(value), _fmt(stderr)])
        self._fh.flush()

    def fail(self, snr, exc):
        self._w.writerow([_fmt(snr), "nan", "nan"])
        self._fh.write(f"# FAILED at snr_db={_fmt(snr)}: {type(exc).__name__}: {exc}\n")
        self._fh.flush()

    def close(self):
        self._fh.close()


def _fmt(x):
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def read_curve(path):
    """Rows of a curve CSV as an ``(n, 3)`` array; comment lines are skipped."""
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("snr_db"):
                continue
            rows.append([float(v) for v in line.strip().split(",")])
    return np.array(rows).reshape(-1, 3)


def scenario_csis(scen):
    """One statistical CSI per draw.

    Fixed angle sources give a single CSI. Sampled angles share one mean
    AoA per scenario (drawn once when ``mean_aoa = uniform``).
    """
    fixed = scen.fixed_angles()
    if fixed is not None:
        return [build_statistical_csi(fixed, scen.Nr, scen.Nt)]
    mean_aoa = scen.mean_aoa
    if mean_aoa == "uniform":
        mean_aoa = float(make_rng(scen.seed, S_ANGLES).uniform(0.0, 2 * np.pi))
    out = []
    for d in range(scen.csi_draws):
        ang = sample_path_angles(make_rng(scen.seed, S_ANGLES, d + 1), scen.L, mean_aoa,
                                 scen.mean_aod, scen.spread)
        out.append(build_statistical_csi(ang, scen.Nr, scen.Nt))
    return out


def _channels(scen, csi, d):
    rng = make_rng(scen.seed, S_CHANNELS, d)
    return [assemble_channel(csi, sample_gains(rng, csi)).H for _ in range(scen.n_channel)]


class _Pipeline:
    """Per-draw state shared across SNR points."""

    def __init__(self, scen, csi, d, signals):
        self.scen, self.csi, self.d, self.signals = scen, csi, d, signals
        self._design = None
        self._fixed = None
        self._chans = None
        self._stat = {}
        self.reports = {}

    @property
    def design(self):
        if self._design is None:
            s = self.scen
            self._design = algorithm1(self.csi.A_t, s.Nrf, make_rng(s.seed, S_DESIGN, self.d),
                                      restarts=s.restarts)
        return self._design

    @property
    def fixed(self):
        if self._fixed is None:
            s = self.scen
            part = fixed_partition(s.Nt, s.Nrf)
            Phi, F = phases_for_partition(self.csi.A_t, part, make_rng(s.seed, S_DESIGN, self.d, 1))
            self._fixed = (part, Phi, F)
        return self._fixed

    @property
    def channels(self):
        if self._chans is None:
            self._chans = _channels(self.scen, self.csi, self.d)
        return self._chans

    def _mi(self, precoder, sigma2):
        s = self.scen
        return average_mi(make_rng(s.seed, S_EVAL, self.d), self.csi, precoder, self.signals,
                          sigma2, s.n_channel, s.n_noise)

    def _bounds(self, precoder, sigma2, with_exact=False):
        out = {"lba": (lower_bound_approx(self.csi, precoder, self.signals, sigma2)
                       .shifted(self.scen.Nr), 0.0)}
        if with_exact and self.signals.K <= DENSE_PAIR_LIMIT:
            out["lb"] = (lower_bound(self.csi, precoder, self.signals, sigma2)
                         .shifted(self.scen.Nr), 0.0)
        return out

    def _ascend(self, partition, Phi0, F0, sigma2, key):
        s = self.scen
        B0 = initial_digital(self.csi.A_t, F0, s.Ns, s.P)
        rep = algorithm2(self.csi, partition, Phi0, B0, self.signals, sigma2, s.P, s.eps,
                         s.max_iter)
        self.reports[key] = rep
        return rep.precoder

    def statistical(self, sigma2):
        """Statistical-CSI hybrid design at one SNR, cached for the mixed mode."""
        key = (Mode.StatisticalCsi, sigma2)
        if key not in self._stat:
            s, des = self.scen, self.design
            if s.digital == "identity":
                self._stat[key] = HybridPrecoder.from_analog(
                    des.F_bar, project_sphere(np.eye(s.Nrf, dtype=complex), s.P), s.P)
            else:
                self._stat[key] = self._ascend(des.partition, np.angle(des.F_bar), des.F_bar,
                                               sigma2, key)
        return self._stat[key]

    def run(self, mode, sigma2):
        """Curve-suffix -> (value, stderr) for one SNR point."""
        s = self.scen
        if mode is Mode.StatisticalCsi:
            pre = self.statistical(sigma2)
            mi = self._mi(pre, sigma2)
            return {"mi": (mi.value, mi.stderr), **self._bounds(pre, sigma2, with_exact=True)}
        if mode is Mode.FixedSubarray:
            part, Phi, F = self.fixed
            pre = self._ascend(part, Phi, F, sigma2, (mode, sigma2))
            mi = self._mi(pre, sigma2)
            return {"mi": (mi.value, mi.stderr), **self._bounds(pre, sigma2)}
        if mode is Mode.NoPrecoding:
            pre = no_precoding_baseline(s.Nt, s.Nrf, s.Ns, s.P)
            mi = self._mi(pre, sigma2)
            return {"mi": (mi.value, mi.stderr), **self._bounds(pre, sigma2)}
        if mode is Mode.UnconstrainedBenchmark:
            rep = unconstrained_ascent(self.csi, self.signals, sigma2, s.P, eps=s.eps,
                                       max_iter=s.max_iter)
            self.reports[(mode, sigma2)] = rep
            mi = self._mi(rep.precoder, sigma2)
            return {"mi": (mi.value, mi.stderr), **self._bounds(rep.precoder, sigma2)}
        if mode is Mode.MixedCsi:
            stat = self.statistical(sigma2)
            opts = dict(max_iter=s.inner_max_iter, n_noise=s.inner_n_noise, eps=s.eps,
                        B0=stat.B_bar)
            mi = mixed_csi_objective(make_rng(s.seed, S_SOLVER, self.d, _MODE_TAG[mode]),
                                     self.csi, stat.F_bar, self.signals, sigma2,
                                     P=s.P, n_noise=s.n_noise, solver_options=opts,
                                     channels=self.channels)
            return {"mi": (mi.value, mi.stderr)}
        if mode is Mode.InstantaneousCsi:
            rng = make_rng(s.seed, S_SOLVER, self.d, _MODE_TAG[mode])
            vals = []
            for H in self.channels:
                rep = instantaneous_hybrid(H, s.Nrf, self.signals, sigma2, s.P, rng,
                                           restarts=s.restarts, n_noise=s.inner_n_noise,
                                           eps=s.eps, max_iter=s.inner_max_iter)
                vals.append(instantaneous_mi(rng, H, rep.precoder, self.signals, sigma2,
                                             s.n_noise).value)
            vals = np.asarray(vals)
            se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("nan")
            return {"mi": (float(vals.mean()), se)}
        raise ValueError(f"unhandled mode {mode}")


def _energy_model(mode, scen):
    if mode is Mode.UnconstrainedBenchmark:
        return EnergyModel.fully_connected(scen.Nt, scen.Nrf, P_tx=scen.P)
    return EnergyModel.subarray(scen.Nt, scen.Nrf, P_tx=scen.P)


def _truthy(v):
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def run_scenario(scenario, outdir=None, log=None):
    """Run every mode of a scenario over its SNR grid and write the curves.

    Parameters
    ----------
    scenario : Scenario or path
    outdir : path, optional
        Root output directory; curves go to ``<outdir>/<name>/<curve>.csv``.
        Defaults to the scenario's ``outdir`` relative to its file.
    log : callable, optional
        Receives one progress string per SNR point.

    Returns
    -------
    RunResult
    """
    scen = load_scenario(scenario) if isinstance(scenario, (str, Path)) else scenario
    root = Path(outdir) if outdir is not None else Path(scen.base_dir) / scen.outdir
    target = root / scen.name
    signals = build_signal_set(scen.modulation, scen.Ns)
    csis = scenario_csis(scen)
    pipes = [_Pipeline(scen, csi, d, signals) for d, csi in enumerate(csis)]
    energy = _truthy(scen.extra.get("energy", "false"))

    curves, failures = {}, []
    for mode in scen.modes:
        writers = {}
        for snr, sigma2 in zip(scen.snr_grid_db, scen.sigma2_grid):
            t0 = time.perf_counter()
            try:
                per_draw = [p.run(mode, float(sigma2)) for p in pipes]
            except Exception as exc:  # flush a marker row, keep other modes going
                failures.append((mode, snr, exc))
                for w in writers.values():
                    w.fail(snr, exc)
                if not writers:
                    CurveWriter(target / f"{mode.value}_mi.csv").fail(snr, exc)
                break
            merged = {}
            for suffix in per_draw[0]:
                v = np.array([r[suffix][0] for r in per_draw])
                se = np.array([r[suffix][1] for r in per_draw])
                merged[suffix] = (float(v.mean()), float(np.sqrt(np.sum(se ** 2)) / v.size))
            if energy and "mi" in merged:
                model = _energy_model(mode, scen)
                v, se = merged["mi"]
                merged["ee"] = (energy_efficiency(max(v, 0.0), model), se / model.total_power)
            for suffix, (v, se) in merged.items():
                name = f"{mode.value}_{suffix}"
                if name not in writers:
                    writers[name] = CurveWriter(target / f"{name}.csv")
                    curves[name] = Curve(name)
                writers[name].row(snr, v, se)
                curves[name].rows.append((snr, v, se))
            if log is not None:
                log(f"{scen.name} {mode.value} snr={snr:g} dB "
                    + " ".join(f"{k}={v[0]:.4f}" for k, v in merged.items())
                    + f" ({time.perf_counter() - t0:.1f}s)")
        for w in writers.values():
            w.close()
    result = RunResult(scen, curves, target, failures=failures)
    if _truthy(scen.extra.get("check", "false")):
        result.checks = scenario_checks(result)
    return result


def scenario_checks(result):
    """Qualitative orderings a finished run should satisfy.

    Returns a list of ``(name, passed, detail)``.
    """
    c = result.curves
    checks = []
    if "statistical_mi" in c:
        mi = c["statistical_mi"]
        for b in ("statistical_lb", "statistical_lba"):
            if b in c:
                excess = c[b].values - (mi.values + 3 * mi.stderr)
                checks.append((f"{b} <= MC + 3 stderr", bool(np.all(excess <= 0)),
                               f"max excess {excess.max():.3e}"))
    if "statistical_mi" in c and "fixed_mi" in c:
        dyn, fix = c["statistical_mi"].values, c["fixed_mi"].values
        half = slice(len(dyn) // 2, None)
        checks.append(("dynamic >= fixed on upper half of grid",
                       bool(np.all(dyn[half] >= fix[half])),
                       f"min margin {np.min(dyn[half] - fix[half]):.4f}"))
    if "statistical_mi" in c and "no_precoding_mi" in c:
        dyn, nop = c["statistical_mi"].values, c["no_precoding_mi"].values
        checks.append(("no precoding < dynamic", bool(np.all(nop < dyn)),
                       f"min margin {np.min(dyn - nop):.4f}"))
    if "mixed_mi" in c and "instantaneous_mi" in c:
        gap = np.abs(c["mixed_mi"].values - c["instantaneous_mi"].values)
        checks.append(("|mixed - instantaneous| <= 0.3", bool(np.all(gap <= 0.3)),
                       f"max gap {gap.max():.4f}"))
    return checks


def snr_gap_db(snr, lo, hi, level):
    """Horizontal distance (dB) between two increasing curves at ``level``.

    Linear interpolation; returns nan when either curve never reaches it.
    """
    snr = np.asarray(snr, dtype=float)

    def cross(v):
        v = np.asarray(v, dtype=float)
        idx = np.nonzero(v >= level)[0]
        if idx.size == 0:
            return np.nan
        i = idx[0]
        if i == 0:
            return snr[0]
        return snr[i - 1] + (level - v[i - 1]) * (snr[i] - snr[i - 1]) / (v[i] - v[i - 1])

    return cross(lo) - cross(hi)

