"""Scenario files: flat ``key = value`` text with ``#`` comments.

A minimal scenario::

    name = example2
    Nr = 16
    Nt = 64
    Nrf = 4
    Ns = 4
    modulation = qpsk
    angles = fixture:example2
    snr_db = -30:5:0
    modes = statistical, no_precoding

``snr_db`` accepts either a comma list or ``start:step:stop`` (inclusive).
``angles`` is ``fixture:<name>``, ``files:<aoa path>,<aod path>`` (relative
to the scenario file) or ``sample`` together with ``L``, ``mean_aoa``,
``mean_aod`` and ``spread``.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from ..channel import fixture_angles, load_angles
from ..constellation import Modulation
from ..errors import ConfigError


class Mode(Enum):
    StatisticalCsi = "statistical"
    MixedCsi = "mixed"
    InstantaneousCsi = "instantaneous"
    FixedSubarray = "fixed"
    NoPrecoding = "no_precoding"
    UnconstrainedBenchmark = "unconstrained"

    @classmethod
    def parse(cls, text):
        key = text.strip().lower()
        for m in cls:
            if key in (m.value, m.name.lower()):
                return m
        raise ConfigError(f"unknown mode {text!r}; expected one of "
                          f"{', '.join(m.value for m in cls)}")


def snr_to_sigma2(snr_db, P=1.0):
    """Noise variance for ``SNR = P / sigma2`` given in dB."""
    return P / 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


def sigma2_to_snr(sigma2, P=1.0):
    return 10.0 * np.log10(P / np.asarray(sigma2, dtype=float))


@dataclass(frozen=True)
class Scenario:
    name: str
    Nr: int
    Nt: int
    Nrf: int
    Ns: int
    modulation: Modulation
    snr_grid_db: tuple
    modes: tuple
    angle_source: str = "sample"
    L: int = 0
    mean_aoa: object = "uniform"
    mean_aod: float = np.pi / 4
    spread: float = np.pi / 18
    seed: int = 0
    n_channel: int = 100
    n_noise: int = 100
    csi_draws: int = 1
    restarts: int = 8
    eps: float = 1e-4
    max_iter: int = 500
    digital: str = "algorithm2"
    inner_max_iter: int = 60
    inner_n_noise: int = 100
    P: float = 1.0
    outdir: str = "results"
    base_dir: str = "."
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        dims = dict(Nr=self.Nr, Nt=self.Nt, Nrf=self.Nrf, Ns=self.Ns)
        for k, v in dims.items():
            if int(v) != v or v < 1:
                raise ConfigError(f"{k} must be a positive integer, got {v!r}")
        if not self.Ns <= self.Nrf <= self.Nt:
            raise ConfigError(f"need Ns <= Nrf <= Nt, got Ns={self.Ns}, Nrf={self.Nrf}, "
                              f"Nt={self.Nt}")
        if not self.snr_grid_db:
            raise ConfigError("snr_db grid is empty")
        if self.P <= 0:
            raise ConfigError("power budget P must be positive")
        for k in ("n_channel", "n_noise", "csi_draws", "restarts", "max_iter",
                  "inner_max_iter", "inner_n_noise"):
            if getattr(self, k) < 1:
                raise ConfigError(f"{k} must be at least 1")
        if self.digital not in ("algorithm2", "identity"):
            raise ConfigError(f"digital must be 'algorithm2' or 'identity', got {self.digital!r}")
        if self.digital == "identity" and self.Ns != self.Nrf:
            raise ConfigError("digital = identity needs Ns == Nrf")
        if self.angle_source == "sample" and self.L < 1:
            raise ConfigError("sampled angles need L >= 1")

    @property
    def sigma2_grid(self):
        return snr_to_sigma2(self.snr_grid_db, self.P)

    def fixed_angles(self):
        """Angle realization named by ``angle_source``, or None when sampled."""
        src = self.angle_source
        if src == "sample":
            return None
        kind, _, arg = src.partition(":")
        if kind == "fixture":
            return fixture_angles(arg.strip())
        if kind == "files":
            parts = [p.strip() for p in arg.split(",")]
            if len(parts) != 2:
                raise ConfigError("files: needs '<aoa path>,<aod path>'")
            base = Path(self.base_dir)
            return load_angles(*(base / p for p in parts))
        raise ConfigError(f"unrecognised angle source {src!r}")

    def with_overrides(self, **kw):
        return replace(self, **kw)


_INT = {"Nr", "Nt", "Nrf", "Ns", "L", "seed", "n_channel", "n_noise", "csi_draws",
        "restarts", "max_iter", "inner_max_iter", "inner_n_noise"}
_FLOAT = {"mean_aod", "spread", "eps", "P"}
_STR = {"name", "digital", "outdir", "angles"}


def parse_grid(text):
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be start:step:stop")
        a, step, b = (float(p) for p in parts)
        if step == 0 or (b - a) / step < 0:
            raise ConfigError(f"grid {text!r} is empty or never terminates")
        n = int(np.floor((b - a) / step + 1e-9)) + 1
        return tuple(float(a + i * step) for i in range(n))
    return tuple(float(v) for v in text.split(",") if v.strip())


def _angle_expr(text):
    """Accept plain radians or ``pi/4``-style expressions."""
    t = text.strip().lower().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    if t.startswith("pi"):
        num, den = np.pi, t[2:]
    elif "*pi" in t:
        head, den = t.split("*pi", 1)
        num = float(head) * np.pi
    else:
        raise ConfigError(f"cannot read angle {text!r}")
    if not den:
        return num
    if den.startswith("/"):
        return num / float(den[1:])
    raise ConfigError(f"cannot read angle {text!r}")


def parse_text(text, base_dir="."):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        raw[key] = value

    kw, extra = {"base_dir": str(base_dir)}, {}
    try:
        for key, value in raw.items():
            if key in _INT:
                kw[key] = int(value)
            elif key in _FLOAT:
                kw[key] = _angle_expr(value) if key in ("mean_aod", "spread") else float(value)
            elif key == "angles":
                kw["angle_source"] = value
            elif key in _STR:
                kw[key] = value
            elif key == "modulation":
                kw[key] = Modulation.parse(value)
            elif key == "snr_db":
                kw["snr_grid_db"] = parse_grid(value)
            elif key == "modes":
                kw["modes"] = tuple(Mode.parse(v) for v in value.split(",") if v.strip())
            elif key == "mean_aoa":
                kw[key] = "uniform" if value.strip().lower() == "uniform" else _angle_expr(value)
            else:
                extra[key] = value
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value: {exc}") from exc

    missing = [k for k in ("name", "Nr", "Nt", "Nrf", "Ns", "modulation", "snr_grid_db",
                           "modes") if k not in kw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    kw["extra"] = extra
    scen = Scenario(**kw)
    angles = scen.fixed_angles()
    if angles is not None:
        if scen.L and scen.L != angles.L:
            raise ConfigError(f"L = {scen.L} disagrees with the {angles.L}-path angle source")
        scen = replace(scen, L=angles.L)
    return scen


def load_scenario(path):
    """Parse and validate a scenario file.

    Raises
    ------
    ConfigError
        Unreadable file, unknown values or violated dimension constraints.
    FixtureMissing
        The angle source names a file or fixture that does not exist.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_text(text, base_dir=path.parent)
