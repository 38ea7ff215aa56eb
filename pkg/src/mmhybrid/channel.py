"""Geometric multi-path channel model for half-wavelength uniform linear arrays.

The channel is ``H = sqrt(Nr*Nt/L) * A_r @ diag(gamma) @ A_t^H`` where the
columns of ``A_r`` and ``A_t`` are unit-norm steering vectors and the path
gains ``gamma`` are i.i.d. CN(0, 1).
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, FixtureMissing
from .rng import complex_normal

SPACING = 0.5  # antenna spacing over wavelength

_DATA = Path(__file__).resolve().parent / "data"

@dataclass(frozen=True)
class ArrayGeometry:
    n_elements: int
    spacing_over_wavelength: float = SPACING

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("array needs at least one element")
        if self.spacing_over_wavelength != SPACING:
            raise ValueError("only half-wavelength spacing is supported")


@dataclass(frozen=True, eq=False)
class PathAngles:
    aoa: np.ndarray
    aod: np.ndarray

    def __post_init__(self):
        aoa = np.atleast_1d(np.asarray(self.aoa, dtype=float))
        aod = np.atleast_1d(np.asarray(self.aod, dtype=float))
        if aoa.shape != aod.shape or aoa.ndim != 1:
            raise DimensionMismatch(
                f"AoA and AoD vectors must have equal length, got {aoa.shape} and {aod.shape}")
        object.__setattr__(self, "aoa", aoa)
        object.__setattr__(self, "aod", aod)

    @property
    def L(self):
        return self.aoa.size


@dataclass(frozen=True, eq=False)
class StatisticalCsi:
    """Stacked steering matrices ``A_r`` (Nr x L) and ``A_t`` (Nt x L)."""

    A_r: np.ndarray
    A_t: np.ndarray

    @property
    def L(self):
        return self.A_t.shape[1]

    @property
    def Nr(self):
        return self.A_r.shape[0]

    @property
    def Nt(self):
        return self.A_t.shape[0]

    @property
    def scale(self):
        """Channel normalization ``sqrt(Nr*Nt/L)``."""
        return np.sqrt(self.Nr * self.Nt / self.L)

    def receive_gram(self):
        return self.A_r.conj().T @ self.A_r

    def to_csv(self, path):
        """Dump ``A_r`` then ``A_t`` as rows of interleaved real/imag values."""
        with open(path, "w") as fh:
            for name, A in (("A_r", self.A_r), ("A_t", self.A_t)):
                for i, row in enumerate(A):
                    vals = np.column_stack([row.real, row.imag]).ravel()
                    fh.write(f"{name},{i}," + ",".join(repr(float(v)) for v in vals) + "\n")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    gains: np.ndarray
    H: np.ndarray
    scale: float


def steering_vector(geometry, angle):
    """Unit-norm ULA response ``a(theta)[n] = exp(-j*pi*n*sin(theta)) / sqrt(N)``.

    ``geometry`` may be an :class:`ArrayGeometry` or a bare element count.
    """
    N = geometry.n_elements if isinstance(geometry, ArrayGeometry) else int(geometry)
    n = np.arange(N)
    return np.exp(-2j * np.pi * SPACING * n * np.sin(angle)) / np.sqrt(N)


def steering_matrix(N, angles):
    """Stack ``steering_vector(N, theta)`` for each angle as columns."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    n = np.arange(N)[:, None]
    return np.exp(-2j * np.pi * SPACING * n * np.sin(angles)[None, :]) / np.sqrt(N)


def sample_laplacian(rng, mean, spread, size):
    """Laplacian draws with standard deviation ``spread`` by inverse CDF."""
    b = spread / np.sqrt(2.0)
    u = rng.uniform(-0.5, 0.5, size)
    return mean - b * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_path_angles(rng, L, mean_aoa, mean_aod, spread=np.pi / 18):
    """Draw ``L`` AoA/AoD pairs around the given mean angles.

    Parameters
    ----------
    rng : numpy.random.Generator
    L : int
        Number of paths.
    mean_aoa : float or "uniform"
        Mean angle of arrival. ``"uniform"`` draws one mean from unif(0, 2*pi)
        per call, shared by all paths.
    mean_aod : float
    spread : float
        Angular standard deviation (radians).
    """
    if spread <= 0:
        raise ValueError("angular spread must be positive")
    if isinstance(mean_aoa, str):
        if mean_aoa != "uniform":
            raise ValueError(f"mean_aoa must be a number or 'uniform', got {mean_aoa!r}")
        mean_aoa = rng.uniform(0.0, 2 * np.pi)
    aoa = sample_laplacian(rng, mean_aoa, spread, L)
    aod = sample_laplacian(rng, mean_aod, spread, L)
    return PathAngles(aoa, aod)


def fixture_angles(name):
    """Angle realization of a bundled scenario (``example1`` .. ``example4``)."""
    aoa, aod = _DATA / f"{name}_aoa.txt", _DATA / f"{name}_aod.txt"
    if not (aoa.is_file() and aod.is_file()):
        raise FixtureMissing(f"no bundled angle fixture named {name!r}")
    return load_angles(aoa, aod)


def read_angle_file(path):
    """Read a plain-text file with one angle (radians) per line.

    Blank lines and ``#`` comments are skipped.
    """
    path = Path(path)
    if not path.is_file():
        candidate = _DATA / path.name
        if not candidate.is_file():
            raise FixtureMissing(f"angle file not found: {path}")
        path = candidate
    vals = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            vals.append(float(line))
    return np.array(vals)


def load_angles(aoa_path, aod_path):
    return PathAngles(read_angle_file(aoa_path), read_angle_file(aod_path))


def build_statistical_csi(angles, Nr, Nt):
    return StatisticalCsi(steering_matrix(Nr, angles.aoa), steering_matrix(Nt, angles.aod))


def assemble_channel(csi, gains):
    """Build a realization from explicit path gains."""
    gains = np.asarray(gains, dtype=complex).reshape(csi.L)
    H = csi.scale * (csi.A_r * gains[None, :]) @ csi.A_t.conj().T
    return ChannelRealization(gains, H, csi.scale)


def sample_gains(rng, csi, n=None):
    shape = (csi.L,) if n is None else (n, csi.L)
    return complex_normal(rng, shape)


def sample_channel(rng, csi):
    return assemble_channel(csi, sample_gains(rng, csi))


def channel_batch(csi, gains):
    """Channels for a batch of gain vectors, shape (n, Nr, Nt)."""
    gains = np.asarray(gains)
    return csi.scale * np.einsum("rl,nl,tl->nrt", csi.A_r, gains, csi.A_t.conj())


def effective_channel(H, F_bar):
    H = np.asarray(H)
    F_bar = np.asarray(F_bar)
    if H.shape[-1] != F_bar.shape[0]:
        raise DimensionMismatch(f"cannot multiply H {H.shape} by F {F_bar.shape}")
    return H @ F_bar
