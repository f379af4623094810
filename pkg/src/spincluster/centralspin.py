"""Central-spin precession under external and frozen nuclear fields.

Each Overhauser realization is a static effective field; the spin
precesses classically around the total Larmor vector and dephasing
emerges only from the ensemble average over the 3-D Gaussian nuclear
distribution.  Time is carried in picoseconds, angular frequencies in
rad/ns, magnetic fields in Tesla; the external field points along X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError, EmptyRequestError

# Bohr magneton over hbar, rad / (ns T).
GYROMAGNETIC_BOHR = 87.9410

SPECIES = ("hh", "trion")

_VECTOR_KEYS = ("g_hh", "g_trion", "a_hh", "a_trion")
_SCALAR_KEYS = (
    "b_ext",
    "tau_photon",
    "tau_init",
    "tau_final",
    "t_pulse",
    "gyromagnetic_prefactor",
)


@dataclass(frozen=True)
class PhysicalParams:
    """Device constants for the entangler and its optical cycle.

    g_hh / g_trion are diagonal g-factor tensors (dimensionless per
    axis); a_hh / a_trion are diagonal hyperfine scales in rad/ns per
    unit of the normalized nuclear field.  Lifetimes are in ps and
    tau_final may be infinite.
    """

    g_hh: tuple
    g_trion: tuple
    a_hh: tuple
    a_trion: tuple
    b_ext: float
    tau_photon: float
    tau_init: float
    tau_final: float
    t_pulse: float
    gyromagnetic_prefactor: float = GYROMAGNETIC_BOHR

    def __post_init__(self):
        for key in _VECTOR_KEYS:
            vec = tuple(float(x) for x in getattr(self, key))
            if len(vec) != 3 or not all(math.isfinite(x) for x in vec):
                raise ConfigError(f"{key} must be three finite numbers, got {vec}")
            object.__setattr__(self, key, vec)
        if any(x < 0.0 for x in self.a_hh) or any(x < 0.0 for x in self.a_trion):
            raise ConfigError("hyperfine scales must be non-negative")
        if not self.tau_photon > 0.0:
            raise ConfigError("tau_photon must be positive")
        if self.tau_init < 0.0:
            raise ConfigError("tau_init must be non-negative")
        if not self.tau_final > 0.0:
            raise ConfigError("tau_final must be positive (or inf)")
        if not self.t_pulse > 0.0:
            raise ConfigError("t_pulse must be positive")
        if self.b_ext < 0.0:
            raise ConfigError("b_ext is a field magnitude and must be >= 0")

    def replace(self, **kwargs) -> "PhysicalParams":
        return replace(self, **kwargs)

    def g_tensor(self, species: str) -> np.ndarray:
        _check_species(species)
        return np.asarray(self.g_hh if species == "hh" else self.g_trion)

    def hyperfine(self, species: str) -> np.ndarray:
        _check_species(species)
        return np.asarray(self.a_hh if species == "hh" else self.a_trion)


def _check_species(species: str) -> None:
    if species not in SPECIES:
        raise DomainError(f"species must be one of {SPECIES}, got {species!r}")


def load_params(path) -> PhysicalParams:
    """Read PhysicalParams from a flat ``key = value`` text file.

    Vector keys take three numbers (comma or whitespace separated);
    ``inf`` is accepted for tau_final.  Lines starting with '#' and
    inline '#' comments are ignored.
    """
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, text = line.partition("=")
        key = key.strip()
        parts = text.replace(",", " ").split()
        if key in _VECTOR_KEYS:
            if len(parts) != 3:
                raise ConfigError(f"{path}:{lineno}: {key} needs three numbers")
            values[key] = tuple(_parse_number(path, lineno, p) for p in parts)
        elif key in _SCALAR_KEYS:
            if len(parts) != 1:
                raise ConfigError(f"{path}:{lineno}: {key} takes one number")
            values[key] = _parse_number(path, lineno, parts[0])
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    missing = [
        k for k in _VECTOR_KEYS + _SCALAR_KEYS[:-1] if k not in values
    ]  # gyromagnetic_prefactor is optional
    if missing:
        raise ConfigError(f"{path}: missing keys: {', '.join(missing)}")
    return PhysicalParams(**values)


def _parse_number(path, lineno, text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: not a number: {text!r}") from exc


def sample_overhauser(seed: int, n: int) -> np.ndarray:
    """Draw ``n`` normalized nuclear-field realizations, shape (n, 3).

    Standard 3-D normal (unit variance per component) from a
    counter-based Philox stream, so a fixed seed reproduces the same
    sequence regardless of how consumers chunk it: sample i is always
    the i-th draw of the stream.
    """
    if n < 1:
        raise EmptyRequestError("at least one nuclear-field sample is required")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    return rng.standard_normal((int(n), 3))


def larmor_vectors(params: PhysicalParams, species: str, nf: np.ndarray) -> np.ndarray:
    """Total Larmor vectors (rad/ns) for nuclear realizations of shape (..., 3)."""
    nf = np.asarray(nf, dtype=float)
    ext = params.gyromagnetic_prefactor * params.g_tensor(species) * np.array(
        [params.b_ext, 0.0, 0.0]
    )
    return ext + params.hyperfine(species) * nf


def rotation_matrices(omega: np.ndarray, times_ps: np.ndarray) -> np.ndarray:
    """Rodrigues rotations about each Larmor vector for each time.

    ``omega`` has shape (n, 3) in rad/ns, ``times_ps`` shape (k,); the
    result has shape (n, k, 3, 3) with R[i, j] the rotation by
    |omega_i| * t_j about omega_i (right-handed: about +x, z -> -y at a
    quarter turn, matching dS/dt = omega x S).
    """
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    times = np.atleast_1d(np.asarray(times_ps, dtype=float))
    w = np.linalg.norm(omega, axis=1)
    safe = np.where(w > 0.0, w, 1.0)
    axis = omega / safe[:, None]
    theta = w[:, None] * times[None, :] * 1e-3  # rad/ns * ps
    c = np.cos(theta)
    s = np.sin(theta)
    n, k = theta.shape
    ax, ay, az = axis[:, 0], axis[:, 1], axis[:, 2]
    cross = np.zeros((n, 3, 3))
    cross[:, 0, 1] = -az
    cross[:, 0, 2] = ay
    cross[:, 1, 0] = az
    cross[:, 1, 2] = -ax
    cross[:, 2, 0] = -ay
    cross[:, 2, 1] = ax
    outer = axis[:, :, None] * axis[:, None, :]
    rot = (
        c[:, :, None, None] * np.eye(3)
        + s[:, :, None, None] * cross[:, None, :, :]
        + (1.0 - c)[:, :, None, None] * outer[:, None, :, :]
    )
    # Zero total field: identity for all times.
    rot[w == 0.0] = np.eye(3)
    return rot


def evolution_tensor(
    params: PhysicalParams, species: str, nf, t_ps: float
) -> np.ndarray:
    """3x3 rotation taking S(0) to S(t) for one nuclear realization."""
    if t_ps < 0.0:
        raise DomainError("evolution time must be non-negative")
    nf = np.asarray(nf, dtype=float).reshape(3)
    omega = larmor_vectors(params, species, nf[None, :])
    return rotation_matrices(omega, np.array([t_ps]))[0, 0]


def ensemble_evolution(
    params: PhysicalParams,
    species: str,
    t_ps: float,
    n_samples: int,
    seed: int,
    chunk: int = 262144,
) -> np.ndarray:
    """Monte-Carlo mean of :func:`evolution_tensor` over the Overhauser law."""
    return ensemble_evolution_curve(
        params, species, np.array([t_ps]), n_samples, seed, chunk=chunk
    )[0]


def ensemble_evolution_curve(
    params: PhysicalParams,
    species: str,
    times_ps: np.ndarray,
    n_samples: int,
    seed: int,
    chunk: int = 65536,
) -> np.ndarray:
    """Ensemble-averaged tensors at several times, shape (k, 3, 3)."""
    times = np.atleast_1d(np.asarray(times_ps, dtype=float))
    if np.any(times < 0.0):
        raise DomainError("evolution times must be non-negative")
    if n_samples < 1:
        raise EmptyRequestError("at least one sample is required")
    nf = sample_overhauser(seed, n_samples)
    total = np.zeros((len(times), 3, 3))
    for start in range(0, n_samples, chunk):
        block = nf[start : start + chunk]
        omega = larmor_vectors(params, species, block)
        total += rotation_matrices(omega, times).sum(axis=0)
    return total / n_samples


def larmor_period(params: PhysicalParams, species: str = "hh") -> float:
    """Precession period (ps) about the external X field; inf at zero field."""
    omega_x = abs(
        params.gyromagnetic_prefactor * params.g_tensor(species)[0] * params.b_ext
    )
    if omega_x == 0.0:
        return math.inf
    return 2.0 * math.pi / omega_x * 1e3
