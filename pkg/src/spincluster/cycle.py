"""One protocol cycle: emission algebra, time-integrated spin transfer,
and assembly of the full cycle process map.

The cycle starts at a pulse, converts the hole spin to a trion, lets the
trion precess until the photon is emitted at t', applies the emission
projection, and lets the hole precess until the next pulse at t_pulse.
All branch quantities reduce to five 3x3 kernels obtained from a single
Monte-Carlo pass over the nuclear ensemble (outer loop) and a
Gauss-Legendre quadrature over the emission time (inner loop; the
nuclear field is frozen within a cycle):

    Q_i = < sum_k w_k G_hh(t_pulse - t_k) A_i G_tr(t_k) >,  i = 1..3
    J   = < sum_k w_k G_hh(t_pulse - t_k) >
    D   = < sum_k w_k G_tr(t_k) >

where A_1, A_2, A_3 decompose the linear part of the emission map by
Stokes component and w_k carries the radiative exponential normalized
over the integration window, so branch probabilities are exactly
complementary: P(+m) + P(-m) = 1 at any sample count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .centralspin import (
    PhysicalParams,
    larmor_vectors,
    rotation_matrices,
    sample_overhauser,
)
from .errors import DegenerateConditioningError, EmptyRequestError
from .quantum import (
    ProcessMap,
    as_spin_vector,
    as_stokes_vector,
    pair_index,
    project_to_physical,
)

# Decomposition of the emission map's linear part: L(m) = (m1 A1 + m2 A2 + A3)/2.
_A1 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
_A2 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
_A3 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])

# Beyond this many radiative lifetimes the undecayed tail is dropped.
TAIL_CUTOFF = 8.0


@dataclass(frozen=True)
class EmissionMap:
    """Affine spin update of a photon detection: p S' = L S + c, p = (1 - S_z m3)/2."""

    linear: np.ndarray
    offset: np.ndarray
    m3: float

    def probability(self, s) -> float:
        s = as_spin_vector(s)
        return 0.5 * (1.0 - s[2] * self.m3)

    def weighted_spin(self, s) -> np.ndarray:
        """The product p * S' (finite even on forbidden branches)."""
        s = as_spin_vector(s)
        return self.linear @ s + self.offset

    def conditional_spin(self, s) -> np.ndarray:
        p = self.probability(s)
        if p < 1e-12:
            raise DegenerateConditioningError(
                "photon projection has zero probability; conditional spin undefined"
            )
        return self.weighted_spin(s) / p


def emission_map(m) -> EmissionMap:
    """Spin update heralded by an m-polarized photon detection."""
    m = as_stokes_vector(m)
    linear = 0.5 * (m[0] * _A1 + m[1] * _A2 + _A3)
    offset = np.array([0.0, 0.0, -0.5 * m[2]])
    return EmissionMap(linear=linear, offset=offset, m3=float(m[2]))


@dataclass(frozen=True)
class CycleKernels:
    """Ensemble-averaged cycle contractions (see module docstring)."""

    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    j: np.ndarray
    d: np.ndarray
    t_pulse: float
    n_samples: int
    seed: int
    n_time_steps: int


def _quadrature(params: PhysicalParams, n_time_steps: int):
    """Emission-time nodes and normalized radiative weights on [0, t_max]."""
    if n_time_steps < 1:
        raise EmptyRequestError("at least one quadrature node is required")
    tau = params.tau_photon
    t_max = min(params.t_pulse, TAIL_CUTOFF * tau)
    x, w = leggauss(int(n_time_steps))
    nodes = 0.5 * (x + 1.0) * t_max
    weights = 0.5 * t_max * w
    density = np.exp(-nodes / tau) / (tau * -np.expm1(-t_max / tau))
    return nodes, weights * density


def cycle_kernels(
    params: PhysicalParams,
    n_samples: int,
    seed: int,
    n_time_steps: int = 64,
    chunk: int = 8192,
) -> CycleKernels:
    """Run the Monte-Carlo / quadrature pass once; reusable for all branches."""
    if n_samples < 1:
        raise EmptyRequestError("at least one nuclear-field sample is required")
    nodes, wq = _quadrature(params, n_time_steps)
    t_hh = params.t_pulse - nodes
    nf = sample_overhauser(seed, n_samples)
    u4 = np.zeros((9, 9))
    j_sum = np.zeros((3, 3))
    d_sum = np.zeros((3, 3))
    for start in range(0, n_samples, chunk):
        block = nf[start : start + chunk]
        g_hh = rotation_matrices(larmor_vectors(params, "hh", block), t_hh)
        g_tr = rotation_matrices(larmor_vectors(params, "trion", block), nodes)
        g_tr_w = g_tr * wq[None, :, None, None]
        u4 += g_hh.reshape(-1, 9).T @ g_tr_w.reshape(-1, 9)
        j_sum += (g_hh * wq[None, :, None, None]).sum(axis=(0, 1))
        d_sum += g_tr_w.sum(axis=(0, 1))
    t4 = (u4 / n_samples).reshape(3, 3, 3, 3)  # [a,b,c,d] = <G_hh[a,b] G_tr[c,d]>
    q1, q2, q3 = (np.einsum("abcd,bc->ad", t4, a) for a in (_A1, _A2, _A3))
    return CycleKernels(
        q1=q1,
        q2=q2,
        q3=q3,
        j=j_sum / n_samples,
        d=d_sum / n_samples,
        t_pulse=params.t_pulse,
        n_samples=int(n_samples),
        seed=int(seed),
        n_time_steps=int(n_time_steps),
    )


def branch_probability(kernels: CycleKernels, s0, m) -> float:
    """P^(m): probability that the cycle photon is found m-polarized."""
    s0 = as_spin_vector(s0)
    m = as_stokes_vector(m)
    return 0.5 * (1.0 - m[2] * (kernels.d @ s0)[2])


def branch_vector(kernels: CycleKernels, s0, m) -> np.ndarray:
    """P^(m) <S(t_pulse)>: the probability-weighted end-of-cycle spin."""
    s0 = as_spin_vector(s0)
    m = as_stokes_vector(m)
    return 0.5 * (
        m[0] * (kernels.q1 @ s0)
        + m[1] * (kernels.q2 @ s0)
        + (kernels.q3 @ s0)
        - m[2] * kernels.j[:, 2]
    )


@dataclass(frozen=True)
class CycleResult:
    """Outcome of one conditioned cycle: P^(m) and <S(t_pulse)> given m."""

    prob: float
    spin_out: np.ndarray | None

    def to_json_dict(self) -> dict:
        return {
            "prob": float(self.prob),
            "spin_out": None
            if self.spin_out is None
            else [float(x) for x in self.spin_out],
        }


def cycle_given_photon(
    params: PhysicalParams,
    s0,
    m,
    n_samples: int,
    seed: int,
    n_time_steps: int = 64,
    conditional: bool = True,
    kernels: CycleKernels | None = None,
) -> CycleResult:
    """End-of-cycle spin and branch probability for an m-polarized photon.

    The conditional spin is the probability-weighted integral divided by
    P^(m) only after full accumulation.  With ``conditional=True``
    (default) a numerically zero branch raises
    :class:`DegenerateConditioningError`; with ``conditional=False`` the
    probability is still returned and ``spin_out`` is None there.
    """
    if kernels is None:
        kernels = cycle_kernels(params, n_samples, seed, n_time_steps)
    p = branch_probability(kernels, s0, m)
    v = branch_vector(kernels, s0, m)
    if p < 1e-12:
        if conditional:
            raise DegenerateConditioningError(
                f"branch probability {p:.3e} is numerically zero"
            )
        return CycleResult(prob=max(float(p), 0.0), spin_out=None)
    return CycleResult(prob=float(p), spin_out=v / p)


_CARDINAL_SPINS = [
    np.array(v, dtype=float)
    for v in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
]
# Photon projector axes paired with their Pauli column in the output index.
_STOKES_AXES = [(3, np.array([0.0, 0.0, 1.0])), (1, np.array([1.0, 0.0, 0.0])),
                (2, np.array([0.0, 1.0, 0.0]))]


def build_process_map(
    params: PhysicalParams,
    n_samples: int,
    seed: int,
    n_time_steps: int = 64,
    project: bool = True,
) -> ProcessMap:
    """Assemble the 16x4 cycle map from six pure spin inputs.

    For each input the six photon projectors (+/-Z, +/-X, +/-Y) give the
    branch probabilities and weighted spins; their sums and differences
    fill the 16 output Pauli coefficients, and a least-squares solve
    over the over-determined input set reduces them to the four input
    columns.  All runs share one kernel pass (same nuclear samples), so
    the result is deterministic per seed and trace preserving exactly.
    With ``project=True`` (default) the residual Monte-Carlo CP
    violation is removed by :func:`project_to_physical`.
    """
    kernels = cycle_kernels(params, n_samples, seed, n_time_steps)
    rows = []
    coeffs = []
    for s0 in _CARDINAL_SPINS:
        c = np.zeros(16)
        c[pair_index(0, 0)] = 1.0
        spin_marginal = np.zeros(3)
        for b, axis in _STOKES_AXES:
            p_plus = branch_probability(kernels, s0, axis)
            v_plus = branch_vector(kernels, s0, axis)
            v_minus = branch_vector(kernels, s0, -axis)
            c[pair_index(0, b)] = 2.0 * p_plus - 1.0
            c[[pair_index(i, b) for i in (1, 2, 3)]] = v_plus - v_minus
            spin_marginal += v_plus + v_minus
        c[[pair_index(i, 0) for i in (1, 2, 3)]] = spin_marginal / len(_STOKES_AXES)
        rows.append(np.concatenate(([1.0], s0)))
        coeffs.append(c)
    design = np.stack(rows)
    target = np.stack(coeffs)
    solution, *_ = np.linalg.lstsq(design, target, rcond=None)
    matrix = solution.T.copy()
    matrix[0] = (1.0, 0.0, 0.0, 0.0)
    pmap = ProcessMap(matrix)
    if project:
        pmap = project_to_physical(pmap)
    return pmap
