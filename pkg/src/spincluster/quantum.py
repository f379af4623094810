"""Qubit primitives and the one-cycle process map machinery.

Conventions used throughout the package
---------------------------------------
Spin qubit: |0> is the hole spin pointing up along the growth (Z) axis,
|1> points down; rho = (sigma_0 + S . sigma)/2 for Bloch vector S.

Photon qubit: |0> is the right-circular (+Z Stokes) polarization and |1>
the left-circular one, so the Stokes component m3 equals the photon
<sigma_z>.  The optical selection rules anti-correlate the photon
handedness with the emitting spin: spin |0> radiates a -Z photon.

A process map takes one spin qubit into the joint (spin, photon) pair
and is stored as a real 16 x 4 matrix acting on Pauli expectation
values: column j multiplies Tr(sigma_j rho_in), j in {O, X, Y, Z}, and
row (a, b), flattened as 4*a + b with the spin index first, yields
Tr((sigma_a x sigma_b) rho_out).  Trace preservation is equivalent to
the (O, O) row being (1, 0, 0, 0).  Because the Pauli matrices are
orthogonal, the Frobenius geometry of this 64-parameter space matches
the Frobenius geometry of the 8 x 8 Choi matrix up to a constant factor,
so orthogonal projections may be done in whichever space is cheaper.

The Choi matrix is ordered input (x) output, i.e. an 8 x 8 matrix on
C2 (x) C4, with Tr_out(choi) = I_2 for trace-preserving maps.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ConvergenceError, InvalidChannelError, InvalidStateError

EPS_NORM = 1e-12

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

PAULIS = np.stack([SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z])
PAULI_LABELS = "OXYZ"

# 16 two-qubit Pauli products sigma_a (x) sigma_b, row-major in (a, b).
PAULI_PAIRS = np.stack(
    [np.kron(PAULIS[a], PAULIS[b]) for a in range(4) for b in range(4)]
)


def pair_index(a: int, b: int) -> int:
    """Flattened row index of the output Pauli product sigma_a (x) sigma_b."""
    return 4 * a + b


def as_spin_vector(s) -> np.ndarray:
    """Validate and return a Bloch vector as a float array of shape (3,)."""
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise InvalidStateError(f"spin vector must have shape (3,), got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidStateError("spin vector has non-finite components")
    if s @ s > 1.0 + 1e-9:
        raise InvalidStateError(f"spin vector norm {np.linalg.norm(s):.6f} exceeds 1")
    return s


def as_stokes_vector(m) -> np.ndarray:
    """Validate and return a Stokes vector as a float array of shape (3,)."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise InvalidStateError(f"Stokes vector must have shape (3,), got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidStateError("Stokes vector has non-finite components")
    if m @ m > 1.0 + 1e-9:
        raise InvalidStateError(f"Stokes vector norm {np.linalg.norm(m):.6f} exceeds 1")
    return m


def check_density_matrix(rho, dim=None) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise InvalidStateError(f"expected dimension {dim}, got {rho.shape[0]}")
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(rho.trace().real - 1.0) > 1e-9 or abs(rho.trace().imag) > 1e-12:
        raise InvalidStateError(f"density matrix trace {rho.trace()} != 1")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def bloch_to_density(s) -> np.ndarray:
    """Single-qubit density matrix (sigma_0 + S . sigma)/2 from a Bloch vector."""
    s = as_spin_vector(s)
    return 0.5 * (SIGMA_0 + s[0] * SIGMA_X + s[1] * SIGMA_Y + s[2] * SIGMA_Z)


def density_to_bloch(rho) -> np.ndarray:
    """Bloch vector (Tr(sigma_x rho), Tr(sigma_y rho), Tr(sigma_z rho))."""
    rho = check_density_matrix(rho, dim=2)
    return np.array([np.trace(p @ rho).real for p in PAULIS[1:]])


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Hermitian square root with eigenvalue clipping at zero."""
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def state_fidelity(rho, sigma) -> float:
    """Fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 between density matrices."""
    rho = check_density_matrix(rho)
    sigma = check_density_matrix(sigma)
    if rho.shape != sigma.shape:
        raise InvalidStateError(
            f"dimension mismatch: {rho.shape[0]} vs {sigma.shape[0]}"
        )
    sq = _sqrtm_psd(rho)
    inner = np.linalg.eigvalsh(sq @ sigma @ sq)
    fid = float(np.sqrt(np.clip(inner, 0.0, None)).sum() ** 2)
    return min(max(fid, 0.0), 1.0)


class ProcessMap:
    """One-cycle channel from the spin qubit to the (spin, photon) pair.

    Wraps the real 16 x 4 Pauli-basis matrix described in the module
    docstring.  Instances are immutable; all methods return new objects.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        # np.array (not asarray): own the storage so freezing it below can
        # never flip a caller's array to read-only.
        matrix = np.array(matrix, dtype=float)
        if matrix.shape != (16, 4):
            raise InvalidChannelError(
                f"process map must be a 16x4 real matrix, got {matrix.shape}"
            )
        if not np.all(np.isfinite(matrix)):
            raise InvalidChannelError("process map contains non-finite entries")
        object.__setattr__(self, "matrix", matrix)
        matrix.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("ProcessMap is immutable")

    def __eq__(self, other):
        return isinstance(other, ProcessMap) and np.array_equal(
            self.matrix, other.matrix
        )

    def apply_coeffs(self, r) -> np.ndarray:
        """Map input Pauli coefficients (4,) to output coefficients (16,)."""
        r = np.asarray(r)
        return self.matrix @ r

    def apply(self, rho_in) -> np.ndarray:
        """Apply the channel to a 2x2 operator, returning the 4x4 output."""
        rho_in = np.asarray(rho_in, dtype=complex)
        r = np.einsum("kij,ji->k", PAULIS, rho_in)
        c = self.matrix @ r
        return 0.25 * np.einsum("k,kij->ij", c, PAULI_PAIRS)

    def spin_transfer(self) -> np.ndarray:
        """4x4 Pauli transfer matrix of the photon-traced spin channel."""
        return self.matrix[[pair_index(a, 0) for a in range(4)], :]

    def tp_deviation(self) -> float:
        """Max deviation of the (O, O) row from the trace-preserving value."""
        return float(np.abs(self.matrix[0] - np.array([1.0, 0, 0, 0])).max())

    def to_json_dict(self) -> dict:
        return {"rows": 16, "cols": 4, "data": [float(x) for x in self.matrix.ravel()]}

    @classmethod
    def from_json_dict(cls, obj) -> "ProcessMap":
        if obj.get("rows") != 16 or obj.get("cols") != 4:
            raise InvalidChannelError("process map JSON must declare rows=16, cols=4")
        data = np.asarray(obj["data"], dtype=float)
        if data.shape != (64,):
            raise InvalidChannelError("process map JSON must carry 64 numbers")
        return cls(data.reshape(16, 4))


def map_from_unitary(u: np.ndarray) -> ProcessMap:
    """Process map rho -> U (rho (x) |0><0|_photon) U^dag for a 4x4 unitary."""
    u = np.asarray(u, dtype=complex)
    p0 = np.zeros((2, 2), dtype=complex)
    p0[0, 0] = 1.0
    m = np.empty((16, 4))
    for j in range(4):
        out = u @ np.kron(PAULIS[j], p0) @ u.conj().T
        m[:, j] = 0.5 * np.einsum("kij,ji->k", PAULI_PAIRS, out).real
    return ProcessMap(m)


def ideal_cycle_map() -> ProcessMap:
    """The design-point cycle: selection-rule CNOT then the precession gate.

    The entangling step flips the fresh |0> (+Z) photon when the spin is
    |0>, which is the selection-rule anti-correlation.  The single-qubit
    gate is the experiment's Hadamard-equivalent: a quarter-turn
    precession about the field (X) axis, exp(-i pi sigma_x / 4), taking
    Bloch z -> -y and y -> z.  The paper's witness conventions (spin
    read on Y) are written in this frame.
    """
    cx0 = np.array(
        [
            [0, 1, 0, 0],
            [1, 0, 0, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )
    gate = (SIGMA_0 - 1j * SIGMA_X) / math.sqrt(2.0)
    u = np.kron(gate, SIGMA_0) @ cx0
    return map_from_unitary(u)


def choi_of(pmap: ProcessMap) -> np.ndarray:
    """8x8 Choi matrix sum_ij |i><j| (x) E(|i><j|) of a process map.

    Linear in the map; for trace-preserving maps the partial trace over
    the 4-dimensional output factor is the 2x2 identity.
    """
    # C = (1/4) sum_{k,a,b} M[(a,b),k] sigma_k^T (x) sigma_a (x) sigma_b
    m = pmap.matrix.reshape(4, 4, 4)  # (a, b, k)
    basis = np.einsum(
        "kij,auv,bpq->kabiupjvq", PAULIS.transpose(0, 2, 1), PAULIS, PAULIS
    )
    choi = 0.25 * np.einsum("abk,kabiupjvq->iupjvq", m, basis)
    return choi.reshape(8, 8)


def choi_to_map(choi: np.ndarray) -> ProcessMap:
    """Inverse of :func:`choi_of` (drops any non-Hermitian-preserving part)."""
    c4 = np.asarray(choi, dtype=complex).reshape(2, 4, 2, 4)
    m = np.empty((16, 4))
    for j in range(4):
        out = np.einsum("iI,ioIO->oO", PAULIS[j], c4)
        m[:, j] = 0.5 * np.einsum("kij,ji->k", PAULI_PAIRS, out).real
    return ProcessMap(m)


def choi_input_trace(choi: np.ndarray) -> np.ndarray:
    """Partial trace of the Choi matrix over the output factor (2x2 result)."""
    c4 = np.asarray(choi).reshape(2, 4, 2, 4)
    return np.einsum("iojo->ij", c4)


def min_choi_eigenvalue(pmap: ProcessMap) -> float:
    """Smallest eigenvalue of the Choi matrix; >= 0 for CP maps."""
    return float(np.linalg.eigvalsh(choi_of(pmap)).min())


def is_physical(pmap: ProcessMap, cp_tol: float = 1e-9, tp_tol: float = 1e-9) -> bool:
    """Whether the map is completely positive and trace preserving."""
    return pmap.tp_deviation() <= tp_tol and min_choi_eigenvalue(pmap) >= -cp_tol


def project_to_physical(
    pmap: ProcessMap,
    tol: float = 1e-10,
    max_iter: int = 10000,
    cp_tol: float = 1e-9,
    tp_tol: float = 1e-9,
) -> ProcessMap:
    """Nearest-physical repair by alternating CP and TP projections.

    Alternates eigenvalue clipping of the Choi matrix with the exact TP
    projection (pinning the (O, O) row, which is orthogonal in the Choi
    Frobenius geometry), stopping when successive iterates differ by
    less than ``tol`` in Frobenius norm.  Already-physical inputs are
    returned unchanged.
    """
    if is_physical(pmap, cp_tol=cp_tol, tp_tol=tp_tol):
        return pmap
    m = pmap.matrix.copy()
    for _ in range(max_iter):
        prev = m.copy()
        choi = choi_of(ProcessMap(m))
        w, v = np.linalg.eigh(choi)
        if w.min() < 0.0:
            choi = (v * np.clip(w, 0.0, None)) @ v.conj().T
            m = choi_to_map(choi).matrix.copy()
        m[0] = (1.0, 0.0, 0.0, 0.0)
        delta = np.linalg.norm(m - prev)
        if delta < tol:
            out = ProcessMap(m)
            if is_physical(out, cp_tol=cp_tol, tp_tol=tp_tol):
                return out
    residual = float(np.linalg.norm(m - prev))
    raise ConvergenceError(
        f"physicality projection did not converge in {max_iter} iterations "
        f"(last step {residual:.3e})",
        residual=residual,
    )


def process_fidelity(a: ProcessMap, b: ProcessMap) -> float:
    """Jozsa fidelity between the trace-normalized Choi states of two maps."""
    for pmap in (a, b):
        if not is_physical(pmap, cp_tol=1e-8, tp_tol=1e-8):
            raise InvalidChannelError(
                "process_fidelity requires physical (CP + TP) maps"
            )
    rho = choi_of(a)
    sigma = choi_of(b)
    rho = rho / rho.trace().real
    sigma = sigma / sigma.trace().real
    sq = _sqrtm_psd(rho)
    inner = np.linalg.eigvalsh(sq @ sigma @ sq)
    fid = float(np.sqrt(np.clip(inner, 0.0, None)).sum() ** 2)
    return min(max(fid, 0.0), 1.0)


def apply_with_ancilla(pmap: ProcessMap, rho: np.ndarray) -> np.ndarray:
    """Apply the channel to the first qubit of a (spin (x) ancilla) state.

    ``rho`` is 4x4 ordered spin (x) ancilla; the result is 8x8 ordered
    spin (x) photon (x) ancilla.  Used to thread the cycle map through a
    retained earlier photon when localizing entanglement.
    """
    c4 = choi_of(pmap).reshape(2, 4, 2, 4)
    r4 = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)  # (i, k, I, K)
    out = np.einsum("ioIO,ikIK->okOK", c4, r4)
    return out.reshape(8, 8)


# ---------------------------------------------------------------------------
# Serialization helpers (formats shared by the CLI and the dataset files)
# ---------------------------------------------------------------------------


def matrix_to_json_dict(mat: np.ndarray) -> dict:
    """Complex matrix as {"dim": d, "re": [...], "im": [...]}, row-major."""
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidStateError("only square matrices are serialized")
    return {
        "dim": mat.shape[0],
        "re": [float(x) for x in mat.real.ravel()],
        "im": [float(x) for x in mat.imag.ravel()],
    }


def matrix_from_json_dict(obj) -> np.ndarray:
    d = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float).reshape(d, d)
    im = np.asarray(obj["im"], dtype=float).reshape(d, d)
    return re + 1j * im


def save_process_map(pmap: ProcessMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pmap.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_process_map(path) -> ProcessMap:
    with open(path, encoding="utf-8") as fh:
        return ProcessMap.from_json_dict(json.load(fh))
