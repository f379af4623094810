"""Synthetic polarization-correlation tomography of the cycle map.

The forward model mirrors the physical measurement: a spin is prepared
in one of six cardinal states, one cycle of the protocol is applied,
the emitted photon is (optionally) projected on a Stokes axis, and the
surviving spin is read out through the time-resolved degree of circular
polarization of the next emission.  The readout pulse converts the spin
to the trion coherently; a +Y-polarized pulse imprints a quarter turn
about z on the coherence relative to a +X pulse, so the two analysis
pulses together with the trion precession span all three spin
components.  Per-trace intensities (stored as per-bin counts) carry the
branch probabilities, which the conditional polarization alone cannot
fix.

Reconstruction is a projected least-squares fit: the de-normalized
residual D_cp * P(map) - z(t) . V(map) is linear in the 64 map
elements, so an unconstrained weighted solve (with the trace-preserving
row eliminated exactly) gives the seed estimate, which is then refined
by monotone projected gradient steps onto the physical (CP + TP) set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .centralspin import PhysicalParams, ensemble_evolution_curve
from .errors import (
    EmptyRequestError,
    IdentifiabilityError,
    InvalidChannelError,
    InvalidStateError,
)
from .quantum import (
    ProcessMap,
    as_spin_vector,
    as_stokes_vector,
    is_physical,
    pair_index,
    project_to_physical,
)

INIT_STATES = {
    "x+": (1.0, 0.0, 0.0),
    "x-": (-1.0, 0.0, 0.0),
    "y+": (0.0, 1.0, 0.0),
    "y-": (0.0, -1.0, 0.0),
    "z+": (0.0, 0.0, 1.0),
    "z-": (0.0, 0.0, -1.0),
}

PHOTON_PROJECTIONS = {
    "z+": (0.0, 0.0, 1.0),
    "z-": (0.0, 0.0, -1.0),
    "x+": (1.0, 0.0, 0.0),
    "x-": (-1.0, 0.0, 0.0),
    "y+": (0.0, 1.0, 0.0),
    "y-": (0.0, -1.0, 0.0),
}

# Analysis-pulse polarization -> z-rotation angle imprinted on the
# converted trion coherence.
ANALYSIS_PHASES = {"x": 0.0, "y": 0.5 * math.pi}

DEFAULT_BINS = 50
DEFAULT_READOUT_SAMPLES = 20000
# Readout traces span a few radiative lifetimes, matching the visible
# decay of the time-resolved correlation measurements.
READOUT_SPAN_LIFETIMES = 3.0


@dataclass(frozen=True)
class DcpTrace:
    """One time-resolved degree-of-circular-polarization trace."""

    times: tuple
    values: tuple
    counts: tuple | None
    label: tuple  # (init id, photon projection id or "", analysis pulse id)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.size == 0:
            raise EmptyRequestError("a trace needs at least one time bin")
        if np.any(np.diff(times) <= 0.0):
            raise InvalidStateError("trace times must be strictly increasing")
        values = np.asarray(self.values, dtype=float)
        if np.any(np.abs(values) > 1.0 + 1e-9):
            raise InvalidStateError("|D_cp| cannot exceed 1")

    def to_json_dict(self) -> dict:
        out = {
            "label": list(self.label),
            "times": [float(t) for t in self.times],
            "values": [float(v) for v in self.values],
        }
        if self.counts is not None:
            out["counts"] = [float(c) for c in self.counts]
        return out

    @classmethod
    def from_json_dict(cls, obj) -> "DcpTrace":
        counts = obj.get("counts")
        return cls(
            times=tuple(obj["times"]),
            values=tuple(obj["values"]),
            counts=None if counts is None else tuple(counts),
            label=tuple(obj["label"]),
        )


@dataclass(frozen=True)
class TomographyDataset:
    """The 6-initialization x 12-trace design plus its generation metadata."""

    traces: tuple
    params: PhysicalParams
    seed: int
    bins: int
    shots: int | None = None
    readout_samples: int = DEFAULT_READOUT_SAMPLES

    def labels(self):
        return [trace.label for trace in self.traces]


def _conditional_branch(pmap: ProcessMap, init, proj):
    """Weighted spin vector V and branch probability P after the map."""
    r = np.concatenate(([1.0], as_spin_vector(np.asarray(init, dtype=float))))
    c = pmap.apply_coeffs(r)
    if proj is None:
        return np.array([c[pair_index(i, 0)] for i in (1, 2, 3)]), 1.0
    m = as_stokes_vector(np.asarray(proj, dtype=float))
    prob = 0.5 * (1.0 + sum(m[b - 1] * c[pair_index(0, b)] for b in (1, 2, 3)))
    vec = 0.5 * np.array(
        [
            c[pair_index(i, 0)]
            + sum(m[b - 1] * c[pair_index(i, b)] for b in (1, 2, 3))
            for i in (1, 2, 3)
        ]
    )
    return vec, float(prob)


def _rz(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _readout_rows(params: PhysicalParams, times, n_samples: int, seed: int):
    """z-row of the ensemble trion evolution at each bin time, (k, 3)."""
    tensors = ensemble_evolution_curve(params, "trion", times, n_samples, seed)
    return tensors[:, 2, :]


def _bin_times(params: PhysicalParams, bins: int) -> np.ndarray:
    if bins < 1:
        raise EmptyRequestError("at least one time bin is required")
    span = READOUT_SPAN_LIFETIMES * params.tau_photon
    edges = np.linspace(0.0, span, bins + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def _bin_emission_weights(params: PhysicalParams, times: np.ndarray) -> np.ndarray:
    w = np.exp(-times / params.tau_photon)
    return w / w.sum()


def simulate_dcp(
    params: PhysicalParams,
    pmap: ProcessMap,
    init,
    photon_proj,
    analysis_basis: str,
    bins: int = DEFAULT_BINS,
    seed: int = 0,
    shots: int | None = None,
    n_samples: int = DEFAULT_READOUT_SAMPLES,
    label: tuple | None = None,
    readout_rows=None,
) -> DcpTrace:
    """Time-resolved D_cp trace of the readout emission.

    ``photon_proj`` is a Stokes vector or None (no projection).  With
    finite ``shots`` the per-bin counts follow the branch probability
    and the radiative envelope, and the polarization split is binomial.
    """
    if analysis_basis not in ANALYSIS_PHASES:
        raise InvalidStateError(f"analysis basis must be one of {tuple(ANALYSIS_PHASES)}")
    if not is_physical(pmap, cp_tol=1e-7, tp_tol=1e-7):
        raise InvalidChannelError("simulate_dcp requires a physical map")
    times = _bin_times(params, bins)
    if readout_rows is None:
        readout_rows = _readout_rows(params, times, n_samples, seed)
    vec, prob = _conditional_branch(pmap, init, photon_proj)
    if prob > 1e-12:
        s_read = _rz(ANALYSIS_PHASES[analysis_basis]) @ (vec / prob)
        values = readout_rows @ s_read
    else:
        prob = 0.0
        values = np.zeros(len(times))
    values = np.clip(values, -1.0, 1.0)
    weights = _bin_emission_weights(params, times)
    if shots is None:
        counts = prob * weights
    else:
        if shots < 1:
            raise EmptyRequestError("shots must be at least 1 (or None)")
        counts = np.floor(shots * prob * weights + 0.5)
        rng = np.random.Generator(np.random.Philox(key=seed ^ 0x5D0C))
        n_plus = rng.binomial(counts.astype(int), (1.0 + values) / 2.0)
        values = np.where(counts > 0, 2.0 * n_plus / np.maximum(counts, 1) - 1.0, 0.0)
    return DcpTrace(
        times=tuple(times),
        values=tuple(values),
        counts=tuple(counts),
        label=label if label is not None else ("?", "" if photon_proj is None else "?", analysis_basis),
    )


def generate_dataset(
    params: PhysicalParams,
    pmap: ProcessMap,
    bins: int = DEFAULT_BINS,
    seed: int = 0,
    shots: int | None = None,
    n_samples: int = DEFAULT_READOUT_SAMPLES,
) -> TomographyDataset:
    """The full 6 x 6 x 2 design: inits x photon projections x pulses."""
    times = _bin_times(params, bins)
    rows = _readout_rows(params, times, n_samples, seed)
    traces = []
    trace_index = 0
    for init_id, init in INIT_STATES.items():
        for proj_id, proj in PHOTON_PROJECTIONS.items():
            for pulse_id in ANALYSIS_PHASES:
                traces.append(
                    simulate_dcp(
                        params,
                        pmap,
                        init,
                        proj,
                        pulse_id,
                        bins=bins,
                        seed=seed + 104729 * (trace_index + 1),
                        shots=shots,
                        n_samples=n_samples,
                        label=(init_id, proj_id, pulse_id),
                        readout_rows=rows,
                    )
                )
                trace_index += 1
    return TomographyDataset(
        traces=tuple(traces),
        params=params,
        seed=seed,
        bins=bins,
        shots=shots,
        readout_samples=n_samples,
    )


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReconstructionResult:
    pmap: ProcessMap
    residual: float
    residual_log: tuple
    std_errors: np.ndarray
    n_iterations: int

    def to_json_dict(self) -> dict:
        return {
            "process_map": self.pmap.to_json_dict(),
            "residual": self.residual,
            "residual_log": list(self.residual_log),
            "std_errors": [float(x) for x in self.std_errors.ravel()],
            "n_iterations": self.n_iterations,
        }


def _expected_labels():
    return [
        (i, p, a)
        for i in INIT_STATES
        for p in PHOTON_PROJECTIONS
        for a in ANALYSIS_PHASES
    ]


# Free parameters: all map elements except the pinned (O, O) row.
_FREE = [(row, col) for row in range(1, 16) for col in range(4)]
_FREE_INDEX = {rc: i for i, rc in enumerate(_FREE)}


def _design_rows(label, trace: DcpTrace, params, readout_rows, zero_noise: bool):
    """Linear rows (A, b, w) for one trace: D*P(M) - z.V(M) = 0 plus the
    branch-probability row."""
    init_id, proj_id, pulse_id = label
    s0 = np.asarray(INIT_STATES[init_id])
    m = np.asarray(PHOTON_PROJECTIONS[proj_id])
    r = np.concatenate(([1.0], s0))
    phi = ANALYSIS_PHASES[pulse_id]
    z_rows = readout_rows @ _rz(phi)  # (bins, 3): z(t)^T Rz

    values = np.asarray(trace.values)
    counts = None if trace.counts is None else np.asarray(trace.counts, dtype=float)

    rows_a = []
    rows_b = []
    rows_w = []
    n_free = len(_FREE)
    # P(M) = 1/2 + (1/2) sum_b m_b c_(0,b);  V_i(M) = (1/2)(c_(i,0) + sum_b m_b c_(i,b))
    p_row = np.zeros(n_free)
    for b in (1, 2, 3):
        for j in range(4):
            p_row[_FREE_INDEX[(pair_index(0, b), j)]] += 0.5 * m[b - 1] * r[j]
    v_rows = np.zeros((3, n_free))
    for i in (1, 2, 3):
        for j in range(4):
            v_rows[i - 1, _FREE_INDEX[(pair_index(i, 0), j)]] += 0.5 * r[j]
            for b in (1, 2, 3):
                v_rows[i - 1, _FREE_INDEX[(pair_index(i, b), j)]] += 0.5 * m[b - 1] * r[j]
    for k, d in enumerate(values):
        row = d * p_row - z_rows[k] @ v_rows
        rows_a.append(row)
        rows_b.append(-0.5 * d)  # constant part of P moves to the rhs
        if zero_noise:
            rows_w.append(1.0)
        else:
            rows_w.append(0.0 if counts is None else counts[k])
    # Branch probability from relative intensities.
    if counts is not None:
        p_data = float(counts.sum())
        rows_a.append(p_row)
        rows_b.append(p_data - 0.5)
        rows_w.append(float(len(values)) if zero_noise else p_data + 1.0)
    return rows_a, rows_b, rows_w


def reconstruct_map(
    dataset: TomographyDataset,
    max_iter: int = 300,
    tol: float = 1e-12,
) -> ReconstructionResult:
    """Physical map that best fits a tomography dataset (weighted LS)."""
    expected = _expected_labels()
    present = set(dataset.labels())
    missing = [lab for lab in expected if lab not in present]
    if missing:
        raise IdentifiabilityError(
            f"dataset is missing {len(missing)} traces", missing=missing
        )
    params = dataset.params
    times = _bin_times(params, dataset.bins)
    readout_rows = _readout_rows(
        params, times, dataset.readout_samples, dataset.seed
    )
    zero_noise = dataset.shots is None
    blocks_a, blocks_b, blocks_w = [], [], []
    for trace in dataset.traces:
        a, b, w = _design_rows(trace.label, trace, params, readout_rows, zero_noise)
        blocks_a.extend(a)
        blocks_b.extend(b)
        blocks_w.extend(w)
    a = np.asarray(blocks_a)
    b = np.asarray(blocks_b)
    w = np.asarray(blocks_w)
    keep = w > 0.0
    a, b, w = a[keep], b[keep], w[keep]
    sw = np.sqrt(w)
    aw = a * sw[:, None]
    bw = b * sw
    if np.linalg.matrix_rank(aw) < len(_FREE):
        raise IdentifiabilityError(
            "design matrix is rank deficient; the readout precession cannot "
            "separate all spin components at these parameters"
        )
    x, *_ = np.linalg.lstsq(aw, bw, rcond=None)

    def embed(vec) -> ProcessMap:
        mat = np.zeros((16, 4))
        mat[0, 0] = 1.0
        for (rc, idx) in _FREE_INDEX.items():
            mat[rc] = vec[idx]
        return ProcessMap(mat)

    def extract(pmap: ProcessMap) -> np.ndarray:
        return np.array([pmap.matrix[rc] for rc in _FREE])

    def objective(vec) -> float:
        res = aw @ vec - bw
        return float(res @ res)

    pmap = project_to_physical(embed(x))
    x = extract(pmap)
    log = [objective(x)]
    lipschitz = np.linalg.norm(aw, 2) ** 2
    step = 1.0 / lipschitz
    iterations = 0
    for _ in range(max_iter):
        grad = 2.0 * (aw.T @ (aw @ x - bw))
        eta = step
        improved = False
        for _ in range(40):
            trial = project_to_physical(embed(x - eta * grad))
            cand = extract(trial)
            val = objective(cand)
            if val < log[-1] - 1e-18:
                x = cand
                log.append(val)
                improved = True
                break
            eta *= 0.5
        iterations += 1
        if not improved:
            break
        if len(log) > 1 and log[-2] - log[-1] < tol * max(log[0], 1e-30):
            break
    final = project_to_physical(embed(x))
    # Linearized per-element standard errors from the weighted normal matrix.
    dof = max(aw.shape[0] - len(_FREE), 1)
    sigma2 = log[-1] / dof
    cov = sigma2 * np.linalg.pinv(aw.T @ aw)
    se = np.zeros((16, 4))
    for rc, idx in _FREE_INDEX.items():
        se[rc] = math.sqrt(max(cov[idx, idx], 0.0))
    return ReconstructionResult(
        pmap=final,
        residual=log[-1],
        residual_log=tuple(log),
        std_errors=se,
        n_iterations=iterations,
    )


# ---------------------------------------------------------------------------
# Dataset files: JSON lines, metadata first, one trace per line.
# ---------------------------------------------------------------------------


def save_dataset_jsonl(dataset: TomographyDataset, path) -> None:
    meta = {
        "kind": "metadata",
        "params": {
            "g_hh": list(dataset.params.g_hh),
            "g_trion": list(dataset.params.g_trion),
            "a_hh": list(dataset.params.a_hh),
            "a_trion": list(dataset.params.a_trion),
            "b_ext": dataset.params.b_ext,
            "tau_photon": dataset.params.tau_photon,
            "tau_init": dataset.params.tau_init,
            "tau_final": dataset.params.tau_final,
            "t_pulse": dataset.params.t_pulse,
            "gyromagnetic_prefactor": dataset.params.gyromagnetic_prefactor,
        },
        "seed": dataset.seed,
        "bins": dataset.bins,
        "shots": dataset.shots,
        "readout_samples": dataset.readout_samples,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")
        for trace in dataset.traces:
            json.dump(trace.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")


def load_dataset_jsonl(path) -> TomographyDataset:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise InvalidStateError(f"{path}: empty dataset file")
    meta = json.loads(lines[0])
    if meta.get("kind") != "metadata":
        raise InvalidStateError(f"{path}: first JSONL line must be the metadata record")
    params_obj = dict(meta["params"])
    tau_final = params_obj["tau_final"]
    if tau_final is None or (isinstance(tau_final, str) and tau_final == "inf"):
        params_obj["tau_final"] = math.inf
    params = PhysicalParams(**params_obj)
    traces = tuple(DcpTrace.from_json_dict(json.loads(line)) for line in lines[1:])
    return TomographyDataset(
        traces=traces,
        params=params,
        seed=int(meta["seed"]),
        bins=int(meta["bins"]),
        shots=meta.get("shots"),
        readout_samples=int(meta.get("readout_samples", DEFAULT_READOUT_SAMPLES)),
    )
