import json

import numpy as np
import pytest

from spincluster import quantum as q
from spincluster.errors import InvalidChannelError, InvalidStateError


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / rho.trace()


def test_bloch_to_density_examples():
    assert np.allclose(q.bloch_to_density((0, 0, 1)), np.diag([1.0, 0.0]))
    assert np.allclose(q.bloch_to_density((0, 0, 0)), 0.5 * np.eye(2))
    assert np.allclose(q.bloch_to_density((1, 0, 0)), 0.5 * np.ones((2, 2)))
    with pytest.raises(InvalidStateError):
        q.bloch_to_density((1.0, 1.0, 0.1))


def test_density_to_bloch_examples():
    assert np.allclose(q.density_to_bloch(np.diag([1.0, 0.0])), (0, 0, 1))
    assert np.allclose(q.density_to_bloch(0.5 * np.eye(2)), (0, 0, 0))
    rho_y = 0.5 * np.array([[1.0, -1j], [1j, 1.0]])
    assert np.allclose(q.density_to_bloch(rho_y), (0, 1, 0))
    with pytest.raises(InvalidStateError):
        q.density_to_bloch(np.array([[1.0, 0.5], [0.1, 0.0]]))


def test_bloch_density_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        s = rng.normal(size=3)
        s *= rng.uniform(0, 1) / np.linalg.norm(s)
        rho = q.bloch_to_density(s)
        assert np.abs(rho - q.bloch_to_density(q.density_to_bloch(rho))).max() < 1e-12


def test_state_fidelity_examples():
    up = np.diag([1.0, 0.0]).astype(complex)
    down = np.diag([0.0, 1.0]).astype(complex)
    assert q.state_fidelity(up, up) == pytest.approx(1.0, abs=1e-12)
    assert q.state_fidelity(up, down) == pytest.approx(0.0, abs=1e-12)
    assert q.state_fidelity(up, 0.5 * np.eye(2)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(InvalidStateError):
        q.state_fidelity(up, 0.25 * np.eye(4))


def test_state_fidelity_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        dim = 2 if rng.random() < 0.5 else 4
        rho, sig = random_density(rng, dim), random_density(rng, dim)
        assert q.state_fidelity(rho, sig) == pytest.approx(
            q.state_fidelity(sig, rho), abs=1e-10
        )


def test_choi_of_product_channel():
    # rho -> rho (x) rho_photon is an identity channel into a fixed photon state.
    photon_bloch = np.array([0.3, -0.2, 0.5])
    m = np.zeros((16, 4))
    s = np.concatenate(([1.0], photon_bloch))
    for a in range(4):
        for b in range(4):
            m[q.pair_index(a, b), a] = s[b]
    choi = q.choi_of(q.ProcessMap(m))
    # Expected: 2 * |Phi+><Phi+| on (in, spin), photon state on the last factor.
    rho_ph = q.bloch_to_density(photon_bloch)
    expected = np.zeros((8, 8), dtype=complex)
    for i in range(2):
        for jj in range(2):
            block = np.zeros((2, 2), dtype=complex)
            block[i, jj] = 1.0
            expected += np.kron(np.kron(block, block), rho_ph)
    assert np.abs(choi - expected).max() < 1e-12
    assert np.allclose(q.choi_input_trace(choi), np.eye(2))


def test_choi_of_ideal_is_rank_one():
    choi = q.choi_of(q.ideal_cycle_map())
    evals = np.linalg.eigvalsh(choi)
    assert evals.min() > -1e-12
    assert (evals > 1e-9).sum() == 1
    assert evals.max() == pytest.approx(2.0, abs=1e-12)


def test_choi_detects_broken_trace_row():
    m = q.ideal_cycle_map().matrix.copy()
    m[0] = (0.9, 0.0, 0.1, 0.0)
    choi = q.choi_of(q.ProcessMap(m))
    assert not np.allclose(q.choi_input_trace(choi), np.eye(2), atol=1e-6)


def test_choi_map_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = q.ProcessMap(rng.normal(size=(16, 4)))
        again = q.choi_to_map(q.choi_of(m))
        assert np.abs(again.matrix - m.matrix).max() < 1e-10


def test_project_to_physical_fixed_point():
    ideal = q.ideal_cycle_map()
    out = q.project_to_physical(ideal)
    assert np.abs(out.matrix - ideal.matrix).max() < 1e-12


def test_project_to_physical_small_perturbation():
    # Frozen oracle: dense SDP (cvxpy/SCS) on this instance gives the
    # nearest-CPTP Frobenius distance 8.10107e-4 for a +0.001 push of the
    # ZZ<-Z element past the CP boundary.
    ideal = q.ideal_cycle_map()
    pert = ideal.matrix.copy()
    pert[q.pair_index(3, 3), 3] += 0.001
    pmap = q.ProcessMap(pert)
    assert q.min_choi_eigenvalue(pmap) < -1e-5
    fixed = q.project_to_physical(pmap)
    assert q.is_physical(fixed)
    distance = np.linalg.norm(fixed.matrix - pert)
    sdp_distance = 8.10107e-4
    assert distance <= sdp_distance * 1.001 + 1e-9
    assert distance <= 0.001  # the spec's 0.001 * c bound with c < 1


def test_project_to_physical_zero_matrix():
    out = q.project_to_physical(q.ProcessMap(np.zeros((16, 4))))
    assert np.allclose(out.matrix[0], (1, 0, 0, 0))
    assert q.is_physical(out)


def test_project_to_physical_idempotent():
    rng = np.random.default_rng(5)
    for _ in range(10):
        noisy = q.ProcessMap(
            q.ideal_cycle_map().matrix + 0.05 * rng.normal(size=(16, 4))
        )
        first = q.project_to_physical(noisy)
        second = q.project_to_physical(first)
        assert np.abs(second.matrix - first.matrix).max() < 1e-10


def test_ideal_cycle_map_output():
    ideal = q.ideal_cycle_map()
    c = ideal.apply_coeffs([1.0, 0.0, 0.0, 1.0])
    assert c[q.pair_index(0, 3)] == pytest.approx(-1.0, abs=1e-12)  # photon m3
    spin = [c[q.pair_index(i, 0)] for i in (1, 2, 3)]
    assert abs(spin[2]) < 1e-12  # spin moved to the equator
    assert np.hypot(spin[0], spin[1]) == pytest.approx(1.0, abs=1e-12)
    assert q.process_fidelity(ideal, ideal) == pytest.approx(1.0, abs=1e-12)


def _jozsa(rho, sigma):
    w, v = np.linalg.eigh(rho)
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    inner = np.linalg.eigvalsh(sq @ sigma @ sq)
    return float(np.sqrt(np.clip(inner, 0, None)).sum() ** 2)


def test_process_fidelity_depolarizing():
    # Independent route: construct both Choi states directly and evaluate
    # the Jozsa formula with a separate eigensolver implementation.
    ideal = q.ideal_cycle_map()
    depol = np.zeros((16, 4))
    depol[0, 0] = 1.0
    dmap = q.ProcessMap(depol)
    choi_dep = np.kron(np.eye(2), np.eye(4) / 4.0)  # E(|i><j|) = delta_ij I/4
    choi_ideal = q.choi_of(ideal)
    expected = _jozsa(choi_ideal / 2.0, choi_dep / 2.0)
    assert expected == pytest.approx(0.125, abs=1e-7)
    assert q.process_fidelity(ideal, dmap) == pytest.approx(expected, abs=1e-6)


def test_process_fidelity_rejects_unphysical():
    bad = q.ideal_cycle_map().matrix.copy()
    bad[5, 2] += 0.5
    with pytest.raises(InvalidChannelError):
        q.process_fidelity(q.ProcessMap(bad), q.ideal_cycle_map())


def test_process_map_serialization_round_trip(tmp_path):
    ideal = q.ideal_cycle_map()
    path = tmp_path / "map.json"
    q.save_process_map(ideal, path)
    obj = json.loads(path.read_text())
    assert obj["rows"] == 16 and obj["cols"] == 4 and len(obj["data"]) == 64
    loaded = q.load_process_map(path)
    assert np.abs(loaded.matrix - ideal.matrix).max() == 0.0


def test_matrix_json_round_trip():
    rng = np.random.default_rng(9)
    mat = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    again = q.matrix_from_json_dict(q.matrix_to_json_dict(mat))
    assert np.abs(again - mat).max() < 1e-15


def test_apply_matches_coeffs():
    rng = np.random.default_rng(13)
    pmap = q.project_to_physical(
        q.ProcessMap(q.ideal_cycle_map().matrix + 0.03 * rng.normal(size=(16, 4)))
    )
    s = np.array([0.2, -0.4, 0.5])
    rho_out = pmap.apply(q.bloch_to_density(s))
    c = pmap.apply_coeffs(np.concatenate(([1.0], s)))
    for k in range(16):
        assert np.trace(q.PAULI_PAIRS[k] @ rho_out).real == pytest.approx(
            c[k], abs=1e-12
        )
    assert rho_out.trace().real == pytest.approx(1.0, abs=1e-12)
