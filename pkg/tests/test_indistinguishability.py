import math

import numpy as np
import pytest

from spincluster import indist as ind
from spincluster.errors import ConfigError, DomainError


def test_formula_limits():
    perfect = ind.EmitterTimescales(tau_init=0.0, tau_photon=400.0, tau_final=math.inf)
    assert ind.indistinguishability(perfect) == pytest.approx(1.0, abs=1e-15)


def test_formula_hh_trion_value():
    t = ind.EmitterTimescales(tau_init=20.0, tau_photon=400.0, tau_final=math.inf)
    value = ind.indistinguishability(t)
    assert value == pytest.approx(1.0 / 1.05, abs=1e-15)
    assert round(value, 3) == 0.952


def test_formula_monotonicity():
    base = dict(tau_init=20.0, tau_photon=400.0, tau_final=2000.0)
    v0 = ind.indistinguishability(ind.EmitterTimescales(**base))
    worse_jitter = ind.indistinguishability(
        ind.EmitterTimescales(**{**base, "tau_init": 40.0})
    )
    better_final = ind.indistinguishability(
        ind.EmitterTimescales(**{**base, "tau_final": 4000.0})
    )
    assert worse_jitter < v0 < better_final


def test_formula_bounds_and_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(200):
        tau_photon = rng.uniform(10, 1000)
        r_init = rng.uniform(0.0, 5.0)
        r_final = rng.uniform(0.0, 5.0)
        t = ind.EmitterTimescales(
            tau_init=r_init * tau_photon,
            tau_photon=tau_photon,
            tau_final=tau_photon / r_final if r_final > 0 else math.inf,
        )
        v = ind.indistinguishability(t)
        assert 0.0 < v <= 1.0
        # the two degradation ratios enter symmetrically
        swapped = ind.EmitterTimescales(
            tau_init=r_final * tau_photon,
            tau_photon=tau_photon,
            tau_final=tau_photon / r_init if r_init > 0 else math.inf,
        )
        assert ind.indistinguishability(swapped) == pytest.approx(v, rel=1e-12)
    with pytest.raises(DomainError):
        ind.EmitterTimescales(tau_init=0.0, tau_photon=0.0, tau_final=math.inf)


def test_hom_from_areas():
    assert ind.hom_from_areas(0.0, 1.0) == pytest.approx(1.0)
    assert ind.hom_from_areas(2.0, 2.0) == pytest.approx(0.0)
    assert ind.hom_from_areas(0.05, 1.0) == pytest.approx(0.95)
    rng = np.random.default_rng(2)
    for _ in range(100):
        a_co, a_cross = rng.uniform(0.0, 2.0), rng.uniform(0.1, 2.0)
        c = rng.uniform(0.01, 10.0)
        assert ind.hom_from_areas(c * a_co, c * a_cross) == pytest.approx(
            ind.hom_from_areas(a_co, a_cross), rel=1e-12
        )
    with pytest.raises(DomainError):
        ind.hom_from_areas(1.0, 0.0)
    with pytest.raises(DomainError):
        ind.hom_from_areas(-0.1, 1.0)


def test_field_table_interpolation(tmp_path):
    assert ind.interpolate_indistinguishability(0.0) == pytest.approx(0.95)
    assert ind.interpolate_indistinguishability(1.0) == pytest.approx(0.50)
    mid = ind.interpolate_indistinguishability(0.075)
    assert 0.82 < mid < 0.88
    with pytest.raises(DomainError):
        ind.interpolate_indistinguishability(-0.1)
    path = tmp_path / "table.csv"
    path.write_text("b_tesla,i_nd\n0.0,0.9\n0.2,0.5\n")
    table = ind.load_indistinguishability_table(path)
    assert ind.interpolate_indistinguishability(0.1, table) == pytest.approx(0.7)
    path.write_text("b_tesla,i_nd\n")
    with pytest.raises(ConfigError):
        ind.load_indistinguishability_table(path)
    with pytest.raises(ConfigError):
        ind.load_indistinguishability_table(tmp_path / "missing.csv")


def test_shipped_table_matches_defaults():
    import pathlib

    shipped = pathlib.Path(__file__).resolve().parents[1] / "configs" / (
        "indistinguishability_measured.csv"
    )
    table = ind.load_indistinguishability_table(shipped)
    assert np.allclose(table, np.asarray(ind.DEFAULT_FIELD_TABLE))
