import math
from dataclasses import replace

import numpy as np
import pytest

from gradcav.fields import (
    NormalizationError,
    eval_fields,
    eval_potential,
    gauge_divergence,
    helmholtz_residual,
    inner_product,
    normalization,
    normalize_mode,
    normalize_table,
    phi_profile,
)
from gradcav.spectrum import CavityGeometry, DielectricProfile, enumerate_modes, eta

CUBE = CavityGeometry(1.0, 1.0, 1.0)
P11 = DielectricProfile(beta=1.0, alpha=1.0)


@pytest.fixture(scope="module")
def table():
    return normalize_table(enumerate_modes(CUBE, P11, 8.0))


def wall_points(geom, n=16):
    s = (np.arange(n) + 0.5) / n
    u, v = np.meshgrid(s, s, indexing="ij")
    u, v = u.ravel(), v.ravel()
    Lx, Ly, Lz = geom.Lx, geom.Ly, geom.Lz
    zero, one = np.zeros_like(u), np.ones_like(u)
    # (points, normal axis)
    return [
        ((zero, u * Ly, v * Lz), 0), ((one * Lx, u * Ly, v * Lz), 0),
        ((u * Lx, zero, v * Lz), 1), ((u * Lx, one * Ly, v * Lz), 1),
        ((u * Lx, v * Ly, zero), 2), ((u * Lx, v * Ly, one * Lz), 2),
    ]


def field_scale(mode, geom, prof):
    g = np.linspace(0, 1, 9)
    X, Y, Z = np.meshgrid(g * geom.Lx, g * geom.Ly, g * geom.Lz, indexing="ij")
    f = eval_fields(mode, geom, prof, X, Y, Z)
    return np.max(np.abs(f.e)), np.max(np.abs(f.b))


def test_phi_profile_oracle(derived):
    d = derived["cavity_a1_b1"]
    z = float(d["TE_1_0_1_zeta"])
    phi, dphi = phi_profile("TE", 2 * math.pi, z, 7.3)
    assert phi == pytest.approx(float(d["phi_2pi_zetaTE101_7.3"][0]), rel=1e-12)
    assert dphi == pytest.approx(float(d["phi_2pi_zetaTE101_7.3"][1]), rel=1e-12)


def test_phi_vanishes_at_both_walls(table):
    for r in table.records[:10]:
        if r.pol.value != "TE":
            continue
        phi0, dphi0 = phi_profile("TE", r.nu, r.zeta, r.eta0, r.branch)
        phiL, _ = phi_profile("TE", r.nu, r.zeta, r.etaL, r.branch)
        assert abs(phi0) <= 1e-13 * abs(dphi0) * r.eta0
        assert abs(phiL) <= 1e-11 * abs(dphi0) * r.eta0


@pytest.mark.parametrize("pol,key,idx", [("TE", "TE_1_0_1_probe", (1, 0, 1)), ("TM", "TM_1_1_1_probe", (1, 1, 1))])
def test_probe_point_against_oracle(derived, table, pol, key, idx):
    d = derived["cavity_a1_b1"]
    ref = d[key]
    m = table.find(pol, *idx)
    assert m.norm == pytest.approx(float(ref["norm"]), rel=1e-11)
    r = [float(v) for v in d["probe"]]
    f = eval_fields(m, CUBE, P11, *r)
    A_ref = np.array([float(v) for v in ref["A"]])
    b_ref = np.array([float(v) for v in ref["b"]])
    assert np.max(np.abs(f.A.real - A_ref)) <= 1e-10 * np.max(np.abs(A_ref))
    assert np.max(np.abs(f.b.real - b_ref)) <= 1e-10 * np.max(np.abs(b_ref))
    assert np.all(f.A.imag == 0)
    assert np.allclose(f.e, 1j * m.omega * f.A, rtol=0, atol=0)
    assert np.allclose(f.d, P11.permittivity(r[2], 1.0) * f.e, rtol=1e-15)


def test_te_has_no_z_potential(table):
    m = table.find("TE", 2, 1, 1)
    X, Y, Z = np.meshgrid(*(np.linspace(0, 1, 5),) * 3, indexing="ij")
    assert np.all(eval_potential(m, CUBE, P11, X, Y, Z)[..., 2] == 0)


def test_tm_z_component_peaks_at_centre(table):
    m = table.find("TM", 1, 1, 1)
    xs = np.linspace(0, 1, 101)
    A = eval_potential(m, CUBE, P11, xs[:, None], xs[None, :], 0.4)
    i, j = np.unravel_index(np.argmax(np.abs(A[..., 2])), A.shape[:2])
    assert (xs[i], xs[j]) == (0.5, 0.5)


def test_boundary_conditions_all_walls(table):
    for m in table.records[:20]:
        emax, bmax = field_scale(m, CUBE, P11)
        for pts, axis in wall_points(CUBE):
            f = eval_fields(m, CUBE, P11, *pts)
            tang = [k for k in range(3) if k != axis]
            assert np.max(np.abs(f.e[:, tang])) <= 1e-9 * emax, (m.index, axis)
            assert np.max(np.abs(f.b[:, axis])) <= 1e-9 * bmax, (m.index, axis)


def test_gauge_te_exact_and_tm_second_order(table):
    r = (0.31, 0.47, 0.58)
    # with k_x = k_y the two central differences carry the same sinc factor and cancel exactly
    te = table.find("TE", 1, 1, 1)
    assert gauge_divergence(te, CUBE, P11, r, 1e-3) < 1e-12
    te = table.find("TE", 1, 2, 1)
    assert gauge_divergence(te, CUBE, P11, r, 1e-2) / gauge_divergence(te, CUBE, P11, r, 5e-3) == pytest.approx(
        4.0, rel=0.01)
    tm = table.find("TM", 1, 1, 1)
    h = 1e-2
    r1 = gauge_divergence(tm, CUBE, P11, r, h)
    r2 = gauge_divergence(tm, CUBE, P11, r, h / 2)
    assert r1 / r2 == pytest.approx(4.0, rel=0.01)
    assert gauge_divergence(tm, CUBE, P11, r, 1 / 2000) <= 1e-6
    # the residual is pure O(h^2) truncation: Richardson removes it for a higher mode too
    tm = table.find("TM", 2, 1, 2)
    s1 = gauge_divergence(tm, CUBE, P11, r, 1e-2, signed=True)
    s2 = gauge_divergence(tm, CUBE, P11, r, 5e-3, signed=True)
    assert abs(4 * s2 - s1) / 3 <= min(1e-6, 1e-3 * abs(s1))
    with pytest.raises(ValueError):
        gauge_divergence(tm, CUBE, P11, (0.001, 0.5, 0.5), 0.01)


def test_helmholtz_residual(table):
    rng = np.random.default_rng(7)
    for m in (table.find("TE", 1, 0, 2), table.find("TM", 2, 1, 1)):
        for r in rng.uniform(0.05, 0.95, size=(10, 3)):
            assert helmholtz_residual(m, CUBE, P11, r) <= 1e-8


def test_orthogonality(table):
    a = table.find("TE", 1, 0, 1)
    b = table.find("TE", 1, 0, 2)
    ab = inner_product(a, b, CUBE, P11)
    aa = inner_product(a, a, CUBE, P11)
    bb = inner_product(b, b, CUBE, P11)
    assert abs(ab) <= 1e-6 * math.sqrt(aa * bb)


def test_normalization_fields(table):
    m = table.find("TM", 1, 1, 1)
    res = normalization(m, CUBE, P11)
    assert res.Omega == eta(P11, CUBE, m.omega, 0.0)
    assert res.norm == pytest.approx(math.sqrt(res.norm_sq), rel=1e-15)
    assert res.I_value > 0


def test_normalization_positive_small_alpha():
    prof = DielectricProfile(beta=2.0, alpha=1e-3)
    t = enumerate_modes(CUBE, prof, 6.0)
    for r in t:
        assert normalization(r, CUBE, prof).I_value > 0


def test_non_positive_norm_is_an_error(table):
    m = table.find("TE", 1, 0, 1)
    # a wrong zeta sign leaves the closed form without a positive solution
    for z in np.linspace(-3, 3, 61):
        bad = replace(m, zeta=float(z), norm=None)
        try:
            normalization(bad, CUBE, P11)
        except NormalizationError:
            return
    pytest.fail("no non-positive norm^2 provoked")


def test_degenerate_te_nonzero(table):
    m = table.find("TE", 0, 1, 1)
    f = eval_fields(m, CUBE, P11, 0.5, 0.3, 0.5)
    assert np.max(np.abs(f.A)) > 0


def test_unsolved_and_outside_rejected(table):
    m = table.find("TE", 1, 0, 1)
    with pytest.raises(ValueError):
        eval_fields(replace(m, norm=None), CUBE, P11, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        eval_fields(m, CUBE, P11, 0.5, 0.5, 1.01)


def test_normalize_mode_idempotent(table):
    m = table.find("TM", 2, 1, 1)
    assert normalize_mode(m, CUBE, P11).norm == m.norm
