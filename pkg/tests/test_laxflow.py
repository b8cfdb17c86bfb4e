import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lzscatter.laxflow import (
    asymptotic_v3,
    evolve_lax,
    first_row_element,
    lagrange_projector,
    lz_closed_form,
    smatrix_from_bloch,
    smatrix_spin,
    spin_ladder,
    stochastic_defect,
    survival_weight,
)
from lzscatter.models import build_model, build_spin_rep
from lzscatter.numerics import OdeSettings, hermitian_eigs

LN2_OVER_PI = math.log(2.0) / math.pi


def test_closed_form_values():
    assert np.allclose(lz_closed_form(0.0, 1.0), np.eye(2))
    half = lz_closed_form(math.sqrt(LN2_OVER_PI), 1.0)
    assert np.allclose(half, np.full((2, 2), 0.5), atol=1e-14)
    assert lz_closed_form(1.0, 1.0)[0, 0] == pytest.approx(math.exp(-math.pi), abs=1e-12)
    with pytest.raises(ValueError):
        lz_closed_form(1.0, 0.0)
    with pytest.raises(ValueError):
        lz_closed_form(1.0, -2.0)


def test_asymptotic_v3_limits():
    assert asymptotic_v3(0.0, 1.0) == -1.0
    assert asymptotic_v3(math.sqrt(LN2_OVER_PI), 1.0) == pytest.approx(0.0, abs=1e-14)
    assert asymptotic_v3(1.0, 1e-3) == pytest.approx(1.0)


def test_projector_diagonal_cases():
    p = lagrange_projector(np.diag([0.5, -0.5]), [-0.5, 0.5], 1)
    assert np.allclose(p, np.diag([1.0, 0.0]))
    p0 = lagrange_projector(np.diag([1.0, 0.0, -1.0]), [-1.0, 0.0, 1.0], 1)
    assert np.allclose(p0, np.diag([0.0, 1.0, 0.0]))


def test_projector_rank_one_spin_half():
    rep = build_spin_rep(2)
    v = np.array([0.6, 0.0, 0.8])
    vmat = v[0] * rep.x + v[1] * rep.y + v[2] * rep.z
    p_plus = lagrange_projector(vmat, [-0.5, 0.5], 1)
    expect = 0.5 * np.eye(2) + vmat
    assert np.abs(p_plus - expect).max() < 1e-14


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_projector_idempotent_and_complete(k):
    rep = build_spin_rep(k)
    v = np.array([0.48, -0.36, 0.8])
    v = v / np.linalg.norm(v)
    vmat = v[0] * rep.x + v[1] * rep.y + v[2] * rep.z
    ladder = spin_ladder(k)
    total = np.zeros((k, k), dtype=complex)
    for i in range(k):
        p = lagrange_projector(vmat, ladder, i)
        assert np.abs(p @ p - p).max() < 1e-10
        total += p
    assert np.abs(total - np.eye(k)).max() < 1e-10


def test_projector_matches_eigenvector_outer_product():
    # independent route: dense eigendecomposition
    rng = np.random.default_rng(2)
    raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = raw + raw.conj().T
    w, vecs = hermitian_eigs(m)
    for i in range(4):
        direct = np.outer(vecs[:, i], vecs[:, i].conj())
        assert np.abs(lagrange_projector(m, w, i) - direct).max() < 1e-9


def test_projector_validation():
    with pytest.raises(ValueError, match="distinct"):
        lagrange_projector(np.diag([1.0, 1.0]), [1.0, 1.0], 0)
    with pytest.raises(ValueError, match="spectrum"):
        lagrange_projector(np.diag([1.0, -1.0]), [-0.5, 0.5], 0)
    with pytest.raises(IndexError):
        lagrange_projector(np.diag([0.5, -0.5]), [-0.5, 0.5], 2)


def test_smatrix_spin_k2_equals_closed_form():
    for d in (0.1, 0.7, 1.6):
        for a in (0.3, 1.0, 2.0):
            dev = np.abs(smatrix_spin(2, d, a) - lz_closed_form(d, a)).max()
            assert dev < 1e-12


def test_smatrix_spin_k3_corrected_center():
    d, a = 0.8, 1.0
    u = survival_weight(d, a)
    v = 1.0 - u
    s = smatrix_spin(3, d, a)
    expect = np.array(
        [
            [u * u, 2 * u * v, v * v],
            [2 * u * v, (1 - 2 * u) ** 2, 2 * u * v],
            [v * v, 2 * u * v, u * u],
        ]
    )
    assert np.abs(s - expect).max() < 1e-12
    # the same matrix in the (m=+1, m=-1, m=0) basis order
    p = [0, 2, 1]
    permuted_order = np.array(
        [
            [u * u, v * v, 2 * u * v],
            [v * v, u * u, 2 * u * v],
            [2 * u * v, 2 * u * v, (1 - 2 * u) ** 2],
        ]
    )
    assert np.abs(s[np.ix_(p, p)] - permuted_order).max() < 1e-12


def test_smatrix_spin_k4_with_corrected_33():
    d, a = 0.6, 1.1
    u = survival_weight(d, a)
    v = 1.0 - u
    s = smatrix_spin(4, d, a)
    expect = np.array(
        [
            [u ** 3, 3 * u * u * v, 3 * u * v * v, v ** 3],
            [3 * u * u * v, u * (3 * u - 2) ** 2, (1 - 3 * u) ** 2 * v, 3 * u * v * v],
            [3 * u * v * v, (1 - 3 * u) ** 2 * v, u * (3 * u - 2) ** 2, 3 * u * u * v],
            [v ** 3, 3 * u * v * v, 3 * u * u * v, u ** 3],
        ]
    )
    assert np.abs(s - expect).max() < 1e-12


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_smatrix_spin_identity_at_zero_coupling(k):
    assert np.abs(smatrix_spin(k, 0.0, 1.0) - np.eye(k)).max() < 1e-14


@settings(max_examples=30, deadline=None)
@given(
    st.integers(2, 6),
    st.floats(0.05, 2.0),
    st.floats(0.2, 2.0),
)
def test_smatrix_spin_invariants(k, d, a):
    s = smatrix_spin(k, d, a)
    assert stochastic_defect(s) < 1e-12
    assert np.abs(s - s.T).max() < 1e-12
    assert np.abs(s - s[::-1, ::-1]).max() < 1e-12  # persymmetry
    assert s.min() >= 0.0 and s.max() <= 1.0 + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2 * math.pi))
def test_azimuthal_invariance(phi):
    k, d, a = 4, 0.5, 1.0
    v3 = asymptotic_v3(d, a)
    r = math.sqrt(1.0 - v3 * v3)
    base = smatrix_spin(k, d, a)
    rotated = smatrix_from_bloch(k, (r * math.cos(phi), r * math.sin(phi), v3))
    assert np.abs(base - rotated).max() < 1e-12


def test_first_row_examples():
    d, a = 0.9, 1.3
    u = survival_weight(d, a)
    v = 1.0 - u
    assert first_row_element(4, d, a, 1) == pytest.approx(u ** 3, rel=1e-14)
    assert first_row_element(4, d, a, 2) == pytest.approx(3 * u * u * v, rel=1e-14)
    assert first_row_element(3, d, a, 3) == pytest.approx(v * v, rel=1e-14)
    with pytest.raises(IndexError):
        first_row_element(4, d, a, 5)
    with pytest.raises(IndexError):
        first_row_element(4, d, a, 0)


@pytest.mark.parametrize("n", range(2, 9))
def test_first_row_matches_smatrix(n):
    d, a = 0.55, 0.9
    s = smatrix_spin(n, d, a)
    row = np.array([first_row_element(n, d, a, j) for j in range(1, n + 1)])
    assert np.abs(s[0] - row).max() < 1e-12
    # binomial identity keeps the row summing to one
    assert row.sum() == pytest.approx(1.0, abs=1e-12)


def test_evolve_lax_commuting_generator():
    m = build_model("spin", k=3, delta=0.0, slope=1.0)
    v_mat, bloch = evolve_lax(m, (0.0, 0.0, 1.0), -30.0, 30.0,
                              OdeSettings(rtol=1e-9, atol=1e-11))
    rep = build_spin_rep(3)
    assert np.abs(v_mat - rep.z).max() < 1e-10
    assert bloch.v3 == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_evolve_lax_isospectral(k):
    m = build_model("spin", k=k, delta=1.0, slope=1.0)
    settings_ = OdeSettings(rtol=1e-9, atol=1e-11)
    v_mat, bloch = evolve_lax(m, (0.3, -0.4, 0.8), -40.0, 40.0, settings_)
    ladder = spin_ladder(k) * math.sqrt(0.3 ** 2 + 0.4 ** 2 + 0.8 ** 2)
    drift = np.abs(np.linalg.eigvalsh(v_mat) - ladder).max()
    assert drift < 1e-8
    assert bloch.norm == pytest.approx(math.sqrt(0.89), abs=1e-9)


def test_evolve_lax_v3_reaches_crossing_asymptote():
    # finite sweep window, so allow the residual oscillation envelope
    m = build_model("spin", k=2, delta=1.0, slope=1.0)
    _, bloch = evolve_lax(m, (0.0, 0.0, 1.0), -100.0, 100.0,
                          OdeSettings(rtol=1e-9, atol=1e-11))
    assert abs(abs(bloch.v3) - abs(asymptotic_v3(1.0, 1.0))) < 2e-2


def test_evolve_lax_permuted_basis_family():
    m = build_model("adjoint3", delta=0.0, slope=1.0)
    v_mat, bloch = evolve_lax(m, (0.0, 0.0, 1.0), -20.0, 20.0,
                              OdeSettings(rtol=1e-9, atol=1e-11))
    p = list(m.spin_basis_permutation)
    z_perm = build_spin_rep(3).z[np.ix_(p, p)]
    assert np.abs(v_mat - z_perm).max() < 1e-10
    assert bloch.v3 == pytest.approx(1.0, abs=1e-10)


def test_evolve_lax_rejects_non_spin_models():
    bt = build_model("bowtie3", delta=0.5, slope=1.0, eps=1.0)
    with pytest.raises(ValueError, match="spin-family"):
        evolve_lax(bt, (0, 0, 1), -1.0, 1.0)
