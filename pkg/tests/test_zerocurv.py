import dataclasses

import numpy as np
import pytest

from lzscatter.models import SingularPartnerError, build_model
from lzscatter.zerocurv import PASS_THRESHOLD, curvature_residual, verify_pair


def bowtie3():
    return build_model("bowtie3", delta=0.3, slope=1.1, eps=0.8)


def test_bowtie3_residual_exact_derivative():
    m = bowtie3()
    rng = np.random.default_rng(0)
    for _ in range(6):
        r = curvature_residual(m, rng.uniform(-8, 8), rng.uniform(0.2, 3.0))
        assert np.abs(r).max() <= 1e-12


def test_residual_is_hermitian():
    m = build_model("su3adj8", delta=0.35, slope=0.7, eps=1.3)
    r = curvature_residual(m, 2.2, 0.9)
    assert np.abs(r - r.conj().T).max() < 1e-12


def test_finite_difference_route_agrees():
    # catalog A(eps) entries are linear in eps, so the central difference
    # reproduces the exact derivative to roundoff
    m = bowtie3()
    r = curvature_residual(m, 1.5, 0.9, delta=1e-4 * 0.9)
    assert np.abs(r).max() < 1e-10


def test_finite_difference_step_validation():
    m = bowtie3()
    with pytest.raises(ValueError):
        curvature_residual(m, 0.0, 1.0, delta=0.0)
    with pytest.raises(ValueError):
        curvature_residual(m, 0.0, 1.0, delta=0.1)


def test_missing_and_singular_partner():
    lz = build_model("lz2", delta=1.0, slope=1.0)
    with pytest.raises(Exception, match="no partner"):
        curvature_residual(lz, 0.0, 1.0)
    m = bowtie3()
    with pytest.raises(SingularPartnerError):
        curvature_residual(m, 0.0, 0.0)


@pytest.mark.parametrize(
    "family,params",
    [
        ("bowtie3", dict(delta=0.3, slope=1.1, eps=0.8)),
        ("bowtieN", dict(delta=[0.21, 0.4, 0.13], slope=[0.6, -1.4, 2.3], eps=0.9)),
        ("su3six", dict(delta=0.2, slope=0.4, eps=1.0)),
        ("su3adj8", dict(delta=0.2, slope=0.4, eps=1.0)),
    ],
)
def test_verify_pair_passes(family, params):
    report = verify_pair(build_model(family, **params))
    assert report.passed
    assert report.max_residual <= PASS_THRESHOLD


def test_verify_pair_detects_broken_partner():
    m = bowtie3()
    broken = dataclasses.replace(m, e0_of=lambda e: np.zeros((3, 3), dtype=complex))
    report = verify_pair(broken)
    assert not report.passed
    # the residual is set by the scale of dH/deps once E is wrong
    assert report.max_residual > 0.5


def test_verify_pair_detects_mismatched_symbol():
    # the partner coupling written with an independent symbol must equal
    # the sweep rate; any other value leaves a residual above 1e-3
    m = build_model("su3six", delta=0.2, slope=0.4, eps=1.0, partner_b=0.8)
    report = verify_pair(m)
    assert not report.passed
    assert report.max_residual > 1e-3


def test_verify_pair_detects_wrong_equal_slope_weight():
    # doubled 1/eps weight on the equal-slope pair slot: also detectable
    m = build_model("su3six", delta=0.2, slope=0.4, eps=1.0)

    def skewed(e, base=m.e0_of):
        out = base(e)
        out[3, 4] *= np.sqrt(2.0)
        out[4, 3] *= np.sqrt(2.0)
        return out

    report = verify_pair(dataclasses.replace(m, e0_of=skewed))
    assert not report.passed
    assert report.max_residual > 1e-3


def test_verdict_stable_under_grid_refinement():
    m = build_model("su3adj8", delta=0.25, slope=0.5, eps=0.7)
    base = verify_pair(m)
    fine_t = np.linspace(-10, 10, 11)
    fine_e = [e for e in np.linspace(-3, 3, 13) if e != 0.0]
    refined = verify_pair(m, t_grid=fine_t, eps_grid=fine_e)
    assert base.passed == refined.passed


def test_grid_rejects_pole():
    with pytest.raises(ValueError, match="pole"):
        verify_pair(bowtie3(), eps_grid=[0.0, 1.0])


def test_report_json_shape():
    report = verify_pair(bowtie3())
    blob = report.to_json_dict()
    assert set(blob) == {"family", "max_residual", "worst_point", "pass"}
    assert set(blob["worst_point"]) == {"t", "eps"}
    assert blob["pass"] is True
