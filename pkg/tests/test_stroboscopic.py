import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from squeezeion.core import DriveParams, MotionalState, TrapParams
from squeezeion.errors import DomainError, FitFailure
from squeezeion.stroboscopic import (
    PhaseScanPoint,
    StroboConfig,
    amplified_displacement,
    chi,
    fit_strobo_r,
    phase_scan,
    strobo_bright_fraction,
    with_r,
)

TRAP = dict(omega_z=1.59e6, Omega_c=7.6e6, omega_r=180e3)
PHIS = np.linspace(0, 2 * math.pi, 32, endpoint=False)


def make_cfg(r=1.25, nbar=0.38, N=86, f=3000.0, tau=1e-3, Gamma=0.0, delta_phi=0.0):
    return StroboConfig(
        TrapParams(N=N, **TRAP),
        DriveParams(f=f, tau=tau, Gamma=Gamma),
        MotionalState(nbar=nbar, r=r),
        delta_phi=delta_phi,
    )


def no_drive_bright(ftau, nbar, N, Gamma_tau):
    """Bright fraction without parametric drive, coded from scratch."""
    return 0.5 - 0.5 * math.exp(-Gamma_tau) * math.exp(-(ftau**2) * (2 * nbar + 1) * 2 / (4 * N))


def test_chi_examples():
    for phi in (0.0, 1.0, math.pi):
        assert chi(0.0, phi) == 2.0
    assert chi(1.25, 0.0) == pytest.approx(2 * math.exp(2.5), rel=1e-14)
    assert round(chi(1.25, 0.0), 2) == 24.36
    assert chi(1.25, math.pi) == pytest.approx(2 * math.exp(-2.5), rel=1e-14)
    assert round(chi(1.25, math.pi), 4) == 0.1642


def test_bright_fraction_examples():
    assert strobo_bright_fraction(make_cfg(f=0.0)) == 0.0
    assert strobo_bright_fraction(make_cfg(f=1e7)) == pytest.approx(0.5, abs=1e-12)
    # exponent ratio between aligned and orthogonal displacement
    cfg = make_cfg()
    lo = -math.log(1 - 2 * strobo_bright_fraction(cfg, 0.0))
    hi = -math.log(1 - 2 * strobo_bright_fraction(cfg, math.pi))
    assert lo / hi == pytest.approx(math.exp(5), rel=1e-9)


def test_phase_scan_flat_without_squeezing():
    pts = phase_scan(make_cfg(r=0.0, nbar=0.0), PHIS)
    vals = {p.bright_fraction for p in pts}
    assert len(vals) == 1


def test_phase_scan_shape():
    cfg = make_cfg()
    y = np.array([p.bright_fraction for p in phase_scan(cfg, PHIS)])
    y_shift = np.array([p.bright_fraction for p in phase_scan(cfg, PHIS + 2 * math.pi)])
    y_neg = np.array([p.bright_fraction for p in phase_scan(cfg, -PHIS)])
    np.testing.assert_allclose(y, y_shift, atol=1e-14)
    np.testing.assert_allclose(y, y_neg, atol=1e-14)
    assert np.argmax(y) == 0
    assert PHIS[np.argmin(y)] == pytest.approx(math.pi)


strobo_inputs = st.tuples(
    st.floats(0, 3), st.floats(0, 2 * math.pi), st.floats(0, 10), st.floats(0, 5), st.integers(1, 500)
)


@given(strobo_inputs)
def test_bright_fraction_bounded(p):
    r, phi, ftau, nbar, N = p
    y = strobo_bright_fraction(make_cfg(r=r, nbar=nbar, N=N, f=ftau / 1e-3), phi)
    assert 0.0 <= y <= 0.5


@given(st.floats(0, 20), st.floats(0, 5), st.integers(1, 500), st.floats(0, 3), st.floats(0, 2 * math.pi))
def test_no_drive_reduction(ftau, nbar, N, gamma_tau, phi):
    cfg = make_cfg(r=0.0, nbar=nbar, N=N, f=ftau / 1e-3, Gamma=gamma_tau / 1e-3)
    assert strobo_bright_fraction(cfg, phi) == pytest.approx(no_drive_bright(ftau, nbar, N, gamma_tau), abs=1e-12)


def test_decay_lifts_floor():
    y = strobo_bright_fraction(make_cfg(f=0.0, Gamma=1000.0))
    assert y == pytest.approx(0.5 - 0.5 * math.exp(-1.0), rel=1e-14)


def synthetic(cfg, phis=PHIS):
    return [PhaseScanPoint(p.delta_phi, p.bright_fraction, 0.0) for p in phase_scan(cfg, phis)]


@pytest.mark.parametrize("r", [0.3, 1.25, 2.2])
def test_fit_round_trip(r):
    cfg = make_cfg(r=r)
    fit = fit_strobo_r(synthetic(cfg), with_r(cfg, 0.0), nbar_err=0.0)
    assert abs(fit.r - r) < 1e-6


@given(st.floats(0.1, 2.5), st.floats(0, 2), st.integers(10, 200))
def test_fit_round_trip_property(r, nbar, N):
    cfg = make_cfg(r=r, nbar=nbar, N=N, f=4000.0)
    fit = fit_strobo_r(synthetic(cfg), with_r(cfg, 0.0), nbar_err=0.0)
    assert abs(fit.r - r) < 1e-6


def test_fit_nbar_band():
    cfg = make_cfg()
    fit = fit_strobo_r(synthetic(cfg), cfg, nbar_err=0.2)
    (lo, r_lo), (hi, r_hi) = fit.r_at_nbar
    assert (lo, hi) == pytest.approx((0.18, 0.58))
    assert r_lo > fit.r > r_hi
    assert 0.05 < fit.r_err < 0.3


def test_fit_with_amplitude_nuisance():
    cfg = make_cfg()
    # config carries the wrong |f tau|; the joint fit recovers both
    wrong = StroboConfig(cfg.trap, DriveParams(f=2000.0, tau=1e-3), MotionalState(nbar=0.38))
    fit = fit_strobo_r(synthetic(cfg), wrong, fit_amplitude=True)
    assert fit.r == pytest.approx(1.25, abs=1e-6)
    assert fit.amplitude == pytest.approx(9.0, rel=1e-6)


def test_fit_weights_from_std():
    cfg = make_cfg()
    data = [PhaseScanPoint(p.delta_phi, p.bright_fraction, 0.01) for p in synthetic(cfg)]
    fit = fit_strobo_r(data, cfg, nbar_err=0.0)
    assert fit.r == pytest.approx(1.25, abs=1e-6)
    assert fit.r_stat > 0


def test_fit_rejects_flat_data():
    data = [PhaseScanPoint(p, 0.2) for p in PHIS]
    with pytest.raises(FitFailure):
        fit_strobo_r(data, make_cfg())


def test_fit_rejects_poor_coverage():
    cfg = make_cfg()
    with pytest.raises(FitFailure):
        fit_strobo_r(synthetic(cfg, PHIS[:5]), cfg)
    with pytest.raises(FitFailure):
        fit_strobo_r(synthetic(cfg, np.linspace(0, 2, 12)), cfg)


def test_fit_needs_force():
    cfg = make_cfg()
    with pytest.raises(FitFailure):
        fit_strobo_r(synthetic(cfg), make_cfg(f=0.0))


def test_amplified_displacement():
    b = 0.3 - 0.2j
    assert amplified_displacement(b, 0.0) == b
    assert abs(amplified_displacement(1.0, 1.25)) == pytest.approx(math.exp(1.25))
    assert round(abs(amplified_displacement(1.0, 1.25)), 3) == 3.490
    back = amplified_displacement(amplified_displacement(b, 0.8, True), 0.8, False)
    assert back == pytest.approx(b, rel=1e-14)


def test_config_invariants():
    with pytest.raises(DomainError):
        StroboConfig(TrapParams(**TRAP), DriveParams(), MotionalState(), t_s=-1.0)
    with pytest.raises(DomainError):
        StroboConfig(TrapParams(**TRAP), DriveParams(g=1000.0), MotionalState(r=0.5), t_s=1e-3)
    ok = StroboConfig(TrapParams(**TRAP), DriveParams(g=1000.0), MotionalState(r=1.0), t_s=1e-3)
    assert ok.r == 1.0
    assert StroboConfig(TrapParams(**TRAP), DriveParams(g=1000.0), MotionalState(), t_s=1e-3).r == 1.0


@pytest.mark.parametrize("kw", [dict(bright_fraction=1.2), dict(bright_fraction=-0.1), dict(std_dev=-1.0)])
def test_scan_point_invariants(kw):
    base = dict(delta_phi=0.0, bright_fraction=0.2)
    with pytest.raises(DomainError):
        PhaseScanPoint(**{**base, **kw})
