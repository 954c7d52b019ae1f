import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from squeezeion.continuous import ContinuousConfig, continuous_bright_fraction
from squeezeion.core import DriveParams, MotionalState, TrapParams
from squeezeion.errors import DomainError, TruncationLeakageError
from squeezeion.oracle import checks
from squeezeion.oracle.continuous import continuous_oracle, loop_closure_deficit
from squeezeion.oracle.hilbert import (
    SZ,
    UP,
    HilbertConfig,
    annihilation,
    apply_gate,
    displacement,
    evolve_hamiltonian,
    full,
    rotation,
    spin_dependent_displacement,
    squeeze,
    total_hamiltonian,
)
from squeezeion.oracle.lindblad import lindblad_evolve, liouvillian, oracle_correlators, x_polarized
from squeezeion.oracle.strobo import amplification_identity, strobo_oracle
from squeezeion.spin_squeezing import DecoherenceRates
from squeezeion.stroboscopic import StroboConfig, strobo_bright_fraction


def vacuum(cfg, spin=0):
    psi = np.zeros(cfg.dim, dtype=complex)
    psi[spin * cfg.fock_dim] = 1.0
    return psi


# --- gates ------------------------------------------------------------------------------


def test_double_half_rotation_flips_spin():
    R = rotation(math.pi / 2, 0.0)
    out = R @ R @ UP
    assert abs(out[0]) < 1e-14
    assert abs(out[1]) == pytest.approx(1.0, abs=1e-14)


def test_displacement_inverse():
    D = displacement(0.7 - 0.4j, 64)
    Dm = displacement(-0.7 + 0.4j, 64)
    np.testing.assert_allclose((D @ Dm)[:40, :40], np.eye(40), atol=1e-10)


@pytest.mark.parametrize("r", [0.0, 0.4, 1.0])
def test_squeeze_identity_on_amplified_axis(r):
    dev, beta_p = amplification_identity(0.3, r)
    assert dev < 1e-8
    assert beta_p == pytest.approx(0.3 * math.exp(r), rel=1e-12)


def test_spin_dependent_displacement_moves_up_and_down_oppositely():
    cfg = HilbertConfig(n_spins=1, fock_dim=40)
    U = spin_dependent_displacement(0.5, cfg)
    a = full(None, annihilation(40), cfg)
    for spin, sign in ((0, 1), (1, -1)):
        psi = U @ vacuum(cfg, spin)
        assert np.vdot(psi, a @ psi) == pytest.approx(sign * 0.5, abs=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
@settings(max_examples=20)
def test_gates_preserve_norm(re, im, th, ph):
    cfg = HilbertConfig(n_spins=1, fock_dim=64)
    psi = vacuum(cfg)
    psi = apply_gate(psi, full(rotation(th, ph), None, cfg), cfg)
    psi = apply_gate(psi, full(None, displacement(complex(re, im), 64), cfg), cfg)
    psi = apply_gate(psi, full(None, squeeze(0.5 * complex(re, im), 64), cfg), cfg)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-9)


def test_leakage_is_reported():
    cfg = HilbertConfig(n_spins=1, fock_dim=16)
    with pytest.raises(TruncationLeakageError):
        apply_gate(vacuum(cfg), full(None, displacement(3.0, 16), cfg), cfg)


@pytest.mark.parametrize("kw", [dict(n_spins=4), dict(fock_dim=1), dict(fock_dim=1024), dict(dt=-1.0)])
def test_hilbert_config_invariants(kw):
    with pytest.raises(DomainError):
        HilbertConfig(**kw)


# --- Hamiltonian evolution --------------------------------------------------------------


def test_free_evolution_is_phase_rotation():
    cfg = HilbertConfig(n_spins=1, fock_dim=32)
    H = total_hamiltonian(cfg, 0.0, 0.0, 1.7, 0.0, 0.0)
    c = np.zeros(32, dtype=complex)
    c[:6] = np.arange(1, 7) / np.linalg.norm(np.arange(1, 7))
    psi = np.kron(UP, c)
    out = evolve_hamiltonian(psi, H, 0.9, cfg)
    n = np.arange(32)
    np.testing.assert_allclose(out, np.kron(UP, np.exp(1j * 1.7 * 0.9 * n) * c), atol=1e-12)


def test_evolution_conserves_norm_and_energy():
    cfg = HilbertConfig(n_spins=2, fock_dim=64)
    H = total_hamiltonian(cfg, 0.6, 0.3, 2.0, 0.8, 0.4)
    psi = np.kron(np.kron(UP, UP), vacuum(HilbertConfig(n_spins=0, fock_dim=64)))
    psi = (psi + full(np.kron(rotation(1.0, 0.2), rotation(0.5, 1.0)), None, cfg) @ psi) / 2
    psi /= np.linalg.norm(psi)
    e0 = np.real(np.vdot(psi, H @ psi))
    out = evolve_hamiltonian(psi, H, 1.3, cfg)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-9)
    assert np.real(np.vdot(out, H @ out)) == pytest.approx(e0, rel=1e-8)


def test_echo_oracle_matches_closed_form_without_drive():
    f, delta, tau, t_pi = 2 * math.pi * 800, 2 * math.pi * 1e3, 0.37e-3, 50e-6
    p_o, leak = continuous_oracle(2, f, delta, 0.0, tau, t_pi, nbar=0.5, beta_abs=0.7, phi_odf=0.3)
    cfg = ContinuousConfig(
        TrapParams(1.59e6, 7.6e6, 180e3, N=2),
        DriveParams(f=f, delta=delta, tau=tau, t_pi=t_pi, phi_odf=0.3),
        MotionalState(nbar=0.5, beta=0.7),
    )
    assert p_o == pytest.approx(continuous_bright_fraction(cfg), abs=1e-5)
    assert leak < 1e-8


def test_loop_closes_at_decoupling_point():
    delta, g = 3.0, 1.2
    tau = 2 * math.pi / math.sqrt(delta**2 - g**2)
    assert loop_closure_deficit(0.8, delta, g, tau) < 1e-4
    assert loop_closure_deficit(0.8, delta, g, 0.6 * tau) > 1e-2


def test_strobo_oracle_against_closed_form():
    for r, nbar, phi in ((0.0, 0.0, 0.0), (0.8, 0.4, 1.0), (1.25, 0.38, math.pi)):
        p_o, _, leak = strobo_oracle(r, phi, 2.0, nbar, N=1)
        cfg = StroboConfig(
            TrapParams(1.59e6, 7.6e6, 180e3, N=1), DriveParams(f=2000.0, tau=1e-3), MotionalState(nbar=nbar, r=r),
            delta_phi=phi,
        )
        assert p_o == pytest.approx(strobo_bright_fraction(cfg), abs=1e-6)
        assert leak < 1e-8


# --- Lindblad engine ----------------------------------------------------------------------


def test_lindblad_identity_at_zero_time():
    rho = x_polarized(3)
    np.testing.assert_allclose(lindblad_evolve(rho, 1.0, DecoherenceRates(0.1, 0.2, 0.3), 0.0), rho, atol=1e-15)


def test_lindblad_pure_dephasing():
    rates = DecoherenceRates(gamma_el=0.6)
    for t in (0.3, 1.0, 2.5):
        rho = lindblad_evolve(x_polarized(1), 0.0, rates, t)
        sp = oracle_correlators(np.kron(rho, np.eye(2) / 2), 2)[0]
        assert sp == pytest.approx(0.5 * math.exp(-0.6 * t / 2), abs=1e-12)


def test_lindblad_two_spin_twisting():
    J = 1.3
    for t in (0.2, 0.9, 2.0):
        rho = lindblad_evolve(x_polarized(2), J, DecoherenceRates(), t)
        assert oracle_correlators(rho, 2)[0] == pytest.approx(0.5 * math.cos(2 * J * t / 2), abs=1e-12)


@given(st.integers(1, 3), st.floats(0, 3), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 3))
@settings(max_examples=25)
def test_lindblad_trace_and_positivity(N, J, a, b, c, t):
    rho = lindblad_evolve(x_polarized(N), J, DecoherenceRates(a, b, c), t)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-9)
    assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() > -1e-9


@given(st.integers(1, 3), st.floats(0, 0.5), st.floats(0, 0.5))
@settings(max_examples=25)
def test_lindblad_purity_non_increasing_without_coupling(N, flip, el):
    # balanced flips and dephasing form a unital channel; unbalanced flips
    # pump toward a pure pole and can raise the purity
    rates = DecoherenceRates(flip, flip, el)
    ts = np.linspace(0, 3, 13)
    purities = [np.real(np.trace(r @ r)) for r in (lindblad_evolve(x_polarized(N), 0.0, rates, t) for t in ts)]
    assert np.all(np.diff(purities) <= 1e-12)


def test_liouvillian_preserves_trace():
    L = liouvillian(0.7, DecoherenceRates(0.1, 0.2, 0.3), 2)
    tr = np.eye(4).reshape(-1)
    np.testing.assert_allclose(tr @ L, 0.0, atol=1e-14)
    assert expm(L * 0.0).shape == (16, 16)


def test_lindblad_spin_limit():
    with pytest.raises(DomainError):
        lindblad_evolve(x_polarized(4), 1.0, DecoherenceRates(), 1.0)


# --- registry -----------------------------------------------------------------------------------


def test_every_closed_form_is_covered():
    listed = {cf for forms in checks.CLOSED_FORMS.values() for cf in forms}
    covered = {cf for chk in checks.REGISTRY.values() for cf in chk.closed_forms}
    assert listed <= covered


def test_quick_checks_pass_and_manifest_is_deterministic():
    names = ["segment-displacement", "decoupling-closure", "lindblad-correlators", "driven-ising"]
    a = checks.run_checks(names, threads=1)
    b = checks.run_checks(names, threads=2)
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]
    assert all(r.passed for r in a)
    m = checks.manifest(a)
    assert m["passed"] and m["covered_closed_forms"] == sorted(m["covered_closed_forms"])


def test_crashing_check_is_a_failure(monkeypatch):
    def boom():
        raise RuntimeError("bad")

    monkeypatch.setitem(checks.REGISTRY, "boom", checks.Check("boom", ["chi"], 1.0, boom))
    res = checks.run_check("boom")
    assert not res.passed
    assert "RuntimeError" in res.error


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("SQUEEZEION_THREADS", "3")
    assert checks.thread_count() == 3
    monkeypatch.setenv("SQUEEZEION_THREADS", "x")
    assert checks.thread_count() == 1
