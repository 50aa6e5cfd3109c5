from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from mirrorchain import cqed

P = cqed.DEFAULT_DEVICE


def test_params_validation():
    with pytest.raises(ValueError):
        replace(P, sign=0)
    with pytest.raises(ValueError):
        replace(P, gamma=-1.0)
    with pytest.raises(ValueError):
        replace(P, omega_a=0.0)
    assert cqed.DeviceParams.from_dict(P.to_dict()) == P


def test_full_model_structure():
    m = cqed.build_full_model(P, 5)
    assert m.dims == [5, 5, 2]
    assert m.hermiticity_error() < 1e-12
    assert [w for w, _ in m.collapse_ops] == [P.gamma / 2, P.kappa_a / 2, P.kappa_b / 2]
    with pytest.raises(ValueError):
        cqed.build_full_model(P, 1)


def test_decoupled_limit_is_block_diagonal():
    m = cqed.build_full_model(replace(P, g_a=0.0, g_b=0.0), 4)
    H = m.H.toarray().reshape(16, 2, 16, 2)
    assert np.abs(H[:, 0, :, 1]).max() == 0
    # the mode part is also diagonal in the Fock basis
    assert np.count_nonzero(m.H.toarray() - np.diag(np.diag(m.H.toarray()))) == 0


def test_effective_model():
    m, eff = cqed.build_effective_model(P, 5)
    assert m.hermiticity_error() < 1e-12
    assert eff.s_sign == -1
    assert [w for w, _ in m.collapse_ops] == [P.kappa_a / 2, P.kappa_b / 2, eff.eta]
    m2, _ = cqed.build_effective_model(P, 5, convention=cqed.PRINTED)
    assert [w for w, _ in m2.collapse_ops][:2] == [P.kappa_a, P.kappa_b]
    with pytest.raises(ValueError):
        cqed.build_effective_model(replace(P, g_b=0.3), 5)
    with pytest.raises(ValueError):
        cqed.build_effective_model(P, 5, convention="other")


def test_rates():
    chi, eta = cqed.effective_rates(P)
    g, w0, gam = Fraction(1, 5), Fraction(15), Fraction(15, 1000)
    assert chi == pytest.approx(float(g * g * w0 / ((gam / 2) ** 2 + w0 * w0)), rel=1e-12)
    assert 2.6e-3 < chi < 2.8e-3
    assert cqed.effective_rates(replace(P, gamma=0.0))[1] == 0.0
    chi_far, eta_far = cqed.effective_rates(replace(P, omega0=1e8))
    assert chi_far < 1e-9 and eta_far < 1e-18


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 2), st.floats(0.1, 100), st.floats(1e-5, 10))
def test_chi_eta_relation(g, w0, gamma):
    p = cqed.DeviceParams(w0, 1.0, 1.0, g, g, gamma, 0.0, 0.0)
    chi, eta = cqed.effective_rates(p)
    assert chi >= 0 and eta >= 0
    assert chi * gamma / 2 == pytest.approx(eta * w0, rel=1e-12)


def test_static_state_without_dynamics():
    m = cqed.LindbladModel(cqed.destroy(3) * 0, [], [3])
    rho0 = np.diag([0.5, 0.3, 0.2]).astype(complex)
    for r in cqed.integrate_lindblad(m, rho0, [0, 1, 2]):
        assert np.allclose(r, rho0)


@pytest.mark.parametrize("method", ["lawson", "rk4"])
def test_damped_oscillator(method):
    n, kappa, w = 15, 0.3, 3.0
    p = replace(P, g_a=0.0, g_b=0.0, kappa_a=kappa, kappa_b=0.0, omega_a=w)
    m, _ = cqed.build_effective_model(p, n)
    rho0 = cqed.reference_initial_state(n, 1.0, 0.0, with_cpb=False)
    a = np.kron(cqed.destroy(n).toarray(), np.eye(n))
    grid = np.linspace(0, 5, 11)
    dt = 2e-3 if method == "rk4" else None
    for t, r in zip(grid, cqed.integrate_lindblad(m, rho0, grid, dt=dt, method=method)):
        assert abs(np.trace(a @ r) - np.exp(-kappa / 2 * t - 1j * w * t)) < 1e-6
        assert abs(np.trace(r) - 1) < 1e-8


def test_integrators_agree_on_full_model():
    m = cqed.build_full_model(P, 4)
    rho0 = cqed.reference_initial_state(4)
    grid = [0.0, 0.5, 1.0]
    lw = cqed.integrate_lindblad(m, rho0, grid, dt=0.01)
    rk = cqed.integrate_lindblad(m, rho0, grid, method="rk4")
    assert np.abs(lw[-1] - rk[-1]).max() < 1e-6


def test_integrator_invariants():
    m = cqed.build_full_model(P, 5)
    for t, r in cqed.iter_lindblad(m, cqed.reference_initial_state(5), cqed.period_grid(P, 5)):
        assert abs(np.trace(r) - 1) < 1e-8
        assert np.abs(r - r.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(r).min() > -1e-7


def test_integrator_input_errors():
    m = cqed.build_full_model(P, 3)
    good = cqed.reference_initial_state(3)
    with pytest.raises(ValueError):
        cqed.integrate_lindblad(m, good, [0, 1, 1])
    with pytest.raises(ValueError):
        cqed.integrate_lindblad(m, 2 * good, [0, 1])
    with pytest.raises(ValueError):
        cqed.integrate_lindblad(m, good[:4, :4], [0, 1])
    with pytest.raises(ValueError):
        cqed.integrate_lindblad(m, good, [0, 1], method="euler")
    with pytest.raises(cqed.IntegrationError):
        cqed.integrate_lindblad(m, good, [0, 50], dt=0.5, method="rk4")


def test_trivial_comparison_is_identical():
    p = replace(P, g_a=0.0, g_b=0.0, gamma=0.0, kappa_a=0.0, kappa_b=0.0)
    c = cqed.compare_reduced_dynamics(p, None, cqed.period_grid(p, 3), 5)
    assert max(c.full_eff.max(), c.full_ham.max(), c.eff_ham.max()) < 1e-10
    assert np.allclose(c.observables["full"].a, c.observables["eff"].a)


def test_faster_decay_spoils_reduction():
    grid = cqed.period_grid(P, 20)
    base = cqed.compare_reduced_dynamics(P, None, grid, 6)
    fast = cqed.compare_reduced_dynamics(replace(P, gamma=10 * P.gamma), None, grid, 6)
    assert fast.full_eff[-1] > base.full_eff[-1]
    assert fast.full_eff.mean() > base.full_eff.mean()


def test_beam_splitter_quadratures():
    n = 8
    T = cqed.beam_splitter(n)
    assert np.abs(T.conj().T @ T - np.eye(n * n)).max() < 1e-12
    a1 = cqed.destroy(n).toarray()
    a = np.kron(a1, np.eye(n))
    b = np.kron(np.eye(n), a1)
    mask = cqed.low_photon_mask(n, n - 3)
    sub = np.ix_(mask, mask)
    assert np.abs((T @ a @ T.conj().T - (a + b) / np.sqrt(2))[sub]).max() < 1e-12
    assert np.abs((T @ b @ T.conj().T - (b - a) / np.sqrt(2))[sub]).max() < 1e-12


def test_beam_splitter_matches_expm():
    n = 5
    a1 = cqed.destroy(n).toarray()
    a = np.kron(a1, np.eye(n))
    b = np.kron(np.eye(n), a1)
    ref = sla.expm(-np.pi / 4 * (a.conj().T @ b - b.conj().T @ a))
    assert np.abs(cqed.beam_splitter(n) - ref).max() < 1e-12


@pytest.mark.parametrize("sign,mode", [(1, "a'"), (-1, "b'")])
def test_canonical_transform(sign, mode):
    r = cqed.canonical_transform(replace(P, sign=sign), 15)
    assert r.kerr_on == mode
    assert r.deviation < 1e-8


def test_canonical_transform_without_kerr():
    p = replace(P, g_a=0.0, g_b=0.0)
    r = cqed.canonical_transform(p, 6)
    assert np.allclose(r.H_a, r.H_b)
    with pytest.raises(ValueError):
        cqed.canonical_transform(replace(P, omega_b=2.0), 6)


def test_cphase_separates():
    assert cqed.cphase_separation(30, 5) < 1e-8


def test_trace_distance_and_partial_trace():
    psi = np.kron(cqed.coherent_vector(4, 0.5), [0, 1])
    rho = np.outer(psi, psi.conj())
    red = cqed.trace_out_cpb(rho)
    assert np.trace(red) == pytest.approx(1)
    assert cqed.trace_distance(red, red) == pytest.approx(0, abs=1e-14)
    e = np.eye(4)
    assert cqed.trace_distance(np.outer(e[0], e[0]), np.outer(e[1], e[1])) == pytest.approx(1)


@pytest.mark.slow
def test_truncation_convergence_8_to_12():
    grid = cqed.period_grid(P, 10)
    d = [cqed.compare_reduced_dynamics(P, cqed.reference_initial_state(n), grid, n).full_eff for n in (8, 12)]
    assert np.abs(d[0] - d[1]).max() / d[1].max() < 0.05
