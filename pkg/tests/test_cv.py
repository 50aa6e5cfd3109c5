import json

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from mirrorchain import cv


def quadratic_map(G):
    # U = exp(-i r^T G r / 2) acts on means as exp(Omega G)
    return sla.expm(cv.symplectic_form(len(G) // 2) @ G)


def test_gate_maps_from_generators():
    # CPHASE = exp(i x1 x2): r^T G r / 2 = -x1 x2
    G = np.zeros((4, 4))
    G[0, 2] = G[2, 0] = -1
    assert np.allclose(cv.symplectic_for_gate("CPHASE", (1, 2), 2).S, quadratic_map(G))
    # SUM = exp(-i x1 p2)
    G = np.zeros((4, 4))
    G[0, 3] = G[3, 0] = 1
    assert np.allclose(cv.symplectic_for_gate("SUM", (1, 2), 2).S, quadratic_map(G))
    # F = exp(i pi/4 (x^2 + p^2)) up to phase
    assert np.allclose(cv.symplectic_for_gate("F", 1, 1).S, quadratic_map(-np.pi / 2 * np.eye(2)))


def test_sum_action_on_means():
    S = cv.symplectic_for_gate("SUM", (1, 2), 2).S
    x1, p1, x2, p2 = 0.3, -1.1, 0.7, 2.0
    assert np.allclose(S @ [x1, p1, x2, p2], [x1, p1 - p2, x2 + x1, p2])


def test_fourier_order_four():
    m = cv.identity_map(1)
    for _ in range(4):
        m = m.then(cv.symplectic_for_gate("F", 1, 1))
    assert np.allclose(m.S, np.eye(2))


def test_cphase_from_sum():
    f2 = cv.symplectic_for_gate("F", 2, 2).S
    f2inv = cv.symplectic_for_gate("F", 2, 2, -1).S
    sm = cv.symplectic_for_gate("SUM", (1, 2), 2).S
    assert np.abs(cv.symplectic_for_gate("CPHASE", (1, 2), 2).S - f2 @ sm @ f2inv).max() < 1e-12


def test_gate_errors():
    with pytest.raises(ValueError):
        cv.symplectic_for_gate("CPHASE", (1, 1), 2)
    with pytest.raises(ValueError):
        cv.symplectic_for_gate("F", 3, 2)
    with pytest.raises(ValueError):
        cv.symplectic_for_gate("BS", (1, 2), 2)


@pytest.mark.parametrize("N", range(1, 9))
def test_mirror_map_is_reversal(N):
    m = cv.mirror_map(N)
    assert np.abs(m.S - cv.mode_reversal(N)).max() <= 1e-9
    assert m.symplectic_error() < 1e-10
    assert np.abs(cv.mirror_map(N, -2).S - cv.mode_reversal(N)).max() <= 1e-9


def test_coherent_state_moves_to_last_mode():
    s = cv.coherent(4, 1, 0.8 - 0.3j)
    out = cv.run_cv_mirror(s)
    assert np.allclose(out.mean, cv.coherent(4, 4, 0.8 - 0.3j).mean)
    assert np.allclose(out.cov, np.eye(8))


def test_two_mode_squeezing_relocates():
    s = cv.two_mode_squeezed(3, (1, 2), 0.6)
    out = cv.run_cv_mirror(s)
    P = cv.mode_reversal(3)
    assert np.allclose(out.cov, P @ s.cov @ P.T)
    assert np.allclose(out.cov, cv.two_mode_squeezed(3, (3, 2), 0.6).cov)
    assert out.is_physical()


def test_physicality_check():
    assert cv.vacuum(2).is_physical()
    bad = cv.GaussianState(1, [0, 0], 0.5 * np.eye(2))
    assert not bad.is_physical()
    with pytest.raises(ValueError):
        cv.GaussianState(2, [0, 0], np.eye(2))


def test_json_roundtrip():
    s = cv.two_mode_squeezed(2, (1, 2), 0.3)
    back = cv.GaussianState.from_dict(json.loads(json.dumps(s.to_dict())))
    assert np.allclose(back.cov, s.cov) and back.N == 2
    rec = cv.mirror_run_record(s).to_dict()
    assert set(rec) == {"before", "after", "deviation"}
    assert rec["deviation"] < 1e-12


def test_heisenberg_examples():
    assert cv.cv_heisenberg_check(1.0, 0.0, 1, 3).passed
    assert cv.cv_heisenberg_check(0.3, -0.8, 2, 5).passed
    with pytest.raises(ValueError):
        cv.cv_heisenberg_check(1.0, 0.0, 4, 3)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.floats(-4, 4), st.floats(-4, 4), st.data())
def test_heisenberg_random(N, q, p, data):
    a = data.draw(st.integers(1, N))
    rep = cv.cv_heisenberg_check(q, p, a, N)
    assert rep.passed, rep.failures


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_compositions_stay_symplectic(N, seed):
    rng = np.random.default_rng(seed)
    m = cv.identity_map(N)
    for _ in range(10):
        kind = rng.choice(["F", "CPHASE", "SUM"])
        if kind == "F":
            g = cv.symplectic_for_gate("F", int(rng.integers(1, N + 1)), N, int(rng.integers(4)))
        else:
            a, b = rng.choice(np.arange(1, N + 1), 2, replace=False)
            g = cv.symplectic_for_gate(kind, (int(a), int(b)), N)
        m = m.then(g)
    assert m.symplectic_error() < 1e-10
    assert np.allclose(m.then(m.inverse()).S, np.eye(2 * N))
