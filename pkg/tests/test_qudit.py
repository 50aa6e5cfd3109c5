import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mirrorchain.qudit import (
    CV,
    QUDIT,
    PauliWord,
    embed,
    fourier_gate,
    generalized_pauli,
    pauli_word_mul,
    root_of_unity,
    swap_with_ancilla,
    two_qudit_gate,
)

DIMS = (2, 3, 4, 5, 7)


def test_pauli_examples():
    assert np.allclose(generalized_pauli(2, "X"), [[0, 1], [1, 0]])
    z3 = np.exp(2j * np.pi / 3)
    assert np.allclose(generalized_pauli(3, "Z"), np.diag([1, z3, z3**2]))
    assert np.allclose(generalized_pauli(5, "X", 5), np.eye(5))


def test_x_is_cyclic_shift():
    X = generalized_pauli(4, "X")
    for j in range(4):
        assert X[(j + 1) % 4, j] == 1


@pytest.mark.parametrize("d", [0, 1, 2.5])
def test_rejects_bad_dimension(d):
    with pytest.raises(ValueError):
        generalized_pauli(d, "X")


def test_rejects_bad_kind():
    with pytest.raises(ValueError):
        generalized_pauli(3, "Y")


def test_root_of_unity_is_primitive():
    for d in DIMS:
        z = root_of_unity(d)
        assert abs(z**d - 1) < 1e-12
        assert all(abs(z**k - 1) > 1e-6 for k in range(1, d))


def test_fourier_examples():
    assert np.allclose(fourier_gate(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    assert np.allclose(fourier_gate(3, 4), np.eye(3))
    f = fourier_gate(4)
    sq = f @ f
    for a in range(4):
        col = np.zeros(4)
        col[(-a) % 4] = 1
        assert np.allclose(sq[:, a], col, atol=1e-12)
    assert np.allclose(fourier_gate(4, 2), sq, atol=1e-12)
    assert np.allclose(fourier_gate(5, -1), fourier_gate(5, 3))


@pytest.mark.parametrize("d", DIMS)
def test_group_orders_and_unitarity(d):
    I = np.eye(d)
    X, Z, F = generalized_pauli(d, "X"), generalized_pauli(d, "Z"), fourier_gate(d)
    assert np.abs(np.linalg.matrix_power(X, d) - I).max() < 1e-12
    assert np.abs(np.linalg.matrix_power(Z, d) - I).max() < 1e-12
    assert np.abs(np.linalg.matrix_power(F, 4) - I).max() < 1e-12
    for U in (X, Z, F):
        assert np.abs(U.conj().T @ U - I).max() < 1e-12


@pytest.mark.parametrize("d", DIMS)
def test_commutation(d):
    zeta = root_of_unity(d)
    for j in range(d):
        for k in range(d):
            Xj, Zk = generalized_pauli(d, "X", j), generalized_pauli(d, "Z", k)
            assert np.abs(Zk @ Xj - zeta ** (j * k) * Xj @ Zk).max() < 1e-12
            assert np.abs(Xj @ Zk - zeta ** (-j * k) * Zk @ Xj).max() < 1e-12


def test_two_qudit_examples():
    assert np.allclose(two_qudit_gate(2, "CPHASE", 1, 2), np.diag([1, 1, 1, -1]))
    e = np.eye(3)
    out = two_qudit_gate(3, "SUM", 1, 2) @ np.kron(e[1], e[1])
    assert np.allclose(out, np.kron(e[1], e[2]))


@pytest.mark.parametrize("d", (2, 3, 5, 7))
def test_sum_from_cphase(d):
    f2 = embed(fourier_gate(d), 2, 2, d)
    f2inv = embed(fourier_gate(d, -1), 2, 2, d)
    lhs = two_qudit_gate(d, "SUM", 1, 2)
    assert np.abs(lhs - f2inv @ two_qudit_gate(d, "CPHASE", 1, 2) @ f2).max() < 1e-12


@pytest.mark.parametrize("d", (2, 3, 5, 7))
def test_swap(d, rng):
    I, sq = np.eye(d), fourier_gate(d, 2)
    d12, d21 = two_qudit_gate(d, "SUM", 1, 2), two_qudit_gate(d, "SUM", 2, 1)
    six = d12 @ np.kron(sq, I) @ d21 @ np.kron(sq, I) @ d12 @ np.kron(I, sq)
    swap = two_qudit_gate(d, "SWAP", 1, 2)
    assert np.abs(swap - six).max() < 1e-12
    for _ in range(10):
        psi, phi = rng.normal(size=(2, d)) + 1j * rng.normal(size=(2, d))
        assert np.allclose(swap @ np.kron(psi, phi), np.kron(phi, psi), atol=1e-12)


@pytest.mark.parametrize("d", (2, 3, 5))
def test_simplified_swap_with_ancilla(d, rng):
    swap = two_qudit_gate(d, "SWAP", 1, 2)
    zero = np.eye(d)[0]
    for _ in range(20):
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        inp = np.kron(psi, zero)
        assert np.abs(swap_with_ancilla(d) @ inp - swap @ inp).max() < 1e-12


def test_two_qudit_errors():
    with pytest.raises(ValueError):
        two_qudit_gate(3, "CPHASE", 1, 1)
    with pytest.raises(ValueError):
        two_qudit_gate(3, "SUM", 1, 3, 2)
    with pytest.raises(ValueError):
        two_qudit_gate(3, "CNOT", 1, 2)


def test_gates_on_longer_chain():
    # CPHASE between sites 1 and 3 of three qutrits, checked on a basis state
    U = two_qudit_gate(3, "CPHASE", 1, 3, 3)
    e = np.eye(3)
    v = np.kron(np.kron(e[2], e[1]), e[2])
    assert np.allclose(U @ v, root_of_unity(3) ** 4 * v)


def test_word_normalization():
    w = PauliWord(QUDIT, 3, ((2, 4, -1), (1, 0, 0)), 5)
    assert w.factors == ((2, 1, 2),)
    assert w.phase_exp == 2
    with pytest.raises(ValueError):
        PauliWord(QUDIT, 3, ((1, 1, 0), (1, 0, 1)))
    with pytest.raises(ValueError):
        PauliWord("spin", 3)


def test_word_product_examples():
    z = PauliWord.single(1, 0, 1, d=3)
    x = PauliWord.single(1, 1, 0, d=3)
    prod = z * x
    assert prod.factors == ((1, 1, 1),)
    assert prod.phase_exp == 1
    assert z * PauliWord.identity(QUDIT, 3) == z
    with pytest.raises(ValueError):
        z * PauliWord.single(1, 1, 0, d=5)


def _word(d, n):
    site = st.tuples(st.integers(0, d - 1), st.integers(0, d - 1))
    return st.builds(
        lambda exps, ph: PauliWord(QUDIT, d, tuple((i + 1, x, z) for i, (x, z) in enumerate(exps)), ph),
        st.lists(site, min_size=n, max_size=n),
        st.integers(0, d - 1),
    )


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_word_product_matches_dense(data):
    d = data.draw(st.sampled_from((2, 3, 4, 5)))
    a, b = data.draw(_word(d, 3)), data.draw(_word(d, 3))
    assert np.abs((a * b).to_dense(3) - a.to_dense(3) @ b.to_dense(3)).max() < 1e-12


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)
)
def test_cv_product_phase(x1, z1, x2, z2):
    a = PauliWord.single(1, x1, z1, mode=CV)
    b = PauliWord.single(1, x2, z2, mode=CV)
    prod = pauli_word_mul(a, b)
    assert prod.phase_exp == pytest.approx(z1 * x2)
    # associativity of the normal-ordered product
    c = PauliWord.single(1, z1, x2, mode=CV)
    left, right = (a * b) * c, a * (b * c)
    assert len(left.factors) == len(right.factors)
    for f, g in zip(left.factors, right.factors):
        assert f == pytest.approx(g)
    assert left.phase_exp == pytest.approx(right.phase_exp)


def test_cv_words_have_no_dense_form():
    with pytest.raises(ValueError):
        PauliWord.single(1, 0.5, 0, mode=CV).to_dense(1)
