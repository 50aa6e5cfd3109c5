"""Open-system models of two resonators coupled through a Cooper pair box.

Units: all rates and frequencies are angular, in GHz (rad/ns) with hbar = 1,
so times are in ns. Dissipator weights ``w`` multiply the unnormalized
superoperator L(A) rho = 2 A rho A^dag - {A^dag A, rho}.

Tensor order is (mode a, mode b, CPB) for the full model and (a, b) for the
effective one. The CPB basis is (|0>, |1>) with sigma_z = diag(1, -1) and
sigma_- = |1><0|, so |1> is the ground state the box relaxes into. The mode
position quadrature entering the coupling is X = a + a^dag.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

HARMONIZED = "harmonized"
PRINTED = "printed"


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class DeviceParams:
    omega0: float
    omega_a: float
    omega_b: float
    g_a: float
    g_b: float
    gamma: float
    kappa_a: float
    kappa_b: float
    sign: int = -1  # +1 sum bias, -1 difference bias

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 (sum bias) or -1 (difference bias)")
        for name in ("gamma", "kappa_a", "kappa_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("omega0", "omega_a", "omega_b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceParams":
        fields = cls.__dataclass_fields__
        return cls(**{k: (int(v) if k == "sign" else float(v)) for k, v in data.items() if k in fields})


# 15 GHz box, 3 GHz resonators, 200 MHz coupling, 15 MHz / 1 MHz decay
DEFAULT_DEVICE = DeviceParams(
    omega0=15.0, omega_a=3.0, omega_b=3.0, g_a=0.2, g_b=0.2,
    gamma=0.015, kappa_a=0.001, kappa_b=0.001, sign=-1,
)


@dataclass
class LindbladModel:
    H: sp.csr_matrix
    collapse_ops: list[tuple[float, sp.csr_matrix]]
    dims: list[int]
    reference_frequency: float = 1.0
    fastest_frequency: float = 1.0
    commutator_sign: int = -1  # rho' = commutator_sign * i [H, rho] + ...

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def hermiticity_error(self) -> float:
        diff = self.H - self.H.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0


@dataclass(frozen=True)
class EffectiveParams:
    chi: float
    eta: float
    s_sign: int  # s = X_a + s_sign X_b


def destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr", dtype=complex)


def _kron(*ops) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return out.tocsr()


def effective_rates(p: DeviceParams) -> tuple[float, float]:
    """chi = g^2 w0 / ((gamma/2)^2 + w0^2),  eta = g^2 (gamma/2) / (same)."""
    g2 = p.g_a * p.g_b
    den = (p.gamma / 2) ** 2 + p.omega0**2
    return g2 * p.omega0 / den, g2 * (p.gamma / 2) / den


def build_full_model(p: DeviceParams, n_fock: int) -> LindbladModel:
    if n_fock < 2:
        raise ValueError("n_fock must be >= 2")
    a1 = destroy(n_fock)
    eye_n = sp.identity(n_fock, format="csr", dtype=complex)
    eye_2 = sp.identity(2, format="csr", dtype=complex)
    sm = sp.csr_matrix(np.array([[0, 0], [1, 0]], dtype=complex))
    sz = sp.csr_matrix(np.diag([1.0, -1.0]).astype(complex))
    a = _kron(a1, eye_n, eye_2)
    b = _kron(eye_n, a1, eye_2)
    sigm = _kron(eye_n, eye_n, sm)
    coupling = p.g_a * (a + a.T) + p.sign * p.g_b * (b + b.T)
    H = (
        p.omega_a * (a.T @ a)
        + p.omega_b * (b.T @ b)
        + 0.5 * p.omega0 * _kron(eye_n, eye_n, sz)
        - coupling @ (sigm + sigm.T)
    )
    collapse = [(p.gamma / 2, sigm), (p.kappa_a / 2, a), (p.kappa_b / 2, b)]
    fastest = p.omega0 + 2 * (n_fock - 1) * max(p.omega_a, p.omega_b)
    return LindbladModel(
        H.tocsr(), collapse, [n_fock, n_fock, 2],
        reference_frequency=p.omega_a, fastest_frequency=fastest,
    )


def build_effective_model(
    p: DeviceParams,
    n_fock: int,
    convention: str = HARMONIZED,
    dissipative: bool = True,
) -> tuple[LindbladModel, EffectiveParams]:
    """Two-mode model left after eliminating the box (box in its ground state).

    H_eff = w_a a^dag a + w_b b^dag b - chi s^2 with s = X_a +- X_b. The box's
    ground-state level shift pushes the modes down, hence the minus sign.
    ``convention`` picks the resonator dissipator weight: ``"harmonized"``
    uses kappa/2 like the full model, ``"printed"`` uses kappa. The induced
    term always has weight eta on L(s).
    """
    if not math.isclose(p.g_a, p.g_b, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError("the effective model requires g_a == g_b")
    if n_fock < 2:
        raise ValueError("n_fock must be >= 2")
    if convention not in (HARMONIZED, PRINTED):
        raise ValueError(f"unknown convention {convention!r}")
    chi, eta = effective_rates(p)
    a1 = destroy(n_fock)
    eye_n = sp.identity(n_fock, format="csr", dtype=complex)
    a = _kron(a1, eye_n)
    b = _kron(eye_n, a1)
    s = (a + a.T) + p.sign * (b + b.T)
    H = p.omega_a * (a.T @ a) + p.omega_b * (b.T @ b) - chi * (s @ s)
    collapse = []
    if dissipative:
        k = 0.5 if convention == HARMONIZED else 1.0
        collapse = [(k * p.kappa_a, a), (k * p.kappa_b, b), (eta, s.tocsr())]
    fastest = 2 * (n_fock - 1) * max(p.omega_a, p.omega_b)
    model = LindbladModel(
        H.tocsr(), collapse, [n_fock, n_fock],
        reference_frequency=p.omega_a, fastest_frequency=fastest,
    )
    return model, EffectiveParams(chi, eta, p.sign)


# ---------------------------------------------------------------- integration


class _Dissipator:
    def __init__(self, collapse_ops, dim):
        self.ops = [(2.0 * w, sp.csr_matrix(A)) for w, A in collapse_ops if w != 0]
        K = sp.csr_matrix((dim, dim), dtype=complex)
        for w, A in collapse_ops:
            if w != 0:
                K = K + w * (A.conj().T @ A)
        K = sp.csr_matrix(K)
        offdiag = K - sp.diags(K.diagonal())
        self.diag = None
        if offdiag.count_nonzero() == 0:
            k = K.diagonal()
            self.diag = k[:, None] + k[None, :]
        self.K = K

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        if self.diag is not None:
            out = -self.diag * rho
        else:
            left = self.K @ rho
            out = -(left + (self.K @ rho.conj().T).conj().T)
        for w2, A in self.ops:
            # A rho A^dag = A (A rho^dag)^dag
            out += w2 * (A @ (A @ rho.conj().T).conj().T)
        return out


def _rk4_stepper(m: LindbladModel, h: float):
    D = _Dissipator(m.collapse_ops, m.dim)
    H = m.H
    c = 1j * m.commutator_sign

    def f(r):
        return c * (H @ r - (H @ r.conj().T).conj().T) + D(r)

    def step(r):
        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        return r + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    return step


def _lawson_stepper(m: LindbladModel, h: float):
    # RK4 in the interaction frame of H: the unitary part is exact
    D = _Dissipator(m.collapse_ops, m.dim)
    Hd = -m.commutator_sign * m.H.toarray()
    ev, V = np.linalg.eigh(Hd)
    U = (V * np.exp(-0.5j * h * ev)) @ V.conj().T
    Ud = U.conj().T

    def E(x):
        return U @ x @ Ud

    def step(r):
        k1 = D(r)
        Er = E(r)
        k2 = D(E(r + 0.5 * h * k1))
        k3 = D(Er + 0.5 * h * k2)
        k4 = D(E(Er + h * k3))
        return E(E(r + (h / 6.0) * k1) + (h / 3.0) * (k2 + k3)) + (h / 6.0) * k4

    return step


def default_step(m: LindbladModel, method: str) -> float:
    if method == "rk4":
        return 1.0 / (50.0 * m.fastest_frequency)
    # exact unitary part: resolve only the nominal mode period
    return 2 * np.pi / (20.0 * m.reference_frequency)


def iter_lindblad(
    m: LindbladModel,
    rho0: np.ndarray,
    t_grid: Sequence[float],
    dt: float | None = None,
    method: str = "lawson",
    trace_tol: float = 1e-6,
) -> Iterator[tuple[float, np.ndarray]]:
    """Yield (t, rho(t)) on ``t_grid`` using a fixed step no larger than ``dt``."""
    if method not in ("rk4", "lawson"):
        raise ValueError(f"unknown method {method!r}")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (m.dim, m.dim):
        raise ValueError(f"rho0 has shape {rho.shape}, model dimension is {m.dim}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10 or abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("rho0 must be Hermitian with unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("rho0 must be positive semidefinite")
    h_max = default_step(m, method) if dt is None else float(dt)
    make = _rk4_stepper if method == "rk4" else _lawson_stepper
    steppers: dict[tuple[int, float], object] = {}
    t = t_grid[0]
    yield t, rho.copy()
    for t_next in t_grid[1:]:
        span = t_next - t
        n = max(1, int(math.ceil(span / h_max - 1e-9)))
        h = span / n
        key = (n, round(h, 15))
        if key not in steppers:
            steppers[key] = make(m, h)
        step = steppers[key]
        for i in range(n):
            rho = step(rho)
            rho = 0.5 * (rho + rho.conj().T)
            tr = float(np.real(np.trace(rho)))
            if not abs(tr - 1.0) <= trace_tol:
                raise IntegrationError(f"trace drifted to {tr:.9g} at t={t + (i + 1) * h:.6g}; reduce the step size")
        t = t_next
        yield t, rho


def integrate_lindblad(m, rho0, t_grid, dt=None, method="lawson") -> list[np.ndarray]:
    return [r for _, r in iter_lindblad(m, rho0, t_grid, dt=dt, method=method)]


# ---------------------------------------------------------------- states


def coherent_vector(n: int, alpha: complex) -> np.ndarray:
    """Truncated coherent state, renormalized on the n-level space."""
    k = np.arange(n)
    logfact = np.array([math.lgamma(i + 1) for i in k])
    with np.errstate(divide="ignore"):
        mag = np.where(k == 0, 0.0, k * np.log(abs(alpha)) if alpha != 0 else -np.inf)
    amp = np.exp(mag - 0.5 * logfact - 0.5 * abs(alpha) ** 2) * np.exp(1j * np.angle(alpha) * k)
    if alpha == 0:
        amp = np.zeros(n, dtype=complex)
        amp[0] = 1.0
    return amp / np.linalg.norm(amp)


def reference_initial_state(n_fock: int, alpha: complex = 1.0, beta: complex = 0.1, with_cpb: bool = True) -> np.ndarray:
    """|alpha> (x) |beta> (x) |1>_CPB as a density matrix."""
    psi = np.kron(coherent_vector(n_fock, alpha), coherent_vector(n_fock, beta))
    if with_cpb:
        psi = np.kron(psi, np.array([0.0, 1.0]))
    return np.outer(psi, psi.conj())


def trace_out_cpb(rho: np.ndarray) -> np.ndarray:
    D = rho.shape[0] // 2
    return np.einsum("iaja->ij", rho.reshape(D, 2, D, 2))


def trace_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(r1 - r2))))


@dataclass
class ModeObservables:
    t: list[float] = field(default_factory=list)
    a: list[complex] = field(default_factory=list)
    b: list[complex] = field(default_factory=list)
    trace: list[float] = field(default_factory=list)
    purity: list[float] = field(default_factory=list)
    top_population: list[float] = field(default_factory=list)

    def record(self, t: float, rho: np.ndarray, ops) -> None:
        a, b, top = ops
        self.t.append(float(t))
        self.a.append(complex(np.trace(a @ rho)))
        self.b.append(complex(np.trace(b @ rho)))
        self.trace.append(float(np.real(np.trace(rho))))
        self.purity.append(float(np.real(np.vdot(rho.conj().T, rho))))
        self.top_population.append(float(np.real(np.sum(rho.diagonal()[top]))))

    def rows(self):
        for i, t in enumerate(self.t):
            a, b = self.a[i], self.b[i]
            yield [t, a.real, a.imag, b.real, b.imag, self.trace[i], self.purity[i], 2 * a.real, 2 * b.real]


TRAJECTORY_COLUMNS = ["t", "re_a", "im_a", "re_b", "im_b", "trace", "purity", "x_a", "x_b"]
DISTANCE_COLUMNS = ["t", "tau", "full_eff", "full_ham", "eff_ham"]


def mode_operators(n: int):
    a1 = destroy(n).toarray()
    eye = np.eye(n)
    a = np.kron(a1, eye)
    b = np.kron(eye, a1)
    k = np.arange(n)
    top = ((k[:, None] == n - 1) | (k[None, :] == n - 1)).reshape(-1)
    return a, b, top


@dataclass
class Comparison:
    params: DeviceParams
    n_fock: int
    t: np.ndarray
    full_eff: np.ndarray
    full_ham: np.ndarray
    eff_ham: np.ndarray
    observables: dict[str, ModeObservables]
    convention: str

    @property
    def tau(self) -> np.ndarray:
        return self.params.omega_a * self.t / (2 * np.pi)

    def distance_rows(self):
        for i, t in enumerate(self.t):
            yield [t, self.tau[i], self.full_eff[i], self.full_ham[i], self.eff_ham[i]]


def compare_reduced_dynamics(
    p: DeviceParams,
    rho0: np.ndarray | None,
    t_grid: Sequence[float],
    n_fock: int,
    convention: str = HARMONIZED,
    dt: float | None = None,
) -> Comparison:
    """Full model (box traced out) vs effective master equation vs H_eff only."""
    full = build_full_model(p, n_fock)
    eff, _ = build_effective_model(p, n_fock, convention)
    ham, _ = build_effective_model(p, n_fock, convention, dissipative=False)
    if rho0 is None:
        rho0 = reference_initial_state(n_fock)
    rho0_modes = trace_out_cpb(rho0)
    ops = mode_operators(n_fock)
    obs = {k: ModeObservables() for k in ("full", "eff", "ham")}
    d_fe, d_fh, d_eh = [], [], []
    runs = zip(
        iter_lindblad(full, rho0, t_grid, dt=dt),
        iter_lindblad(eff, rho0_modes, t_grid, dt=dt),
        iter_lindblad(ham, rho0_modes, t_grid, dt=dt),
    )
    for (t, rf), (_, re), (_, rh) in runs:
        rr = trace_out_cpb(rf)
        obs["full"].record(t, rr, ops)
        obs["eff"].record(t, re, ops)
        obs["ham"].record(t, rh, ops)
        d_fe.append(trace_distance(rr, re))
        d_fh.append(trace_distance(rr, rh))
        d_eh.append(trace_distance(re, rh))
    return Comparison(p, n_fock, np.asarray(t_grid, float), np.array(d_fe), np.array(d_fh), np.array(d_eh), obs, convention)


def period_grid(p: DeviceParams, periods: float, samples_per_period: int = 1) -> np.ndarray:
    T = 2 * np.pi / p.omega_a
    n = int(round(periods * samples_per_period))
    return np.linspace(0.0, periods * T, n + 1)


# ---------------------------------------------------------------- decoupling


def beam_splitter(n: int, theta: float = np.pi / 4) -> np.ndarray:
    """exp(-theta (a^dag b - b^dag a)) on the n x n truncated two-mode space.

    The generator conserves total photon number, so it is exponentiated block
    by block.
    """
    a1 = destroy(n).toarray()
    eye = np.eye(n)
    a = np.kron(a1, eye)
    b = np.kron(eye, a1)
    G = -theta * (a.conj().T @ b - b.conj().T @ a)
    total = (np.arange(n)[:, None] + np.arange(n)[None, :]).reshape(-1)
    T = np.zeros((n * n, n * n), dtype=complex)
    for M in range(2 * n - 1):
        idx = np.flatnonzero(total == M)
        T[np.ix_(idx, idx)] = sla.expm(G[np.ix_(idx, idx)])
    return T


def low_photon_mask(n: int, max_total: int) -> np.ndarray:
    return ((np.arange(n)[:, None] + np.arange(n)[None, :]).reshape(-1)) <= max_total


@dataclass
class CanonicalResult:
    H_prime: np.ndarray
    predicted: np.ndarray
    H_a: np.ndarray  # single-mode Hamiltonian of a'
    H_b: np.ndarray  # single-mode Hamiltonian of b'
    deviation: float
    kerr_on: str


def canonical_transform(p: DeviceParams, n_fock: int, edge: int = 3) -> CanonicalResult:
    """Decouple H_eff with the 45-degree beam splitter.

    Returns T^dag H_eff T (the orientation that sends the sum-bias quadrature
    to a' and the difference-bias one to b'), the predicted separable form
    w(n_a' + n_b') - 2 chi X^2 on the appropriate mode, and their largest
    entrywise difference on states with at most n_fock - edge photons in
    total (beyond that the truncation leaks).
    """
    if not math.isclose(p.omega_a, p.omega_b, rel_tol=1e-12):
        raise ValueError("decoupling needs omega_a == omega_b")
    model, eff = build_effective_model(p, n_fock, dissipative=False)
    H = model.H.toarray()
    T = beam_splitter(n_fock)
    Hp = T.conj().T @ H @ T
    a1 = destroy(n_fock).toarray()
    eye = np.eye(n_fock)
    num = a1.conj().T @ a1
    X2 = (a1 + a1.conj().T) @ (a1 + a1.conj().T)
    kerr = -2 * eff.chi * X2
    H_a = p.omega_a * num + (kerr if p.sign > 0 else 0)
    H_b = p.omega_a * num + (kerr if p.sign < 0 else 0)
    pred = np.kron(H_a, eye) + np.kron(eye, H_b)
    mask = low_photon_mask(n_fock, n_fock - edge)
    dev = float(np.max(np.abs((Hp - pred)[np.ix_(mask, mask)])))
    return CanonicalResult(Hp, pred, H_a, H_b, dev, "a'" if p.sign > 0 else "b'")


def _quadratic_phase_pair(n: int, c_a: float, c_b: float, scale: float) -> np.ndarray:
    # exp(i c_a Y_a^2) exp(i c_b Y_b^2) with Y = scale*(a + a^dag), via eigenbasis of Y
    a1 = destroy(n).toarray()
    y = scale * (a1 + a1.conj().T)
    lam, V = np.linalg.eigh(y)
    ua = (V * np.exp(1j * c_a * lam**2)) @ V.conj().T
    ub = (V * np.exp(1j * c_b * lam**2)) @ V.conj().T
    return np.kron(ua, ub)


def cphase_separation(n_fock: int, max_total: int) -> float:
    """Deviation between T^dag exp(i x_a x_b) T and exp(i X_a'^2) exp(-i X_b'^2).

    Here x = (a + a^dag)/sqrt(2) is the CV-gate quadrature and X = (a + a^dag)/2.
    Compared on the block with at most ``max_total`` photons.
    """
    a1 = destroy(n_fock).toarray()
    x = (a1 + a1.conj().T) / np.sqrt(2)
    lam, V = np.linalg.eigh(x)
    W = np.kron(V, V)
    phases = np.exp(1j * np.outer(lam, lam).reshape(-1))
    U = (W * phases) @ W.conj().T
    T = beam_splitter(n_fock)
    Up = T.conj().T @ U @ T
    pred = _quadratic_phase_pair(n_fock, 1.0, -1.0, 0.5)
    mask = low_photon_mask(n_fock, max_total)
    return float(np.max(np.abs((Up - pred)[np.ix_(mask, mask)])))
