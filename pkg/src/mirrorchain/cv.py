"""Gaussian (symplectic) simulation of the continuous-variable mirror chain.

Conventions: hbar = 1, [x, p] = i, x = (a + a^dag)/sqrt(2). Quadratures are
ordered (x1, p1, ..., xN, pN). The covariance matrix is
cov_ij = <{dr_i, dr_j}>, so the vacuum has cov = I and physical states obey
cov + i*Omega >= 0.

A ``SymplecticMap`` acts on first moments in the Schroedinger picture,
mean -> S @ mean + displacement. For a Gaussian unitary U this is the same S
that conjugates Weyl operators, U W(xi) U^dag = W(S xi).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .qudit import CV
from .tracker import ChainSpec, Report, mirror_word


def symplectic_form(N: int) -> np.ndarray:
    return np.kron(np.eye(N), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _xi(site: int) -> int:
    return 2 * (site - 1)


def _pi(site: int) -> int:
    return 2 * (site - 1) + 1


@dataclass
class SymplecticMap:
    S: np.ndarray
    displacement: np.ndarray | None = None

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        if self.displacement is None:
            self.displacement = np.zeros(len(self.S))
        self.displacement = np.asarray(self.displacement, dtype=float)

    @property
    def N(self) -> int:
        return len(self.S) // 2

    def then(self, other: "SymplecticMap") -> "SymplecticMap":
        """Apply self first, then other."""
        return SymplecticMap(other.S @ self.S, other.S @ self.displacement + other.displacement)

    def inverse(self) -> "SymplecticMap":
        Sinv = np.linalg.inv(self.S)
        return SymplecticMap(Sinv, -Sinv @ self.displacement)

    def symplectic_error(self) -> float:
        Om = symplectic_form(self.N)
        return float(np.max(np.abs(self.S.T @ Om @ self.S - Om)))


def identity_map(N: int) -> SymplecticMap:
    return SymplecticMap(np.eye(2 * N))


def _check_sites(N: int, *sites: int) -> None:
    for s in sites:
        if not 1 <= s <= N:
            raise ValueError(f"site {s} outside 1..{N}")
    if len(set(sites)) != len(sites):
        raise ValueError("two-mode gates need distinct sites")


def symplectic_for_gate(gate: str, sites, N: int, power: int = 1) -> SymplecticMap:
    """Mean map of F (power 0..3), CPHASE = exp(i x1 x2) or SUM = exp(-i x1 p2)."""
    sites = (sites,) if isinstance(sites, int) else tuple(sites)
    S = np.eye(2 * N)
    gate = gate.upper()
    if gate == "F":
        (a,) = sites
        _check_sites(N, a)
        # F: (x, p) -> (-p, x), i.e. X(q) -> Z(q) and Z(p) -> X(-p)
        rot = np.linalg.matrix_power(np.array([[0.0, -1.0], [1.0, 0.0]]), power % 4)
        i = _xi(a)
        S[i : i + 2, i : i + 2] = rot
    elif gate == "CPHASE":
        a, b = sites
        _check_sites(N, a, b)
        S[_pi(a), _xi(b)] = 1.0
        S[_pi(b), _xi(a)] = 1.0
    elif gate == "SUM":
        c, t = sites
        _check_sites(N, c, t)
        S[_xi(t), _xi(c)] = 1.0
        S[_pi(c), _pi(t)] = -1.0
    else:
        raise ValueError(f"unknown gate {gate!r}")
    return SymplecticMap(S)


def global_fourier_map(N: int, power: int = 1) -> SymplecticMap:
    return reduce(SymplecticMap.then, (symplectic_for_gate("F", a, N, power) for a in range(1, N + 1)), identity_map(N))


def global_cphase_map(N: int) -> SymplecticMap:
    return reduce(
        SymplecticMap.then,
        (symplectic_for_gate("CPHASE", (j, j + 1), N) for j in range(1, N)),
        identity_map(N),
    )


def mirror_map(N: int, sign: int = 2) -> SymplecticMap:
    """Fbar^sign (Fbar^-1 Sbar)^(N+1) as a single symplectic map."""
    rnd = global_cphase_map(N).then(global_fourier_map(N, -1))
    total = identity_map(N)
    for _ in range(N + 1):
        total = total.then(rnd)
    return total.then(global_fourier_map(N, sign))


def mode_reversal(N: int) -> np.ndarray:
    P = np.zeros((2 * N, 2 * N))
    for a in range(1, N + 1):
        b = N + 1 - a
        P[_xi(b), _xi(a)] = 1.0
        P[_pi(b), _pi(a)] = 1.0
    return P


@dataclass
class GaussianState:
    N: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        self.cov = np.asarray(self.cov, dtype=float)
        if self.mean.shape != (2 * self.N,) or self.cov.shape != (2 * self.N, 2 * self.N):
            raise ValueError("mean/cov shapes do not match N")

    def apply(self, m: SymplecticMap) -> "GaussianState":
        return GaussianState(self.N, m.S @ self.mean + m.displacement, m.S @ self.cov @ m.S.T)

    def is_physical(self, tol: float = 1e-9) -> bool:
        if np.max(np.abs(self.cov - self.cov.T)) > tol:
            return False
        return bool(np.linalg.eigvalsh(self.cov + 1j * symplectic_form(self.N)).min() >= -tol)

    def to_dict(self) -> dict:
        return {"N": self.N, "mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianState":
        return cls(int(data["N"]), data["mean"], data["cov"])


def vacuum(N: int) -> GaussianState:
    return GaussianState(N, np.zeros(2 * N), np.eye(2 * N))


def coherent(N: int, mode: int, alpha: complex, base: GaussianState | None = None) -> GaussianState:
    s = vacuum(N) if base is None else GaussianState(N, base.mean.copy(), base.cov.copy())
    s.mean[_xi(mode)] = np.sqrt(2) * np.real(alpha)
    s.mean[_pi(mode)] = np.sqrt(2) * np.imag(alpha)
    return s


def two_mode_squeezed(N: int, modes: tuple[int, int], r: float) -> GaussianState:
    s = vacuum(N)
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    a, b = modes
    ia, ib = _xi(a), _xi(b)
    Z = np.diag([1.0, -1.0])
    s.cov[ia : ia + 2, ia : ia + 2] = ch * np.eye(2)
    s.cov[ib : ib + 2, ib : ib + 2] = ch * np.eye(2)
    s.cov[ia : ia + 2, ib : ib + 2] = sh * Z
    s.cov[ib : ib + 2, ia : ia + 2] = sh * Z
    return s


@dataclass
class CVMirrorRun:
    before: GaussianState
    after: GaussianState
    deviation: float

    def to_dict(self) -> dict:
        return {"before": self.before.to_dict(), "after": self.after.to_dict(), "deviation": self.deviation}


def run_cv_mirror(s: GaussianState, sign: int = 2) -> GaussianState:
    return s.apply(mirror_map(s.N, sign))


def mirror_run_record(s: GaussianState) -> CVMirrorRun:
    out = run_cv_mirror(s)
    P = mode_reversal(s.N)
    dev = max(np.max(np.abs(out.mean - P @ s.mean)), np.max(np.abs(out.cov - P @ s.cov @ P.T)))
    return CVMirrorRun(s, out, float(dev))


def word_displacement(word, N: int) -> np.ndarray:
    xi = np.zeros(2 * N)
    for site, x, z in word.factors:
        xi[_xi(site)] = x
        xi[_pi(site)] = z
    return xi


def cv_heisenberg_check(q: float, p: float, a: int, N: int, tol: float = 1e-10) -> Report:
    """Cross-check the CV tracker against the composed symplectic map.

    The word X(q)Z(p) at site a is e^{-iqp/2} times the Weyl operator with
    phase-space displacement (q, p) at a. Its image must be X(q)Z(p) at site
    N+1-a; the tracker, the symplectic map and the Weyl phase must all agree.
    """
    rep = Report(f"cv-heisenberg q={q} p={p} a={a} N={N}")
    if not 1 <= a <= N:
        raise ValueError(f"site {a} outside 1..{N}")
    spec = ChainSpec(N, CV)
    w = spec.word(a, q, p)
    tracked = mirror_word(w, spec)
    xi = word_displacement(w, N)
    sym = mirror_map(N).S @ xi
    rep.checked += 1
    sym_support = sorted({(i // 2) + 1 for i in np.flatnonzero(np.abs(sym) > tol)})
    tracked_support = [s for s, x, z in tracked.factors if max(abs(x), abs(z)) > tol]
    if tracked_support != sym_support:
        rep.fail(f"support mismatch: tracker {tracked_support}, symplectic {sym_support}")
    dev = float(np.max(np.abs(word_displacement(tracked, N) - sym)))
    if dev > tol:
        rep.fail(f"displacement mismatch {dev:.3e}")
    # Weyl phase: word = e^{i phase} prod X(x)Z(z) = e^{i(phase - sum xz/2)} W(xi)
    weyl_in = w.phase_exp - q * p / 2
    weyl_out = tracked.phase_exp - sum(x * z for _, x, z in tracked.factors) / 2
    if abs(weyl_in - weyl_out) > tol:
        rep.fail(f"Weyl phase mismatch {weyl_in} vs {weyl_out}")
    expected = spec.word(N + 1 - a, q, p)
    if q == 0 and p == 0:
        ok = tracked.is_identity() or not tracked.factors
    else:
        ok = tracked.factors == expected.factors
    if not ok:
        rep.fail(f"tracker image {tracked.factors} is not X({q})Z({p}) at site {N + 1 - a}")
    return rep
