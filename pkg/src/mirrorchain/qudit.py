"""Generalized Pauli operators, the qudit Fourier gate and two-qudit gates.

Dense operators are plain ``numpy`` arrays. Sites are 1-based and site 1 is
the leftmost (most significant) tensor factor. ``PauliWord`` is the symbolic
counterpart used by the Heisenberg tracker; it works for qudits (integer
exponents mod d) and for continuous variables (real exponents).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping

import numpy as np

QUDIT = "qudit"
CV = "cv"


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise ValueError(f"qudit dimension must be an integer >= 2, got {d!r}")
    return int(d)


def root_of_unity(d: int) -> complex:
    """Principal d-th root of unity exp(2*pi*i/d)."""
    d = _check_dim(d)
    return np.exp(2j * np.pi / d)


def generalized_pauli(d: int, kind: str, power: int = 1) -> np.ndarray:
    """Return X_d**power (cyclic shift |j> -> |j+1>) or Z_d**power (clock)."""
    d = _check_dim(d)
    power = int(power) % d
    j = np.arange(d)
    if kind.upper() == "X":
        op = np.zeros((d, d), dtype=complex)
        op[(j + power) % d, j] = 1.0
        return op
    if kind.upper() == "Z":
        return np.diag(np.exp(2j * np.pi * power * j / d))
    raise ValueError(f"kind must be 'X' or 'Z', got {kind!r}")


def fourier_gate(d: int, power: int = 1) -> np.ndarray:
    """F|a> = d**-0.5 sum_k zeta**(k a) |k>, raised to ``power`` (mod 4)."""
    d = _check_dim(d)
    k = np.arange(d)
    f = np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
    power = int(power) % 4
    if power == 0:
        return np.eye(d, dtype=complex)
    if power == 2:
        # F^2 |a> = |-a mod d>, exact permutation
        out = np.zeros((d, d), dtype=complex)
        out[(-k) % d, k] = 1.0
        return out
    if power == 3:
        return f.conj().T
    return f


def embed(op: np.ndarray, site: int, n_sites: int, d: int) -> np.ndarray:
    """Tensor a single-site operator into the n_sites-fold space at ``site``."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} outside 1..{n_sites}")
    left = np.eye(d ** (site - 1), dtype=complex)
    right = np.eye(d ** (n_sites - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def _controlled(d: int, kind: str, control: int, target: int, n_sites: int) -> np.ndarray:
    # sum_n |n><n|_control (x) P^n_target with P = Z (CPHASE) or X (SUM)
    dim = d**n_sites
    out = np.zeros((dim, dim), dtype=complex)
    proj = np.zeros((d, d), dtype=complex)
    for n in range(d):
        proj[:] = 0.0
        proj[n, n] = 1.0
        ops = [np.eye(d, dtype=complex)] * n_sites
        ops[control - 1] = proj
        ops[target - 1] = generalized_pauli(d, kind, n)
        out += reduce(np.kron, ops)
    return out


def two_qudit_gate(d: int, kind: str, control: int, target: int, n_sites: int = 2) -> np.ndarray:
    """Dense CPHASE, SUM or SWAP acting on (control, target) of an n_sites chain.

    The SWAP is assembled from SUM and F^2 factors,
    D(12) F^2(1) D(21) F^2(1) D(12) F^2(2).
    """
    d = _check_dim(d)
    if control == target:
        raise ValueError("control and target must differ")
    for s in (control, target):
        if not 1 <= s <= n_sites:
            raise ValueError(f"site {s} outside 1..{n_sites}")
    kind = kind.upper()
    if kind == "CPHASE":
        return _controlled(d, "Z", control, target, n_sites)
    if kind == "SUM":
        return _controlled(d, "X", control, target, n_sites)
    if kind == "SWAP":
        f2 = fourier_gate(d, 2)
        d12 = _controlled(d, "X", control, target, n_sites)
        d21 = _controlled(d, "X", target, control, n_sites)
        f2c = embed(f2, control, n_sites, d)
        f2t = embed(f2, target, n_sites, d)
        return d12 @ f2c @ d21 @ f2c @ d12 @ f2t
    raise ValueError(f"kind must be CPHASE, SUM or SWAP, got {kind!r}")


def swap_with_ancilla(d: int) -> np.ndarray:
    """Two-qudit circuit equivalent to SWAP when qudit 2 starts in |0>.

    Obtained by dropping the gates that act trivially on |0>_2 and rewriting
    both SUM gates as Fourier-conjugated CPHASE gates. In time order:
    F(2), CPHASE, F^-1 on both qudits, CPHASE, F^-1(1).
    """
    d = _check_dim(d)
    s = two_qudit_gate(d, "CPHASE", 1, 2, 2)
    eye = np.eye(d, dtype=complex)
    finv = fourier_gate(d, -1)
    return (
        np.kron(finv, eye)
        @ s
        @ np.kron(finv, finv)
        @ s
        @ np.kron(eye, fourier_gate(d, 1))
    )


@dataclass(frozen=True)
class PauliWord:
    """Phase times a product of site-local X^x Z^z factors (X left of Z).

    ``factors`` is a sorted tuple of ``(site, x, z)``; sites with (0, 0) are
    dropped. ``phase_exp`` is the exponent of the root of unity: an integer mod
    d meaning zeta_d**k in qudit mode, a real angle in CV mode.
    """

    mode: str
    d: int | None
    factors: tuple[tuple[int, float, float], ...] = ()
    phase_exp: float = 0

    def __post_init__(self):
        if self.mode == QUDIT:
            d = _check_dim(self.d)
            object.__setattr__(self, "d", d)
            reduced = {}
            for site, x, z in self.factors:
                reduced[int(site)] = (int(x) % d, int(z) % d)
            phase = int(self.phase_exp) % d
        elif self.mode == CV:
            object.__setattr__(self, "d", None)
            reduced = {int(site): (float(x), float(z)) for site, x, z in self.factors}
            phase = float(self.phase_exp)
        else:
            raise ValueError(f"mode must be {QUDIT!r} or {CV!r}, got {self.mode!r}")
        if len(reduced) != len(self.factors):
            raise ValueError("each site may appear at most once")
        facs = tuple(
            (site, x, z) for site, (x, z) in sorted(reduced.items()) if not (x == 0 and z == 0)
        )
        for site, _, _ in facs:
            if site < 1:
                raise ValueError(f"sites are 1-based, got {site}")
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "phase_exp", phase)

    @classmethod
    def identity(cls, mode: str = QUDIT, d: int | None = None) -> "PauliWord":
        return cls(mode, d)

    @classmethod
    def single(cls, site: int, x: float = 0, z: float = 0, *, mode: str = QUDIT, d: int | None = None) -> "PauliWord":
        return cls(mode, d, ((site, x, z),))

    @classmethod
    def from_map(cls, exps: Mapping[int, tuple[float, float]], *, mode: str = QUDIT, d: int | None = None, phase_exp: float = 0) -> "PauliWord":
        return cls(mode, d, tuple((s, x, z) for s, (x, z) in exps.items()), phase_exp)

    @property
    def phase(self) -> complex:
        if self.mode == QUDIT:
            return complex(np.exp(2j * np.pi * self.phase_exp / self.d))
        return complex(np.exp(1j * self.phase_exp))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(s for s, _, _ in self.factors)

    def exponents(self) -> dict[int, tuple[float, float]]:
        return {s: (x, z) for s, x, z in self.factors}

    def is_identity(self) -> bool:
        return not self.factors and self.phase_exp == 0

    def __mul__(self, other: "PauliWord") -> "PauliWord":
        return pauli_word_mul(self, other)

    def negated(self) -> "PauliWord":
        """Same word with every exponent sign-flipped (phase kept)."""
        return PauliWord(self.mode, self.d, tuple((s, -x, -z) for s, x, z in self.factors), self.phase_exp)

    def to_dense(self, n_sites: int) -> np.ndarray:
        """Realize the word as a d**n_sites matrix (qudit mode only)."""
        if self.mode != QUDIT:
            raise ValueError("only qudit words have a finite dense realization")
        exps = self.exponents()
        if exps and max(exps) > n_sites:
            raise ValueError(f"word acts on site {max(exps)} beyond n_sites={n_sites}")
        d = self.d
        ops = []
        for site in range(1, n_sites + 1):
            x, z = exps.get(site, (0, 0))
            ops.append(generalized_pauli(d, "X", x) @ generalized_pauli(d, "Z", z))
        return self.phase * reduce(np.kron, ops, np.eye(1, dtype=complex))


def pauli_word_mul(a: PauliWord, b: PauliWord) -> PauliWord:
    """Normal-ordered product a*b.

    Per site, (X^x1 Z^z1)(X^x2 Z^z2) = zeta**(z1*x2) X^(x1+x2) Z^(z1+z2),
    using Z^k X^j = zeta**(jk) X^j Z^k. The same rule holds for CV with
    zeta = e^i, which is why both modes share this code path.
    """
    if a.mode != b.mode or a.d != b.d:
        raise ValueError(f"cannot multiply {a.mode}(d={a.d}) by {b.mode}(d={b.d})")
    ea, eb = a.exponents(), b.exponents()
    phase = a.phase_exp + b.phase_exp
    out = {}
    for site in set(ea) | set(eb):
        x1, z1 = ea.get(site, (0, 0))
        x2, z2 = eb.get(site, (0, 0))
        phase += z1 * x2
        out[site] = (x1 + x2, z1 + z2)
    return PauliWord.from_map(out, mode=a.mode, d=a.d, phase_exp=phase)


def word_product(words: Iterable[PauliWord], mode: str = QUDIT, d: int | None = None) -> PauliWord:
    return reduce(pauli_word_mul, words, PauliWord.identity(mode, d))
