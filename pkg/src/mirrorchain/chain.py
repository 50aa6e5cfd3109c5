"""Dense state-vector simulation of the global-pulse mirror circuit."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .qudit import QUDIT, fourier_gate, generalized_pauli

MAX_DIM = 4096


def _check_size(d: int, N: int, allow_large: bool) -> None:
    if d < 2 or N < 1:
        raise ValueError(f"need d >= 2 and N >= 1, got d={d}, N={N}")
    if d**N > MAX_DIM and not allow_large:
        raise ValueError(f"d**N = {d**N} exceeds {MAX_DIM}; pass allow_large=True to override")


@dataclass
class DenseState:
    d: int
    N: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != self.d**self.N:
            raise ValueError(f"expected {self.d**self.N} amplitudes, got {self.amplitudes.size}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * self.N)

    def copy(self) -> "DenseState":
        return DenseState(self.d, self.N, self.amplitudes.copy())


def basis_state(d: int, digits, allow_large: bool = False) -> DenseState:
    digits = [int(x) for x in digits]
    N = len(digits)
    _check_size(d, N, allow_large)
    amp = np.zeros(d**N, dtype=complex)
    amp[np.ravel_multi_index([x % d for x in digits], (d,) * N)] = 1.0
    return DenseState(d, N, amp)


def product_state(d: int, site_states, allow_large: bool = False) -> DenseState:
    vecs = [np.asarray(v, dtype=complex) for v in site_states]
    _check_size(d, len(vecs), allow_large)
    amp = reduce(np.kron, vecs)
    return DenseState(d, len(vecs), amp / np.linalg.norm(amp))


def random_state(d: int, N: int, rng: np.random.Generator, allow_large: bool = False) -> DenseState:
    """Haar-random (generically entangled) pure state."""
    _check_size(d, N, allow_large)
    amp = rng.normal(size=d**N) + 1j * rng.normal(size=d**N)
    return DenseState(d, N, amp / np.linalg.norm(amp))


def random_qudit(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def figure2a_state(psi, N: int, allow_large: bool = False) -> DenseState:
    """|psi> (x) |0> (x) |+> (x) |0> (x) ... with |+> = F|0>."""
    psi = np.asarray(psi, dtype=complex)
    d = psi.size
    zero = np.eye(d, dtype=complex)[0]
    plus = fourier_gate(d, 1) @ zero
    rest = [zero if j % 2 == 0 else plus for j in range(N - 1)]
    return product_state(d, [psi, *rest], allow_large)


def apply_single_site(s: DenseState, op: np.ndarray, site: int) -> DenseState:
    t = np.moveaxis(np.tensordot(op, s.tensor(), axes=([1], [site - 1])), 0, site - 1)
    return DenseState(s.d, s.N, t.reshape(-1))


def apply_global_fourier(s: DenseState, power: int = 1) -> DenseState:
    """Apply F^power to every site."""
    if power % 4 == 0:
        return s.copy()
    f = fourier_gate(s.d, power)
    return DenseState(s.d, s.N, _fourier_layer(s.amplitudes, f, s.d, s.N, 1).reshape(-1))


def _fourier_layer(a: np.ndarray, f: np.ndarray, d: int, N: int, cols: int) -> np.ndarray:
    # f on every site of a (d**N, cols) block; the site axis sits between two flattened ones
    for k in range(N):
        a = np.matmul(f, a.reshape(d**k, d, -1))
    return a.reshape(d**N, cols)


def cphase_ladder_phases(d: int, N: int) -> np.ndarray:
    """Diagonal of Sbar: zeta**(sum_j n_j n_(j+1)) over the computational basis."""
    digits = np.indices((d,) * N).reshape(N, -1)
    acc = np.zeros(d**N, dtype=np.int64)
    for j in range(N - 1):
        acc += digits[j] * digits[j + 1]
    return np.exp(2j * np.pi * (acc % d) / d)


def apply_global_cphase(s: DenseState) -> DenseState:
    """Apply the nearest-neighbour CPHASE ladder (diagonal)."""
    return DenseState(s.d, s.N, cphase_ladder_phases(s.d, s.N) * s.amplitudes)


def _rounds(s: DenseState, n_rounds: int) -> DenseState:
    phases = cphase_ladder_phases(s.d, s.N)
    for _ in range(n_rounds):
        s = apply_global_fourier(DenseState(s.d, s.N, phases * s.amplitudes), -1)
    return s


def run_mirror_protocol(s: DenseState, sign: int = 2) -> DenseState:
    """Fbar^sign (Fbar^-1 Sbar)^(N+1) |s>."""
    if sign not in (2, -2):
        raise ValueError("sign must be +2 or -2")
    return apply_global_fourier(_rounds(s, s.N + 1), sign)


def run_without_final_segment(s: DenseState) -> DenseState:
    """(Fbar^-1 Sbar)^N Fbar |s>: the transport circuit without its last segment.

    Moves |psi> from site 1 to site N for the ``figure2a_state`` family but is
    not a mirror for general inputs.
    """
    return _rounds(apply_global_fourier(s, 1), s.N)


def site_reversal(s: DenseState) -> DenseState:
    t = s.tensor().transpose(tuple(range(s.N))[::-1])
    return DenseState(s.d, s.N, t.reshape(-1))


def _reversal_index(d: int, N: int) -> np.ndarray:
    return np.arange(d**N).reshape((d,) * N).transpose(tuple(range(N))[::-1]).reshape(-1)


def reversal_matrix(d: int, N: int) -> np.ndarray:
    dim = d**N
    idx = _reversal_index(d, N)
    out = np.zeros((dim, dim), dtype=complex)
    # column j (input basis state) -> row of its reversed digits
    out[idx, np.arange(dim)] = 1.0
    return out


@dataclass
class MirrorReport:
    fidelity: float
    phase: complex
    max_deviation: float

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "global_phase": [self.phase.real, self.phase.imag],
            "max_deviation": self.max_deviation,
        }


def mirror_fidelity(inp: DenseState, out: DenseState) -> MirrorReport:
    """|<R inp|out>| plus the global phase and worst amplitude deviation."""
    if (inp.d, inp.N) != (out.d, out.N):
        raise ValueError("states live on different chains")
    ref = site_reversal(inp).amplitudes
    ov = np.vdot(ref, out.amplitudes)
    fid = float(abs(ov))
    phase = ov / abs(ov) if fid > 0 else 1.0 + 0j
    dev = float(np.max(np.abs(out.amplitudes - phase * ref)))
    return MirrorReport(fid, complex(phase), dev)


def circuit_matrix(d: int, N: int, sign: int = 2, allow_large: bool = False) -> np.ndarray:
    """Dense unitary of the full protocol, built column by column."""
    _check_size(d, N, allow_large)
    dim = d**N
    t = np.eye(dim, dtype=complex)
    phases = cphase_ladder_phases(d, N)[:, None]
    finv = fourier_gate(d, -1)
    for _ in range(N + 1):
        t = _fourier_layer(phases * t, finv, d, N, dim)
    return _fourier_layer(t, fourier_gate(d, sign), d, N, dim)


def operator_mirror_deviation(U: np.ndarray, d: int, N: int) -> tuple[complex, float]:
    """Global phase phi and max |U - e^{i phi} R| for the site-reversal R."""
    dim = d**N
    rows = _reversal_index(d, N)
    cols = np.arange(dim)
    # R has its ones at (rows[j], j), so the largest element of U R^dag is the largest of U
    k = np.unravel_index(np.argmax(np.abs(U)), U.shape)
    phase = U[k] / abs(U[k])
    diff = U.copy()
    diff[rows, cols] -= phase
    return complex(phase), float(np.max(np.abs(diff)))


def apply_word(s: DenseState, w) -> DenseState:
    """Act with a qudit PauliWord on a state without forming the dense operator."""
    if w.mode != QUDIT or w.d != s.d:
        raise ValueError("word and state disagree on mode/dimension")
    out = s
    for site, x, z in w.factors:
        if site > s.N:
            raise ValueError(f"word acts on site {site} beyond N={s.N}")
        op = generalized_pauli(s.d, "X", x) @ generalized_pauli(s.d, "Z", z)
        out = apply_single_site(out, op, site)
    return DenseState(s.d, s.N, w.phase * out.amplitudes)


def apply_round(s: DenseState) -> DenseState:
    """One round Fbar^-1 Sbar."""
    return apply_global_fourier(apply_global_cphase(s), -1)


def apply_round_inverse(s: DenseState) -> DenseState:
    """(Fbar^-1 Sbar)^dag = Sbar^dag Fbar."""
    t = apply_global_fourier(s, 1)
    return DenseState(s.d, s.N, np.conj(cphase_ladder_phases(s.d, s.N)) * t.amplitudes)
