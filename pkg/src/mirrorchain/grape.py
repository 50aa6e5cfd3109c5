"""Piecewise-constant control of a single mode with a tunable Kerr-like term.

In the dimensionless time tau (units of 1/omega) the controlled Hamiltonian is

    H(tau) = (1 + C1(tau)/50) a^dag a + (eps + C2(tau)/50) X^2,   X = (a + a^dag)/sqrt(2),

with C1, C2 constant on each slice and bounded by |C| <= c_max. The figure of
merit is F = sqrt(|Tr(U^dag T)| / Tr(T^dag T)).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

SCALE = 50.0


def quadrature(n_fock: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), 1)
    return (a + a.T) / np.sqrt(2)


def kerr_target(n_fock: int, strength: float = 0.1) -> np.ndarray:
    """exp(i * strength * X^2) with X the truncated quadrature."""
    lam, V = np.linalg.eigh(quadrature(n_fock))
    return (V * np.exp(1j * strength * lam**2)) @ V.T


@dataclass
class ControlProblem:
    n_fock: int
    target: np.ndarray
    epsilon: float = 1e-3
    duration: float = 50 * 2 * np.pi
    n_slices: int = 500
    c_max: float = 1.0

    def __post_init__(self):
        if self.n_fock < 2:
            raise ValueError("n_fock must be >= 2")
        if self.n_slices < 1:
            raise ValueError("n_slices must be >= 1")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.c_max < 0:
            raise ValueError("c_max must be >= 0")
        self.target = np.asarray(self.target, dtype=complex)
        if self.target.shape != (self.n_fock, self.n_fock):
            raise ValueError(f"target shape {self.target.shape} does not match n_fock={self.n_fock}")
        X = quadrature(self.n_fock)
        self.number = np.diag(np.arange(self.n_fock, dtype=float))
        self.x2 = X @ X

    @classmethod
    def kerr(cls, n_fock: int, strength: float = 0.1, **kw) -> "ControlProblem":
        return cls(n_fock, kerr_target(n_fock, strength), **kw)

    @property
    def dt(self) -> float:
        return self.duration / self.n_slices

    def hamiltonian(self, c1: float, c2: float) -> np.ndarray:
        return (1 + c1 / SCALE) * self.number + (self.epsilon + c2 / SCALE) * self.x2

    def resized(self, n_fock: int, target: np.ndarray) -> "ControlProblem":
        return ControlProblem(n_fock, target, self.epsilon, self.duration, self.n_slices, self.c_max)


@dataclass
class ControlPulse:
    c1: np.ndarray
    c2: np.ndarray
    dt: float

    def __post_init__(self):
        self.c1 = np.asarray(self.c1, dtype=float).reshape(-1)
        self.c2 = np.asarray(self.c2, dtype=float).reshape(-1)
        if self.c1.shape != self.c2.shape:
            raise ValueError("c1 and c2 must have the same length")

    @classmethod
    def zeros(cls, prob: ControlProblem) -> "ControlPulse":
        return cls(np.zeros(prob.n_slices), np.zeros(prob.n_slices), prob.dt)

    @classmethod
    def random(cls, prob: ControlProblem, seed: int, amplitude: float = 0.05, base: "ControlPulse | None" = None) -> "ControlPulse":
        """Uniform noise of width ``amplitude * c_max`` around ``base`` (zero by default)."""
        rng = np.random.default_rng(seed)
        amp = amplitude * prob.c_max
        c1 = rng.uniform(-amp, amp, prob.n_slices)
        c2 = rng.uniform(-amp, amp, prob.n_slices)
        if base is not None:
            c1, c2 = c1 + base.c1, c2 + base.c2
        return cls(np.clip(c1, -prob.c_max, prob.c_max), np.clip(c2, -prob.c_max, prob.c_max), prob.dt)

    @classmethod
    def resonant_guess(cls, prob: ControlProblem, strength: float = 0.1) -> "ControlPulse":
        """First-order pulse for exp(i strength X^2).

        In the frame rotating with a^dag a, X^2(tau) carries a static part and
        a part oscillating at 2 tau. A static plus cos(2 tau) modulation of the
        Kerr channel reproduces both at first order in the small coefficient.
        """
        tau = (np.arange(prob.n_slices) + 0.5) * prob.dt
        T = prob.duration
        static = SCALE * (-strength / T - prob.epsilon)
        mod = -2 * SCALE * strength / T
        c2 = np.clip(static + mod * np.cos(2 * tau), -prob.c_max, prob.c_max)
        return cls(np.zeros(prob.n_slices), c2, prob.dt)

    @property
    def n_slices(self) -> int:
        return len(self.c1)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.c1, self.c2])

    def peak_excursions(self) -> dict:
        """Largest fractional detunings max|C|/50 of the two control channels."""
        return {"c1": float(np.max(np.abs(self.c1), initial=0.0)) / SCALE, "c2": float(np.max(np.abs(self.c2), initial=0.0)) / SCALE}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slice", "tau", "c1", "c2"])
        for k in range(self.n_slices):
            w.writerow([k, f"{k * self.dt:.12g}", f"{self.c1[k]:.12g}", f"{self.c2[k]:.12g}"])
        return buf.getvalue()


class BoundViolation(ValueError):
    pass


def _check(pulse: ControlPulse, prob: ControlProblem) -> None:
    if pulse.n_slices != prob.n_slices:
        raise ValueError(f"pulse has {pulse.n_slices} slices, problem expects {prob.n_slices}")
    if not math.isclose(pulse.dt, prob.dt, rel_tol=1e-12):
        raise ValueError("pulse dt does not match the problem")
    lim = prob.c_max * (1 + 1e-12)
    if np.any(np.abs(pulse.c1) > lim) or np.any(np.abs(pulse.c2) > lim):
        raise BoundViolation(f"control amplitude exceeds c_max={prob.c_max}")


def _slices(pulse: ControlPulse, prob: ControlProblem):
    # eigendecomposition of every slice Hamiltonian
    for c1, c2 in zip(pulse.c1, pulse.c2):
        lam, V = np.linalg.eigh(prob.hamiltonian(c1, c2))
        yield lam, V


def propagate_controls(pulse: ControlPulse, prob: ControlProblem) -> np.ndarray:
    """Ordered product U_K ... U_1 of the slice propagators exp(-i H_k dt)."""
    _check(pulse, prob)
    U = np.eye(prob.n_fock, dtype=complex)
    for lam, V in _slices(pulse, prob):
        U = (V * np.exp(-1j * prob.dt * lam)) @ V.T @ U
    return U


def control_fidelity(U: np.ndarray, target: np.ndarray) -> float:
    if U.shape != target.shape:
        raise ValueError(f"dimension mismatch {U.shape} vs {target.shape}")
    norm = np.real(np.trace(target.conj().T @ target))
    return float(np.sqrt(abs(np.trace(U.conj().T @ target)) / norm))


def fidelity_and_gradient(pulse: ControlPulse, prob: ControlProblem) -> tuple[float, np.ndarray]:
    """F and dF/d(c1, c2) from exact slice derivatives.

    With H_k = V diag(lam) V^T, the derivative of exp(-i H_k dt) along dH is
    V (G o V^T dH V) V^T, where G holds the divided differences of
    exp(-i lam dt) (Daleckii-Krein).
    """
    _check(pulse, prob)
    n, dt, K = prob.n_fock, prob.dt, prob.n_slices
    eig = list(_slices(pulse, prob))
    props = [(V * np.exp(-1j * dt * lam)) @ V.T for lam, V in eig]
    # fwd[k] = U_k ... U_1 (fwd[0] = 1); bwd[k] = T^dag U_K ... U_(k+1)
    fwd = [np.eye(n, dtype=complex)]
    for P in props:
        fwd.append(P @ fwd[-1])
    bwd = [None] * (K + 1)
    bwd[K] = prob.target.conj().T
    for k in range(K, 0, -1):
        bwd[k - 1] = bwd[k] @ props[k - 1]
    overlap = np.trace(bwd[K] @ fwd[K])
    norm = np.real(np.trace(prob.target.conj().T @ prob.target))
    mag = abs(overlap)
    F = math.sqrt(mag / norm)
    grad = np.zeros(2 * K)
    if mag == 0:
        return F, grad
    dH = (prob.number / SCALE, prob.x2 / SCALE)
    for k, (lam, V) in enumerate(eig):
        e = np.exp(-1j * dt * lam)
        diff = lam[:, None] - lam[None, :]
        close = np.abs(diff) < 1e-10
        G = np.where(close, -1j * dt * e[:, None], (e[:, None] - e[None, :]) / np.where(close, 1.0, diff))
        # d overlap = Tr(M dU) with M = fwd[k] bwd[k+1]
        Mt = V.T @ (fwd[k] @ bwd[k + 1]) @ V
        for j, h in enumerate(dH):
            hv = V.T @ h @ V
            do = np.sum(Mt.T * G * hv)
            grad[j * K + k] = np.real(np.conj(overlap) * do) / (2 * F * norm * mag)
    return F, grad


@dataclass
class FidelityTrace:
    iterations: list[tuple[int, float]] = field(default_factory=list)
    final_pulse: ControlPulse | None = None
    converged: bool = False
    message: str = ""
    seed: int | None = None

    @property
    def best_fidelity(self) -> float:
        return max((f for _, f in self.iterations), default=0.0)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "converged": self.converged,
            "message": self.message,
            "best_fidelity": self.best_fidelity,
            "iterations": [[i, f] for i, f in self.iterations],
        }


def optimize_pulse(
    prob: ControlProblem,
    init: ControlPulse,
    max_iter: int = 500,
    tol: float = 1e-6,
    seed: int | None = None,
) -> FidelityTrace:
    """Bounded quasi-Newton ascent of F using the exact gradient.

    Stops when 1 - F < tol or after max_iter iterations. Non-convergence is
    reported in the returned trace together with the best pulse found.
    """
    _check(init, prob)
    K = prob.n_slices
    trace = FidelityTrace(seed=seed)
    state = {"best": (-1.0, init.vector())}

    class _Done(Exception):
        pass

    def as_pulse(v):
        return ControlPulse(v[:K], v[K:], prob.dt)

    def objective(v):
        F, g = fidelity_and_gradient(as_pulse(np.clip(v, -prob.c_max, prob.c_max)), prob)
        if F > state["best"][0]:
            state["best"] = (F, v.copy())
        return 1.0 - F, -g

    def callback(v):
        F = state["best"][0]
        trace.iterations.append((len(trace.iterations), F))
        if 1.0 - F < tol:
            raise _Done

    F0, _ = fidelity_and_gradient(init, prob)
    state["best"] = (F0, init.vector())
    trace.iterations.append((0, F0))
    if 1.0 - F0 < tol:
        trace.final_pulse, trace.converged, trace.message = init, True, "initial pulse meets tolerance"
        return trace
    try:
        res = minimize(
            objective,
            init.vector(),
            jac=True,
            method="L-BFGS-B",
            bounds=[(-prob.c_max, prob.c_max)] * (2 * K),
            callback=callback,
            options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12, "maxcor": 30},
        )
        trace.message = str(res.message)
    except _Done:
        trace.message = "fidelity tolerance reached"
    best_F, best_v = state["best"]
    trace.final_pulse = as_pulse(np.clip(best_v, -prob.c_max, prob.c_max))
    trace.converged = 1.0 - best_F < tol
    if trace.iterations[-1][1] < best_F:
        trace.iterations.append((len(trace.iterations), best_F))
    return trace


def _seed_run(args) -> FidelityTrace:
    prob, seed, max_iter, tol, base, amplitude = args
    init = ControlPulse.random(prob, seed, amplitude=amplitude, base=base)
    return optimize_pulse(prob, init, max_iter=max_iter, tol=tol, seed=seed)


def multi_start(
    prob: ControlProblem,
    seeds,
    max_iter: int = 500,
    tol: float = 1e-6,
    jobs: int = 1,
    strength: float | None = 0.1,
    amplitude: float = 0.005,
) -> tuple[FidelityTrace, list[FidelityTrace]]:
    """Optimize from seeded random perturbations; return (best, all).

    Starts are centred on ``ControlPulse.resonant_guess(prob, strength)``, or
    on zero when ``strength`` is None. Sequential runs stop at the first seed
    that converges.
    """
    base = None if strength is None else ControlPulse.resonant_guess(prob, strength)
    tasks = [(prob, int(s), max_iter, tol, base, amplitude) for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_seed_run, tasks))
    else:
        runs = []
        for t in tasks:
            runs.append(_seed_run(t))
            if runs[-1].converged:
                break
    best = max(runs, key=lambda r: r.best_fidelity)
    return best, runs


def composed_fidelity(pulse: ControlPulse, prob: ControlProblem, repetitions: int, target: np.ndarray) -> float:
    U = propagate_controls(pulse, prob)
    return control_fidelity(np.linalg.matrix_power(U, repetitions), target)


def truncation_check(pulse: ControlPulse, prob: ControlProblem, extra: int = 10, strength: float = 0.1) -> tuple[float, float]:
    """Fidelity of the same pulse on the original and on an enlarged truncation.

    The enlarged propagator is compared with the enlarged target on the
    original n_fock-dimensional block. That block of the target is not
    unitary, which the Tr(T^dag T) normalization accounts for.
    """
    n = prob.n_fock
    big = prob.resized(n + extra, kerr_target(n + extra, strength))
    U = propagate_controls(pulse, big)[:n, :n]
    f_big = control_fidelity(U, big.target[:n, :n])
    return control_fidelity(propagate_controls(pulse, prob), prob.target), f_big


@dataclass
class Segment:
    mode: str
    pulse: ControlPulse

    @property
    def duration(self) -> float:
        return self.pulse.dt * self.pulse.n_slices


@dataclass
class CphaseSchedule:
    segments: list[Segment]
    bias_switch_after: int
    absorbed_rotations: dict[str, float]
    total_cycles: float

    def to_dict(self) -> dict:
        return {
            "segments": [[s.mode, s.duration] for s in self.segments],
            "bias_switch_after": self.bias_switch_after,
            "absorbed_rotations": self.absorbed_rotations,
            "total_cycles": self.total_cycles,
        }


def assemble_cphase(pulse_a: ControlPulse | None, pulse_b: ControlPulse | None, repetitions: int = 10, spectator_frequency: float = 1.0) -> CphaseSchedule:
    """Lay out exp(iX_a'^2) exp(-iX_b'^2) as 2 x ``repetitions`` segments.

    ``pulse_a`` realizes exp(iX^2/10) on a' (sum bias) and ``pulse_b``
    realizes exp(-iX^2/10) on b' (difference bias). While one mode is driven
    the other rotates freely by exp(-i theta n); the angles theta (mod 2 pi)
    are returned so they can be folded into the neighbouring Fourier gates.
    """
    if pulse_a is None or pulse_b is None:
        raise ValueError("missing optimized pulse")
    segs = [Segment("a'", pulse_a)] * repetitions + [Segment("b'", pulse_b)] * repetitions
    t_a = repetitions * segs[0].duration
    t_b = repetitions * segs[-1].duration
    rot = {}
    for mode, t in (("b'", t_a), ("a'", t_b)):
        theta = math.remainder(spectator_frequency * t, 2 * np.pi)
        if abs(theta) > 1e-9:
            rot[mode] = theta % (2 * np.pi)
    return CphaseSchedule(segs, repetitions, rot, (t_a + t_b) / (2 * np.pi))


def run_record(prob: ControlProblem, seeds, best: FidelityTrace, runs: list[FidelityTrace], extra: dict | None = None) -> dict:
    rec = {
        "n_fock": prob.n_fock,
        "n_slices": prob.n_slices,
        "duration": prob.duration,
        "epsilon": prob.epsilon,
        "c_max": prob.c_max,
        "quadrature": "X=(a+a^dag)/sqrt(2)",
        "seeds": [int(s) for s in seeds],
        "best_seed": best.seed,
        "best_fidelity": best.best_fidelity,
        "iterations": len(best.iterations) - 1,
        "runs": [r.to_dict() for r in runs],
    }
    if best.final_pulse is not None:
        rec["peak_excursions"] = best.final_pulse.peak_excursions()
    if extra:
        rec.update(extra)
    return rec


def static_propagator(prob: ControlProblem, c1: float, c2: float, t: float) -> np.ndarray:
    return sla.expm(-1j * t * prob.hamiltonian(c1, c2))
