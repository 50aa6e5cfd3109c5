"""Invariant suite shared by ``mirrorchain verify-all`` and the test-suite.

Every check returns a ``Report``. Randomness comes only from the generator
passed in, so a fixed seed reproduces a report exactly.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from . import chain, cqed, cv, grape
from .qudit import (
    CV,
    QUDIT,
    PauliWord,
    embed,
    fourier_gate,
    generalized_pauli,
    root_of_unity,
    swap_with_ancilla,
    two_qudit_gate,
)
from .tracker import ChainSpec, Report, conjugate_round, mirror_trajectory, mirror_word, verify_mirror_relation

QUDIT_GRID = tuple((d, N) for d in (2, 3, 5) for N in range(2, 7) if d**N <= chain.MAX_DIM)


def _close(rep: Report, label: str, err: float, tol: float) -> None:
    rep.checked += 1
    key = "max_error"
    rep.metrics[key] = max(rep.metrics.get(key, 0.0), float(err))
    if not err <= tol:
        rep.fail(f"{label}: error {err:.3e} > {tol:.0e}")


def random_word(spec: ChainSpec, rng: np.random.Generator) -> PauliWord:
    d = spec.d
    factors = tuple((s, int(rng.integers(d)), int(rng.integers(d))) for s in range(1, spec.N + 1))
    return PauliWord(QUDIT, d, factors, int(rng.integers(d)))


# ------------------------------------------------------------------ qudit gates


def check_gate_identities(rng: np.random.Generator, dims=(2, 3, 5, 7), samples: int = 100, word_pairs: int = 1000) -> Report:
    rep = Report("gate-identities")
    tol = 1e-12
    for d in dims:
        X, Z, I = generalized_pauli(d, "X"), generalized_pauli(d, "Z"), np.eye(d)
        zeta = root_of_unity(d)
        _close(rep, f"X^d d={d}", np.abs(np.linalg.matrix_power(X, d) - I).max(), tol)
        _close(rep, f"Z^d d={d}", np.abs(np.linalg.matrix_power(Z, d) - I).max(), tol)
        _close(rep, f"F^4 d={d}", np.abs(np.linalg.matrix_power(fourier_gate(d), 4) - I).max(), tol)
        for j in range(d):
            for k in range(d):
                Xj, Zk = generalized_pauli(d, "X", j), generalized_pauli(d, "Z", k)
                _close(rep, f"Z^k X^j d={d}", np.abs(Zk @ Xj - zeta ** (j * k) * Xj @ Zk).max(), tol)
        f2 = embed(fourier_gate(d, 1), 2, 2, d)
        f2inv = embed(fourier_gate(d, -1), 2, 2, d)
        cph = two_qudit_gate(d, "CPHASE", 1, 2)
        sm = two_qudit_gate(d, "SUM", 1, 2)
        _close(rep, f"SUM = F^-1 CPHASE F d={d}", np.abs(sm - f2inv @ cph @ f2).max(), tol)
        # six-factor SWAP product against the permutation
        sq = fourier_gate(d, 2)
        d12, d21 = two_qudit_gate(d, "SUM", 1, 2), two_qudit_gate(d, "SUM", 2, 1)
        six = d12 @ np.kron(sq, I) @ d21 @ np.kron(sq, I) @ d12 @ np.kron(I, sq)
        perm = np.zeros((d * d, d * d))
        for a in range(d):
            for b in range(d):
                perm[b * d + a, a * d + b] = 1
        swap = two_qudit_gate(d, "SWAP", 1, 2)
        _close(rep, f"SWAP six-factor d={d}", np.abs(swap - six).max(), tol)
        _close(rep, f"SWAP permutation d={d}", np.abs(swap - perm).max(), tol)
        simple = swap_with_ancilla(d)
        zero = I[0]
        for _ in range(samples):
            psi = chain.random_qudit(d, rng)
            phi = chain.random_qudit(d, rng)
            _close(rep, f"SWAP product state d={d}", np.abs(swap @ np.kron(psi, phi) - np.kron(phi, psi)).max(), tol)
            inp = np.kron(psi, zero)
            _close(rep, f"simplified SWAP d={d}", np.abs(simple @ inp - swap @ inp).max(), tol)
        n_sites = 3
        spec = ChainSpec(n_sites, QUDIT, d)
        for _ in range(word_pairs if d ** n_sites <= 125 else word_pairs // 10):
            a, b = random_word(spec, rng), random_word(spec, rng)
            _close(rep, f"word product d={d}", np.abs((a * b).to_dense(n_sites) - a.to_dense(n_sites) @ b.to_dense(n_sites)).max(), tol)
    return rep


# ------------------------------------------------------------------ chain


def check_mirror_exactness(grid=QUDIT_GRID, tol: float = 1e-10, time_limit: float = 10.0) -> Report:
    rep = Report("mirror-exactness")
    worst_time = 0.0
    for d, N in grid:
        for sign in (2, -2):
            t0 = time.perf_counter()
            U = chain.circuit_matrix(d, N, sign)
            _, dev = chain.operator_mirror_deviation(U, d, N)
            elapsed = time.perf_counter() - t0
            worst_time = max(worst_time, elapsed)
            _close(rep, f"d={d} N={N} sign={sign:+d}", dev, tol)
            if elapsed > time_limit:
                rep.fail(f"d={d} N={N}: {elapsed:.1f} s exceeds {time_limit} s")
    rep.metrics["slowest_run_under_limit"] = worst_time <= time_limit
    return rep


def check_input_independence(rng: np.random.Generator, grid=QUDIT_GRID, samples: int = 100, tol: float = 1e-10) -> Report:
    rep = Report("input-independence")
    worst = 0.0
    for d, N in grid:
        for i in range(samples):
            s = chain.random_state(d, N, rng)
            r = chain.mirror_fidelity(s, chain.run_mirror_protocol(s, 2 if i % 2 == 0 else -2))
            worst = max(worst, 1 - r.fidelity)
            rep.checked += 1
            if not r.fidelity >= 1 - tol:
                rep.fail(f"d={d} N={N} sample {i}: fidelity {r.fidelity!r}")
        # product states and a mixed state through its purification
        prod = chain.product_state(d, [chain.random_qudit(d, rng) for _ in range(N)])
        r = chain.mirror_fidelity(prod, chain.run_mirror_protocol(prod))
        rep.checked += 1
        if not r.fidelity >= 1 - tol:
            rep.fail(f"d={d} N={N} product state: fidelity {r.fidelity!r}")
    rep.metrics["worst_infidelity"] = worst
    return rep


def check_mixed_state(rng: np.random.Generator, d: int = 3, N: int = 3, terms: int = 4, tol: float = 1e-10) -> Report:
    """A random mixture rho = sum p_i |s_i><s_i| maps to R rho R^dag."""
    rep = Report("mixed-state-mirror")
    p = rng.dirichlet(np.ones(terms))
    states = [chain.random_state(d, N, rng) for _ in range(terms)]
    rho = sum(pi * np.outer(s.amplitudes, s.amplitudes.conj()) for pi, s in zip(p, states))
    U = chain.circuit_matrix(d, N)
    R = chain.reversal_matrix(d, N)
    _close(rep, "mixed state", np.abs(U @ rho @ U.conj().T - R @ rho @ R.T).max(), tol)
    return rep


def check_truncated_circuit(rng: np.random.Generator, grid=((2, 3), (2, 4), (3, 3), (3, 4), (5, 3)), samples: int = 10, tol: float = 1e-10) -> Report:
    """Dropping the last segment still transports |psi>0+0... but is no mirror."""
    rep = Report("truncated-circuit")
    for d, N in grid:
        for _ in range(samples):
            psi = chain.random_qudit(d, rng)
            out = chain.run_without_final_segment(chain.figure2a_state(psi, N))
            # reduced state of site N must be the pure |psi>
            t = out.tensor().reshape(d ** (N - 1), d)
            rho_last = t.T @ t.conj()
            _close(rep, f"transport d={d} N={N}", abs(1 - np.real(psi.conj() @ rho_last @ psi)), tol)
        s = chain.random_state(d, N, rng)
        r = chain.mirror_fidelity(s, chain.run_without_final_segment(s))
        rep.checked += 1
        if r.fidelity > 1 - 1e-3:
            rep.fail(f"d={d} N={N}: truncated circuit unexpectedly mirrors a random state")
    return rep


# ------------------------------------------------------------------ tracker


def _conjugated(v: chain.DenseState, w: PauliWord) -> chain.DenseState:
    # U w U^dag v for one round U
    return chain.apply_round(chain.apply_word(chain.apply_round_inverse(v), w))


def check_tracker_oracle(rng: np.random.Generator, grid=QUDIT_GRID, words: int = 200, tol: float = 1e-12) -> Report:
    """Symbolic round against dense conjugation, phase included.

    Operators are compared through their action on a random (full-support)
    state, which distinguishes distinct operators with probability one.
    """
    rep = Report("tracker-oracle")
    for d, N in grid:
        spec = ChainSpec(N, QUDIT, d)
        v = chain.random_state(d, N, rng)
        cases = [spec.word(a, x=l) for a in range(1, N + 1) for l in range(1, d)]
        cases += [spec.word(a, z=l) for a in range(1, N + 1) for l in range(1, d)]
        cases += [random_word(spec, rng) for _ in range(words)]
        for w in cases:
            got = chain.apply_word(v, conjugate_round(w, spec)).amplitudes
            want = _conjugated(v, w).amplitudes
            _close(rep, f"d={d} N={N} {w.factors}", np.abs(got - want).max(), tol)
    return rep


def check_mirror_relations(rng: np.random.Generator, grid=QUDIT_GRID, tol: float = 1e-10) -> Report:
    """After N+1 rounds X^l_a -> X^-l_(N+1-a); the final flip restores l."""
    rep = Report("mirror-relations")
    for d, N in grid:
        spec = ChainSpec(N, QUDIT, d)
        for sign in (2, -2):
            sub = verify_mirror_relation(spec, sign)
            rep.checked += sub.checked
            rep.failures += sub.failures
        v = chain.random_state(d, N, rng)
        for a in range(1, N + 1):
            for l in range(1, d):
                for kind in ("X", "Z"):
                    w = spec.word(a, x=l) if kind == "X" else spec.word(a, z=l)
                    pre = mirror_trajectory(w, spec, N + 1).final
                    b = N + 1 - a
                    want_pre = spec.word(b, x=-l) if kind == "X" else spec.word(b, z=-l)
                    rep.checked += 1
                    if pre != want_pre:
                        rep.fail(f"{kind}^{l}_{a} after N+1 rounds: {pre.factors}")
                    img = chain.apply_word(v, mirror_word(w, spec)).amplitudes
                    for sign in (2, -2):
                        # dense: U w U^dag v with the full protocol
                        u = chain.apply_global_fourier(v, -sign)
                        for _ in range(N + 1):
                            u = chain.apply_round_inverse(u)
                        u = chain.run_mirror_protocol(chain.apply_word(u, w), sign)
                        _close(rep, f"dense {kind}^{l}_{a} d={d} N={N} sign={sign:+d}", np.abs(u.amplitudes - img).max(), tol)
    return rep


# ------------------------------------------------------------------ CV


def check_cv_mirror(rng: np.random.Generator, sizes=range(1, 9), triples: int = 100, tol: float = 1e-9) -> Report:
    rep = Report("cv-mirror")
    for N in sizes:
        m = cv.mirror_map(N)
        _close(rep, f"N={N} map", np.abs(m.S - cv.mode_reversal(N)).max(), tol)
        _close(rep, f"N={N} symplectic", m.symplectic_error(), 1e-10)
        sub = verify_mirror_relation(ChainSpec(N, CV))
        rep.checked += sub.checked
        rep.failures += sub.failures
        for _ in range(triples):
            q, p = rng.uniform(-3, 3, 2)
            a = int(rng.integers(1, N + 1))
            sub = cv.cv_heisenberg_check(float(q), float(p), a, N, tol=tol)
            rep.checked += sub.checked
            rep.failures += sub.failures
        s = cv.coherent(N, 1, complex(*rng.normal(size=2)))
        if N >= 2:
            s = cv.two_mode_squeezed(N, (1, 2), float(rng.uniform(0, 1)))
        out = cv.run_cv_mirror(s)
        rep.checked += 1
        if not out.is_physical():
            rep.fail(f"N={N}: covariance positivity lost")
    # CPHASE = F_(2) SUM F_(2)^-1 on phase space
    f2 = cv.symplectic_for_gate("F", 2, 2).S
    f2inv = cv.symplectic_for_gate("F", 2, 2, -1).S
    sm = cv.symplectic_for_gate("SUM", (1, 2), 2).S
    _close(rep, "CPHASE from SUM", np.abs(cv.symplectic_for_gate("CPHASE", (1, 2), 2).S - f2 @ sm @ f2inv).max(), 1e-12)
    return rep


# ------------------------------------------------------------------ circuit QED


def check_chi_eta(rng: np.random.Generator, samples: int = 1000, tol: float = 1e-12) -> Report:
    rep = Report("chi-eta")
    worst = 0.0
    for _ in range(samples):
        g = rng.uniform(0.01, 1.0)
        p = cqed.DeviceParams(
            omega0=rng.uniform(1, 50), omega_a=1.0, omega_b=1.0, g_a=g, g_b=g,
            gamma=rng.uniform(1e-4, 5.0), kappa_a=0.0, kappa_b=0.0,
        )
        chi, eta = cqed.effective_rates(p)
        lhs, rhs = chi * p.gamma / 2, eta * p.omega0
        err = abs(lhs - rhs) / abs(rhs)
        worst = max(worst, err)
        rep.checked += 1
        if not err < tol:
            rep.fail(f"chi*gamma/2 != eta*omega0 at {p}: {err:.2e}")
    chi, _ = cqed.effective_rates(cqed.DEFAULT_DEVICE)
    # independent evaluation in exact rationals
    from fractions import Fraction as Fr

    g, w0, gam = Fr(1, 5), Fr(15), Fr(15, 1000)
    ref = float(g * g * w0 / ((gam / 2) ** 2 + w0 * w0))
    _close(rep, "chi at device parameters", abs(chi - ref) / ref, tol)
    rep.metrics["chi"] = chi
    rep.metrics["worst_relation_error"] = worst
    return rep


def check_model_reduction(
    periods: float = 100,
    n_fock: int = 10,
    n_fock_check: int | None = 12,
    bound: float = 0.15,
    truncation_tol: float = 0.05,
    params: cqed.DeviceParams = cqed.DEFAULT_DEVICE,
) -> Report:
    """Full model vs effective master equation vs bare effective Hamiltonian."""
    rep = Report(f"model-reduction periods={periods} n={n_fock}")
    grid = cqed.period_grid(params, periods)
    c = cqed.compare_reduced_dynamics(params, cqed.reference_initial_state(n_fock), grid, n_fock)
    fe = float(c.full_eff.max())
    rep.metrics.update(
        full_eff_max=fe,
        full_eff_final=float(c.full_eff[-1]),
        full_ham_final=float(c.full_ham[-1]),
        eff_ham_final=float(c.eff_ham[-1]),
        top_fock_population=max(c.observables["full"].top_population),
    )
    rep.checked += 1
    if not fe < bound:
        rep.fail(f"full-vs-effective distance reached {fe:.4f} (bound {bound})")
    # Full ~ Eff while Ham drifts away: check over the second half of the run
    half = len(grid) // 2
    rep.checked += 1
    if not np.all(c.full_eff[half:] < c.full_ham[half:]):
        rep.fail("effective model is not closer to the full model than the bare Hamiltonian")
    if n_fock_check:
        c2 = cqed.compare_reduced_dynamics(params, cqed.reference_initial_state(n_fock_check), grid, n_fock_check)
        rel = abs(float(c2.full_eff.max()) - fe) / fe
        rep.metrics[f"full_eff_max_n{n_fock_check}"] = float(c2.full_eff.max())
        rep.metrics["truncation_change"] = rel
        rep.checked += 1
        if not rel < truncation_tol:
            rep.fail(f"truncation {n_fock} -> {n_fock_check} changes the distance by {rel:.2%}")
    return rep


def check_canonical_transform(n_fock: int = 15, n_cphase: int = 30, block: int = 5, tol: float = 1e-8) -> Report:
    rep = Report("canonical-transform")
    for sign in (1, -1):
        r = cqed.canonical_transform(replace(cqed.DEFAULT_DEVICE, sign=sign), n_fock)
        _close(rep, f"H' sign={sign:+d}", r.deviation, tol)
    _close(rep, "CPHASE separation", cqed.cphase_separation(n_cphase, block), tol)
    T = cqed.beam_splitter(n_fock)
    _close(rep, "T unitary", np.abs(T.conj().T @ T - np.eye(n_fock**2)).max(), 1e-10)
    return rep


# ------------------------------------------------------------------ GRAPE


def check_grape_gradient(rng: np.random.Generator, sizes=(6, 10, 15), pulses: int = 2, step: float = 1e-6, tol: float = 1e-5) -> Report:
    rep = Report("grape-gradient")
    worst = 0.0
    for n in sizes:
        prob = grape.ControlProblem.kerr(n, duration=4 * np.pi, n_slices=20)
        K = prob.n_slices
        for _ in range(pulses):
            pulse = grape.ControlPulse.random(prob, int(rng.integers(2**31)), amplitude=0.8)
            _, g = grape.fidelity_and_gradient(pulse, prob)
            v = pulse.vector()
            fd = np.empty_like(v)
            for i in range(len(v)):
                vals = []
                for s in (step, -step):
                    u = v.copy()
                    u[i] += s
                    U = grape.propagate_controls(grape.ControlPulse(u[:K], u[K:], prob.dt), prob)
                    vals.append(grape.control_fidelity(U, prob.target))
                fd[i] = (vals[0] - vals[1]) / (2 * step)
            err = float(np.max(np.abs(g - fd)) / np.max(np.abs(fd)))
            worst = max(worst, err)
            rep.checked += 1
            if not err < tol:
                rep.fail(f"n_fock={n}: relative gradient error {err:.2e}")
    rep.metrics["worst_relative_error"] = worst
    return rep


def check_grape_synthesis(
    n_fock: int = 20,
    cycles: int = 50,
    n_slices: int = 500,
    seeds=range(5),
    target_fidelity: float = 0.99,
    composed_target: float = 0.90,
    jobs: int = 1,
) -> tuple[Report, grape.FidelityTrace]:
    rep = Report(f"grape-synthesis n={n_fock}")
    prob = grape.ControlProblem.kerr(n_fock, duration=cycles * 2 * np.pi, n_slices=n_slices)
    best, runs = grape.multi_start(prob, seeds, tol=1e-7, jobs=jobs)
    F = best.best_fidelity
    composed = grape.composed_fidelity(best.final_pulse, prob, 10, grape.kerr_target(n_fock, 1.0))
    f_n, f_big = grape.truncation_check(best.final_pulse, prob)
    rep.metrics.update(
        fidelity=F,
        composed_fidelity=composed,
        seeds_used=len(runs),
        fidelity_at_n_plus_10=f_big,
        peak_excursions=best.final_pulse.peak_excursions(),
    )
    rep.checked += 3
    if not F >= target_fidelity:
        rep.fail(f"fidelity {F:.6f} < {target_fidelity}")
    if not composed >= composed_target:
        rep.fail(f"10-fold composition fidelity {composed:.6f} < {composed_target}")
    if not abs(f_n - f_big) / f_n < 5e-3:
        rep.fail(f"fidelity changes from {f_n:.6f} to {f_big:.6f} at n_fock+10")
    return rep, best


# ------------------------------------------------------------------ suite


def run_suite(seed: int = 0, quick: bool = False, jobs: int = 1) -> list[Report]:
    """All invariant checks. ``quick`` shrinks sample counts and run lengths."""
    rng = np.random.default_rng(seed)
    k = 10 if quick else 1
    reports = [
        check_gate_identities(rng, samples=100 // k, word_pairs=1000 // k),
        check_mirror_exactness(),
        check_input_independence(rng, samples=100 // k),
        check_mixed_state(rng),
        check_truncated_circuit(rng),
        check_tracker_oracle(rng, words=200 // k),
        check_mirror_relations(rng),
        check_cv_mirror(rng, triples=100 // k),
        check_chi_eta(rng, samples=1000 // k),
        check_model_reduction(periods=10 if quick else 30, n_fock=8, n_fock_check=None),
        check_canonical_transform(),
        check_grape_gradient(rng, sizes=(6,) if quick else (6, 10, 15), pulses=1),
        check_grape_synthesis(jobs=jobs)[0],
    ]
    return reports
