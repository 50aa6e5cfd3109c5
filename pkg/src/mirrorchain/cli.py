"""Command-line runner: ``mirrorchain <subcommand> [options]``.

Options may also come from an INI file given with ``--config``; each
subcommand reads the section of the same name and flags override it.
Exit codes: 0 success, 1 failed verification, 2 usage or configuration
error, 3 error raised by a simulation module.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import chain, cqed, cv, grape, verify
from .qudit import CV, QUDIT
from .tracker import ChainSpec, apply_final_flip, mirror_trajectory

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_MODULE = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ output


def rounded(obj):
    """Recursively round floats to 12 significant digits for output."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(f"{x:.12g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, complex):
        return [rounded(obj.real), rounded(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return rounded(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(rounded(obj), indent=2, sort_keys=True) + "\n"


def fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, (float, np.floating)) else str(x)


def write_csv(path: Path, header_meta: dict, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(rounded(header_meta), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def default_jobs() -> int:
    raw = os.environ.get("MIRRORCHAIN_JOBS")
    if raw is None:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise UsageError(f"MIRRORCHAIN_JOBS must be an integer, got {raw!r}")
    if jobs < 1:
        raise UsageError("MIRRORCHAIN_JOBS must be >= 1")
    return jobs


def int_list(text) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


# ------------------------------------------------------------------ mirror


def _mirror_one(task) -> dict:
    d, N, sign, kind, seed, digits = task
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    if kind == "basis":
        digs = digits if digits is not None else [1] + [0] * (N - 1)
        if len(digs) != N:
            raise UsageError(f"--digits needs {N} entries")
        s = chain.basis_state(d, digs)
        spec = {"kind": "basis", "digits": [x % d for x in digs]}
    elif kind == "random":
        s = chain.random_state(d, N, rng)
        spec = {"kind": "random", "seed": seed}
    elif kind == "figure2a":
        s = chain.figure2a_state(chain.random_qudit(d, rng), N)
        spec = {"kind": "figure2a", "seed": seed}
    else:
        raise UsageError(f"unknown input kind {kind!r}")
    out = chain.run_mirror_protocol(s, sign)
    rep = chain.mirror_fidelity(s, out)
    runtime = (time.perf_counter() - t0) * 1e3
    rec = {"d": d, "N": N, "sign": sign, "input_spec": spec}
    rec.update(rep.to_dict())
    rec["runtime_ms"] = runtime
    return rec


def _run_pool(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def cmd_mirror(a) -> int:
    sign = int(a.sign)
    if sign not in (2, -2):
        raise UsageError("--sign must be 2 or -2")
    digits = int_list(a.digits) if a.digits else None
    a.resolved.update(d=int_list(a.d), n=int_list(a.n), digits=digits)
    tasks = [(d, N, sign, a.input, a.seed, digits) for d, N in itertools.product(int_list(a.d), int_list(a.n))]
    for d, N, *_ in tasks:
        if d < 2 or N < 1:
            raise UsageError(f"need d >= 2 and N >= 1, got d={d}, N={N}")
        if d**N > chain.MAX_DIM:
            raise UsageError(f"d**N = {d**N} exceeds {chain.MAX_DIM}")
    runs = _run_pool(_mirror_one, tasks, a.jobs)
    result = runs[0] if len(runs) == 1 else runs
    emit(dumps({"config": a.resolved, "result": result}), a.output)
    worst = min(r["fidelity"] for r in runs)
    return EXIT_OK if worst >= 1 - 1e-10 else EXIT_VERIFY


# ------------------------------------------------------------------ track


def cmd_track(a) -> int:
    if a.mode == QUDIT:
        spec = ChainSpec(a.n, QUDIT, a.d)
        x, z = int(a.xexp), int(a.zexp)
        if x != a.xexp or z != a.zexp:
            raise UsageError("qudit exponents must be integers")
    else:
        spec = ChainSpec(a.n, CV)
        x, z = a.xexp, a.zexp
    if not 1 <= a.site <= a.n:
        raise UsageError(f"--site must lie in 1..{a.n}")
    rounds = a.n + 1 if a.rounds is None else a.rounds
    traj = mirror_trajectory(spec.word(a.site, x, z), spec, rounds)
    doc = traj.to_dict()
    flipped = apply_final_flip(traj.final)
    doc["after_final_flip"] = {
        "factors": [{"site": s, "x_exp": xx, "z_exp": zz} for s, xx, zz in flipped.factors],
        "phase": flipped.phase_exp,
    }
    emit(dumps({"config": a.resolved, "trajectory": doc}), a.output)
    return EXIT_OK


# ------------------------------------------------------------------ cv


def cmd_cv(a) -> int:
    if a.state_file:
        try:
            state = cv.GaussianState.from_dict(json.loads(Path(a.state_file).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise UsageError(f"cannot read state file: {exc}")
        if a.n is not None and a.n != state.N:
            raise UsageError(f"--n {a.n} disagrees with the state file (N={state.N})")
    else:
        N = a.n or 4
        state = cv.coherent(N, 1, 1.0)
    if not state.is_physical():
        raise UsageError("input covariance violates cov + i Omega >= 0")
    run = cv.mirror_run_record(state)
    rec = {"config": a.resolved, "run": run.to_dict(), "physical_after": run.after.is_physical()}
    emit(dumps(rec), a.output)
    return EXIT_OK if run.deviation <= 1e-9 else EXIT_VERIFY


# ------------------------------------------------------------------ cqed


def load_params(path: str | None) -> cqed.DeviceParams:
    if not path:
        return cqed.DEFAULT_DEVICE
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read params file: {exc}")
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad params JSON: {exc}")
    else:
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if "device" not in cp:
            raise UsageError("params file needs a [device] section")
        data = dict(cp["device"])
    merged = cqed.DEFAULT_DEVICE.to_dict()
    unknown = set(data) - set(merged)
    if unknown:
        raise UsageError(f"unknown device parameters: {sorted(unknown)}")
    merged.update(data)
    try:
        return cqed.DeviceParams.from_dict(merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def cmd_cqed(a) -> int:
    p = load_params(a.params_file)
    period = 2 * np.pi / p.omega_a
    tmax = a.tmax if a.tmax is not None else 100 * period
    n_samples = max(1, int(round(tmax / period * a.samples_per_period)))
    grid = np.linspace(0.0, tmax, n_samples + 1)
    outdir = Path(a.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = {"params": p.to_dict(), "n_fock": a.nfock, "convention": a.convention, "tmax": tmax, "units": "GHz (rad/ns), ns"}
    files = []
    if a.compare:
        c = cqed.compare_reduced_dynamics(p, cqed.reference_initial_state(a.nfock), grid, a.nfock, convention=a.convention)
        for name, obs in c.observables.items():
            path = outdir / f"trajectory_{name}.csv"
            write_csv(path, {**meta, "model": name}, cqed.TRAJECTORY_COLUMNS, obs.rows())
            files.append(path.name)
        path = outdir / "distances.csv"
        write_csv(path, meta, cqed.DISTANCE_COLUMNS, c.distance_rows())
        files.append(path.name)
        summary = {
            "full_eff_max": float(c.full_eff.max()),
            "full_ham_final": float(c.full_ham[-1]),
            "eff_ham_final": float(c.eff_ham[-1]),
            "top_fock_population": max(c.observables["full"].top_population),
        }
    else:
        m = cqed.build_full_model(p, a.nfock)
        obs = cqed.ModeObservables()
        ops = cqed.mode_operators(a.nfock)
        for t, rho in cqed.iter_lindblad(m, cqed.reference_initial_state(a.nfock), grid):
            obs.record(t, cqed.trace_out_cpb(rho), ops)
        path = outdir / "trajectory_full.csv"
        write_csv(path, {**meta, "model": "full"}, cqed.TRAJECTORY_COLUMNS, obs.rows())
        files.append(path.name)
        summary = {"top_fock_population": max(obs.top_population)}
    chi, eta = cqed.effective_rates(p)
    rec = {"config": a.resolved, **meta, "chi": chi, "eta": eta, "files": files, "summary": summary}
    (outdir / "cqed_run.json").write_text(dumps(rec))
    emit(dumps(rec), a.output)
    return EXIT_OK


# ------------------------------------------------------------------ grape


def cmd_grape(a) -> int:
    if a.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    prob = grape.ControlProblem.kerr(
        a.nfock, a.strength, epsilon=a.epsilon, duration=a.cycles * 2 * np.pi, n_slices=a.slices, c_max=a.cmax,
    )
    seeds = [a.seed + i for i in range(a.seeds)]
    guess = None if a.zero_start else a.strength
    best, runs = grape.multi_start(prob, seeds, max_iter=a.maxiter, tol=a.tol, jobs=a.jobs, strength=guess)
    composed = grape.composed_fidelity(best.final_pulse, prob, a.repetitions, grape.kerr_target(a.nfock, a.strength * a.repetitions))
    outdir = Path(a.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "pulse.csv").write_text(best.final_pulse.to_csv())
    rec = grape.run_record(prob, seeds, best, runs, {"composed_fidelity": composed, "repetitions": a.repetitions, "config": a.resolved})
    (outdir / "grape_run.json").write_text(dumps(rec))
    emit(dumps(rec), a.output)
    return EXIT_OK


# ------------------------------------------------------------------ verify-all


def cmd_verify_all(a) -> int:
    reports = verify.run_suite(seed=a.seed, quick=a.quick, jobs=a.jobs)
    doc = {
        "seed": a.seed,
        "quick": a.quick,
        "passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
    emit(dumps(doc), a.output)
    for r in reports:
        if not r.passed:
            print(f"FAIL {r.name}: {r.failures[0]}", file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_VERIFY


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="mirrorchain", description=__doc__.splitlines()[0])
    top.add_argument("--config", help="INI file with one section per subcommand")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--output", help="write the JSON record here instead of stdout")
        p.add_argument("--jobs", type=int, help="worker processes (default: MIRRORCHAIN_JOBS or 1)")
        p.add_argument("--seed", type=int, help="RNG seed")
        p.add_argument("--config", help=argparse.SUPPRESS, dest="sub_config")

    p = sub.add_parser("mirror", help="run the qudit mirror circuit on a dense state")
    common(p)
    p.add_argument("--d", help="qudit dimension(s), comma separated")
    p.add_argument("--n", help="chain length(s), comma separated")
    p.add_argument("--sign", type=int, help="final Fourier power, 2 or -2")
    p.add_argument("--input", choices=["basis", "random", "figure2a"], help="initial state family")
    p.add_argument("--digits", help="basis-state digits for --input basis")
    p.set_defaults(func=cmd_mirror, defaults=dict(d="3", n="4", sign=2, input="random", seed=7, digits=None))

    p = sub.add_parser("track", help="Heisenberg trajectory of a single-site word")
    common(p)
    p.add_argument("--mode", choices=[QUDIT, CV], help="discrete qudits or continuous modes")
    p.add_argument("--d", type=int, help="qudit dimension")
    p.add_argument("--n", type=int, help="chain length")
    p.add_argument("--site", type=int, help="1-based site of the tracked operator")
    p.add_argument("--xexp", type=float, help="X exponent (integer for qudits)")
    p.add_argument("--zexp", type=float, help="Z exponent (integer for qudits)")
    p.add_argument("--rounds", type=int, help="rounds to apply (default N+1)")
    p.set_defaults(func=cmd_track, defaults=dict(mode=QUDIT, d=3, n=3, site=1, xexp=1.0, zexp=0.0, rounds=None, seed=0))

    p = sub.add_parser("cv", help="Gaussian mirror run")
    common(p)
    p.add_argument("--n", type=int, help="modes for the default coherent input")
    p.add_argument("--state-file", dest="state_file", help="JSON Gaussian state with N, mean, cov")
    p.set_defaults(func=cmd_cv, defaults=dict(n=None, state_file=None, seed=0))

    p = sub.add_parser("cqed", help="full vs effective circuit-QED dynamics")
    common(p)
    p.add_argument("--params-file", dest="params_file", help="device parameters as JSON or an INI [device] section")
    p.add_argument("--tmax", type=float, help="final time in ns (default 100 mode periods)")
    p.add_argument("--nfock", type=int, help="Fock truncation per mode")
    p.add_argument("--compare", action="store_true", default=None, help="also write pairwise trace distances")
    p.add_argument("--samples-per-period", dest="samples_per_period", type=int, help="output samples per mode period")
    p.add_argument("--convention", choices=[cqed.HARMONIZED, cqed.PRINTED], help="effective cavity loss rate convention")
    p.add_argument("--outdir", help="directory for CSV and JSON files")
    p.set_defaults(
        func=cmd_cqed,
        defaults=dict(params_file=None, tmax=None, nfock=10, compare=False, samples_per_period=1, convention=cqed.HARMONIZED, outdir=".", seed=0),
    )

    p = sub.add_parser("grape", help="optimize a pulse for exp(i s X^2)")
    common(p)
    p.add_argument("--nfock", type=int, help="Fock truncation")
    p.add_argument("--slices", type=int, help="piecewise-constant slices")
    p.add_argument("--cycles", type=float, help="pulse length in mode periods")
    p.add_argument("--cmax", type=float, help="control amplitude bound")
    p.add_argument("--seeds", type=int, help="number of random starts")
    p.add_argument("--epsilon", type=float, help="static Kerr coefficient")
    p.add_argument("--strength", type=float, help="s in the target exp(i s X^2)")
    p.add_argument("--maxiter", type=int, help="optimizer iteration cap per start")
    p.add_argument("--tol", type=float, help="stop once 1 - F falls below this")
    p.add_argument("--repetitions", type=int, help="repetitions for the composed fidelity")
    p.add_argument("--zero-start", dest="zero_start", action="store_true", default=None, help="start from noise around zero")
    p.add_argument("--outdir", help="directory for pulse.csv and grape_run.json")
    p.set_defaults(
        func=cmd_grape,
        defaults=dict(
            nfock=20, slices=500, cycles=50.0, cmax=1.0, seeds=5, epsilon=1e-3, strength=0.1,
            maxiter=500, tol=1e-7, repetitions=10, zero_start=False, outdir=".", seed=0,
        ),
    )

    p = sub.add_parser("verify-all", help="run the invariant suite")
    common(p)
    p.add_argument("--quick", action="store_true", default=None, help="reduced sample counts")
    p.set_defaults(func=cmd_verify_all, defaults=dict(quick=False, seed=0))
    return top


def _coerce(parser: argparse.ArgumentParser, dest: str, raw: str):
    for action in parser._actions:
        if action.dest == dest:
            if isinstance(action, argparse._StoreTrueAction):
                return raw.strip().lower() in ("1", "true", "yes", "on")
            conv = action.type or str
            try:
                value = conv(raw)
            except ValueError:
                raise UsageError(f"config key {dest!r}: cannot parse {raw!r}")
            if action.choices and value not in action.choices:
                raise UsageError(f"config key {dest!r}: {value!r} not in {list(action.choices)}")
            return value
    raise UsageError(f"unknown config key {dest!r}")


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Fill unset options from the config file, then from built-in defaults."""
    sub_parser = parser._subparsers._group_actions[0].choices[args.command]
    cfg_path = args.sub_config or args.config
    from_file = {}
    if cfg_path:
        cp = configparser.ConfigParser()
        try:
            with open(cfg_path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}")
        if cp.has_section(args.command):
            for key, raw in cp[args.command].items():
                dest = key.replace("-", "_")
                from_file[dest] = _coerce(sub_parser, dest, raw)
    resolved = {}
    for key, default in args.defaults.items():
        val = getattr(args, key, None)
        if val is None:
            val = from_file.get(key, default)
        setattr(args, key, val)
        resolved[key] = val
    extra = set(from_file) - set(args.defaults) - {"jobs", "output"}
    if extra:
        raise UsageError(f"unknown config keys for [{args.command}]: {sorted(extra)}")
    for key in ("jobs", "output"):
        if getattr(args, key) is None and key in from_file:
            setattr(args, key, from_file[key])
    if args.jobs is None:
        args.jobs = default_jobs()
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    args.resolved = resolved
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = resolve(parser.parse_args(argv), parser)
        return args.func(args)
    except UsageError as exc:
        print(f"mirrorchain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"mirrorchain: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODULE


if __name__ == "__main__":
    sys.exit(main())
