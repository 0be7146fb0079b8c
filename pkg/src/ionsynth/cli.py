"""Command-line entry point: ``ionsynth synth | compile | simulate | estimate``.

Exit codes: 0 ok, 2 validation, 3 synthesis failure, 4 simulation error,
5 published-table mismatch.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import ConvergenceError, SimulationError, SynthesisError, ValidationError
from .gates import Circuit, circuit_from_dict, circuit_to_dict, simulate
from .ionsim import PulseProgram, compile_circuit, ion_basis_state, ion_to_qubit, simulate_program
from .qstate import StateVector, fidelity_global_phase_invariant
from .resources import (
    TABLE2_FIDELITIES,
    TABLE2_N,
    TrapConfig,
    check_against_published,
    resource_report,
    table2_csv,
)
from .synthesis import (
    FIDELITY_THRESHOLD,
    TargetState,
    Term,
    build_ghz_network,
    build_symmetric_network,
    ghz_target,
    random_target,
    symmetric_target,
    synthesize,
)

EXIT_OK, EXIT_VALIDATION, EXIT_SYNTHESIS, EXIT_SIMULATION, EXIT_GOLDEN = 0, 2, 3, 4, 5


class GoldenMismatch(Exception):
    pass


# --- file formats -------------------------------------------------------------------------


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def parse_target_spec(doc: dict, auto_normalize: bool = False, seed: int | None = None) -> tuple[TargetState, str | None]:
    """Return the target and, for named families, the family name."""
    if not isinstance(doc, dict) or "n_qubits" not in doc:
        raise ValidationError("target spec needs an 'n_qubits' field")
    n = int(doc["n_qubits"])
    family = doc.get("family")
    if family is not None:
        if family == "symmetric":
            return symmetric_target(n), family
        if family == "ghz":
            return ghz_target(n), family
        if family == "random":
            s = doc.get("seed", seed)
            return random_target(n, np.random.default_rng(s), float(doc.get("sparsity", 0.0))), None
        raise ValidationError(f"unknown target family {family!r}")
    try:
        terms = [Term(str(t["pattern"]), float(t["magnitude"]), float(t.get("phase_rad", 0.0)))
                 for t in doc["terms"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed target terms: {exc}") from exc
    for t in terms:
        if len(t.pattern) != n:
            raise ValidationError(f"pattern {t.pattern!r} does not have {n} bits")
    if auto_normalize:
        return TargetState.normalized(n, terms), None
    return TargetState(n, tuple(terms)), None


def target_to_json(target: TargetState) -> list[dict]:
    return [{"pattern": t.pattern, "magnitude": t.magnitude, "phase_rad": t.phase} for t in target.terms]


def _circuit_from_doc(doc: dict) -> Circuit:
    return circuit_from_dict(doc["circuit"] if "circuit" in doc else doc)


def _state_terms(state: StateVector, tol: float = 1e-12) -> list[dict]:
    return [{"pattern": p, "magnitude": abs(a), "phase_rad": float(np.angle(a)), "re": a.real, "im": a.imag}
            for p, a in state.terms(tol)]


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- run manifest -----------------------------------------------------------------------------


def _manifest(args: argparse.Namespace, outputs: dict[str, str], started: float, config: dict | None) -> dict:
    snapshot = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": {"args": snapshot, **({"trap": config} if config else {})},
        "versions": {"ionsynth": __version__, "python": platform.python_version(), "numpy": np.__version__},
        "timings": {"wall_s": time.perf_counter() - started},
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in outputs.items()},
    }


def _emit_manifest(args, outputs: dict[str, str], started: float, config: dict | None = None) -> None:
    doc = _manifest(args, outputs, started, config)
    path = args.manifest or (f"{args.out}.manifest.json" if getattr(args, "out", None) else None)
    if path:
        Path(path).write_text(_dumps(doc))
    else:
        sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")


# --- subcommands -----------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    target, family = parse_target_spec(_load_json(args.spec), args.auto_normalize, args.seed)
    doc: dict = {"n_qubits": target.n_qubits, "target": target_to_json(target)}
    if family and args.method == "auto":
        circuit = build_symmetric_network(target.n_qubits) if family == "symmetric" else build_ghz_network(target.n_qubits)
        f = fidelity_global_phase_invariant(target.to_state(), simulate(circuit))
        if f < FIDELITY_THRESHOLD:
            raise SynthesisError(f"{family} network reached fidelity {f!r}", fidelity=f)
        doc["method"] = f"{family}-network"
    else:
        result = synthesize(target, skip_trivial=args.skip_trivial)
        circuit, f = result.circuit, result.fidelity
        doc["method"] = "arbitrary"
        doc["start_all_ones"] = result.plan.start_all_ones
        doc["stages"] = [{"pattern": s.pattern, "theta": s.theta, "phi": s.phi, "a": s.a, "b": s.b}
                         for s in result.plan.stages]
    doc["fidelity"] = f
    doc["circuit"] = circuit_to_dict(circuit)
    text = _dumps(doc)
    _write(text, args.out)
    if args.out:
        print(f"method={doc['method']} ops={len(circuit)} fidelity={f:.15f}")
    _emit_manifest(args, {"circuit": text}, started)
    return EXIT_OK


def cmd_compile(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    circuit = _circuit_from_doc(_load_json(args.circuit))
    program = compile_circuit(circuit)
    text = _dumps(program.to_dict())
    _write(text, args.out)
    c = program.counts
    summary = f"pulses={c.total} N_A={c.N_A} N_B1={c.N_B1} N_B2={c.N_B2}"
    print(summary, file=sys.stdout if args.out else sys.stderr)
    _emit_manifest(args, {"program": text}, started)
    return EXIT_OK


def _reference_state(path: str, seed: int | None) -> StateVector:
    doc = _load_json(path)
    if "ops" in doc or "circuit" in doc:
        return simulate(_circuit_from_doc(doc))
    if "target" in doc and isinstance(doc["target"], list):
        doc = {"n_qubits": doc["n_qubits"], "terms": doc["target"]}
    target, _ = parse_target_spec(doc, seed=seed)
    return target.to_state()


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    doc = _load_json(args.input)
    if "pulses" in doc:
        program = PulseProgram.from_dict(doc)
        if args.level == "gate":
            raise ValidationError("a pulse program can only be simulated at ion level")
        level = "ion"
        initial = args.initial or program.initial or "0" * program.n_ions
    else:
        circuit = _circuit_from_doc(doc)
        level = args.level or "gate"
        initial = args.initial or circuit.initial
        program = compile_circuit(circuit) if level == "ion" else None
    if level == "ion":
        final = simulate_program(program, ion_basis_state(initial, args.n_max))
        state = ion_to_qubit(final)
    else:
        state = simulate(circuit, initial)
    out = {"level": level, "initial": initial, "n_qubits": state.n_qubits, "terms": _state_terms(state)}
    if args.reference:
        out["fidelity"] = fidelity_global_phase_invariant(_reference_state(args.reference, args.seed), state)
    if args.json:
        text = _dumps(out)
    else:
        lines = [f"{t['pattern']}  |a|={t['magnitude']:.10f}  arg={t['phase_rad']:+.10f}" for t in out["terms"]]
        if "fidelity" in out:
            lines.append(f"fidelity={out['fidelity']:.15f}")
        text = "\n".join(lines) + "\n"
    _write(text, args.out)
    _emit_manifest(args, {"state": text}, started)
    return EXIT_OK


def _parse_n_range(spec: str | None) -> list[int]:
    if not spec:
        return list(TABLE2_N)
    ns: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            ns += list(range(lo, hi + 1))
        elif part:
            ns.append(int(part))
    if not ns or min(ns) < 2:
        raise ValidationError("--n-range needs ion counts >= 2")
    return ns


def cmd_estimate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = TrapConfig.from_dict(_load_json(args.config)) if args.config else TrapConfig()
    ns = _parse_n_range(args.n_range)
    fids = tuple(args.fidelity) if args.fidelity else TABLE2_FIDELITIES
    for f in fids:
        if not 0 < f < 1:
            raise ValidationError(f"fidelity must lie in (0, 1), got {f}")
    work = partial(resource_report, cfg, fidelities=fids)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            reports = list(pool.map(work, ns))
    else:
        reports = [work(n) for n in ns]
    if args.json:
        text = _dumps({"trap": cfg.to_dict(), "rows": [r.to_dict() for r in reports]})
    else:
        text = table2_csv(reports)
    _write(text, args.out)
    status = EXIT_OK
    if args.check_paper:
        checks = check_against_published(reports)
        for c in checks:
            mark = "PASS" if c.passed else "FAIL"
            print(f"{mark} N={c.n_ions:<3d} {c.column:<16s} published={c.published:g} computed={c.computed:.4g}",
                  file=sys.stderr)
        failed = sum(not c.passed for c in checks)
        print(f"check-paper: {len(checks) - failed}/{len(checks)} cells within tolerance", file=sys.stderr)
        if failed:
            status = EXIT_GOLDEN
    _emit_manifest(args, {"table": text}, started, cfg.to_dict())
    return status


# --- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ionsynth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--out", "-o", help="output path (default: stdout)")
        sp.add_argument("--seed", type=int, default=None, help="seed for random targets")
        sp.add_argument("--manifest", help="run manifest path (default: <out>.manifest.json, or stderr)")

    s = sub.add_parser("synth", help="synthesize a gate network for a target state")
    s.add_argument("spec", help="target spec JSON")
    s.add_argument("--auto-normalize", action="store_true", help="rescale target magnitudes to unit norm")
    s.add_argument("--method", choices=("auto", "arbitrary"), default="auto",
                   help="'arbitrary' forces the general staged synthesis for named families")
    s.add_argument("--skip-trivial", action="store_true", help="omit stages with zero rotation angle")
    common(s)
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("compile", help="lower a circuit to a trapped-ion pulse program")
    c.add_argument("circuit", help="circuit JSON (or synth output)")
    common(c)
    c.set_defaults(func=cmd_compile)

    m = sub.add_parser("simulate", help="simulate a circuit or pulse program")
    m.add_argument("input", help="circuit, synth output, or pulse program JSON")
    m.add_argument("--level", choices=("gate", "ion"), default=None)
    m.add_argument("--initial", help="initial basis pattern, e.g. 111 or eee")
    m.add_argument("--reference", help="target spec or circuit JSON to compare against")
    m.add_argument("--n-max", type=int, default=2, help="phonon cutoff for ion-level runs")
    m.add_argument("--json", action="store_true", help="emit JSON instead of text")
    common(m)
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="trap spacing, timing and pulse-count table")
    e.add_argument("--n-range", help="ion counts, e.g. '2-20' or '2,3,10' (default: published rows)")
    e.add_argument("--fidelity", type=float, nargs="+", help="process fidelities (default: 0.99 0.75)")
    e.add_argument("--config", help="trap parameters JSON")
    e.add_argument("--check-paper", action="store_true", help="compare with the published table")
    fmt = e.add_mutually_exclusive_group()
    fmt.add_argument("--csv", action="store_true", help="CSV output (default)")
    fmt.add_argument("--json", action="store_true", help="JSON output")
    e.add_argument("--jobs", type=int, default=1, help="parallel workers for table rows")
    common(e)
    e.set_defaults(func=cmd_estimate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, IndexError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SynthesisError as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except (SimulationError, ConvergenceError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
