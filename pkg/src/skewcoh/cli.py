"""Command-line interface: ``skewcoh {measure,figure1,experiment,verify}``.

Exit codes: 0 success, 1 property failure, 2 invalid input, 3 degenerate
protocol (ancilla with zero sensitivity).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import interferometry as itf
from . import measures as ms
from . import randlab
from . import shots as sh
from .errors import QuantumInputError, ZeroSensitivityAncilla
from .qmat import (
    PAULI_X,
    DensityMatrix,
    linear_entropy,
    make_density,
    make_observable,
    matrix_from_json,
    observable_from_spectrum,
    pauli_observable,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3
MAX_CIRCUIT_DIM = 16


class InputError(Exception):
    """Invalid command-line input; mapped to exit code 2."""


# -- ingestion ----------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_json(path: str):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise InputError(f"{path}: cannot read file ({e.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from None


def load_state(path: str) -> tuple[DensityMatrix, dict]:
    obj = _load_json(path)
    try:
        rho = make_density(matrix_from_json(obj, where="state"))
    except QuantumInputError as e:
        raise InputError(f"{path}: {e}") from None
    return rho, {"path": path, "sha256": _sha256(Path(path))}


def parse_observable(spec: str):
    """``pauli:n=x,y,z``, ``diag:k1,...,kd`` or a path to a JSON matrix."""
    try:
        if spec.startswith("pauli:"):
            body = spec[len("pauli:"):]
            if not body.startswith("n="):
                raise InputError(f"observable '{spec}': expected pauli:n=x,y,z")
            n = [float(x) for x in body[2:].split(",")]
            if len(n) != 3:
                raise InputError(f"observable '{spec}': pauli needs three components")
            return pauli_observable(n), {"spec": spec}
        if spec.startswith("diag:"):
            k = [float(x) for x in spec[len("diag:"):].split(",")]
            return observable_from_spectrum(k), {"spec": spec}
    except ValueError as e:
        if isinstance(e, QuantumInputError):
            raise InputError(f"observable '{spec}': {e}") from None
        raise InputError(f"observable '{spec}': entries must be numbers") from None
    obj = _load_json(spec)
    try:
        K = make_observable(matrix_from_json(obj, where="observable"))
    except QuantumInputError as e:
        raise InputError(f"{spec}: {e}") from None
    return K, {"path": spec, "sha256": _sha256(Path(spec))}


def _parse_dims(text: str) -> list[int]:
    try:
        dims = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--dims '{text}': expected comma-separated integers") from None
    if not dims or min(dims) < 2:
        raise InputError("--dims: every dimension must be >= 2")
    return dims


# -- output ----------------------------------------------------------------------------------


def _flatten(obj, prefix="") -> list[tuple[str, object]]:
    rows = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows.extend(_flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            rows.extend(_flatten(v, f"{prefix}[{i}]"))
    elif isinstance(obj, list):
        rows.append((prefix, ";".join(_fmt(x) for x in obj)))
    else:
        rows.append((prefix, obj))
    return rows


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x).lower() if x is not None else ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv_pairs(obj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for k, v in _flatten(obj):
        w.writerow([k, _fmt(v)])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as e:
        raise InputError(f"{out}: cannot write output ({e.strerror})") from None


def _dump(obj, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj, indent=2) + "\n"
    return _csv_pairs(obj)


def _require(args, name):
    if getattr(args, name) is None:
        raise InputError(f"--{name.replace('_', '-')} is required for {args.command}")
    return getattr(args, name)


# -- commands -------------------------------------------------------------------------------


def cmd_measure(args) -> int:
    rho, state_info = load_state(_require(args, "state"))
    K, obs_info = parse_observable(_require(args, "observable"))
    if rho.dim != K.dim:
        raise InputError(f"{args.state}: state dimension {rho.dim} differs from observable dimension {K.dim}")
    report = ms.coherence_report(rho, K)
    doc = {"command": "measure", "inputs": {"state": state_info, "observable": obs_info}, "dim": rho.dim, "report": report.to_dict()}
    _emit(_dump(doc, args.format), args.out)
    return EXIT_OK


def figure1_rows(step: float) -> list[tuple[float, float, float, float]]:
    """``(p, V, I, S_lin)`` for ``rho(p) = (I + p sigma_x)/2`` and ``K = sigma_z``."""
    if not 0 < step <= 0.5:
        raise InputError(f"--step must lie in (0, 0.5], got {step}")
    n = int(np.floor(1 / step + 1e-9))
    grid = [round(k * step, 12) for k in range(n + 1)]
    if grid[-1] < 1:
        grid.append(1.0)
    K = pauli_observable([0, 0, 1])
    rows = []
    for p in grid:
        rho = make_density((np.eye(2) + p * PAULI_X) / 2)
        rows.append((p, ms.variance(rho, K), ms.skew_information(rho, K), linear_entropy(rho)))
    return rows


def cmd_figure1(args) -> int:
    rows = figure1_rows(args.step)
    if args.format == "json":
        doc = {"command": "figure1", "observable": "pauli:n=0,0,1", "rows": [dict(zip(("p", "variance", "skew", "linear_entropy"), r)) for r in rows]}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "variance", "skew", "linear_entropy"])
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def _experiment_scheme1(args, rho, K, inputs) -> dict:
    qubit_exact = args.scheme == "1-qubit-exact"
    ancilla = None
    if args.ancilla is not None:
        ancilla, inputs["ancilla"] = load_state(args.ancilla)
        if ancilla.dim != 2:
            raise InputError(f"{args.ancilla}: the control ancilla must be a qubit")
    if qubit_exact and rho.dim != 2:
        raise InputError(f"{args.state}: scheme 1-qubit-exact needs a qubit state")
    doc = {"scheme": args.scheme, "budget": itf.SCHEME1_BUDGET, "lower_bound": ms.lower_bound(rho, K)}
    if args.shots == 0:
        t = np.pi / 2 if qubit_exact else (itf.default_phase(K) if args.t is None else args.t)
        if t == 0:
            raise InputError("--t must be nonzero")
        m_p, m_o, a = sh.exact_polarizations(rho, K, t, ancilla)
        scale = 0.5 if qubit_exact else 1 / (2 * t * t)
        value = scale * (m_p - m_o) / a
        doc.update({"mode": "exact", "t": float(t), "exact": value, "estimate": value, "stderr": 0.0, "exact_polarizations": [m_p, m_o]})
    else:
        if args.t == 0:
            raise InputError("--t must be nonzero")
        est = sh.estimate_coherence_experiment(rho, K, args.t, args.shots, args.seed, ancilla=ancilla, qubit_exact=qubit_exact)
        d = est.to_dict()
        doc.update({"mode": "shots", "t": d.pop("t"), "exact": d.pop("exact_value"), "estimate": d.pop("estimate"), "stderr": d.pop("stderr")})
        d.pop("budget")
        doc.update(d)
    # a finite-difference estimate at small t is swamped by shot noise
    doc["flags"] = ["LOW_SIGNAL"] if doc["stderr"] > abs(doc["exact"]) else []
    return doc


def _experiment_scheme2(args, rho, inputs) -> dict:
    if args.state_b is None:
        rho_b, mode = rho, "purity"
    else:
        rho_b, inputs["state_b"] = load_state(args.state_b)
        mode = "overlap"
        if rho_b.dim != rho.dim:
            raise InputError(f"{args.state_b}: dimension {rho_b.dim} differs from {args.state} ({rho.dim})")
    rep = itf.scheme2_overlap(rho, rho_b)
    doc = {"scheme": "2", "mode": mode}
    doc.update(rep.to_dict())
    doc["exact"] = doc.pop("exact_overlap")
    if args.shots > 0:
        noisy = sh.noisy_sweep_overlap(rho, rho_b, args.shots, args.seed)
        doc["shot_estimate"] = noisy["overlap"]
        doc["shots_per_setting"] = noisy["shots_per_setting"]
        doc["total_shots"] = noisy["total_shots"]
        doc["rng"] = sh.RNG_NAME
    if args.observable is not None and args.state_b is None:
        K, inputs["observable"] = parse_observable(args.observable)
        if K.dim != rho.dim:
            raise InputError(f"observable dimension {K.dim} differs from state dimension {rho.dim}")
        lb = itf.scheme2_lower_bound(rho, K, args.t)
        lb["exact"] = ms.lower_bound(rho, K)
        doc["lower_bound"] = lb
    return doc


def cmd_experiment(args) -> int:
    rho, state_info = load_state(_require(args, "state"))
    if rho.dim > MAX_CIRCUIT_DIM:
        raise InputError(f"{args.state}: circuit simulation is limited to d <= {MAX_CIRCUIT_DIM}, got {rho.dim}")
    if args.shots < 0:
        raise InputError("--shots must be >= 0 (0 selects exact mode)")
    inputs = {"state": state_info}
    if args.scheme == "2":
        body = _experiment_scheme2(args, rho, inputs)
    else:
        K, inputs["observable"] = parse_observable(_require(args, "observable"))
        if K.dim != rho.dim:
            raise InputError(f"observable dimension {K.dim} differs from state dimension {rho.dim}")
        body = _experiment_scheme1(args, rho, K, inputs)
    doc = {
        "command": "experiment",
        "inputs": inputs,
        "dim": rho.dim,
        "seed": args.seed,
        "shots": args.shots,
        "tomography_count": itf.tomography_count(rho.dim),
    }
    doc.update(body)
    _emit(_dump(doc, args.format), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    dims = _parse_dims(args.dims)
    reports = randlab.run_property_suite(args.suite, args.trials, dims, args.seed, args.jobs)
    ok = all(r.passed for r in reports)
    if args.format == "json":
        doc = {
            "command": "verify",
            "suite": args.suite,
            "trials": args.trials,
            "dims": dims,
            "seed": args.seed,
            "pass": ok,
            "properties": [r.to_dict() for r in reports],
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = randlab.reports_to_csv(reports)
    if args.out is not None:
        _emit(text, args.out)
        sys.stdout.write(randlab.reports_to_text(reports))
    else:
        _emit(text, None)
        sys.stderr.write(randlab.reports_to_text(reports))
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skewcoh", description="Skew-information coherence: measures, protocol simulation and property checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format="json"):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=default_format)

    p = sub.add_parser("measure", help="coherence report of a state")
    p.add_argument("--state", help="JSON density matrix")
    p.add_argument("--observable", help="pauli:n=x,y,z | diag:k1,...,kd | JSON matrix file")
    common(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("figure1", help="qubit table of variance, skew information and linear entropy")
    p.add_argument("--step", type=float, default=0.05)
    common(p, "csv")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("experiment", help="simulate a detection protocol")
    p.add_argument("--state", help="JSON density matrix")
    p.add_argument("--state-b", help="second state for scheme 2 (omit for purity mode)")
    p.add_argument("--observable")
    p.add_argument("--ancilla", help="JSON qubit state of the scheme-1 control (default |0><0|)")
    p.add_argument("--t", type=float, default=None, help="phase of U_K(t) (default 1e-3/||K||)")
    p.add_argument("--shots", type=int, default=0, help="shots per setting; 0 selects exact mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=("1", "1-qubit-exact", "2"), default="1")
    common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("--suite", default="all", help=f"one of: {', '.join(randlab.suite_names())}")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dims", default="2,3,4")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ZeroSensitivityAncilla as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, QuantumInputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
