"""Command-line front end: spectra, protocols, simulation, verification suites, sweeps."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Iterable, Sequence

import numpy as np

from . import limits
from .channel_oracle import (
    fidelity_from_maps,
    haar_inputs,
    outcome_maps,
)
from .dual_certificates import (
    TOLERANCE as DUAL_TOL,
    det_opt_certificate,
    prob_mes_certificate,
    prob_opt_certificate,
)
from .entanglement_accounting import ROW_FIELDS, consumption_sweep, residual_entanglement
from .protocols import (
    Variant,
    build_protocol,
    fidelity_det_mes,
    fidelity_det_opt,
    average_fidelity,
    probability_prob_mes,
    probability_prob_opt,
)
from .rho_spectrum import rho_spectrum, verify_eigen_equation

EIGEN_TOL = 1e-12
ORACLE_TOL = 1e-9

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _round(x):
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(format(x, ".12g"))
    if isinstance(x, Variant):
        return x.value
    return x


def dumps(obj) -> str:
    return json.dumps(_round(obj), allow_nan=False)


def write_csv(out, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def write_table(out, fmt_name: str, header: Sequence[str], rows: list[Sequence]) -> None:
    if fmt_name == "csv":
        write_csv(out, header, rows)
    else:
        out.write(dumps([dict(zip(header, r)) for r in rows]) + "\n")


def complex_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


# --------------------------------------------------------------------------
# argument helpers


def n_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"need 1 <= A <= B, got {text!r}")
    return lo, hi


def positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def seed_type(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def variant_list(text: str) -> list[Variant]:
    try:
        return [Variant(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


VARIANTS = [v.value for v in Variant]


# --------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args, out) -> int:
    spec = rho_spectrum(args.n)
    header = ["two_s", "lambda_minus", "lambda_plus", "deg_minus", "deg_plus"]
    rows = [(r[0], float(r[1]), float(r[2]), r[3], r[4]) for r in spec.csv_rows()]
    write_table(out, args.format, header, rows)
    return EXIT_OK


def cmd_protocol(args, out) -> int:
    proto = build_protocol(args.variant, args.n)
    rep = proto.report
    summary = {
        "variant": proto.variant.value,
        "n": proto.n,
        "metric": rep.metric_name,
        "value": rep.metric_closed,
        "average_fidelity": rep.metric_average_f,
        "asymptote": rep.asymptote_value,
        "resource_weights": {str(k): v for k, v in sorted(proto.resource.weights().items())},
    }
    if args.emit_povm:
        povm = proto.povm
        n = proto.n
        doc = {
            "header": {"variant": proto.variant.value, "n": n, "dims": [2] * (n + 1), "ordering": f"A1..A{n},B"},
            "elements": [{"outcome": k, "matrix": complex_matrix(op)} for k, op in povm.outcomes()],
        }
        with open(args.emit_povm, "w") as fh:
            fh.write(dumps(doc))
        summary["completeness_error"] = povm.completeness_error()
        summary["min_eigenvalue"] = povm.min_eigenvalue()
    if args.emit_state:
        n = proto.n
        amps = proto.resource.state()
        doc = {
            "header": {"variant": proto.variant.value, "n": n, "dims": [2] * (2 * n), "ordering": f"A1..A{n},B1..B{n}"},
            "amplitudes": [[float(v), 0.0] for v in amps],
        }
        with open(args.emit_state, "w") as fh:
            fh.write(dumps(doc))
    out.write(dumps(summary) + "\n")
    return EXIT_OK


_BASIS_INPUTS = {
    "z+": [0, 1],  # |1> is spin up
    "z-": [1, 0],
    "x+": [1 / math.sqrt(2), 1 / math.sqrt(2)],
    "x-": [1 / math.sqrt(2), -1 / math.sqrt(2)],
    "y+": [1 / math.sqrt(2), 1j / math.sqrt(2)],
    "y-": [1 / math.sqrt(2), -1j / math.sqrt(2)],
}


def _inputs(spec: str, seed: int) -> list[tuple[str, np.ndarray | None]]:
    if spec == "basis":
        return [(k, np.array(v, dtype=complex)) for k, v in _BASIS_INPUTS.items()]
    if spec == "bell":
        return [("bell", None)]
    if spec.startswith("haar:"):
        try:
            k = int(spec[5:])
        except ValueError:
            raise UsageError(f"bad input spec {spec!r}")
        if k < 1:
            raise UsageError("haar:K needs K >= 1")
        return [(f"haar{idx}", v) for idx, v in enumerate(haar_inputs(k, seed))]
    raise UsageError(f"--inputs must be haar:K, basis or bell, got {spec!r}")


def cmd_simulate(args, out) -> int:
    variant = Variant(args.variant)
    mode = "prob" if variant.probabilistic else "det"
    if args.mode and args.mode != mode:
        raise UsageError(f"variant {variant.value} runs in {mode} mode, not {args.mode}")
    inputs = _inputs(args.inputs, args.seed)
    proto = build_protocol(variant, args.n)
    maps = outcome_maps(proto.resource, proto.povm)
    header = ["input", "outcome", "branch_trace", "output_fidelity"]
    rows = []
    for name, chi in inputs:
        for label in sorted(maps):
            t = maps[label]
            if chi is None:
                fid, tr = fidelity_from_maps({label: t}, "det")
                fid = fid / tr if tr > 0 else None
            else:
                m = np.einsum("c,d,cdbe->be", chi, chi.conj(), t)
                tr = float(np.real(np.trace(m)))
                fid = float(np.real(chi.conj() @ m @ chi)) / tr if tr > 0 else None
            if label == 0:
                fid = None  # failure branch: no port carries the state
            rows.append((name, label, tr, fid))
    write_table(out, args.format, header, rows)
    return EXIT_OK


def _eigen_reports(n_max: int, tol: float) -> list[dict]:
    out = []
    for n in range(1, n_max + 1):
        r = verify_eigen_equation(n, tol)
        out.append(
            {
                "suite": "eigen", "n": n, "max_residual": r.max_residual,
                "orthonormality_error": r.orthonormality_error, "vector_count": r.vector_count,
                "threshold": tol, "passed": r.passed,
            }
        )
    return out


def _dual_reports(n_max: int, tol: float) -> list[dict]:
    out = []
    for n in range(1, n_max + 1):
        for fn in (det_opt_certificate, prob_mes_certificate, prob_opt_certificate):
            d = fn(n, tol=tol).to_dict()
            d["suite"] = "dual"
            d["threshold"] = d.pop("tolerance")
            out.append(d)
    return out


def _oracle_reports(n_max: int, tol: float) -> list[dict]:
    out = []
    for n in range(1, n_max + 1):
        for v in Variant:
            proto = build_protocol(v, n)
            maps = outcome_maps(proto.resource, proto.povm)
            mode = "prob" if v.probabilistic else "det"
            f, p = fidelity_from_maps(maps, mode)
            dense = p if v.probabilistic else f
            closed = proto.report.metric_closed
            err = abs(dense - closed)
            extra = {}
            if v.probabilistic:
                # success branches must be faithful
                extra["conditional_fidelity_error"] = abs(1 - f)
            worst = max([err] + list(extra.values()))
            out.append(
                {
                    "suite": "oracle", "variant": v.value, "n": n, "metric": proto.report.metric_name,
                    "closed": closed, "dense": dense, "residual": err, **extra,
                    "completeness_error": proto.povm.completeness_error(),
                    "threshold": tol, "passed": worst <= tol,
                }
            )
    return out


def cmd_verify(args, out) -> int:
    suites = ["eigen", "dual", "oracle"] if args.suite == "all" else [args.suite]
    ok = True
    for s in suites:
        if s == "eigen":
            reports = _eigen_reports(args.n_max, args.tol_eigen)
        elif s == "dual":
            reports = _dual_reports(args.n_max, args.tol_dual)
        else:
            reports = _oracle_reports(args.n_max, args.tol_oracle)
        for r in reports:
            ok = ok and bool(r["passed"])
            out.write(dumps(r) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_entanglement(args, out) -> int:
    variant = Variant(args.variant)
    if not variant.probabilistic:
        raise UsageError("entanglement accounting needs a probabilistic variant")
    if args.sweep is not None:
        reports = consumption_sweep(args.sweep, variant)
    else:
        reports = [residual_entanglement(args.n, variant)]
    rows = [[r.row()[k] for k in ROW_FIELDS] for r in reports]
    write_table(out, args.format, list(ROW_FIELDS), rows)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    lo, hi = args.n_range
    variants = args.variants
    if args.metric == "fidelity":
        if any(v.probabilistic for v in variants):
            raise UsageError("fidelity sweeps take deterministic variants (det-mes, det-opt)")
        closed = {Variant.DET_MES: fidelity_det_mes, Variant.DET_OPT: fidelity_det_opt}
        header = ["n"] + ["f_" + v.value.replace("-", "_") for v in variants] + ["f_classical", "asymptote"]
        rows = [
            [n] + [average_fidelity(closed[v](n)) for v in variants] + [2 / 3, 1 - 1 / (2 * n)]
            for n in range(lo, hi + 1)
        ]
    else:
        if any(not v.probabilistic for v in variants):
            raise UsageError("probability sweeps take probabilistic variants (prob-mes, prob-opt)")
        closed = {Variant.PROB_MES: probability_prob_mes, Variant.PROB_OPT: probability_prob_opt}
        header = ["n"] + ["p_" + v.value.replace("-", "_") for v in variants] + ["asymptote"]
        rows = [
            [n] + [closed[v](n) for v in variants] + [1 - math.sqrt(8 / (math.pi * n))]
            for n in range(lo, hi + 1)
        ]
    write_table(out, args.format, header, rows)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbteleport", description="Port-based teleportation toolkit.")
    p.add_argument("--output", "-o", help="write to this file instead of standard output")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt_flag(sp, default="csv"):
        sp.add_argument("--format", choices=["csv", "json"], default=default)

    sp = sub.add_parser("spectrum", help="sector table of rho")
    sp.add_argument("--n", type=positive_int, required=True)
    fmt_flag(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("protocol", help="build a protocol and summarize it")
    sp.add_argument("--variant", choices=VARIANTS, required=True)
    sp.add_argument("--n", type=positive_int, required=True)
    sp.add_argument("--emit-povm", metavar="FILE")
    sp.add_argument("--emit-state", metavar="FILE")
    sp.set_defaults(func=cmd_protocol)

    sp = sub.add_parser("simulate", help="run inputs through the dense channel")
    sp.add_argument("--variant", choices=VARIANTS, required=True)
    sp.add_argument("--n", type=positive_int, required=True)
    sp.add_argument("--inputs", default="basis", help="haar:K, basis or bell (default basis)")
    sp.add_argument("--seed", type=seed_type, default=0)
    sp.add_argument("--mode", choices=["det", "prob"], help="defaults to the variant's mode")
    fmt_flag(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="numerical verification suites (JSON lines)")
    sp.add_argument("--suite", choices=["eigen", "dual", "oracle", "all"], default="all")
    sp.add_argument("--n-max", type=positive_int, default=5)
    sp.add_argument("--tol-eigen", type=float, default=EIGEN_TOL, help=f"default {EIGEN_TOL:g}")
    sp.add_argument("--tol-dual", type=float, default=DUAL_TOL, help=f"default {DUAL_TOL:g}")
    sp.add_argument("--tol-oracle", type=float, default=ORACLE_TOL, help=f"default {ORACLE_TOL:g}")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("entanglement", help="initial and residual entanglement")
    sp.add_argument("--variant", choices=["prob-opt", "prob-mes"], default="prob-opt")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=positive_int)
    g.add_argument("--sweep", type=positive_int, metavar="N_MAX")
    fmt_flag(sp)
    sp.set_defaults(func=cmd_entanglement)

    sp = sub.add_parser("sweep", help="closed-form figure data")
    sp.add_argument("--metric", choices=["fidelity", "probability"], required=True)
    sp.add_argument("--variants", type=variant_list, required=True, help="comma separated")
    sp.add_argument("--n-range", type=n_range, required=True, help="A..B")
    fmt_flag(sp)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    buf = io.StringIO()
    try:
        status = args.func(args, buf)
    except (UsageError, ValueError) as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except limits.CapacityError as e:
        print(f"{parser.prog}: capacity error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())
