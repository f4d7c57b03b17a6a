"""Command-line front end: evaluate special functions and amplitudes, run the
lattice experiments, and compare everything against the conformal targets.

Exit codes: 0 all comparisons inside tolerance, 1 a tolerance failed,
2 usage or manifest error, 3 internal error.  Floats print with 12
significant digits so reruns diff cleanly.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import __version__

Q = Fraction


def fmt(x) -> str:
    if isinstance(x, (int, Fraction, str)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.12g}"


def _stamp(params: dict) -> dict:
    skip = {"fn", "out"}
    return {"version": __version__, "seed": 0, "parameters":
            {k: str(v) for k, v in params.items() if k not in skip}}


def _emit(rows, header, out_path, report=None):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
        if report is not None:
            with open(str(out_path) + ".json", "w") as fh:
                json.dump(report, fh, indent=1, default=str)
    else:
        sys.stdout.write(text)
        if report is not None:
            sys.stdout.write(json.dumps(report, indent=1, default=str) + "\n")


def _pmap(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _parse_sizes(text):
    if ".." in text:
        parts = text.split("..")
        lo, hi = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) > 2 else 2
        return list(range(lo, hi + 1, step))
    return [int(t) for t in text.split(",")]


def _parse_p(text):
    return Q(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_special_eval(args):
    from .special_functions import (ModularPoint, dedekind_eta, jacobi_theta,
                                    elliptic_k, modulus_from_tau,
                                    anharmonic_ratio, hyp2f1)
    name = args.function
    if name in ("eta", "theta2", "theta3", "theta4", "zeta", "modulus"):
        pt = ModularPoint(complex(args.tau_real, args.tau_imag))
        val = {"eta": lambda: dedekind_eta(pt),
               "theta2": lambda: jacobi_theta(2, pt),
               "theta3": lambda: jacobi_theta(3, pt),
               "theta4": lambda: jacobi_theta(4, pt),
               "zeta": lambda: anharmonic_ratio(pt),
               "modulus": lambda: modulus_from_tau(pt)}[name]()
    elif name == "elliptic-k":
        val = elliptic_k(args.m)
    elif name == "hyp2f1":
        val = hyp2f1(args.a, args.b, args.c, args.z)
    else:
        raise SystemExit(2)
    if isinstance(val, complex):
        if abs(val.imag) < 1e-15 * max(1.0, abs(val.real)):
            val = val.real
    print(fmt(val) if not isinstance(val, complex)
          else f"{fmt(val.real)}{val.imag:+.12g}j")
    return 0


def cmd_amplitude_series(args):
    from .amplitudes import RectangleSpec, amplitude_series
    from .virasoro import CentralChargeParam
    param = CentralChargeParam.from_p(_parse_p(args.p))
    i, j, k, l = (int(t) for t in args.corners.split(","))
    amp = amplitude_series(RectangleSpec(i, j, k, l, args.channel), param,
                           args.order)
    rows = [(n, c) for n, c in enumerate(amp.coeffs)]
    report = {"leading_exponent": str(amp.leading_exponent),
              "log2_prefactor": str(amp.log2_prefactor),
              "stamp": _stamp(vars(args))}
    _emit(rows, ["order", "coefficient"], args.out, report)
    return 0


def cmd_amplitude_exact(args):
    from .amplitudes import (RectangleSpec, amplitude_series,
                             four_op_amplitude_value, four_op_deg2_series,
                             series_match_report)
    from .virasoro import CentralChargeParam
    param = CentralChargeParam.from_p(_parse_p(args.p))
    val = four_op_amplitude_value(args.channel, 1j * args.tau_imag, param).real
    amp = amplitude_series(RectangleSpec(1, 1, 1, 1, args.channel), param,
                           args.order)
    rep = series_match_report(amp, four_op_deg2_series(args.channel, param,
                                                       args.order))
    ok = rep["max_rel_err"] <= args.tolerance and rep["leading_exponent_match"]
    report = {"value": val, "series_check": {k: str(v) for k, v in rep.items()},
              "pass": ok, "stamp": _stamp(vars(args))}
    _emit([(args.channel, args.tau_imag, val, rep["max_rel_err"])],
          ["channel", "tau_imag", "value", "series_residual"], args.out, report)
    return 0 if ok else 1


def cmd_probability(args):
    from .amplitudes import crossing_probability
    p = _parse_p(args.p) if args.p else None
    val = crossing_probability(args.model, args.zeta, p)
    print(fmt(val))
    return 0


def cmd_table1(args):
    import numpy as np
    from .ising import FixedBoundaryOverlaps, table_rows, ratio_fit, ctilde_theory

    rows_spec = table_rows()
    sizes = _parse_sizes(args.sizes)

    def one_size(L):
        ov = FixedBoundaryOverlaps(L)
        return [ov.overlap(sub) for sub, _, _ in rows_spec]

    data = np.array(_pmap(one_size, sizes, args.jobs))
    b0, b1 = data[:, 0], data[:, 1]
    ctilde, _ = ratio_fit(sizes, np.abs(b1 / b0))
    out_rows = []
    worst = abs(ctilde - ctilde_theory()) / 1e-3
    for t, (sub, h, target) in enumerate(rows_spec):
        if target == 0:
            fitted = float(np.max(np.abs(data[:, t] / b0)))
            err = fitted
            tol = 1e-12
        elif sub in ((), (0,)):
            fitted, err, tol = 1.0, 0.0, args.tolerance
        else:
            base = b1 if len(sub) % 2 else b0
            fitted, _ = ratio_fit(sizes, np.abs(data[:, t] / base))
            err = abs(fitted - float(target))
            tol = args.tolerance
        worst = max(worst, err / tol)
        out_rows.append((str(sub), str(h), fitted, target, err))
    report = {"ctilde": ctilde, "ctilde_theory": ctilde_theory(),
              "pass": worst <= 1.0, "stamp": _stamp(vars(args))}
    _emit(out_rows, ["modes", "weight", "fitted", "target", "error"],
          args.out, report)
    return 0 if worst <= 1.0 else 1


def cmd_table2(args):
    from .tl_lattice import table2_run
    rows = table2_run(_parse_p(args.p),
                      sizes=_parse_sizes(args.sizes) if args.sizes else None,
                      cache_dir=args.cache_dir)
    out_rows, ok = [], True
    for r in rows:
        e1 = abs(r["overlap1_fit"] - abs(r["overlap1_theory"]))
        e2 = abs(r["overlap2_fit"] - abs(r["overlap2_theory"]))
        ea = abs(r["a1_fit"] - r["a1_theory"])
        ok = ok and e1 <= args.tolerance and e2 <= args.tolerance and ea <= 0.01
        out_rows.append((str(r["state"]), r["a1_fit"], r["a1_theory"],
                         r["overlap1_fit"], r["overlap1_theory"],
                         r["overlap2_fit"], r["overlap2_theory"]))
    _emit(out_rows, ["state", "a1_fit", "a1_theory", "overlap1_fit",
                     "overlap1_theory", "overlap2_fit", "overlap2_theory"],
          args.out, {"pass": ok, "stamp": _stamp(vars(args))})
    return 0 if ok else 1


def cmd_table3(args):
    from .tl_lattice import table3_run
    ok = True
    out_rows = []
    for p in args.p_list.split(","):
        res = table3_run(_parse_p(p),
                         sizes=_parse_sizes(args.sizes) if args.sizes else None,
                         cache_dir=args.cache_dir)
        err = abs(res["measured"] - res["theory"])
        ok = ok and err <= args.tolerance
        out_rows.append((p, res["measured"], res["theory"], err))
    _emit(out_rows, ["p", "measured", "theory", "error"], args.out,
          {"pass": ok, "stamp": _stamp(vars(args))})
    return 0 if ok else 1


def cmd_laplacian(args):
    from .laplacian import tau_difference_check, free_boson_check
    sizes = _parse_sizes(args.sizes)
    out_rows, ok = [], True
    for bc in args.bc.split(","):
        res = tau_difference_check(bc, base_sizes=sizes)
        ok = ok and res["error"] <= args.tolerance
        out_rows.append((bc, res["taus"][0], res["taus"][1], res["measured"],
                         res["error"], res["fit_residual"]))
    boson = free_boson_check(base_sizes=sizes)
    ok = ok and boson <= args.tolerance
    _emit(out_rows, ["bc", "tau1", "tau2", "universal_difference", "error",
                     "fit_residual"], args.out,
          {"free_boson_residual": boson, "pass": ok, "stamp": _stamp(vars(args))})
    return 0 if ok else 1


def cmd_crossing_check(args):
    from .tl_lattice import crossing_symmetry_check
    beta = math.sqrt(2) if args.beta == "sqrt2" else float(args.beta)
    out_rows, ok = [], True
    for pair in args.sizes.split(";"):
        L, Lp = (int(t) for t in pair.split(","))
        for i in range(args.max_label + 1):
            try:
                res = crossing_symmetry_check(L, Lp, beta, i)
            except ZeroDivisionError:
                out_rows.append((L, Lp, i, "excluded", "", "", "", ""))
                continue
            worst = max(res.values())
            ok = ok and worst <= args.tolerance
            out_rows.append((L, Lp, i, res["orthogonality"],
                             res["weighted_identity"],
                             res["weighted_identity_dual"],
                             res["size_independent_ratio"], res["recursion"]))
    _emit(out_rows, ["L", "Lp", "label", "orthogonality", "weighted",
                     "weighted_dual", "size_ratio", "recursion"], args.out,
          {"pass": ok, "stamp": _stamp(vars(args))})
    return 0 if ok else 1


def cmd_expansion_check(args):
    from .expansions import expansion_check
    report = expansion_check(_parse_p(args.p), args.level)
    ok = not report["mismatches"]
    rows = [(str(report["p"]), report["compared"], len(report["mismatches"]))]
    _emit(rows, ["p", "compared", "mismatches"], args.out,
          {"pass": ok, "mismatches": [str(m) for m in report["mismatches"]],
           "stamp": _stamp(vars(args))})
    return 0 if ok else 1


def cmd_run(args):
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return 2
    if not isinstance(manifest, dict) or "command" not in manifest:
        print("manifest must be an object with a 'command' key", file=sys.stderr)
        return 2
    command = manifest["command"]
    params = manifest.get("params", {})
    if not isinstance(params, dict):
        print("manifest 'params' must be an object", file=sys.stderr)
        return 2
    argv = [command]
    for key, val in params.items():
        argv.append(f"--{key.replace('_', '-')}")
        if not isinstance(val, bool):
            argv.append(str(val))
    if "output" in manifest:
        argv += ["--out", str(manifest["output"])]
    return main(argv)


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="rectcft", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--out", default=None, help="CSV output path")
        p.add_argument("--jobs", type=int, default=1)
        return p

    p = add("special-eval", cmd_special_eval)
    p.add_argument("--function", required=True,
                   choices=["eta", "theta2", "theta3", "theta4", "zeta",
                            "modulus", "elliptic-k", "hyp2f1"])
    p.add_argument("--tau-imag", type=float, default=1.0)
    p.add_argument("--tau-real", type=float, default=0.0)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--c", type=float, default=1.5)
    p.add_argument("--z", type=float, default=0.5)

    p = add("amplitude-series", cmd_amplitude_series)
    p.add_argument("--p", required=True)
    p.add_argument("--corners", default="1,1,1,1")
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--order", type=int, default=8)

    p = add("amplitude-exact", cmd_amplitude_exact)
    p.add_argument("--p", required=True)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--tau-imag", type=float, default=1.0)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--tolerance", type=float, default=1e-10)

    p = add("probability", cmd_probability)
    p.add_argument("--model", required=True,
                   choices=["generic", "percolation", "dense", "dilute"])
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--p", default=None)

    p = add("table1", cmd_table1)
    p.add_argument("--sizes", default="8..30")
    p.add_argument("--tolerance", type=float, default=5e-3)

    p = add("table2", cmd_table2)
    p.add_argument("--p", default="3")
    p.add_argument("--sizes", default=None)
    p.add_argument("--tolerance", type=float, default=2e-2)
    p.add_argument("--cache-dir", default=None)

    p = add("table3", cmd_table3)
    p.add_argument("--p-list", default="3,4,5")
    p.add_argument("--sizes", default=None)
    p.add_argument("--tolerance", type=float, default=2e-2)
    p.add_argument("--cache-dir", default=None)

    p = add("laplacian", cmd_laplacian)
    p.add_argument("--bc", default="DDDD,NNNN,DNDN,NDDD,NNDD,NDNN")
    p.add_argument("--sizes", default="60..200..20")
    p.add_argument("--tolerance", type=float, default=1e-3)

    p = add("crossing-check", cmd_crossing_check)
    p.add_argument("--sizes", default="4,4;6,8")
    p.add_argument("--beta", default="sqrt2")
    p.add_argument("--max-label", type=int, default=1)
    p.add_argument("--tolerance", type=float, default=1e-10)

    p = add("expansion-check", cmd_expansion_check)
    p.add_argument("--p", default="13/5")
    p.add_argument("--level", type=int, default=8)

    p = sub.add_parser("run", help="execute a JSON experiment manifest")
    p.set_defaults(fn=cmd_run)
    p.add_argument("manifest")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
