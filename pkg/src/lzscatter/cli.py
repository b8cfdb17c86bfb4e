"""Command-line front end.

Subcommands build catalog models, compute scattering matrices by the
algebraic, crossing-schedule and numerical routes, compare the routes,
emit adiabatic spectra and parameter sweeps as CSV, verify the
zero-curvature residual of partnered families, and append one record per
successful invocation to a JSON-lines run ledger.

Exit codes: 0 success, 1 validation failure (an invariant or comparison
did not hold), 2 input error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import crossings, laxflow, oracle, zerocurv
from .models import (
    FAMILIES,
    AffineModel,
    MissingPartnerError,
    SingularPartnerError,
    UnknownFamilyError,
    build_model,
)
from .numerics import OdeSettings

LEDGER_ENV = "LZSCATTER_LEDGER"
DEFAULT_LEDGER = "lzscatter_runs.jsonl"

STOCHASTIC_TOL = 1e-8

ALGEBRAIC_FAMILIES = ("lz2", "spin", "adjoint3")
CROSSINGS_FAMILIES = ("bowtie3", "bowtieN", "su3six", "su3adj8")


class ValidationFailure(Exception):
    """Computed result violates a required invariant (exit code 1)."""


class UsageError(Exception):
    """Malformed input (exit code 2)."""


def _parse_values(text):
    if text is None:
        return None
    parts = [p for p in str(text).split(",") if p != ""]
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}: {exc}") from None
    if not values:
        raise UsageError(f"empty number list {text!r}")
    return values[0] if len(values) == 1 else values


def _is_range(text):
    return text is not None and ":" in str(text)


def _parse_range(text):
    parts = str(text).split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"cannot parse range {text!r}: {exc}") from None
    if step <= 0:
        raise UsageError("range step must be positive")
    # exclusive stop with a roundoff guard so 0.2:0.8:0.2 yields 3 values
    count = max(0, math.ceil((stop - start) / step - 1e-9))
    return start + step * np.arange(count)


def _build_from_args(args):
    try:
        return build_model(
            args.family,
            delta=_parse_values(args.delta),
            slope=_parse_values(args.slope),
            eps=float(args.eps) if args.eps is not None else None,
            k=args.k,
        )
    except (UnknownFamilyError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _settings(args):
    rtol = args.rtol if getattr(args, "rtol", None) is not None else 1e-8
    return OdeSettings(rtol=rtol, atol=rtol * 1e-2)


def _matrix_json(m):
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def _real_matrix_json(m):
    return [[float(x) for x in row] for row in np.asarray(m, dtype=float)]


def _dump(obj, out_path=None):
    text = json.dumps(obj, sort_keys=True, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_lines(lines, out_path=None):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))


def _digest(matrix):
    canonical = json.dumps(_real_matrix_json(matrix), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _ledger_path(args):
    if getattr(args, "ledger", None):
        return args.ledger
    return os.environ.get(LEDGER_ENV, DEFAULT_LEDGER)


def _append_record(args, descriptor, method, digest, error_estimate, passed):
    record = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "argv": list(args.invocation_argv),
        "descriptor": descriptor,
        "method": method,
        "digest": {"sha256": digest, "error_estimate": error_estimate},
        "pass": bool(passed),
    }
    path = _ledger_path(args)
    with open(path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def default_method(family):
    if family in ALGEBRAIC_FAMILIES:
        return "algebraic"
    if family in ("bowtie3", "bowtieN", "su3six"):
        return "crossings"
    return "numeric"


def _algebraic_smatrix(model: AffineModel):
    if model.family == "lz2":
        return laxflow.lz_closed_form(model.delta, model.slope)
    s = laxflow.smatrix_spin(model.k, model.delta, model.slope)
    if model.spin_basis_permutation is not None:
        p = list(model.spin_basis_permutation)
        s = s[np.ix_(p, p)]
    return s


def _crossings_schedule(model: AffineModel):
    if model.family == "bowtie3":
        return crossings.schedule_bowtie3(model.delta, model.slope, model.eps)
    if model.family == "bowtieN":
        return crossings.schedule_bowtieN(model.delta, model.slope, model.eps)
    if model.family == "su3six" and model.eps > 0:
        return crossings.schedule_su3six(model.delta, model.slope, model.eps)
    return crossings.derive_schedule_generic(model)


def compute_smatrix(model: AffineModel, method, args):
    """Return (matrix, meta) for the requested method."""
    if method == "algebraic":
        if model.family not in ALGEBRAIC_FAMILIES:
            raise UsageError(f"method algebraic unsupported for family {model.family!r}")
        return _algebraic_smatrix(model), {}
    if method == "crossings":
        if model.family not in CROSSINGS_FAMILIES:
            raise UsageError(f"method crossings unsupported for family {model.family!r}")
        schedule = _crossings_schedule(model)
        return crossings.compose(schedule, model.k), {"events": len(schedule)}
    if method == "numeric":
        result = oracle.numeric_smatrix(
            model, t_final=args.T, settings=_settings(args)
        )
        meta = {
            "T": result.horizon,
            "error_estimate": result.error_estimate,
            "unitarity_defect": result.unitarity_defect,
            "converged": result.converged,
        }
        return result.s_num, meta
    raise UsageError(f"unknown method {method!r}")


def _check_stochastic(matrix):
    defect = laxflow.stochastic_defect(matrix)
    if defect > STOCHASTIC_TOL:
        raise ValidationFailure(
            f"scattering matrix violates double stochasticity: defect {defect:.3e}"
        )
    return defect


def cmd_model_show(args):
    model = _build_from_args(args)
    out = {
        "descriptor": model.descriptor(),
        "a": _matrix_json(model.a_of(model._eps_value(None))),
        "b": _matrix_json(model.b),
    }
    if model.has_partner:
        try:
            out["e0"] = _matrix_json(model.partner_constant())
            out["e1"] = _matrix_json(model.e1)
        except SingularPartnerError:
            out["e0"] = None
            out["e1"] = _matrix_json(model.e1)
            out["partner_note"] = "partner singular at eps = 0"
    _dump(out, args.out)
    _append_record(args, model.descriptor(), "show", _digest(model.b.real), None, True)
    return 0


def cmd_smatrix(args):
    model = _build_from_args(args)
    method = args.method or default_method(model.family)
    matrix, meta = compute_smatrix(model, method, args)
    _check_stochastic(matrix)
    out = {
        "family": model.family,
        "params": model.descriptor(),
        "method": method,
        "matrix": _real_matrix_json(matrix),
    }
    out.update(meta)
    if method == "numeric":
        out["rtol"] = args.rtol if args.rtol is not None else 1e-8
    _dump(out, args.out)
    _append_record(
        args, model.descriptor(), method, _digest(matrix),
        meta.get("error_estimate"), True,
    )
    return 0


def cmd_compare(args):
    model = _build_from_args(args)
    methods = args.methods
    if len(methods) < 2:
        raise UsageError("compare needs at least two methods")
    matrices = {}
    error_estimate = 0.0
    for method in methods:
        matrix, meta = compute_smatrix(model, method, args)
        if args.corrupt and not matrices:
            matrix = matrix.copy()
            matrix[0, 0] += 0.05
        matrices[method] = matrix
        error_estimate = max(error_estimate, meta.get("error_estimate", 0.0))
    tolerance = max(1e-2, 3.0 * error_estimate)
    pairs = []
    all_pass = True
    for a in range(len(methods)):
        for b in range(a + 1, len(methods)):
            deviation = float(np.abs(matrices[methods[a]] - matrices[methods[b]]).max())
            ok = deviation <= tolerance
            all_pass = all_pass and ok
            pairs.append(
                {
                    "methods": [methods[a], methods[b]],
                    "max_deviation": deviation,
                    "pass": ok,
                }
            )
    out = {
        "family": model.family,
        "params": model.descriptor(),
        "tolerance": tolerance,
        "pairs": pairs,
        "pass": all_pass,
    }
    _dump(out, args.out)
    _append_record(
        args, model.descriptor(), "+".join(methods),
        _digest(matrices[methods[0]]), error_estimate, all_pass,
    )
    if not all_pass:
        raise ValidationFailure("method comparison failed")
    return 0


def cmd_spectrum(args):
    model = _build_from_args(args)
    if args.steps < 2:
        raise UsageError("spectrum needs steps >= 2")
    if args.t_min >= args.t_max:
        raise UsageError("t window needs t-min < t-max")
    grid = np.linspace(args.t_min, args.t_max, args.steps)
    curves, _flags = oracle.adiabatic_spectrum(model, grid)
    lines = oracle.spectrum_csv_lines(grid, curves)
    _write_lines(lines, args.out)
    _append_record(args, model.descriptor(), "spectrum", _digest(curves), None, True)
    return 0


def _parse_grid(text):
    t_grid = eps_grid = None
    for chunk in str(text).split(";"):
        if not chunk:
            continue
        key, _, values = chunk.partition("=")
        values = [float(v) for v in values.split(",") if v != ""]
        if key.strip() == "t":
            t_grid = values
        elif key.strip() == "eps":
            eps_grid = values
        else:
            raise UsageError(f"unknown grid axis {key!r}")
    return t_grid, eps_grid


def cmd_zero_curvature(args):
    model = _build_from_args(args)
    if not model.has_partner:
        raise UsageError(f"family {model.family!r} has no flow partner")
    t_grid = eps_grid = None
    if args.grid:
        t_grid, eps_grid = _parse_grid(args.grid)
    try:
        report = zerocurv.verify_pair(model, t_grid=t_grid, eps_grid=eps_grid)
    except (SingularPartnerError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    _dump(report.to_json_dict(), args.out)
    _append_record(
        args, model.descriptor(), "zero-curvature",
        _digest(np.abs(report.residual_matrix)), report.max_residual, report.passed,
    )
    if not report.passed:
        raise ValidationFailure(
            f"zero-curvature residual {report.max_residual:.3e} exceeds "
            f"{zerocurv.PASS_THRESHOLD:.1e}"
        )
    return 0


def cmd_sweep(args):
    ranged = {
        name: getattr(args, name)
        for name in ("delta", "slope", "eps")
        if _is_range(getattr(args, name))
    }
    if len(ranged) != 1:
        raise UsageError("sweep needs exactly one ranged parameter (start:stop:step)")
    (param, spec_text), = ranged.items()
    values = _parse_range(spec_text)
    entries = None
    if args.entries:
        entries = []
        for part in str(args.entries).split(";"):
            if not part:
                continue
            try:
                i, j = (int(x) for x in part.split(","))
            except ValueError:
                raise UsageError(f"bad entry spec {part!r}; want i,j") from None
            entries.append((i, j))

    header = None
    rows = []
    method = args.method
    descriptor = None
    for value in values:
        kwargs = {
            "delta": _parse_values(args.delta) if param != "delta" else float(value),
            "slope": _parse_values(args.slope) if param != "slope" else float(value),
            "eps": (float(args.eps) if args.eps is not None else None)
            if param != "eps"
            else float(value),
            "k": args.k,
        }
        try:
            model = build_model(args.family, **kwargs)
        except (UnknownFamilyError, ValueError) as exc:
            raise UsageError(str(exc)) from None
        descriptor = model.descriptor()
        if method is None:
            method = default_method(model.family)
        matrix, _meta = compute_smatrix(model, method, args)
        k = matrix.shape[0]
        if entries is None:
            selected = [(i + 1, j + 1) for i in range(k) for j in range(k)]
        else:
            selected = entries
        if header is None:
            header = param + "," + ",".join(f"S_{i}_{j}" for i, j in selected)
        rows.append(
            ",".join(
                [repr(float(value))]
                + [repr(float(matrix[i - 1, j - 1])) for i, j in selected]
            )
        )
    if header is None:
        header = param
    lines = [header] + rows
    _write_lines(lines, args.out)
    if descriptor is None:
        descriptor = {"family": args.family}
    csv_digest = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    _append_record(args, descriptor, method or "sweep", csv_digest, None, True)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lzscatter",
        description="Exact and numerical scattering matrices for multistate "
        "linear-sweep Hamiltonian families",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_args(p, need_eps=False):
        p.add_argument("--family", required=True, help=f"one of {', '.join(FAMILIES)}")
        p.add_argument("--k", type=int, default=None, help="dimension (spin family)")
        p.add_argument("--delta", required=True, help="coupling (comma list for bowtieN)")
        p.add_argument("--slope", required=True, help="sweep rate (comma list for bowtieN)")
        p.add_argument("--eps", default=None, help="flat-level splitting")
        p.add_argument("--out", default=None, help="write output to this path")
        p.add_argument("--ledger", default=None, help="run-ledger path override")

    model_p = sub.add_parser("model", help="inspect catalog models")
    model_sub = model_p.add_subparsers(dest="model_command", required=True)
    show_p = model_sub.add_parser("show", help="print A(eps), B and partner parts")
    add_model_args(show_p)
    show_p.set_defaults(func=cmd_model_show)

    sm_p = sub.add_parser("smatrix", help="compute a scattering matrix")
    add_model_args(sm_p)
    sm_p.add_argument("--method", choices=("algebraic", "crossings", "numeric"), default=None)
    sm_p.add_argument("--T", type=float, default=None, help="numeric horizon")
    sm_p.add_argument("--rtol", type=float, default=None, help="numeric tolerance")
    sm_p.set_defaults(func=cmd_smatrix)

    cp_p = sub.add_parser("compare", help="cross-validate methods")
    add_model_args(cp_p)
    cp_p.add_argument("--methods", nargs="+", required=True,
                      choices=("algebraic", "crossings", "numeric"))
    cp_p.add_argument("--T", type=float, default=None)
    cp_p.add_argument("--rtol", type=float, default=None)
    cp_p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    cp_p.set_defaults(func=cmd_compare)

    sp_p = sub.add_parser("spectrum", help="adiabatic spectrum CSV")
    add_model_args(sp_p)
    sp_p.add_argument("--t-min", type=float, default=-10.0, help="window start")
    sp_p.add_argument("--t-max", type=float, default=10.0, help="window end")
    sp_p.add_argument("--steps", type=int, default=400)
    sp_p.set_defaults(func=cmd_spectrum)

    zc_p = sub.add_parser("zero-curvature", help="verify the (H, E) pair")
    add_model_args(zc_p)
    zc_p.add_argument("--grid", default=None, help='grid spec "t=-10,0,10;eps=0.5,1,3"')
    zc_p.set_defaults(func=cmd_zero_curvature)

    sw_p = sub.add_parser("sweep", help="CSV of S entries over one ranged parameter")
    add_model_args(sw_p)
    sw_p.add_argument("--method", choices=("algebraic", "crossings", "numeric"), default=None)
    sw_p.add_argument("--T", type=float, default=None)
    sw_p.add_argument("--rtol", type=float, default=None)
    sw_p.add_argument("--entries", default=None, help='entry filter "i,j;i,j"')
    sw_p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    raw_argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = parser.parse_args(raw_argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    args.invocation_argv = raw_argv
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return 1
    except (UsageError, UnknownFamilyError, MissingPartnerError,
            SingularPartnerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # contract: no tracebacks on malformed input
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
