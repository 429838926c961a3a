"""Command line front end.

Exit status: 0 when the check passes or the construction succeeds, 1 when
the input is certified negative (the JSON output carries the witness), 2 on
input or structural errors.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .applications import LocalPovm, naimark, rho_contraction_check, unitary_dilation
from .dilation import build_rklhs, dilate, representation_residual, rho_dilate
from .errors import LbcError, LocDilateError, PreconditionError, StructuralError
from .local_operator import FLAGS, TOL_FLAG, TOL_PSD, TOL_STRUCT, LocalOperator, classify
from .pd_kernel import OperatorFunction, OperatorKernel, is_lpdf, is_lpdk, lbc_constants
from .star_semigroup import StarSemigroup
from .tower import Tower

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2

# residual bounds used when re-validating construction files
REVALIDATE_TOL = 1e-8


class InputError(Exception):
    pass


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _tolerances(args) -> dict:
    return {"psd": args.tol_psd, "struct": args.tol_struct}


def _operator(obj, args) -> LocalOperator:
    if isinstance(obj, dict) and "operator" in obj:
        obj = obj["operator"]
    return LocalOperator.from_json(obj, tol=args.tol_struct)


def _flags_json(flags) -> dict:
    return {f: f in flags for f in FLAGS}


# -- re-validation of construction files --------------------------------------

def _revalidate_unitary(obj, args):
    t = LocalOperator.from_json(obj["T"])
    u = LocalOperator.from_json(obj["U"])
    j = LocalOperator.from_json(obj["J"])
    horizon = int(obj["certificate"]["horizon"])
    u_flags = classify(u, ("unitary",))
    j_flags = classify(j, ("isometry",))
    comp, un, tn = 0.0, LocalOperator.identity(u.source), LocalOperator.identity(t.source)
    for _ in range(horizon):
        un, tn = u @ un, t @ tn
        comp = max(comp, (j.H @ un @ j - tn).norm())
    ok = "unitary" in u_flags and "isometry" in j_flags and comp <= REVALIDATE_TOL
    return ok, {
        "kind": "unitary_dilation_check",
        "ok": ok,
        "U_unitary": "unitary" in u_flags,
        "J_isometry": "isometry" in j_flags,
        "compression_residual": comp,
        "horizon": horizon,
    }


def _revalidate_spectral(obj, args):
    povm_obj = obj["povm"]
    tower = Tower.from_json(povm_obj["tower"])
    dil = Tower.from_json(obj["dilation_tower"])
    atoms = [LocalOperator.from_json({"tower": povm_obj["tower"], **a}) for a in povm_obj["atoms"]]
    projs = [LocalOperator.from_json({"tower": obj["dilation_tower"], **f}) for f in obj["projections"]]
    j = LocalOperator.from_json(obj["J"])
    if j.source != tower or j.target != dil:
        raise StructuralError("J does not map the POVM tower into the dilation tower")
    all_proj = all("projection" in classify(f, ("projection",)) for f in projs)
    ortho = max(((projs[a] @ projs[b]).norm() for a in range(len(projs)) for b in range(len(projs)) if a != b), default=0.0)
    total = sum(projs[1:], projs[0])
    resolution = (total - LocalOperator.identity(dil)).norm()
    comp = max((e - j.H @ f @ j).norm() for e, f in zip(atoms, projs))
    iso = "isometry" in classify(j, ("isometry",))
    ok = all_proj and iso and max(ortho, resolution, comp) <= REVALIDATE_TOL
    return ok, {
        "kind": "spectral_dilation_check",
        "ok": ok,
        "all_projections": all_proj,
        "J_isometry": iso,
        "orthogonality_residual": ortho,
        "resolution_residual": resolution,
        "compression_residual": comp,
    }


def _revalidate_dilation(obj, args):
    sg = StarSemigroup.from_json(obj["semigroup"])
    tower = Tower.from_json(obj["tower"])
    dil = Tower.from_json(obj["dilation_tower"])
    phi = OperatorFunction.from_json({"semigroup": obj["semigroup"], "tower": obj["tower"], "values": obj["function"]})
    pi = OperatorFunction.from_json({"semigroup": obj["semigroup"], "tower": obj["dilation_tower"], "values": obj["representation"]})
    j = LocalOperator.from_json(obj["J"])
    if j.source != tower or j.target != dil:
        raise StructuralError("J does not map the base tower into the dilation tower")
    cert = is_lpdf(pi, args.tol_psd)
    rep = representation_residual(sg, list(pi.values), dil)
    rho = obj["certificate"].get("rho")
    comp = max((phi.values[s] - j.H @ pi.values[s] @ j).norm() for s in range(sg.n))
    iso = "isometry" in classify(j, ("isometry",))
    ok = cert.ok and iso and max(rep, comp) <= REVALIDATE_TOL
    out = {
        "kind": "dilation_check",
        "ok": ok,
        "representation_is_lpdf": cert.ok,
        "J_isometry": iso,
        "representation_residual": rep,
        "dilation_residual": comp,
    }
    if rho is not None:
        out["rho"] = rho
    return ok, out


# -- verbs ----------------------------------------------------------------------

def cmd_check_operator(args, obj):
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "unitary_dilation":
        return _revalidate_unitary(obj, args)
    if kind == "spectral_dilation":
        return _revalidate_spectral(obj, args)
    op = _operator(obj, args)
    flags = classify(op)
    missing = [f for f in args.require or () if f not in flags]
    if missing and not op.is_square and set(missing) & {"self_adjoint", "positive", "projection", "normal"}:
        raise StructuralError("square-only flags requested for an operator between different towers")
    ok = not missing
    return ok, {
        "kind": "operator_check",
        "ok": ok,
        "source": list(op.source.dims),
        "target": list(op.target.dims),
        "flags": _flags_json(flags),
        "seminorms": op.seminorms(),
        "required": list(args.require or ()),
        "missing": missing,
        "tolerances": {**_tolerances(args), "flag": TOL_FLAG},
    }


def cmd_check_kernel(args, obj):
    kernel = OperatorKernel.from_json(obj)
    cert = is_lpdk(kernel, args.tol_psd)
    return cert.ok, {"kind": "kernel_check", **cert.to_json(), "tolerances": _tolerances(args)}


def cmd_check_lpdf(args, obj):
    if isinstance(obj, dict) and obj.get("kind") == "dilation":
        return _revalidate_dilation(obj, args)
    phi = OperatorFunction.from_json(obj)
    cert = is_lpdf(phi, args.tol_psd)
    out = {"kind": "lpdf_check", **cert.to_json()}
    if cert.ok:
        try:
            out["lbc"] = lbc_constants(phi, args.tol_psd).to_json()
        except LbcError as exc:
            out["lbc_failure"] = {"u": exc.u, "level": exc.level, "message": str(exc)}
    out["tolerances"] = _tolerances(args)
    return cert.ok, out


def cmd_build_rklhs(args, obj):
    kernel = OperatorKernel.from_json(obj)
    rk = build_rklhs(kernel, args.tol_psd)
    return True, {**rk.to_json(), "tolerances": _tolerances(args)}


def cmd_dilate(args, obj):
    phi = OperatorFunction.from_json(obj)
    res = dilate(phi, args.tol_psd)
    return True, res.to_json()


def cmd_rho_dilate(args, obj):
    phi = OperatorFunction.from_json(obj)
    res = rho_dilate(phi, args.rho, args.tol_psd)
    return True, res.to_json()


def cmd_naimark(args, obj):
    try:
        tower = Tower.from_json(obj["tower"])
        atoms = [LocalOperator.from_json({"tower": obj["tower"], **a}, tol=args.tol_struct) for a in obj["atoms"]]
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"POVM file is missing field {exc}") from None
    povm = LocalPovm.with_defect_atom(tower, atoms) if args.defect_atom else LocalPovm(tower, atoms)
    return True, naimark(povm).to_json()


def cmd_unitary_dilate(args, obj):
    t = _operator(obj, args)
    return True, unitary_dilation(t, args.horizon, args.tol_psd).to_json()


def cmd_rho_check(args, obj):
    t = _operator(obj, args)
    cert = rho_contraction_check(t, args.rho, args.horizon, tol_psd=args.tol_psd)
    return cert.consistent, {"kind": "rho_check", **cert.to_json(), "tolerances": _tolerances(args)}


VERBS = {
    "check-operator": (cmd_check_operator, "classify an operator or re-validate a naimark/unitary-dilate output"),
    "check-kernel": (cmd_check_kernel, "certify local positive definiteness of a kernel"),
    "check-lpdf": (cmd_check_lpdf, "certify a function on a *-semigroup, or re-validate a dilate output"),
    "build-rklhs": (cmd_build_rklhs, "reproducing kernel tower of a positive definite kernel"),
    "dilate": (cmd_dilate, "minimal dilation of a positive definite function"),
    "rho-dilate": (cmd_rho_dilate, "rho-dilation of a function"),
    "naimark": (cmd_naimark, "Naimark dilation of a discrete POVM"),
    "unitary-dilate": (cmd_unitary_dilate, "finite-horizon unitary dilation of a contraction"),
    "rho-check": (cmd_rho_check, "windowed rho-contraction certificate"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locdilate", description="Dilations on finite towers of Hilbert spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")
    for verb, (_, help_text) in VERBS.items():
        p = sub.add_parser(verb, help=help_text, description=help_text)
        p.add_argument("input", help="input JSON file")
        p.add_argument("--output", "-o", help="write the JSON result here")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--tol-psd", type=float, default=TOL_PSD)
        p.add_argument("--tol-struct", type=float, default=TOL_STRUCT)
        if verb in ("unitary-dilate", "rho-check"):
            p.add_argument("--horizon", type=int, default=8, metavar="N")
        if verb in ("rho-dilate", "rho-check"):
            p.add_argument("--rho", type=float, required=True, metavar="R")
        if verb == "naimark":
            p.add_argument("--defect-atom", action="store_true", help="append I - sum(E_i) as an extra atom")
        if verb == "check-operator":
            p.add_argument("--require", nargs="+", choices=FLAGS, metavar="FLAG", help="flags that must hold")
    return parser


def _text(result: dict, prefix="") -> list:
    lines = []
    for key, val in result.items():
        if isinstance(val, dict):
            lines.append(f"{prefix}{key}:")
            lines.extend(_text(val, prefix + "  "))
        elif isinstance(val, list) and val and isinstance(val[0], (dict, list)):
            lines.append(f"{prefix}{key}: [{len(val)} items]")
        else:
            lines.append(f"{prefix}{key}: {val}")
    return lines


def _summary(result: dict) -> dict:
    # the text report skips bulky matrices
    return {k: v for k, v in result.items() if k not in ("J", "U", "T", "representation", "function", "projections", "povm", "point_maps", "semigroup")}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = VERBS[args.verb][0]
    try:
        obj = _load(args.input)
        ok, result = handler(args, obj)
        status = EXIT_OK if ok else EXIT_NEGATIVE
    except PreconditionError as exc:
        result = {"kind": "failure", "verb": args.verb, "message": str(exc)}
        if isinstance(exc, LbcError):
            result["lbc_failure"] = {"u": exc.u, "level": exc.level}
        if exc.certificate is not None:
            result["certificate"] = exc.certificate.to_json()
        status = EXIT_NEGATIVE
    except (InputError, StructuralError, KeyError, TypeError, ValueError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing field {exc}"
        print(f"locdilate {args.verb}: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except LocDilateError as exc:  # pragma: no cover - every subclass is handled above
        print(f"locdilate {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    text = _dump(result)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.format == "text":
        verdict = {EXIT_OK: "PASS", EXIT_NEGATIVE: "NEGATIVE"}[status]
        print(f"{args.verb}: {verdict}")
        print("\n".join(_text(_summary(result), "  ")))
    elif not args.output:
        sys.stdout.write(text)
    return status


def main():  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
