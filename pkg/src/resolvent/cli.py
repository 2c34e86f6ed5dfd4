"""Command line front end: ``resolvent <command> [options]``.

Exit codes: 0 success, 1 a verification failed, 2 the request exceeds the
enumeration guard, 3 bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import EnumerationTooLarge, ResolventError, TruncationTooShallow
from .modules import FpModule, ModuleMap, max_enumeration
from .workbench import METHODS

EXIT_OK, EXIT_FAILED, EXIT_INFEASIBLE, EXIT_BAD_INPUT = 0, 1, 2, 3


class BadInput(Exception):
    pass


def parse_module(text: str, modulus: int) -> FpModule:
    """``"2,4"`` (cyclic orders), ``"0"`` or a JSON file holding ``{"factors": [...]}`` or a list."""
    if text is None:
        raise BadInput("--module is required")
    if os.path.isfile(text):
        with open(text) as fh:
            obj = json.load(fh)
        if isinstance(obj, dict):
            if "modulus" in obj and int(obj["modulus"]) != modulus:
                raise BadInput("module file is over a different modulus")
            obj = obj.get("factors", [])
        orders = [int(v) for v in obj]
    else:
        try:
            orders = [int(v) for v in text.replace(" ", "").split(",") if v]
        except ValueError as err:
            raise BadInput(f"cannot parse module {text!r}") from err
    if orders == [0]:
        orders = []
    for o in orders:
        if o <= 0 or modulus % o:
            raise BadInput(f"cyclic order {o} does not divide the modulus {modulus}")
    return FpModule.from_orders(modulus, orders)


def parse_matrix(text: str) -> np.ndarray:
    """Rows separated by ``;``, entries by ``,`` (or a JSON list of rows)."""
    text = text.strip()
    if text.startswith("["):
        return np.array(json.loads(text), dtype=np.int64)
    return np.array([[int(v) for v in row.split(",")] for row in text.split(";") if row.strip()], dtype=np.int64)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--modulus", type=int, default=4, help="the ring Z/m (default 4)")
    common.add_argument("--module", help="cyclic orders like 2,4 or a JSON file")
    common.add_argument("--coeff", default="id", help="id or tensor:B with B given as orders")
    common.add_argument("--method", action="append", choices=METHODS, help="resolution method (repeatable)")
    common.add_argument("--degree", type=int, default=1)
    common.add_argument("--max-enumeration", type=int, help="element enumeration guard")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="resolvent", description="Comonadic homology of modules over Z/m.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("homology", parents=[common], help="H_n(X, E) by one method")
    sub.add_parser("tor", parents=[common], help="Tor_n(B, X) from the chain-complex oracle (n = --degree)")
    cmp = sub.add_parser("compare", parents=[common], help="compare methods for degrees 1..n")
    cmp.add_argument("--timing", action="store_true", help="add per-cell milliseconds to the report")
    cmp.add_argument("--no-maps", action="store_true", help="skip building comparison maps")
    nat = sub.add_parser("naturality", parents=[common], help="naturality square for a map X -> Y")
    nat.add_argument("--target", help="module Y (default X)")
    nat.add_argument("--map", help="matrix of f: X -> Y, rows ';'-separated (default identity)")
    ver = sub.add_parser("verify", parents=[common], help="run the seeded property suites")
    ver.add_argument("--scale", type=int, default=1)
    sub.add_parser("resolve", parents=[common], help="emit a resolution truncated at --degree as JSON")
    return p


def _emit(args, payload: dict, text: str):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _methods(args, default):
    return args.method or default


def _run(args) -> int:
    m = args.modulus
    if m < 2:
        raise BadInput("modulus must be at least 2")
    cmd = args.command
    from . import workbench as wb

    if cmd == "verify":
        rep = wb.run_suites(args.seed, args.scale)
        lines = [f"{name}: {r['passed']}/{r['total']}" for name, r in rep["suites"].items()]
        _emit(args, rep, "\n".join(lines + ["passed" if rep["passed"] else "FAILED"]))
        return EXIT_OK if rep["passed"] else EXIT_FAILED

    x = parse_module(args.module, m)
    try:
        e = wb.coefficients(args.coeff, m)
    except ValueError as err:
        raise BadInput(str(err)) from err

    if cmd == "homology":
        (method,) = _methods(args, ["pointed-free"])[:1]
        val = wb.homology(x, e, method, args.degree)
        _emit(args, {"method": method, "degree": args.degree, "value": str(val), "factors": list(val.factors)}, str(val))
        return EXIT_OK
    if cmd == "tor":
        if args.degree < 0:
            raise BadInput("Tor degree must be non-negative")
        val = wb.tor_oracle(wb.coefficient_module(e, m), x, args.degree)
        _emit(args, {"degree": args.degree, "value": str(val), "factors": list(val.factors)}, str(val))
        return EXIT_OK
    if cmd == "compare":
        methods = _methods(args, ["pointed-free", "tv-min", "oracle"])
        rep = wb.compare_methods(x, e, methods, args.degree, comparison_maps=not args.no_maps, timing=args.timing)
        rows = []
        for c in rep["cells"]:
            rows.append(f"{c['method']:>13}  H_{c['degree']}  {c.get('value', 'infeasible')}")
        _emit(args, rep, "\n".join(rows + [f"verdict: {rep['verdict']}"]))
        return EXIT_OK if rep["verdict"] == "isomorphic" else EXIT_FAILED
    if cmd == "naturality":
        y = parse_module(args.target, m) if args.target else x
        mat = parse_matrix(args.map) if args.map else np.eye(x.rank, dtype=np.int64)
        if mat.shape != (y.rank, x.rank):
            raise BadInput(f"map must be a {y.rank}x{x.rank} matrix")
        f = ModuleMap(x, y, mat)
        kinds = _methods(args, ["set-free", "pointed-free"])
        if len(kinds) != 2 or "oracle" in kinds:
            raise BadInput("naturality needs exactly two resolution methods")
        ok = wb.naturality_check(f, e, kinds[0], kinds[1], args.degree)
        _emit(args, {"degree": args.degree, "methods": kinds, "commutes": ok}, "commutes" if ok else "does not commute")
        return EXIT_OK if ok else EXIT_FAILED
    if cmd == "resolve":
        from .comparison import resolution

        (method,) = _methods(args, ["pointed-free"])[:1]
        if method == "oracle":
            raise BadInput("the oracle does not produce a simplicial resolution")
        res = resolution(method, x, args.degree)
        print(json.dumps(res.to_json(), sort_keys=True))
        return EXIT_OK
    raise BadInput(f"unknown command {cmd}")


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_BAD_INPUT
    try:
        if args.max_enumeration is not None:
            if args.max_enumeration < 1:
                raise BadInput("--max-enumeration must be positive")
            with max_enumeration(args.max_enumeration):
                return _run(args)
        return _run(args)
    except (EnumerationTooLarge, TruncationTooShallow) as err:
        return _fail(args, EXIT_INFEASIBLE, "infeasible", err)
    except (BadInput, ResolventError, ValueError) as err:
        return _fail(args, EXIT_BAD_INPUT, "bad input", err)


def _fail(args, code: int, kind: str, err: Exception) -> int:
    if getattr(args, "format", "text") == "json":
        print(json.dumps({"error": kind, "type": type(err).__name__, "message": str(err), "exit": code}))
    else:
        print(f"error ({kind}): {err}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
