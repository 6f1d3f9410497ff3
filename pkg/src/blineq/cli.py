"""Command-line front end: ``blineq {validate,solve,polytope,certify,generate,verify}``.

Exit codes: 0 success / inequality holds, 1 violation or infinite constant,
2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import finiteness, geoapps, geometric, verify
from .datum import BLDatum, GaussianInput, as_exponent, validate
from .io import dumps_datum, read_datum, to_jsonable, write_text
from .matcore import Subspace, ValidationError, orthocomplement
from .scaling import ScalingConfig, solve_bl

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID = 0, 1, 2


def _varnames(n):
    return list("xyz")[:n] if n <= 3 else [f"x{j + 1}" for j in range(n)]


def _coef(c):
    q = Fraction(c).limit_denominator(1000)
    return str(q) if abs(float(q) - c) < 1e-9 else f"{c:.6g}"


def _linear(row, names):
    terms = []
    for c, v in zip(row, names):
        if c == 0:
            continue
        mag = abs(c)
        body = v if abs(mag - 1) < 1e-12 else f"{_coef(mag)}{v}"
        terms.append(("- " if c < 0 else "+ ") + body)
    s = " ".join(terms)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


def describe_subspace(V: Subspace) -> str:
    """``{y = 0}``-style description by defining equations."""
    n = V.ambient_dim
    if V.dim == n:
        return f"R^{n}"
    names = _varnames(n)
    eqs = [f"{_linear(row, names)} = 0" for row in orthocomplement(V).echelon()]
    return "{" + ", ".join(eqs) + "}"


def _frac(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _emit(args, payload: dict, text: str):
    if getattr(args, "json", False):
        sys.stdout.write(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)


def _input_doc(d: BLDatum):
    return json.loads(dumps_datum(d))


def _args_doc(args):
    return {k: v for k, v in vars(args).items() if k not in ("func", "json")}


def cmd_validate(args) -> int:
    d = read_datum(args.path)
    rep = validate(d)
    lines = [f"n = {d.n}, k = {d.k}, dims = {list(d.dims)}",
             f"exponents = ({', '.join(_frac(q) for q in d.exponents)})",
             f"scaling residual = {rep.scaling_residual:.3g}",
             "valid" if rep.ok else "invalid"]
    lines += [f"  {m}" for m in rep.messages]
    _emit(args, {"input": _input_doc(d), "valid": rep.ok, "messages": rep.messages,
                 "surjective": rep.surjective, "trivial_common_kernel": rep.trivial_common_kernel,
                 "scaling_residual": rep.scaling_residual}, "\n".join(lines) + "\n")
    return EXIT_OK if rep.ok else EXIT_INVALID


def _certificate_lines(cert):
    return [f"witness: {describe_subspace(cert.V)}",
            f"dim V = {cert.dimV}, dim B_i V = {list(cert.image_dims)}",
            f"slack: {_frac(cert.slack)}"]


def _cert_doc(cert):
    return {"witness": describe_subspace(cert.V), "basis": cert.V.echelon(), "dim": cert.dimV,
            "image_dims": list(cert.image_dims), "slack": _frac(cert.slack)}


def cmd_solve(args) -> int:
    d = read_datum(args.path)
    _require_valid(d)
    cfg = ScalingConfig.from_accuracy(args.eps, d.n, d.k, max_iters=args.max_iters)
    res = solve_bl(d, cfg)
    if args.trace:
        write_text(res.trace.to_tsv(), args.trace)
    payload = {"input": _input_doc(d), "args": _args_doc(args), "status": res.status,
               "iterations": len(res.trace)}
    if res.converged:
        payload["estimate"] = res.estimate
        payload["rbl"] = verify.rbl_from_bl(res.estimate)
        _emit(args, payload, f"status: Converged\nestimate: {res.estimate!r}\n"
                             f"iterations: {len(res.trace)}\n")
        return EXIT_OK
    cert = finiteness.find_violation(d, budget=64, hints=res.hints, seed=args.seed)
    lines = [f"status: {res.status}", f"iterations: {len(res.trace)}"]
    if cert is not None:
        lines.append("BL = infinity")
        lines += _certificate_lines(cert)
        payload["certificate"] = _cert_doc(cert)
    else:
        lines.append("no violating subspace found among the candidates; result inconclusive")
        payload["certificate"] = None
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_VIOLATION


def cmd_polytope(args) -> int:
    d = read_datum(args.path)
    _require_structure(d)
    P = finiteness.build_polytope(d, budget=args.budget, vertices=args.vertices, seed=args.seed)
    payload = {"input": _input_doc(d), "args": _args_doc(args), "dims": list(P.dims),
               "inequalities": [{"coeffs": list(c.coeffs), "rhs": c.rhs} for c in P.inequalities],
               "vertices": None if P.vertices is None else [[_frac(q) for q in v] for v in P.vertices],
               "notes": P.notes}
    _emit(args, payload, P.to_text())
    return EXIT_OK


def cmd_certify(args) -> int:
    d = read_datum(args.path)
    _require_structure(d)
    p = tuple(as_exponent(x) for x in args.p.split(",")) if args.p else d.exponents
    if len(p) != d.k:
        raise ValidationError(f"--p needs {d.k} values, got {len(p)}")
    if any(q <= 0 for q in p):
        raise ValidationError("exponents must be positive")
    payload = {"input": _input_doc(d), "args": _args_doc(args), "p": [_frac(q) for q in p]}
    gap = sum(q * m for q, m in zip(p, d.dims)) - d.n
    if gap != 0:
        payload.update(finite=False, scaling_gap=_frac(gap), certificate=None)
        _emit(args, payload, f"BL = infinity\nscaling condition fails: sum p_i n_i - n = {_frac(gap)}\n")
        return EXIT_VIOLATION
    cert = finiteness.find_violation(d, budget=args.budget, p=p, seed=args.seed)
    if cert is None:
        payload.update(finite=True, certificate=None, note=finiteness.COMPLETENESS_NOTE)
        _emit(args, payload, f"no violating subspace found (budget {args.budget})\n"
                             f"note: {finiteness.COMPLETENESS_NOTE}\n")
        return EXIT_OK
    payload.update(finite=False, certificate=_cert_doc(cert))
    _emit(args, payload, "\n".join(["BL = infinity"] + _certificate_lines(cert)) + "\n")
    return EXIT_VIOLATION


def _frame(shape, n, m):
    if shape == "polygon":
        return geometric.regular_polygon_frame(m)
    if shape == "simplex":
        return geometric.regular_simplex_frame(n)
    if shape == "cube":
        return geometric.cube_frame(n)
    return geometric.orthonormal_frame(n)


def _parse_sets(s):
    try:
        return tuple(frozenset(int(j) for j in part.split(",") if j.strip())
                     for part in s.split(";") if part.strip())
    except ValueError as exc:
        raise ValidationError(f"bad set list {s!r}; use e.g. '1,2;3,4'") from exc


def cmd_generate(args) -> int:
    kind = args.kind
    if kind == "frame":
        d = geometric.frame_to_datum(_frame(args.shape, args.n, args.m))
    elif kind == "simplex-lift":
        d = geometric.frame_to_datum(geometric.simplex_lift(_frame(args.shape, args.n, args.m)))
    elif kind == "cover":
        if not args.sets:
            raise ValidationError("cover needs --sets, e.g. '1,2;3,4;1,3;2,4'")
        d = geometric.cover_to_datum(geometric.UniformCover(args.n, _parse_sets(args.sets)))
    elif kind == "lw":
        d = geometric.loomis_whitney_datum(args.n)
    elif kind == "young":
        d = geometric.young_datum(tuple(args.p.split(",")) if args.p else ("2/3", "2/3", "2/3"))
    else:  # hoelder
        p = tuple(args.p.split(",")) if args.p else ("1/2", "1/2")
        d = geometric.hoelder_datum(args.n, p)
    write_text(dumps_datum(d), args.out)
    return EXIT_OK


def _verify_gaussian(args):
    d = read_datum(args.path)
    _require_valid(d)
    res = solve_bl(d, ScalingConfig.from_accuracy(1e-10, d.n, d.k))
    rng = np.random.default_rng(args.seed)
    ratios = []
    for _ in range(args.samples):
        As = []
        for m in d.dims:
            X = rng.standard_normal((m, m))
            As.append(X @ X.T + 0.1 * np.eye(m))
        ratios.append(verify.gaussian_two_sides(d, GaussianInput(tuple(As)))[2])
    worst = max(ratios)
    est = res.estimate if res.converged else math.inf
    holds = worst <= est * (1 + 1e-6)
    rows = [("max Gaussian ratio", f"{worst:.12g}"), ("BL estimate", f"{est:.12g}"),
            ("status", res.status), ("verdict", "holds" if holds else "fails")]
    payload = {"input": _input_doc(d), "args": _args_doc(args), "max_ratio": worst,
               "estimate": est, "status": res.status, "holds": holds}
    return payload, rows, holds


def _verify_quadrature(args):
    sides = [Fraction(x) for x in args.sides.split(",")]
    n = len(sides)
    if not 2 <= n <= verify.MAX_QUAD_DIM:
        raise ValidationError("quadrature check needs a box with 2 or 3 sides")
    box = geoapps.BoxBody.from_sides(sides)
    d = geometric.loomis_whitney_datum(n)
    fs = [verify.indicator_box([0] * (n - 1), [float(s) for j, s in enumerate(sides) if j != i])
          for i in range(n)]
    q = verify.quadrature_lhs(d, fs, ([0.0] * n, [float(s) for s in sides]), args.h)
    exact = float(box.volume())
    rhs = math.prod(float(box.projection_volume(set(range(1, n + 1)) - {j})) for j in range(1, n + 1))
    rhs = rhs ** (1 / (n - 1))
    holds = abs(q - exact) <= 0.02 * exact and q <= rhs * 1.02
    rows = [("quadrature LHS", f"{q:.12g}"), ("exact |K|", f"{exact:.12g}"),
            ("prod |P K|^(1/(n-1))", f"{rhs:.12g}"), ("verdict", "holds" if holds else "fails")]
    return {"args": _args_doc(args), "lhs": q, "exact": exact, "rhs": rhs, "holds": holds}, rows, holds


def _verify_barthe(args):
    d = read_datum(args.path)
    _require_valid(d)
    bodies = [verify.box_vertices([-0.5] * m, [0.5] * m) for m in d.dims]
    lhs = verify.barthe_indicator_lhs(d, bodies, args.h)
    res = solve_bl(d, ScalingConfig.from_accuracy(1e-10, d.n, d.k))
    rbl = verify.rbl_from_bl(res.estimate) if res.converged else 0.0
    holds = lhs >= rbl * (1 - 0.02)
    rows = [("volume of sum p_i B_i^T K_i", f"{lhs:.12g}"), ("RBL * prod |K_i|^p_i", f"{rbl:.12g}"),
            ("verdict", "holds" if holds else "fails")]
    payload = {"input": _input_doc(d), "args": _args_doc(args), "lhs": lhs, "rbl": rbl, "holds": holds}
    return payload, rows, holds


def cmd_verify(args) -> int:
    if args.kind == "geometry":
        checks = geoapps.geometry_report(args.n, args.seed)
        holds = all(c.verdict != "fails" for c in checks)
        if args.json:
            sys.stdout.write(json.dumps({"args": _args_doc(args), "checks": json.loads(geoapps.checks_to_json(checks))},
                                        indent=2, sort_keys=True) + "\n")
        else:
            sys.stdout.write(geoapps.format_table(checks))
        return EXIT_OK if holds else EXIT_VIOLATION
    payload, rows, holds = {"gaussian": _verify_gaussian, "quadrature": _verify_quadrature,
                            "barthe": _verify_barthe}[args.kind](args)
    w = max(len(r[0]) for r in rows)
    _emit(args, payload, "".join(f"{a.ljust(w)}  {b}\n" for a, b in rows))
    return EXIT_OK if holds else EXIT_VIOLATION


def _require_structure(d):
    rep = validate(d)
    if not (all(rep.surjective) and rep.trivial_common_kernel):
        raise ValidationError("; ".join(m for m in rep.messages if "scaling" not in m))


def _require_valid(d):
    rep = validate(d)
    if not rep.ok:
        raise ValidationError("; ".join(rep.messages))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blineq", description="Brascamp-Lieb constants, polytopes and checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help, path=True):
        p = sub.add_parser(name, help=help)
        if path:
            p.add_argument("path", nargs="?", default="-", help="datum file, '-' for stdin")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check a datum file")

    p = add("solve", cmd_solve, "approximate BL(B, p) by alternating normalization")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--trace", help="write the step trace as TSV ('-' for stdout)")
    p.add_argument("--seed", type=int, default=0)

    p = add("polytope", cmd_polytope, "H-representation of the finiteness polytope")
    p.add_argument("--vertices", action="store_true")
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)

    p = add("certify", cmd_certify, "search for a subspace certifying BL = infinity")
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--p", help="comma-separated exponents overriding the file's")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("generate", help="write a standard datum")
    p.add_argument("kind", choices=["frame", "cover", "simplex-lift", "young", "hoelder", "lw"])
    p.add_argument("--shape", choices=["polygon", "simplex", "cube", "orthonormal"], default="polygon")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=3, help="number of polygon directions")
    p.add_argument("--sets", help="cover sets, e.g. '1,2;3,4;1,3;2,4'")
    p.add_argument("--p", help="comma-separated exponents")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = add("verify", cmd_verify, "numerical checks of the inequality and related identities", path=False)
    p.add_argument("kind", choices=["gaussian", "quadrature", "barthe", "geometry"])
    p.add_argument("path", nargs="?", default="-", help="datum file for gaussian/barthe")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--sides", default="1,2,3", help="box sides for the quadrature check")
    p.add_argument("--h", type=float, default=0.05, help="grid step")
    p.add_argument("--n", type=int, default=3, help="dimension for the geometry report")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
