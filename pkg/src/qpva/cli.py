"""Command-line front end.

Exit codes: 0 success / verdict true, 1 verdict false, 2 parse error,
3 precondition or configuration error, 4 numeric guard.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from . import finite as fin
from . import flows, geometry
from . import presets as presets_mod
from .algebra import Context, DiffPoly, ParamPoly
from .errors import ParseError, PreconditionError, QPVAError
from .frontend import (parse, parse_param, parse_table, print_canonical, print_lambda, print_lambda_mu,
                       print_parampoly, to_json)
from .lambdas import (HamOperator, LambdaMuPoly, LambdaPoly, RMatrix, deform_bracket, jacobi_check, master_bracket,
                      operator_to_density, skew_check)
from .schouten import constraint_ideal, is_hamiltonian

EXIT_OK, EXIT_FALSE, EXIT_PARSE, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 1, 2, 3, 4


# ---------------------------------------------------------------- context and inputs
def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"cannot read config {path}: {exc}") from None


def resolve(args):
    """Merge preset, config file and flags into (context, data dict)."""
    data = {}
    preset = getattr(args, "preset", None)
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    preset = cfg.get("preset", preset) if preset is None else preset
    if preset:
        try:
            p = presets_mod.get(preset)
        except KeyError as exc:
            raise PreconditionError(str(exc.args[0])) from None
        data.update({"fields": list(p.fields), "params": list(p.params),
                     "laurent": list(p.laurent) if p.laurent else None,
                     "density": p.density, "table": [list(r) for r in p.table] if p.table else None,
                     "chart": p.name, **p.extra})
    data.update({k: v for k, v in cfg.items() if k != "preset"})
    for key in ("fields", "params"):
        v = getattr(args, key, None)
        if v:
            data[key] = [s.strip() for s in v.split(",") if s.strip()]
    for key in ("density", "table"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    fields = data.get("fields") or ["u"]
    params = list(data.get("params") or [])
    ctx = Context(tuple(fields), tuple(data["thetas"]) if data.get("thetas") else None, tuple(params),
                  tuple(data["laurent"]) if data.get("laurent") else None, data.get("chart", "U"))
    data["preset"] = preset
    return ctx, data


def split_table(text):
    """'a,b;c,d' or a JSON nested list; a single entry for N = 1."""
    if isinstance(text, list):
        return text
    t = text.strip()
    if t.startswith("["):
        try:
            return json.loads(t)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad table JSON: {exc}", 0, t) from None
    return [[e.strip() for e in row.split(",")] for row in t.split(";")]


def table_of(ctx, data):
    if not data.get("table"):
        raise PreconditionError("no bracket table given (use --table, --config or --preset)")
    return parse_table(split_table(data["table"]), ctx)


def density_of(ctx, data):
    if data.get("density"):
        return parse(data["density"], ctx)
    if data.get("table"):
        return operator_to_density(table_of(ctx, data))
    raise PreconditionError("no density given (use --density, --config or --preset)")


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def rmatrix_of(form, n, params=()):
    """Named forms ('symbolic', 'identity', 'type1', 'type3', 'type3-normalized'), rows 'a,b;c,d',
    or a nested JSON list whose entries are strings or {order: string} maps."""
    if isinstance(form, str):
        s = form.strip()
        named = _named_rmatrix(s, n)
        if named is not None:
            return named
        rows = split_table(s)
    else:
        rows = form
    names = set(params)
    for row in rows:
        for e in row:
            for text in (e.values() if isinstance(e, dict) else [e]):
                names.update(_NAME.findall(str(text)))
    names = sorted(names)
    out = []
    for row in rows:
        r = []
        for e in row:
            if isinstance(e, dict):
                r.append({int(k): parse_param(str(v), names) for k, v in e.items()})
            else:
                r.append({0: parse_param(str(e), names)})
        out.append(r)
    R = RMatrix(out)
    if R.n != n:
        raise PreconditionError(f"R-matrix is {R.n}x{R.n}, expected {n}x{n}")
    return R


def _named_rmatrix(s, n):
    sym = ParamPoly.symbol
    z = ParamPoly()
    if s == "symbolic":
        return RMatrix.symbolic(n, "R")
    if s == "identity":
        return RMatrix.identity(n)
    if n == 3 and s == "type1":
        return RMatrix.constant([[sym("a"), z, z], [z, sym("b"), z], [z, z, sym("a")]])
    if n == 3 and s == "type3":
        return RMatrix.constant([[sym("R33"), z, sym("R13")], [z, sym("R22"), z], [sym("R31"), z, sym("R33")]])
    if n == 3 and s == "type3-normalized":
        return RMatrix.constant([[sym("R33"), z, 1], [z, sym("R33"), z], [1, z, sym("R33")]])
    return None


def finite_poisson_of(ctx, data):
    if not data.get("table"):
        raise PreconditionError("no bivector given (use --table, --config or --preset)")
    rows = split_table(data["table"])
    if len(rows) != ctx.N or any(len(r) != ctx.N for r in rows):
        raise ParseError(f"bivector must be {ctx.N}x{ctx.N}", 0, str(data["table"]))
    return fin.FinitePoisson(ctx, [[parse(e, ctx) for e in row] for row in rows])


def expr_of(text, ctx, default=None):
    if text is None:
        if default is None:
            raise PreconditionError("missing expression")
        text = default
    return parse(text, ctx)


# ---------------------------------------------------------------- commands
def cmd_bracket(args):
    ctx, data = resolve(args)
    H = table_of(ctx, data)
    a, b = expr_of(args.left, ctx, "u" if ctx.N == 1 else None), expr_of(args.right, ctx, "u" if ctx.N == 1 else None)
    lp = master_bracket(H, a, b)
    return {"left": a, "right": b, "bracket": lp}, True


def cmd_skew(args):
    ctx, data = resolve(args)
    H = table_of(ctx, data)
    res = skew_check(H)
    ok = all(not r for row in res for r in row)
    return {"operator": H, "skew": ok, "residual": [[r for r in row] for row in res]}, ok


def cmd_jacobi(args):
    ctx, data = resolve(args)
    H = table_of(ctx, data)
    res = jacobi_check(H)
    nz = {f"{a},{b},{c}": r for (a, b, c), r in sorted(res.items()) if r}
    ok = not nz
    return {"operator": H, "jacobi": ok, "nonzero_residuals": nz}, ok


def cmd_hamiltonian(args):
    ctx, data = resolve(args)
    P = density_of(ctx, data)
    v = is_hamiltonian(P)
    return {"density": P, "hamiltonian": v.hamiltonian, "operator": v.operator,
            "residual_density": v.residual_density,
            "witness": {f"{k[0]}{k[1]}": w for k, w in sorted(v.witness.items())}}, v.hamiltonian


def cmd_constraints(args):
    ctx, data = resolve(args)
    if args.symbolic_r or data.get("preset") == "sl3-subregular":
        H = finite_poisson_of(ctx, data)
        R = rmatrix_of(args.rmatrix or "symbolic", ctx.N)
        P = fin.arc_lift_density(fin.r_deform(H, R))
        gens = constraint_ideal(P)
        rep = {"generators": gens, "count": len(gens)}
        if ctx.N == 3 and data.get("preset") == "sl3-subregular":
            rep["reference"] = fin.sl3_quadrics()
            rep["span_comparison"] = fin.span_equal(gens, fin.sl3_quadrics())
            return rep, rep["span_comparison"]["equal"]
        return rep, True
    P = density_of(ctx, data)
    gens = constraint_ideal(P)
    return {"density": P, "generators": gens, "count": len(gens)}, True


def cmd_deform(args):
    ctx, data = resolve(args)
    H = table_of(ctx, data)
    R = rmatrix_of(args.rmatrix or data.get("rmatrix") or "identity", ctx.N)
    HR = deform_bracket(H, R)
    rep = {"operator": H, "deformed": HR}
    ok = True
    if args.check:
        v = is_hamiltonian(operator_to_density(HR))
        rep["hamiltonian"] = v.hamiltonian
        rep["witness"] = {f"{k[0]}{k[1]}": w for k, w in sorted(v.witness.items())}
        ok = v.hamiltonian
    return rep, ok


def _maps(ctx, data, name):
    if data.get("maps"):
        out = []
        for m in data["maps"]:
            t = m["target"]
            tgt = Context(tuple(t["fields"]), tuple(t["thetas"]) if t.get("thetas") else None, ctx.params,
                          tuple(t["laurent"]) if t.get("laurent") else None, t.get("chart", "V"))
            out.append(geometry.ChartMap(ctx, tgt, [parse(e, tgt) for e in m["even"]],
                                         [[parse(e, tgt) for e in r] for r in m["odd"]], m.get("name", "")))
        return [m for m in out if not name or m.name == name] or out
    if ctx.N != 1:
        raise PreconditionError("only the projective-line maps are built in; give maps in a config file")
    cu, cv, to_v, to_u = geometry.cp1_charts(ctx.params)
    return [to_u] if name == "v->u" else [to_v]


def cmd_glue(args):
    ctx, data = resolve(args)
    if ctx.N == 1 and not data.get("maps"):
        ctx = Context(ctx.fields, ctx.thetas, ctx.params, (True,), "U1")
    P = density_of(ctx, data)
    out, ok = [], True
    for m in _maps(ctx, data, args.map):
        T = geometry.transform_density(P, m)
        reg = geometry.regular_at_origin(T)
        ok = ok and reg
        out.append({"map": m.name, "transformed": T, "operator": geometry.normalize2(T)
                    if T.theta_degrees() == {2} else None, "regular": reg})
    return {"density": P, "charts": out, "regular": ok}, ok


def cmd_classify(args):
    ctx, data = resolve(args)
    if args.order != 3:
        raise PreconditionError("the built-in ansatz is the order-3 scalar bracket")
    bound = args.bound if args.bound is not None else data.get("bound", 4)
    C = geometry.classify_global(bound=bound)
    cu, cv, to_v, to_u = geometry.cp1_charts(("c",))
    cands = {}
    for k in range(args.max_q + 1):
        r = geometry.check_candidate(geometry.q_family_operator(k, cu), [to_v])
        cands[f"q=u^{k}"] = r
    vir = geometry.check_candidate(geometry.scalar_ansatz(cu.u() * 2, cu.param("c")), [to_v])
    rep = {
        "classification": C,
        "q_family": {k: {"glues": v.glues, "regular": v.regular["u->v"], "jacobi": v.jacobi}
                     for k, v in cands.items()},
        "virasoro_case_a": {
            "skew": vir.skew, "jacobi": vir.jacobi,
            "regularity_reading": vir.regular["u->v"],
            "form_preservation_reading": vir.form_preserved["u->v"],
            "transformed": vir.transformed["u->v"],
            "note": "under the Jacobian θ-rule the λ³ coefficient becomes (c/12) v^4, so the transformed "
                    "bracket is regular but not of the constant-c form; uniqueness is reported under the "
                    "regularity reading only",
        },
    }
    return rep, C.c0_dimension == 5


def cmd_sieve(args):
    mons = geometry.sieve_enumerate(args.bound)
    return {"bound": args.bound, "count": len(mons),
            "monomials": [print_canonical(geometry.sieve_monomial(m)) for m in mons]}, True


def cmd_finite(args):
    ctx, data = resolve(args)
    H = finite_poisson_of(ctx, data)
    act = args.action
    if act == "schouten":
        t = fin.sn_bracket(H.bivector(), H.bivector())
        return {"bivector": H.bivector(), "self_bracket": t, "poisson": not t}, not t
    default = "symbolic"
    if ctx.N == 3 and act != "quadrics":
        # the commuting pair S, J needs Δ = 0 and R13 = R31, i.e. the normalized form
        default = "type3-normalized" if act == "commute" else "type3"
    R = rmatrix_of(args.rmatrix or data.get("rmatrix") or default, ctx.N)
    if act == "rdeform":
        Pi = fin.r_deform(H, R)
        return {"rmatrix": _rm_report(R), "matrix": Pi.matrix, "bivector": Pi.bivector(),
                "poisson": Pi.is_poisson()}, True
    if act == "quadrics":
        q = fin.constraint_quadrics(H, R)
        rep = {"rmatrix": _rm_report(R), "quadrics": q, "count": len(q)}
        if ctx.N == 3 and data.get("preset") == "sl3-subregular":
            rep["span_comparison"] = fin.span_equal(q, fin.sl3_quadrics())
            return rep, rep["span_comparison"]["equal"]
        return rep, True
    if act == "types":
        rep = fin.check_type(R, H)
        return {"rmatrix": _rm_report(R), **rep.to_report()}, rep.valid
    Pi = fin.r_deform(H, R)
    if act == "vf":
        h = expr_of(args.h, ctx, data.get("S"))
        field = fin.hamiltonian_vf(Pi, h.with_context(Pi.ctx))
        return {"rmatrix": _rm_report(R), "hamiltonian": h, "field": field}, True
    if act == "commute":
        f = expr_of(args.f, ctx, data.get("S"))
        g = expr_of(args.g, ctx, data.get("J"))
        v = fin.poisson_commute(Pi, f.with_context(Pi.ctx), g.with_context(Pi.ctx))
        return {"rmatrix": _rm_report(R), "f": f, "g": g, "bracket": v, "commute": not v}, not v
    if act == "pencil":
        ok = fin.pencil_check(H, Pi)
        return {"rmatrix": _rm_report(R), "compatible": ok, "deformed_poisson": Pi.is_poisson()}, ok
    if act == "mc":
        r = fin.finite_mc_residual(H, Pi)
        return {"rmatrix": _rm_report(R), "residual": r, "zero": not r}, not r
    if act == "lift":
        A = fin.arc_lift(Pi)
        v = is_hamiltonian(operator_to_density(A, check=False))
        return {"operator": A, "hamiltonian": v.hamiltonian, "finite_poisson": Pi.is_poisson()}, v.hamiltonian
    raise PreconditionError(f"unknown finite action {act!r}")


def _rm_report(R):
    return [[{str(s): c for s, c in sorted(e.items())} for e in row] for row in R.entries]


def _ic(text):
    try:
        return tuple(complex(s.strip().replace("i", "j")) for s in text.split(","))
    except ValueError:
        raise ParseError("initial condition must be three comma-separated numbers", 0, text) from None


def _grid(text):
    if text is None:
        return flows.DEFAULT_GRID
    try:
        vals = [complex(s.strip().replace("i", "j")) for s in text.split(",")]
    except ValueError:
        raise ParseError("grid must be comma-separated numbers", 0, text) from None
    return tuple(v.real if v.imag == 0 else v for v in vals)


def cmd_flow(args):
    ic = _ic(args.ic)
    if len(ic) != 3:
        raise ParseError("initial condition needs three entries", 0, args.ic)
    params = None
    if args.delta is not None or args.r13 is not None or args.r31 is not None:
        params = {"Delta": args.delta or 0.0, "R13": 1.0 if args.r13 is None else args.r13,
                  "R31": 1.0 if args.r31 is None else args.r31}
    traj = flows.integrate(ic, args.T, args.dt, args.method, 1, params)
    guard = None if args.no_guard else tuple(float(x) for x in args.guard.split(","))
    grid = _grid(args.grid)
    rep = {"trajectory": traj}
    residuals = {}
    ok = True
    act = args.action
    if act == "run":
        d = traj.drift()
        rep["drift"] = d
        ok = max(d.values()) <= args.tol
    elif act == "lax":
        r = flows.lax_residual(traj, grid, guard)
        residuals["lax"] = r
        rep["lax"] = r
        ok = r.max_residual <= args.tol
    elif act == "spectral":
        r = flows.spectral_check(traj, grid, guard)
        residuals["spectral"] = r
        rep["spectral"] = r
        ok = r.max_residual <= args.tol
    elif act == "hyper":
        r = flows.hyperelliptic_residual(traj)
        residuals["hyper"] = r
        rep["hyper"] = r
        rep["curve_residual"] = flows.curve_residual(traj)
        ok = r.max_residual <= args.tol
    rep["tolerance"] = args.tol
    rep["pass"] = ok
    if args.csv:
        sub = _subsample(traj, residuals, args.stride)
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(flows.trajectory_csv(*sub))
        rep["csv"] = args.csv
    if args.figures:
        from .plotting import flow_figures

        rep["figures"] = flow_figures(traj, args.figures, residuals, prefix=f"flow_{act}")
    return rep, ok


def _subsample(traj, residuals, stride):
    if stride <= 1:
        return traj, residuals
    idx = list(range(0, len(traj.t), stride))
    t = flows.Trajectory(traj.t[idx], traj.u[idx], traj.dt, traj.method, traj.params)
    return t, residuals


FLOW_TOL = {"run": 1e-8, "lax": 1e-5, "spectral": 1e-10, "hyper": 1e-8}


# ---------------------------------------------------------------- output
def _scalar(obj):
    if isinstance(obj, DiffPoly):
        return print_canonical(obj)
    if isinstance(obj, ParamPoly):
        return print_parampoly(obj)
    if isinstance(obj, LambdaPoly):
        return print_lambda(obj)
    if isinstance(obj, LambdaMuPoly):
        return print_lambda_mu(obj)
    if isinstance(obj, complex):
        return repr(obj.real) if obj.imag == 0 else repr(obj)
    return str(obj)


def _lines(obj):
    """Indented key/value lines; nested containers open a block under their key."""
    if hasattr(obj, "to_report"):
        obj = obj.to_report()
    if isinstance(obj, HamOperator):
        return str(obj).splitlines()
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            sub = _lines(v)
            if len(sub) == 1 and not (isinstance(v, (dict, list, tuple)) and v):
                out.append(f"{k}: {sub[0]}")
            else:
                out.append(f"{k}:")
                out.extend("  " + s for s in sub)
        return out or ["{}"]
    if isinstance(obj, (list, tuple)):
        if not obj:
            return ["[]"]
        out = []
        for v in obj:
            sub = _lines(v)
            out.append("- " + sub[0])
            out.extend("  " + s for s in sub[1:])
        return out
    return _scalar(obj).splitlines() or [""]


def render_text(obj):
    return "\n".join(_lines(obj))


def emit(report, command, fmt, out):
    if fmt == "json":
        data = to_json(report, command)
    else:
        data = (render_text(report) + "\n").encode("utf-8")
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# ---------------------------------------------------------------- parser
def build_parser():
    ap = argparse.ArgumentParser(prog="qpva", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    ctxp = argparse.ArgumentParser(add_help=False)
    ctxp.add_argument("--preset", help="heisenberg, virasoro, cp1, sl3-subregular")
    ctxp.add_argument("--config", help="JSON context file")
    ctxp.add_argument("--fields", help="comma-separated field names")
    ctxp.add_argument("--params", help="comma-separated parameter names")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bracket", parents=[common, ctxp], help="λ-bracket by the Master Formula")
    p.add_argument("--table")
    p.add_argument("--left")
    p.add_argument("--right")
    p.set_defaults(func=cmd_bracket)
    for name, fn in (("skew", cmd_skew), ("jacobi", cmd_jacobi)):
        p = sub.add_parser(name, parents=[common, ctxp], help=f"{name} residuals of a bracket table")
        p.add_argument("--table")
        p.set_defaults(func=fn)
    p = sub.add_parser("hamiltonian", parents=[common, ctxp], help="decide [P, P] = 0")
    p.add_argument("--density")
    p.add_argument("--table")
    p.set_defaults(func=cmd_hamiltonian)
    p = sub.add_parser("constraints", parents=[common, ctxp], help="parameter constraints for [P, P] = 0")
    p.add_argument("--density")
    p.add_argument("--table")
    p.add_argument("--symbolic-r", action="store_true", help="deform a finite bivector by a symbolic R first")
    p.add_argument("--rmatrix")
    p.set_defaults(func=cmd_constraints)
    p = sub.add_parser("deform", parents=[common, ctxp], help="R-deformed bracket table")
    p.add_argument("--table")
    p.add_argument("--rmatrix")
    p.add_argument("--check", action="store_true", help="also decide the Hamiltonian property")
    p.set_defaults(func=cmd_deform)
    p = sub.add_parser("glue", parents=[common, ctxp], help="transform a density along chart maps")
    p.add_argument("--density")
    p.add_argument("--table")
    p.add_argument("--map", help="map name (default: u->v)")
    p.set_defaults(func=cmd_glue)
    p = sub.add_parser("classify", parents=[common, ctxp], help="global scalar brackets on the projective line")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--bound", type=int)
    p.add_argument("--max-q", type=int, default=6)
    p.set_defaults(func=cmd_classify)
    p = sub.add_parser("sieve", parents=[common], help="monomials with Σ(k+1)a_k ≤ B")
    p.add_argument("--bound", type=int, required=True)
    p.set_defaults(func=cmd_sieve)
    p = sub.add_parser("finite", parents=[common, ctxp], help="finite-dimensional polyvector checks")
    p.add_argument("action", choices=("schouten", "rdeform", "quadrics", "types", "vf", "commute", "pencil", "mc",
                                      "lift"))
    p.add_argument("--table", help="bivector matrix {u_i, u_j}")
    p.add_argument("--rmatrix", help="symbolic, identity, type1, type3, type3-normalized, or rows 'a,b;c,d'")
    p.add_argument("--h")
    p.add_argument("--f")
    p.add_argument("--g")
    p.set_defaults(func=cmd_finite)
    p = sub.add_parser("flow", parents=[common], help="numerics for the deformed system")
    p.add_argument("action", choices=("run", "lax", "spectral", "hyper"))
    p.add_argument("--ic", default="1,1,0.5")
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
    p.add_argument("--grid", help="comma-separated λ values (j or i for imaginary parts)")
    p.add_argument("--guard", default="1e-6,1e-6", help="thresholds for |x-1| and |y|")
    p.add_argument("--no-guard", action="store_true")
    p.add_argument("--tol", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--r13", type=float)
    p.add_argument("--r31", type=float)
    p.add_argument("--csv", help="write trajectory samples and residuals as CSV")
    p.add_argument("--stride", type=int, default=1, help="CSV sample stride")
    p.add_argument("--figures", help="directory for PNG figures")
    p.set_defaults(func=cmd_flow)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "flow" and args.tol is None:
        args.tol = FLOW_TOL[args.action]
    try:
        report, ok = args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except QPVAError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    report = {"verdict": bool(ok), **report}
    emit(report, args.command if args.command not in ("finite", "flow") else f"{args.command} {args.action}",
         args.format, args.out)
    return EXIT_OK if ok else EXIT_FALSE


if __name__ == "__main__":
    sys.exit(main())
