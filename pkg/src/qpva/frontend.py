"""Surface syntax: parser, canonical printer and JSON codec.

Grammar (see GRAMMAR.md)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" ["-"] INT)*
    atom   := INT | param | "L" | jet | "(" expr ")"
    jet    := NAME ("'"+ | "^(" INT ")")?

``NAME`` is a field or theta symbol of the context. ``L`` stands for λ and is
only accepted when ``allow_lambda`` is set (bracket-table entries).
"""

from __future__ import annotations

import json
import math
import re
from fractions import Fraction

from .algebra import Context, DiffPoly, ParamPoly
from .errors import ParseError, QPVAError
from .lambdas import HamOperator, LambdaMuPoly, LambdaPoly

SCHEMA_VERSION = "1.0"
LAMBDA_TOKEN = "L"

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\^\(\s*-?\d+\s*\))|('+)|(.))")


def _tokenize(text):
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - regex always matches a char
            raise ParseError("unexpected input", pos, text)
        start = m.start(m.lastindex)
        num, name, jet, primes, other = m.groups()
        if num is not None:
            toks.append(("int", int(num), start))
        elif name is not None:
            toks.append(("name", name, start))
        elif jet is not None:
            toks.append(("jet", int(jet[2:-1].strip()), start))
        elif primes is not None:
            toks.append(("primes", len(primes), start))
        elif other.strip():
            if other not in "+-*/^()":
                raise ParseError(f"unexpected character {other!r}", start, text)
            toks.append(("op", other, start))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


class _Parser:
    def __init__(self, text, ctx: Context, allow_lambda):
        self.text = text
        self.ctx = ctx
        self.allow_lambda = allow_lambda
        self.toks = _tokenize(text)
        self.i = 0
        self.fields = {n: i for i, n in enumerate(ctx.fields)}
        self.thetas = {n: i for i, n in enumerate(ctx.thetas)}

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, pos=None):
        if pos is None:
            pos = self.peek()[2]
        return ParseError(msg, pos, self.text)

    def expect_op(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            raise self.error(f"expected {op!r}", t[2])

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        v = self.expr()
        if self.peek()[0] != "end":
            raise self.error("unexpected token")
        return v

    def expr(self):
        v = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            w = self.term()
            v = v + w if op == "+" else v - w
        return v

    def term(self):
        v = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            w = self.unary()
            if op == "*":
                v = v * w
            else:
                c = _as_rational(w)
                if c is None or c == 0:
                    raise self.error("division only by nonzero rational constants", pos)
                v = v * (Fraction(1) / Fraction(c))
        return v

    def unary(self):
        t = self.peek()
        if t[0] == "op" and t[1] in "+-":
            self.take()
            v = self.unary()
            return -v if t[1] == "-" else v
        return self.power()

    def power(self):
        start = self.peek()[2]
        v = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            pos = self.take()[2]
            neg = False
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                neg = True
            t = self.take()
            if t[0] != "int":
                raise self.error("exponent must be an integer literal", t[2])
            n = -t[1] if neg else t[1]
            v = self._pow(v, n, start, pos)
        return v

    def _pow(self, v, n, start, pos):
        dp = _as_diffpoly(v)
        if dp is not None and dp and dp.theta_degrees() and all(d % 2 for d in dp.theta_degrees()):
            if n not in (0, 1):
                raise self.error(f"odd element raised to power {n}", start)
        if n >= 0:
            return v ** n
        if dp is None:
            raise self.error("negative power of a λ-expression", pos)
        try:
            return LambdaPoly.const(dp.inverse() ** (-n))
        except QPVAError as exc:
            raise self.error(f"negative power not allowed here ({exc})", start) from None

    def atom(self):
        t = self.take()
        kind, val, pos = t
        if kind == "int":
            return LambdaPoly.const(self.ctx.const(val))
        if kind == "op" and val == "(":
            v = self.expr()
            self.expect_op(")")
            return v
        if kind == "name":
            order = 0
            nt = self.peek()
            has_jet = nt[0] in ("primes", "jet")
            if has_jet:
                self.take()
                order = nt[1]
                if order < 0:
                    raise self.error("negative jet order", nt[2])
            if val in self.fields:
                return LambdaPoly.const(self.ctx.u(self.fields[val], order))
            if val in self.thetas:
                return LambdaPoly.const(self.ctx.theta(self.thetas[val], order))
            if has_jet:
                raise self.error(f"jet suffix on non-field symbol {val!r}", nt[2])
            if val in self.ctx.params:
                return LambdaPoly.const(self.ctx.param(val))
            if val == LAMBDA_TOKEN:
                if not self.allow_lambda:
                    raise self.error("λ (L) is only allowed in bracket-table entries", pos)
                return LambdaPoly.lam(self.ctx)
            raise self.error(f"unknown symbol {val!r}", pos)
        if kind == "end":
            raise self.error("unexpected end of input", pos)
        raise self.error(f"unexpected token {val!r}", pos)


def _as_diffpoly(v: LambdaPoly):
    if set(v.coeffs) <= {0}:
        return v.at_zero()
    return None


def _as_rational(v: LambdaPoly):
    dp = _as_diffpoly(v)
    if dp is None:
        return None
    if not dp:
        return 0
    if len(dp.terms) == 1:
        (k, c), = dp.terms.items()
        if k == ((), (), ()):
            return c
    return None


def parse(text: str, ctx: Context, allow_lambda=False):
    """Parse to a DiffPoly, or to a LambdaPoly when ``allow_lambda`` is set."""
    v = _Parser(text, ctx, allow_lambda).parse()
    if allow_lambda:
        return v
    return v.at_zero()


def parse_lambda(text, ctx):
    return parse(text, ctx, allow_lambda=True)


def parse_table(entries, ctx):
    """Bracket table from a string (N=1) or nested list of strings."""
    if isinstance(entries, str):
        entries = [[entries]]
    if len(entries) != ctx.N or any(len(r) != ctx.N for r in entries):
        raise ParseError(f"bracket table must be {ctx.N}x{ctx.N}")
    table = [[parse_lambda(e, ctx) for e in row] for row in entries]
    return HamOperator.from_table(ctx, table)


def parse_param(text, params):
    ctx = Context(fields=("__x",), thetas=("__th",), params=tuple(params))
    p = parse(text, ctx)
    if p.has_theta() or any(k[1] for k in p.terms):
        raise ParseError("parameter expression may not contain jet variables")
    return ParamPoly({k[2]: c for k, c in p.terms.items()})


# ---------------------------------------------------------------- printing
def jet_name(name, s):
    if s == 0:
        return name
    if s <= 2:
        return name + "'" * s
    return f"{name}^({s})"


def _pow_str(base, e):
    return base if e == 1 else f"{base}^{e}"


def _coeff_str(c):
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _term_str(c, factors):
    if not factors:
        return _coeff_str(c)
    body = "*".join(factors)
    if c == 1:
        return body
    if c == -1:
        return "-" + body
    return f"{_coeff_str(c)}*{body}"


def _join(terms):
    if not terms:
        return "0"
    out = terms[0]
    for t in terms[1:]:
        out += " - " + t[1:] if t.startswith("-") else " + " + t
    return out


def _key_factors(ctx, key):
    o, e, p = key
    f = [_pow_str(n, x) for n, x in p]
    f += [_pow_str(jet_name(ctx.fields[a], s), x) for (a, s), x in e]
    f += [jet_name(ctx.thetas[a], s) for a, s in o]
    return f


def print_canonical(x) -> str:
    if isinstance(x, DiffPoly):
        return _join([_term_str(c, _key_factors(x.ctx, k)) for k, c in x.sorted_items()])
    if isinstance(x, ParamPoly):
        return print_parampoly(x)
    if isinstance(x, LambdaPoly):
        return print_lambda(x)
    if isinstance(x, LambdaMuPoly):
        return print_lambda_mu(x)
    if isinstance(x, HamOperator):
        return print_operator(x)
    return str(x)


def print_parampoly(q: ParamPoly) -> str:
    return _join([_term_str(c, [_pow_str(n, x) for n, x in k]) for k, c in q.sorted_terms()])


def print_lambda(lp: LambdaPoly, var=LAMBDA_TOKEN) -> str:
    terms = []
    for k in sorted(lp.coeffs):
        lam = [] if k == 0 else [_pow_str(var, k)]
        for key, c in lp.coeffs[k].sorted_items():
            terms.append(_term_str(c, _key_factors(lp.ctx, key) + lam))
    return _join(terms)


def print_lambda_mu(lm: LambdaMuPoly) -> str:
    terms = []
    for (i, j) in sorted(lm.coeffs):
        lam = ([_pow_str("L", i)] if i else []) + ([_pow_str("M", j)] if j else [])
        for key, c in lm.coeffs[(i, j)].sorted_items():
            terms.append(_term_str(c, _key_factors(lm.ctx, key) + lam))
    return _join(terms)


def operator_lines(H: HamOperator):
    n = H.N
    return [f"H[{a}][{b}] = {print_lambda(H.symbol(a, b))}" for a in range(n) for b in range(n)]


def print_operator(H: HamOperator) -> str:
    return "\n".join(operator_lines(H))


# ---------------------------------------------------------------- JSON
def encode_context(ctx: Context):
    return {"fields": list(ctx.fields), "thetas": list(ctx.thetas), "params": list(ctx.params),
            "laurent": list(ctx.laurent), "chart": ctx.chart}


def decode_context(d):
    return Context(tuple(d["fields"]), tuple(d["thetas"]), tuple(d["params"]), tuple(d["laurent"]), d["chart"])


def _enc_terms(p: DiffPoly):
    return [{"coeff": _coeff_str(c), "odd": [list(g) for g in o], "even": [[a, s, x] for (a, s), x in e],
             "params": [[n, x] for n, x in par]} for (o, e, par), c in p.sorted_items()]


def encode(obj):
    """Convert a report object into JSON-ready data (exact rationals as "p/q")."""
    import numpy as np

    if isinstance(obj, DiffPoly):
        return {"kind": "diffpoly", "text": print_canonical(obj), "context": encode_context(obj.ctx),
                "terms": _enc_terms(obj)}
    if isinstance(obj, ParamPoly):
        return {"kind": "parampoly", "text": print_parampoly(obj),
                "terms": [{"coeff": _coeff_str(c), "params": [[n, x] for n, x in k]} for k, c in obj.sorted_terms()]}
    if isinstance(obj, LambdaPoly):
        return {"kind": "lambdapoly", "text": print_lambda(obj), "context": encode_context(obj.ctx),
                "coeffs": [{"power": k, "coeff": encode(obj.coeffs[k])} for k in sorted(obj.coeffs)]}
    if isinstance(obj, LambdaMuPoly):
        return {"kind": "lambdamupoly", "text": print_lambda_mu(obj), "context": encode_context(obj.ctx),
                "coeffs": [{"power": [i, j], "coeff": encode(obj.coeffs[(i, j)])} for i, j in sorted(obj.coeffs)]}
    if isinstance(obj, HamOperator):
        n = obj.N
        return {"kind": "operator", "N": n, "context": encode_context(obj.ctx), "text": operator_lines(obj),
                "entries": [[[{"order": s, "coeff": encode(obj.entries[a][b][s])} for s in sorted(obj.entries[a][b])]
                             for b in range(n)] for a in range(n)]}
    if isinstance(obj, Context):
        return encode_context(obj)
    if isinstance(obj, Fraction):
        return _coeff_str(obj)
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _float(obj.real), "im": _float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, np.ndarray):
        return [encode(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    if hasattr(obj, "to_report"):
        return encode(obj.to_report())
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _float(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _dec_diffpoly(d):
    ctx = decode_context(d["context"])
    terms = {}
    for t in d["terms"]:
        key = (tuple(tuple(g) for g in t["odd"]), tuple(((a, s), x) for a, s, x in t["even"]),
               tuple((n, x) for n, x in t["params"]))
        terms[key] = Fraction(t["coeff"])
    return DiffPoly(ctx, terms)


def decode(data):
    """Inverse of :func:`encode` for algebraic objects; plain data passes through."""
    if isinstance(data, list):
        return [decode(x) for x in data]
    if not isinstance(data, dict):
        return data
    kind = data.get("kind")
    if kind == "diffpoly":
        return _dec_diffpoly(data)
    if kind == "parampoly":
        return ParamPoly({tuple((n, x) for n, x in t["params"]): Fraction(t["coeff"]) for t in data["terms"]})
    if kind == "lambdapoly":
        ctx = decode_context(data["context"])
        return LambdaPoly(ctx, {c["power"]: _dec_diffpoly(c["coeff"]) for c in data["coeffs"]})
    if kind == "lambdamupoly":
        ctx = decode_context(data["context"])
        return LambdaMuPoly(ctx, {tuple(c["power"]): _dec_diffpoly(c["coeff"]) for c in data["coeffs"]})
    if kind == "operator":
        ctx = decode_context(data["context"])
        return HamOperator(ctx, [[{c["order"]: _dec_diffpoly(c["coeff"]) for c in cell} for cell in row]
                                 for row in data["entries"]])
    return {k: decode(v) for k, v in data.items()}


def to_json(report, command=None) -> bytes:
    payload = {"schema_version": SCHEMA_VERSION, "command": command, "result": encode(report)}
    return (json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def load_schema() -> dict:
    """The JSON schema shipped with the package for :func:`to_json` payloads."""
    from importlib.resources import files

    return json.loads(files(__package__).joinpath("report.schema.json").read_text("utf-8"))


def from_json(data):
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    if isinstance(data, str):
        data = json.loads(data)
    return decode(data["result"])
