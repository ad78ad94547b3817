"""Charts and transition maps on jets of T*[1]X, the sieve enumerator and the
two-chart gluing classifier for the projective line."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import sympy

from .algebra import Context, DiffPoly, ParamPoly, even, odd
from .errors import ContextError, ShapeError, SingularMapError
from .lambdas import HamOperator, is_jacobi, is_skew, jacobi_check, operator_to_density
from .variational import normalize2


@dataclass(frozen=True)
class Chart:
    name: str
    fields: tuple
    laurent: tuple = None
    params: tuple = ()

    def context(self, params=None):
        return Context(self.fields, None, tuple(params if params is not None else self.params),
                       self.laurent, self.name)


@dataclass
class ChartMap:
    """Transition from ``source`` to ``target`` coordinates.

    ``even_images[a]``: source field u^a as a target expression φ^a(v).
    ``odd_matrix[a][b]``: ∂v^b/∂u^a in target coordinates, so th^src_a = Σ_b T[a][b] th^tgt_b.
    """

    source: Context
    target: Context
    even_images: list
    odd_matrix: list
    name: str = ""
    inverse_map: "ChartMap" = field(default=None, repr=False)

    def __post_init__(self):
        n = self.source.N
        if len(self.even_images) != n or len(self.odd_matrix) != n or any(len(r) != self.target.N
                                                                          for r in self.odd_matrix):
            raise ShapeError("chart map shape does not match the charts")
        if self.target.N != n:
            raise ShapeError("charts of different dimension")
        for x in list(self.even_images) + [e for r in self.odd_matrix for e in r]:
            if x.ctx != self.target:
                raise ContextError("chart map data must live in the target context")
        # Jacobian check: Σ_b T[a][b] ∂φ^c/∂v^b = δ_ac
        for a in range(n):
            for c in range(n):
                s = self.target.zero()
                for b in range(n):
                    s = s + self.odd_matrix[a][b] * self.even_images[c].partial(even(b, 0))
                if s != self.target.const(1 if a == c else 0):
                    raise SingularMapError(f"odd transform is not the Jacobian of the even images at ({a},{c})")

    def images(self):
        n = self.source.N
        out = {even(a, 0): self.even_images[a] for a in range(n)}
        for a in range(n):
            th = self.target.zero()
            for b in range(n):
                th = th + self.odd_matrix[a][b] * self.target.theta(b)
            out[odd(a, 0)] = th
        return out


def transform_density(P: DiffPoly, m: ChartMap) -> DiffPoly:
    """Pull P back along the chart map: even jets by prolongation, θ by the Jacobian rule."""
    if P.ctx.fields != m.source.fields:
        raise ContextError("density does not live in the source chart")
    target = m.target
    missing = set(P.params_used()) - set(target.params)
    if missing:
        target = target.with_params(*sorted(missing))
        m = _rehome(m, target)
    return P.substitute(m.images(), target)


def transform_operator(H: HamOperator, m: ChartMap) -> HamOperator:
    """Normalized operator of the transformed density ½ th H th."""
    return normalize2(transform_density(operator_to_density(H, check=False), m))


def _rehome(m, target):
    return ChartMap(m.source, target, [x.with_context(target) for x in m.even_images],
                    [[x.with_context(target) for x in r] for r in m.odd_matrix], m.name)


def negative_exponents(p: DiffPoly):
    """Sorted list of (field, exponent) pairs carrying negative exponents in p."""
    out = set()
    for (_, e, _), _c in p.terms.items():
        for (f, s), x in e:
            if x < 0:
                out.add((f, x))
    return sorted(out)


def regular_at_origin(P) -> bool:
    """No negative power of an order-0 variable in the canonical form of P.

    Degree-2 densities are judged by their normalized operator, which removes the
    total-derivative ambiguity; other inputs are judged monomial by monomial.
    """
    if isinstance(P, HamOperator):
        return all(not negative_exponents(c) for row in P.entries for ent in row for c in ent.values())
    if P and P.theta_degrees() == {2}:
        return regular_at_origin(normalize2(P))
    return not negative_exponents(P)


# ---------------------------------------------------------------- the projective line
def cp1_charts(params=()):
    """Charts U1 (coordinate u) and U2 (coordinate v = 1/u) with maps both ways."""
    cu = Context(("u",), ("th",), tuple(params), (True,), "U1")
    cv = Context(("v",), ("th",), tuple(params), (True,), "U2")
    to_v = ChartMap(cu, cv, [cv.u(0, 0, -1)], [[-cv.u(0, 0, 2)]], "u->v")
    to_u = ChartMap(cv, cu, [cu.u(0, 0, -1)], [[-cu.u(0, 0, 2)]], "v->u")
    to_v.inverse_map, to_u.inverse_map = to_u, to_v
    return cu, cv, to_v, to_u


def sieve_enumerate(bound: int):
    """Monomials Π_k (u^(k))^{a_k} with Σ_k (k+1) a_k ≤ bound, as exponent tuples.

    Each entry is a tuple of ((k, a_k), ...) pairs; ordered by weight, then by
    the canonical monomial order.
    """
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    out = []

    def rec(k, left, acc):
        if k >= bound:
            out.append(tuple(acc))
            return
        for a in range(left // (k + 1) + 1):
            rec(k + 1, left - a * (k + 1), acc + ([(k, a)] if a else []))

    rec(0, bound, [])
    ctx = Context()
    polys = [(sum((k + 1) * a for k, a in m), sieve_monomial(m, ctx)) for m in out]
    order = sorted(range(len(out)), key=lambda i: (polys[i][0], next(iter(polys[i][1].terms))[1]))
    return [out[i] for i in order]


def sieve_monomial(exps, ctx=None) -> DiffPoly:
    ctx = ctx or Context()
    p = ctx.one()
    for k, a in exps:
        p = p * ctx.u(0, k, a)
    return p


def weight(exps):
    return sum((k + 1) * a for k, a in exps)


def scalar_ansatz(f: DiffPoly, c=0) -> HamOperator:
    """Scalar bracket {u_λ u} = ½ f' + f λ + (c/12) λ³."""
    ctx = f.ctx
    ent = {}
    if f:
        ent[0] = f.D() * Fraction(1, 2)
        ent[1] = f
    c = ctx.const(c) if not isinstance(c, DiffPoly) else c
    if c:
        ent[3] = c * Fraction(1, 12)
    return HamOperator(ctx, [[ent]])


@dataclass
class CandidateReport:
    skew: bool
    jacobi: bool
    regular: dict          # chart-map name -> verdict
    form_preserved: dict   # chart-map name -> transformed operator keeps the ½f'+fλ+(c/12)λ³ shape with constant c
    transformed: dict      # chart-map name -> HamOperator

    @property
    def glues(self):
        return self.skew and self.jacobi and all(self.regular.values())

    def to_report(self):
        return {"skew": self.skew, "jacobi": self.jacobi, "regular": dict(self.regular),
                "form_preserved": dict(self.form_preserved), "glues": self.glues,
                "transformed": {k: v for k, v in self.transformed.items()}}


def check_candidate(H: HamOperator, maps) -> CandidateReport:
    """Skewness, Jacobi and per-chart regularity of one scalar bracket."""
    skew = is_skew(H)
    jac = is_jacobi(H) if skew else False
    reg, form, tr = {}, {}, {}
    for m in maps:
        T = transform_operator(H, m)
        tr[m.name] = T
        reg[m.name] = regular_at_origin(T)
        form[m.name] = _constant_central_form(T)
    return CandidateReport(skew, jac, reg, form, tr)


def _constant_central_form(T: HamOperator) -> bool:
    """True when the λ³ coefficient is a jet-free constant and the order is ≤ 3."""
    if T.N != 1:
        return False
    ent = T.entries[0][0]
    if any(s > 3 for s in ent):
        return False
    c3 = ent.get(3)
    if c3 is None:
        return True
    return all(not e and not o for (o, e, _), _c in c3.terms.items())


@dataclass
class Classification:
    basis: list                 # DiffPoly monomials spanning the f-ansatz
    regularity_equations: list  # sympy linear forms in a_i, c
    jacobi_equations: list      # sympy polynomials in a_i, c
    components: list            # list of dicts: symbol -> sympy expression (free symbols remain free)
    c0_components: list
    c0_dimension: int

    def to_report(self):
        def comp(d):
            return {str(k): str(v) for k, v in sorted(d.items(), key=lambda kv: str(kv[0]))}
        return {
            "basis": [str(b) for b in self.basis],
            "regularity_equations": [str(e) for e in self.regularity_equations],
            "jacobi_equations": len(self.jacobi_equations),
            "components": [comp(d) for d in self.components],
            "c0_components": [comp(d) for d in self.c0_components],
            "c0_dimension": self.c0_dimension,
        }


def _to_sympy(q: ParamPoly, syms):
    expr = sympy.Integer(0)
    for key, c in q.terms.items():
        t = sympy.Rational(c.numerator, c.denominator) if isinstance(c, Fraction) else sympy.Integer(c)
        for name, e in key:
            t = t * syms[name] ** e
        expr += t
    return sympy.expand(expr)


def _dimension(solution: dict, unknowns):
    """Dimension of a solution branch: unknowns left free (not solved for)."""
    return sum(1 for s in unknowns if s not in solution)


def classify_global(basis=None, maps=None, bound=4) -> Classification:
    """Solve skew + Jacobi + regularity for f = Σ a_i m_i with symbolic c.

    Regularity gives linear conditions on (a, c); Jacobi gives quadrics, which are
    solved exactly with sympy after the linear conditions are imposed.
    """
    if basis is None:
        basis = sieve_enumerate(bound)
    names = [f"a{i}" for i in range(len(basis))] + ["c"]
    cu, cv, to_v, to_u = cp1_charts(names)
    maps = maps or [to_v]
    f = cu.zero()
    for i, m in enumerate(sieve_monomial(b, cu) for b in basis):
        f = f + m * cu.param(names[i])
    H = scalar_ansatz(f, cu.param("c"))
    syms = {n: sympy.Symbol(n) for n in names}
    unknowns = [syms[n] for n in names]

    lin = []
    for m in maps:
        T = transform_operator(H, m)
        for row in T.entries:
            for ent in row:
                for coeff in ent.values():
                    bad = DiffPoly(coeff.ctx, {k: v for k, v in coeff.terms.items()
                                                if any(x < 0 for _, x in k[1])})
                    for q in bad.param_coefficients().values():
                        lin.append(_to_sympy(q, syms))
    lin = _dedupe(lin)

    if not is_skew(H):
        raise AssertionError("scalar ansatz is skew by construction")
    jac = []
    for r in jacobi_check(H).values():
        for coeff in r.coeffs.values():
            for q in coeff.param_coefficients().values():
                jac.append(_to_sympy(q, syms))
    jac = _dedupe(jac)

    comps = _solve(lin + jac, unknowns)
    c0 = _solve(lin + jac + [syms["c"]], unknowns)
    dim = max((_dimension(d, unknowns) for d in c0), default=-1)
    return Classification([sieve_monomial(b) for b in basis],
                          lin, jac, comps, c0, dim)


def _dedupe(exprs):
    seen, out = set(), []
    for e in exprs:
        e = sympy.expand(e)
        if e == 0:
            continue
        k = sympy.srepr(e)
        if k not in seen:
            seen.add(k)
            out.append(e)
    return out


def _solve(eqs, unknowns):
    if not eqs:
        return [{}]
    sols = sympy.solve(eqs, unknowns, dict=True)
    sols = sorted(sols, key=lambda d: (-_dimension(d, unknowns), sorted(map(str, d.items()))))
    kept = []
    for d in sols:
        if not any(_contained(d, k) for k in kept):
            kept.append(d)
    return kept


def _contained(small: dict, big: dict) -> bool:
    """Branch ``small`` lies inside branch ``big``: big's relations hold on small."""
    for k, v in big.items():
        lhs = small.get(k, k)
        if sympy.simplify(sympy.sympify(v).subs(small) - lhs) != 0:
            return False
    return True


def q_family_operator(k: int, ctx=None) -> HamOperator:
    """{u_λ u} = q'(u) u' + 2 q(u) λ with q = u^k."""
    ctx = ctx or cp1_charts()[0]
    q = ctx.u(0, 0, k) if k else ctx.one()
    return scalar_ansatz(q * 2, 0)
