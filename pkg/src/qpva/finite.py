"""Polyvector calculus on affine space and R-matrix deformations of finite
Poisson structures.

Polyvectors are DiffPolys that use only order-0 generators: u_i even, th_i odd.
A bivector with matrix Π is stored as ½ Σ Π^{ij} th_i th_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import sympy

from .algebra import Context, DiffPoly, ParamPoly, even, odd
from .errors import ContextError, ShapeError
from .lambdas import HamOperator, RMatrix, operator_to_density
from .schouten import is_hamiltonian


def _check_finite(p: DiffPoly):
    if p.max_order() > 0:
        raise ContextError("finite polyvectors use order-0 generators only")


class FinitePoisson:
    """Skew matrix Π^{ij} = {u_i, u_j} of polynomials in u_1..u_n (no ½ factor)."""

    def __init__(self, ctx: Context, matrix):
        n = ctx.N
        if len(matrix) != n or any(len(r) != n for r in matrix):
            raise ShapeError(f"expected a {n}x{n} matrix")
        self.ctx = ctx
        self.matrix = [[ctx.const(x) if not isinstance(x, DiffPoly) else x for x in r] for r in matrix]
        for i in range(n):
            for j in range(n):
                _check_finite(self.matrix[i][j])
                if self.matrix[i][j].has_theta():
                    raise ContextError("bivector entries must be even")
                if self.matrix[i][j] != -self.matrix[j][i]:
                    raise ShapeError(f"matrix is not skew at ({i},{j})")

    @property
    def n(self):
        return self.ctx.N

    def entry(self, i, j):
        return self.matrix[i][j]

    def bivector(self) -> DiffPoly:
        """½ Σ Π^{ij} th_i th_j."""
        ctx = self.ctx
        out = ctx.zero()
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.matrix[i][j]:
                    out = out + self.matrix[i][j] * ctx.theta(i) * ctx.theta(j)
        return out

    @classmethod
    def from_bivector(cls, p: DiffPoly):
        ctx = p.ctx
        n = ctx.N
        m = [[ctx.zero() for _ in range(n)] for _ in range(n)]
        for i in range(n):
            di = p.partial(odd(i))
            for j in range(n):
                if i != j:
                    # ∂/∂th_i p = Σ_j Π^{ij} th_j
                    m[i][j] = di.partial(odd(j))
        return cls(ctx, m)

    def __add__(self, other):
        return FinitePoisson(self.ctx, [[a + b for a, b in zip(r, s)] for r, s in zip(self.matrix, other.matrix)])

    def __sub__(self, other):
        return FinitePoisson(self.ctx, [[a - b for a, b in zip(r, s)] for r, s in zip(self.matrix, other.matrix)])

    def scale(self, c):
        return FinitePoisson(self.ctx, [[a * c for a in r] for r in self.matrix])

    def eval_params(self, values):
        return FinitePoisson(self.ctx, [[a.eval_params(values) for a in r] for r in self.matrix])

    def __eq__(self, other):
        return isinstance(other, FinitePoisson) and self.matrix == other.matrix

    __hash__ = None

    def bracket(self, f: DiffPoly, g: DiffPoly) -> DiffPoly:
        return poisson_commute(self, f, g)

    def is_poisson(self):
        return not sn_bracket(self.bivector(), self.bivector())

    def __str__(self):
        return "\n".join(f"P[{i}][{j}] = {self.matrix[i][j]}" for i in range(self.n) for j in range(self.n))


def sn_bracket(A: DiffPoly, B: DiffPoly) -> DiffPoly:
    """Schouten–Nijenhuis bracket of polyvectors, same sign rule as the variational bracket:
    (−1)^p ∂A/∂th_i ∂B/∂u_i + ∂A/∂u_i ∂B/∂th_i."""
    if isinstance(A, FinitePoisson):
        A = A.bivector()
    if isinstance(B, FinitePoisson):
        B = B.bivector()
    if A.ctx != B.ctx:
        if A.ctx.N != B.ctx.N:
            raise ShapeError("polyvectors of different dimension")
        raise ContextError("polyvectors live in different contexts")
    _check_finite(A)
    _check_finite(B)
    sign = -1 if A.theta_degree() & 1 else 1
    out = A.ctx.zero()
    for i in range(A.ctx.N):
        a = A.partial(odd(i))
        if a:
            b = B.partial(even(i))
            if b:
                out = out + (a * b) * sign
        a = A.partial(even(i))
        if a:
            b = B.partial(odd(i))
            if b:
                out = out + a * b
    return out


def r_deform(H: FinitePoisson, R: RMatrix) -> FinitePoisson:
    """Π_R^{ij} = {R(u_i), u_j} + {u_i, R(u_j)} = Σ_k R_ik H^{kj} + R_jk H^{ik}."""
    n = H.n
    if R.n != n:
        raise ShapeError("R-matrix shape does not match the Poisson structure")
    if not R.is_constant():
        raise ShapeError("finite deformations need a constant R")
    ctx = H.ctx.with_params(*R.params())
    M = [[r.with_context(ctx) for r in row] for row in H.matrix]
    out = [[ctx.zero() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            s = ctx.zero()
            for k in range(n):
                rik, rjk = R.const(i, k), R.const(j, k)
                if rik:
                    s = s + M[k][j] * rik
                if rjk:
                    s = s + M[i][k] * rjk
            out[i][j] = s
    return FinitePoisson(ctx, out)


def trivector_coefficients(Pi: FinitePoisson) -> dict:
    """Coefficients of ½[Π, Π] keyed by monomial."""
    t = sn_bracket(Pi.bivector(), Pi.bivector()) * Fraction(1, 2)
    return _coefficients(t)


def constraint_quadrics(H: FinitePoisson, R: RMatrix) -> list:
    """Parameter polynomials (one per u-monomial and θ-triple) of ½[Π_R, Π_R]."""
    Pi = r_deform(H, R)
    t = sn_bracket(Pi.bivector(), Pi.bivector()) * Fraction(1, 2)
    seen = {}
    for key, q in sorted(_coefficients(t).items()):
        if q and q not in seen:
            seen[q] = None
    return list(seen)


def _coefficients(p: DiffPoly) -> dict:
    """{(odd, even) : ParamPoly} splitting of p."""
    out = {}
    for (o, e, par), c in p.terms.items():
        k = (o, e)
        out[k] = out.get(k, ParamPoly()) + ParamPoly({par: c})
    return out


def span_rank(polys, symbols=None) -> int:
    """Rank over the rationals of the coefficient vectors of ParamPolys."""
    keys = sorted({k for p in polys for k in p.terms})
    if not keys or not polys:
        return 0
    rows = [[sympy.Rational(Fraction(p.terms.get(k, 0)).numerator, Fraction(p.terms.get(k, 0)).denominator)
             for k in keys] for p in polys]
    return sympy.Matrix(rows).rank()


def span_equal(a, b) -> dict:
    """Compare rational linear spans by rank: rank(a), rank(b), rank(a ∪ b)."""
    ra, rb, rab = span_rank(a), span_rank(b), span_rank(list(a) + list(b))
    return {"rank_a": ra, "rank_b": rb, "rank_union": rab,
            "a_in_b": rab == rb, "b_in_a": rab == ra, "equal": ra == rb == rab}


def hamiltonian_vf(Pi: FinitePoisson, h: DiffPoly) -> list:
    """u̇_i = Σ_j Π^{ij} ∂h/∂u_j."""
    ctx = Pi.ctx
    h = _home(h, ctx)
    dh = [h.partial(even(j)) for j in range(Pi.n)]
    return [sum((Pi.matrix[i][j] * dh[j] for j in range(Pi.n) if dh[j]), ctx.zero()) for i in range(Pi.n)]


def poisson_commute(Pi: FinitePoisson, f: DiffPoly, g: DiffPoly) -> DiffPoly:
    """Σ_ij ∂f/∂u_i Π^{ij} ∂g/∂u_j."""
    ctx = Pi.ctx
    f, g = _home(f, ctx), _home(g, ctx)
    out = ctx.zero()
    for i in range(Pi.n):
        fi = f.partial(even(i))
        if not fi:
            continue
        for j in range(Pi.n):
            gj = g.partial(even(j))
            if gj and Pi.matrix[i][j]:
                out = out + fi * Pi.matrix[i][j] * gj
    return out


def _home(p, ctx):
    return p if p.ctx == ctx else p.with_context(ctx)


def pencil_check(H: FinitePoisson, Hmix: FinitePoisson) -> bool:
    """[H, H_mix] = 0, i.e. H + ε H_mix is Poisson for every ε (given both are)."""
    ctx = H.ctx if set(Hmix.ctx.params) <= set(H.ctx.params) else Hmix.ctx
    a = _home(H.bivector(), ctx)
    b = _home(Hmix.bivector(), ctx)
    return not sn_bracket(a, b)


def finite_mc_residual(pi: FinitePoisson, Pi: FinitePoisson) -> DiffPoly:
    """[π, Θ] + ½[Θ, Θ] with Θ = Π − π; equals ½([Π,Π] − [π,π])."""
    ctx = Pi.ctx if set(pi.ctx.params) <= set(Pi.ctx.params) else pi.ctx
    p = _home(pi.bivector(), ctx)
    theta = _home(Pi.bivector(), ctx) - p
    return sn_bracket(p, theta) + sn_bracket(theta, theta) * Fraction(1, 2)


def arc_lift(Pi: FinitePoisson) -> HamOperator:
    """λ-constant operator with {u^a_λ u^b} = {u_a, u_b}, i.e. H^{ba} = Π^{ab}."""
    n = Pi.n
    ent = [[{} for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            if Pi.matrix[a][b]:
                ent[b][a] = {0: Pi.matrix[a][b]}
    return HamOperator(Pi.ctx, ent)


def arc_lift_density(Pi: FinitePoisson) -> DiffPoly:
    return operator_to_density(arc_lift(Pi), check=False)


def level0_agree(Pi: FinitePoisson) -> tuple:
    """(finite Jacobi holds, arc-lift density is Hamiltonian)."""
    return Pi.is_poisson(), bool(is_hamiltonian(arc_lift_density(Pi)))


# ---------------------------------------------------------------- sl3 subregular data
def sl3_context(params=()):
    return Context(("u1", "u2", "u3"), ("th1", "th2", "th3"), tuple(params), None, "S")


def sl3_poisson(ctx=None) -> FinitePoisson:
    ctx = ctx or sl3_context()
    u1, u2, u3 = (ctx.u(i) for i in range(3))
    z = ctx.zero()
    return FinitePoisson(ctx, [[z, -2 * u1, u2 ** 2],
                               [2 * u1, z, -2 * u3],
                               [-(u2 ** 2), 2 * u3, z]])


def sl3_casimir(ctx=None) -> DiffPoly:
    ctx = ctx or sl3_context()
    return ctx.u(1) ** 3 * Fraction(1, 6) + ctx.u(0) * ctx.u(2)


def sl3_second_integral(ctx=None) -> DiffPoly:
    ctx = ctx or sl3_context()
    return ctx.u(0) ** 2 + ctx.u(2) ** 2


def R(i, j):
    return ParamPoly.symbol(f"R{i}{j}")


def sl3_quadrics() -> list:
    """f1..f5 in the R_ij symbols."""
    return [
        R(1, 1) * R(2, 1) + R(2, 1) * R(2, 2) + R(2, 3) * R(3, 1),
        R(1, 2) * R(3, 1) + R(2, 2) * R(3, 2) + R(3, 2) * R(3, 3),
        R(1, 1) ** 2 + R(1, 2) * R(2, 1) - R(2, 3) * R(3, 2) - R(3, 3) ** 2,
        R(1, 3) * R(2, 1) + R(2, 2) * R(2, 3) + R(2, 3) * R(3, 3),
        R(1, 1) * R(1, 2) + R(1, 2) * R(2, 2) + R(1, 3) * R(3, 2),
    ]


TYPE_ZEROS = {
    "I": [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)],
    "II": [(2, 1), (3, 1), (3, 2)],
    "III": [(1, 2), (2, 1), (2, 3), (3, 2)],
}


def type_conditions(kind: str) -> list:
    if kind == "I":
        return [R(1, 1) ** 2 - R(3, 3) ** 2]
    if kind == "II":
        return [R(1, 1) ** 2 - R(3, 3) ** 2, R(1, 2) * (R(1, 1) + R(2, 2)), R(2, 3) * (R(2, 2) + R(3, 3))]
    if kind == "III":
        return [R(1, 1) ** 2 - R(3, 3) ** 2]
    raise ValueError(f"unknown type {kind!r}")


@dataclass
class TypeReport:
    pattern: dict          # type -> R has that zero pattern
    conditions: dict       # type -> values of the type conditions at R
    conditions_match: dict  # type -> restricted quadric span equals the condition span
    quadrics: list         # constraint quadrics evaluated at R
    valid: bool            # all quadrics vanish at R

    def to_report(self):
        return {"pattern": self.pattern, "conditions": self.conditions,
                "conditions_match": self.conditions_match, "quadrics": self.quadrics, "valid": self.valid}


def restrict_to_type(polys, kind):
    zero = {f"R{i}{j}": 0 for i, j in TYPE_ZEROS[kind]}
    return [p.evaluate(zero) for p in polys]


def check_type(Rm: RMatrix, H: FinitePoisson = None) -> TypeReport:
    """Type I/II/III diagnostics plus the direct quadric test."""
    H = H or sl3_poisson()
    quads = constraint_quadrics(H, RMatrix.symbolic(3, "R"))
    values = {f"R{i + 1}{j + 1}": Rm.const(i, j) for i in range(3) for j in range(3)}
    pattern, conds, match = {}, {}, {}
    for kind in ("I", "II", "III"):
        pattern[kind] = all(not Rm.const(i - 1, j - 1) for i, j in TYPE_ZEROS[kind])
        conds[kind] = [c.evaluate(values) for c in type_conditions(kind)]
        restricted = [q for q in restrict_to_type(quads, kind) if q]
        match[kind] = span_equal(restricted, type_conditions(kind))["equal"]
    at = [q.evaluate(values) for q in quads]
    return TypeReport(pattern, conds, match, at, all(not q for q in at))
