"""λ-polynomials, matrix differential operators and the Master Formula.

Index convention: a :class:`HamOperator` stores ``H[a][b] = H^{ab}(∂)`` so that
the degree-2 density is ``½ Σ th_a H^{ab}(∂) th_b`` and the generator bracket is
``{u^a_λ u^b} = H^{ba}(λ)``.
"""

from __future__ import annotations

from math import comb, factorial

from .algebra import DiffPoly, ParamPoly, Rational, even
from .errors import ParityError, PreconditionError, ShapeError


def _add(acc, k, p):
    if not p:
        return
    q = acc.get(k)
    q = p if q is None else q + p
    if q:
        acc[k] = q
    else:
        acc.pop(k, None)


class LambdaPoly:
    """Σ_k λ^k c_k with DiffPoly coefficients."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx, coeffs=None):
        self.ctx = ctx
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if v}

    @classmethod
    def const(cls, p: DiffPoly):
        return cls(p.ctx, {0: p})

    @classmethod
    def lam(cls, ctx, k=1):
        return cls(ctx, {k: ctx.one()})

    def __add__(self, other):
        if isinstance(other, DiffPoly):
            other = LambdaPoly.const(other)
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            _add(acc, k, v)
        return LambdaPoly(self.ctx, acc)

    __radd__ = __add__

    def __neg__(self):
        return LambdaPoly(self.ctx, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (DiffPoly, ParamPoly, *Rational)):
            return LambdaPoly(self.ctx, {k: v * other for k, v in self.coeffs.items()})
        acc = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                _add(acc, i + j, a * b)
        return LambdaPoly(self.ctx, acc)

    def __rmul__(self, other):
        if isinstance(other, (DiffPoly, ParamPoly, *Rational)):
            return LambdaPoly(self.ctx, {k: other * v for k, v in self.coeffs.items()})
        return NotImplemented

    def __pow__(self, n):
        out = LambdaPoly.const(self.ctx.one())
        for _ in range(n):
            out = out * self
        return out

    def times_lambda(self, k):
        return LambdaPoly(self.ctx, {i + k: v for i, v in self.coeffs.items()})

    def D(self):
        return LambdaPoly(self.ctx, {k: v.D() for k, v in self.coeffs.items()})

    def lambda_plus_d(self, n):
        """(λ+∂)^n with ∂ acting on the coefficients."""
        if n == 0:
            return self
        acc = {}
        for j, x in self.coeffs.items():
            dx = x
            for k in range(n + 1):
                if k:
                    dx = dx.D()
                    if not dx:
                        break
                _add(acc, j + n - k, dx * comb(n, k))
        return LambdaPoly(self.ctx, acc)

    def at_zero(self):
        return self.coeffs.get(0, self.ctx.zero())

    def degree(self):
        return max(self.coeffs, default=-1)

    def eval_params(self, values):
        return LambdaPoly(self.ctx, {k: v.eval_params(values) for k, v in self.coeffs.items()})

    def __eq__(self, other):
        if isinstance(other, DiffPoly):
            other = LambdaPoly.const(other)
        if not isinstance(other, LambdaPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __bool__(self):
        return bool(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    def __repr__(self):
        return f"LambdaPoly({self})"

    def __str__(self):
        from .frontend import print_lambda

        return print_lambda(self)


class LambdaMuPoly:
    """Σ λ^i μ^j c_ij with DiffPoly coefficients."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx, coeffs=None):
        self.ctx = ctx
        self.coeffs = {k: v for k, v in (coeffs or {}).items() if v}

    @classmethod
    def from_lambda(cls, lp: LambdaPoly, var="lambda"):
        if var == "lambda":
            return cls(lp.ctx, {(k, 0): v for k, v in lp.coeffs.items()})
        return cls(lp.ctx, {(0, k): v for k, v in lp.coeffs.items()})

    def __add__(self, other):
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            _add(acc, k, v)
        return LambdaMuPoly(self.ctx, acc)

    def __neg__(self):
        return LambdaMuPoly(self.ctx, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def shift(self, i, j):
        return LambdaMuPoly(self.ctx, {(a + i, b + j): v for (a, b), v in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, (DiffPoly, ParamPoly, *Rational)):
            return LambdaMuPoly(self.ctx, {k: v * other for k, v in self.coeffs.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LambdaMuPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    def __str__(self):
        from .frontend import print_lambda_mu

        return print_lambda_mu(self)

    def __repr__(self):
        return f"LambdaMuPoly({self})"


def lambda_mu_plus_d(p: DiffPoly, n):
    """(λ+μ+∂)^n p as a LambdaMuPoly."""
    acc = {}
    dp = p
    for l in range(n + 1):
        if l:
            dp = dp.D()
            if not dp:
                break
        rest = n - l
        for i in range(rest + 1):
            j = rest - i
            _add(acc, (i, j), dp * (factorial(n) // (factorial(i) * factorial(j) * factorial(l))))
    return LambdaMuPoly(p.ctx, acc)


# ---------------------------------------------------------------- operators
class HamOperator:
    """N×N matrix differential operator; ``entries[a][b] = {s: h_s}`` for Σ_s h_s ∂^s."""

    def __init__(self, ctx, entries=None):
        self.ctx = ctx
        n = ctx.N
        if entries is None:
            entries = [[{} for _ in range(n)] for _ in range(n)]
        if len(entries) != n or any(len(r) != n for r in entries):
            raise ShapeError(f"operator must be {n}x{n}")
        self.entries = [[{s: h for s, h in e.items() if h} for e in row] for row in entries]
        for row in self.entries:
            for e in row:
                for h in e.values():
                    if h.has_theta():
                        raise ParityError("operator coefficients must be θ-free")

    @property
    def N(self):
        return self.ctx.N

    @classmethod
    def from_lambda_matrix(cls, ctx, mat):
        """From ``mat[a][b] = H^{ab}(λ)`` given as LambdaPoly."""
        return cls(ctx, [[dict(mat[a][b].coeffs) for b in range(ctx.N)] for a in range(ctx.N)])

    @classmethod
    def from_table(cls, ctx, table):
        """From a bracket table ``table[a][b] = {u^a_λ u^b}``; H^{ba} = table[a][b]."""
        return cls(ctx, [[dict(table[b][a].coeffs) for b in range(ctx.N)] for a in range(ctx.N)])

    def symbol(self, a, b):
        return LambdaPoly(self.ctx, dict(self.entries[a][b]))

    def table(self):
        """``T[a][b] = {u^a_λ u^b} = H^{ba}(λ)``."""
        n = self.N
        return [[self.symbol(b, a) for b in range(n)] for a in range(n)]

    def order(self):
        return max((s for row in self.entries for e in row for s in e), default=-1)

    def apply(self, a, b, f: DiffPoly):
        out = self.ctx.zero()
        for s, h in self.entries[a][b].items():
            out = out + h * f.D(s)
        return out

    def apply_vector(self, fs):
        n = self.N
        return [sum((self.apply(a, b, fs[b]) for b in range(n)), self.ctx.zero()) for a in range(n)]

    def adjoint(self):
        """(h ∂^s)^* = (−∂)^s ∘ h, transposed."""
        n = self.N
        out = [[{} for _ in range(n)] for _ in range(n)]
        for a in range(n):
            for b in range(n):
                for s, h in self.entries[b][a].items():
                    # (−∂)^s ∘ h = (−1)^s Σ_k C(s,k) (∂^{s−k} h) ∂^k
                    for k in range(s + 1):
                        term = h.D(s - k) * (comb(s, k) * (-1) ** s)
                        _add(out[a][b], k, term)
        return HamOperator(self.ctx, out)

    def is_skew_adjoint(self):
        return (self + self.adjoint()).is_zero()

    def __add__(self, other):
        n = self.N
        out = [[dict(self.entries[a][b]) for b in range(n)] for a in range(n)]
        for a in range(n):
            for b in range(n):
                for s, h in other.entries[a][b].items():
                    _add(out[a][b], s, h)
        return HamOperator(self.ctx, out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return HamOperator(self.ctx, [[{s: h * c for s, h in e.items()} for e in row] for row in self.entries])

    def eval_params(self, values):
        return HamOperator(self.ctx, [[{s: h.eval_params(values) for s, h in e.items()} for e in row]
                                      for row in self.entries])

    def with_context(self, ctx):
        return HamOperator(ctx, [[{s: h.with_context(ctx) for s, h in e.items()} for e in row]
                                 for row in self.entries])

    def is_zero(self):
        return not any(e for row in self.entries for e in row)

    def __eq__(self, other):
        if not isinstance(other, HamOperator):
            return NotImplemented
        return self.ctx == other.ctx and self.entries == other.entries

    def __repr__(self):
        return f"HamOperator({self})"

    def __str__(self):
        from .frontend import print_operator

        return print_operator(self)


class RMatrix:
    """Endomorphism ``R(u^a) = Σ_g R^a_g(∂) u^g``; ``entries[a][g] = {s: ParamPoly}``."""

    def __init__(self, entries):
        self.entries = [[{s: ParamPoly.coerce(c) for s, c in (e.items() if isinstance(e, dict) else {0: e}.items())
                          if c} for e in row] for row in entries]
        n = len(self.entries)
        if any(len(r) != n for r in self.entries):
            raise ShapeError("R-matrix must be square")

    @property
    def n(self):
        return len(self.entries)

    @classmethod
    def constant(cls, matrix):
        return cls([[{0: c} for c in row] for row in matrix])

    @classmethod
    def symbolic(cls, n=3, prefix="R"):
        return cls.constant([[ParamPoly.symbol(f"{prefix}{i + 1}{j + 1}") for j in range(n)] for i in range(n)])

    @classmethod
    def identity(cls, n):
        return cls.constant([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def is_constant(self):
        return all(set(e) <= {0} for row in self.entries for e in row)

    def const(self, i, j):
        return self.entries[i][j].get(0, ParamPoly())

    def params(self):
        return sorted({n for row in self.entries for e in row for c in e.values() for n in c.symbols()})

    def eval_params(self, values):
        return RMatrix([[{s: c.evaluate(values) for s, c in e.items()} for e in row] for row in self.entries])

    def __add__(self, other):
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                d = dict(self.entries[i][j])
                for s, c in other.entries[i][j].items():
                    d[s] = d.get(s, ParamPoly()) + c
                row.append(d)
            out.append(row)
        return RMatrix(out)


# ---------------------------------------------------------------- brackets
def _even_partials(p: DiffPoly, field):
    out = []
    for m in range(p.max_order(field, "even") + 1):
        g = p.partial(even(field, m))
        if g:
            out.append((m, g))
    return out


def master_bracket(H: HamOperator, a: DiffPoly, b: DiffPoly) -> LambdaPoly:
    """{a_λ b} by the Master Formula for θ-free a, b."""
    if a.has_theta() or b.has_theta():
        raise ParityError("master_bracket takes θ-free arguments")
    ctx = H.ctx
    out = LambdaPoly(ctx)
    n = H.N
    for al in range(n):
        for m, ga in _even_partials(a, al):
            X = LambdaPoly.const(ga).lambda_plus_d(m) * ((-1) ** m)
            for be in range(n):
                hb = H.entries[be][al]
                if not hb:
                    continue
                dbs = _even_partials(b, be)
                if not dbs:
                    continue
                Y = LambdaPoly(ctx)
                for s, h in hb.items():
                    Y = Y + X.lambda_plus_d(s) * h
                for nn, gb in dbs:
                    out = out + Y.lambda_plus_d(nn) * gb
    return out


def _gen_bracket(H: HamOperator, alpha, b: DiffPoly) -> LambdaPoly:
    """{u^alpha_λ b} = Σ ∂b/∂u^{β,(n)} (λ+∂)^n H^{β alpha}(λ)."""
    out = LambdaPoly(H.ctx)
    for be in range(H.N):
        sym = H.symbol(be, alpha)
        if not sym:
            continue
        for nn, gb in _even_partials(b, be):
            out = out + sym.lambda_plus_d(nn) * gb
    return out


def _bracket_gen_shifted(H: HamOperator, a: DiffPoly, gamma) -> LambdaMuPoly:
    """{a_{λ+μ} u^gamma} = Σ (−1)^m h^{gamma α}_t (λ+μ+∂)^{t+m} ∂a/∂u^{α,(m)}."""
    out = LambdaMuPoly(H.ctx)
    for al in range(H.N):
        for m, g in _even_partials(a, al):
            for t, h in H.entries[gamma][al].items():
                out = out + lambda_mu_plus_d(g, t + m) * (h * ((-1) ** m))
    return out


def skew_check(H: HamOperator):
    """Residual matrix ``H^{ab}(λ) + H^{ba}(−λ−∂)``; zero iff skew."""
    n = H.N
    res = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            r = H.symbol(a, b)
            for s, h in H.entries[b][a].items():
                r = r + LambdaPoly.const(h).lambda_plus_d(s) * ((-1) ** s)
            res[a][b] = r
    return res


def is_skew(H: HamOperator):
    return all(r.is_zero() for row in skew_check(H) for r in row)


def jacobi_check(H: HamOperator, require_skew=True):
    """Residuals J^{abc}(λ, μ), keyed by (a, b, c); all zero iff H is Hamiltonian."""
    if require_skew and not is_skew(H):
        raise PreconditionError("jacobi_check requires a skew-adjoint operator")
    n = H.N
    res = {}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                # {u^a_λ {u^b_μ u^c}}
                A = LambdaMuPoly(H.ctx)
                for s, h in H.entries[c][b].items():
                    A = A + LambdaMuPoly.from_lambda(_gen_bracket(H, a, h), "lambda").shift(0, s)
                # {u^b_μ {u^a_λ u^c}}
                B = LambdaMuPoly(H.ctx)
                for s, h in H.entries[c][a].items():
                    B = B + LambdaMuPoly.from_lambda(_gen_bracket(H, b, h), "mu").shift(s, 0)
                # {{u^a_λ u^b}_{λ+μ} u^c}
                C = LambdaMuPoly(H.ctx)
                for s, h in H.entries[b][a].items():
                    C = C + _bracket_gen_shifted(H, h, c).shift(s, 0)
                res[(a, b, c)] = A - B - C
    return res


def is_jacobi(H: HamOperator):
    return all(r.is_zero() for r in jacobi_check(H).values())


def operator_to_density(H: HamOperator, check=True) -> DiffPoly:
    """½ Σ th_a H^{ab}(∂) th_b."""
    if check and not H.is_skew_adjoint():
        raise PreconditionError("operator_to_density requires a skew-adjoint operator")
    ctx = H.ctx
    out = ctx.zero()
    for a in range(H.N):
        for b in range(H.N):
            for s, h in H.entries[a][b].items():
                out = out + h * ctx.theta(a) * ctx.theta(b, s)
    return out / 2


def density_to_operator(p: DiffPoly) -> HamOperator:
    from .variational import normalize2

    return normalize2(p)


def deform_bracket(H: HamOperator, R: RMatrix) -> HamOperator:
    """H_R^{ba}(λ) = Σ_g R^a_g(−λ) H^{bg}(λ) + Σ_g R^b_g(λ+∂) H^{ga}(λ)."""
    n = H.N
    if R.n != n:
        raise ShapeError(f"R is {R.n}x{R.n}, operator is {n}x{n}")
    ctx = H.ctx.with_params(*R.params())
    if ctx != H.ctx:
        H = H.with_context(ctx)
    out = [[LambdaPoly(ctx) for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            acc = LambdaPoly(ctx)
            for g in range(n):
                hb = H.symbol(b, g)
                for s, r in R.entries[a][g].items():
                    acc = acc + hb.times_lambda(s) * (r * ((-1) ** s))
                hg = H.symbol(g, a)
                for s, r in R.entries[b][g].items():
                    acc = acc + hg.lambda_plus_d(s) * r
            out[b][a] = acc
    return HamOperator.from_lambda_matrix(ctx, out)
