"""Exact graded differential polynomials.

Elements of the free graded-commutative differential algebra generated by
even jet variables ``u^{a,(s)}`` and odd jet variables ``th_a^{(s)}``, with
coefficients in Q[declared parameters].

Storage is flat: a :class:`DiffPoly` is a dict ``key -> rational`` where ::

    key = (odd, even, par)
    odd  = ((field, order), ...)            strictly increasing
    even = (((field, order), exp), ...)     increasing, exp != 0
    par  = ((name, exp), ...)               increasing by name, exp > 0

Koszul signs are folded into the rational coefficient when odd factors are
merged, so a key never holds a repeated odd generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, NamedTuple

from .errors import ContextError, DegreeError, IncompleteMapError, ParityError, SingularMapError

Rational = (int, Fraction)


# ---------------------------------------------------------------- key helpers
def _merge_exp(a, b):
    """Multiply two sparse exponent tuples; zero exponents are dropped."""
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for g, e in b:
        n = d.get(g, 0) + e
        if n:
            d[g] = n
        else:
            del d[g]
    return tuple(sorted(d.items()))


def _merge_odd(a, b):
    """Concatenate two sorted odd lists. Returns (merged, sign) or (None, 0)."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    out = []
    i = j = 0
    inv = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        x, y = a[i], b[j]
        if x == y:
            return None, 0
        if x < y:
            out.append(x)
            i += 1
        else:
            # y jumps over the remaining elements of a
            inv += na - i
            out.append(y)
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), (-1 if inv & 1 else 1)


def _mul_key(k1, k2):
    o, s = _merge_odd(k1[0], k2[0])
    if o is None:
        return None, 0
    return (o, _merge_exp(k1[1], k2[1]), _merge_exp(k1[2], k2[2])), s


def _add_into(acc, key, c):
    n = acc.get(key, 0) + c
    if n:
        acc[key] = n
    else:
        acc.pop(key, None)


def sort_key(key):
    """Canonical total order on monomial keys."""
    odd, even, par = key
    return (len(odd), odd, even, par)


# ---------------------------------------------------------------- ParamPoly
class ParamPoly:
    """Polynomial over Q in named parameter symbols."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        elif isinstance(terms, Rational):
            terms = {(): terms} if terms else {}
        self.terms = {k: v for k, v in terms.items() if v}

    @classmethod
    def symbol(cls, name):
        return cls({((name, 1),): 1})

    @staticmethod
    def coerce(x):
        if isinstance(x, ParamPoly):
            return x
        if isinstance(x, Rational):
            return ParamPoly(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to ParamPoly")

    def __add__(self, other):
        if not isinstance(other, (ParamPoly, *Rational)):
            return NotImplemented
        other = ParamPoly.coerce(other)
        acc = dict(self.terms)
        for k, v in other.terms.items():
            _add_into(acc, k, v)
        return ParamPoly(acc)

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, (ParamPoly, *Rational)):
            return NotImplemented
        return self + (-ParamPoly.coerce(other))

    def __rsub__(self, other):
        return ParamPoly.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Rational):
            return ParamPoly({k: v * other for k, v in self.terms.items()})
        if not isinstance(other, ParamPoly):
            return NotImplemented
        acc = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                _add_into(acc, _merge_exp(k1, k2), v1 * v2)
        return ParamPoly(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Rational):
            return ParamPoly({k: Fraction(v) / other for k, v in self.terms.items()})
        return NotImplemented

    def __pow__(self, n):
        out = ParamPoly(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Rational):
            other = ParamPoly(other)
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self):
        return all(k == () for k in self.terms)

    def constant(self):
        return self.terms.get((), 0)

    def symbols(self):
        return sorted({n for k in self.terms for n, _ in k})

    def degree(self):
        return max((sum(e for _, e in k) for k in self.terms), default=-1)

    def evaluate(self, values):
        """Substitute numbers/ParamPolys for some symbols."""
        out = ParamPoly()
        for k, v in self.terms.items():
            term = ParamPoly({tuple((n, e) for n, e in k if n not in values): v})
            for n, e in k:
                if n in values:
                    term = term * (ParamPoly.coerce(values[n]) ** e)
            out = out + term
        return out

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(e for _, e in kv[0]), kv[0]))

    def __repr__(self):
        return f"ParamPoly({self})"

    def __str__(self):
        from .frontend import print_parampoly

        return print_parampoly(self)


# ---------------------------------------------------------------- contexts
class Generator(NamedTuple):
    parity: str  # "even" | "odd"
    field: int
    order: int = 0


def even(field, order=0):
    return Generator("even", field, order)


def odd(field, order=0):
    return Generator("odd", field, order)


@dataclass(frozen=True)
class Context:
    """Declared chart: field names, their odd partners, parameters, Laurent flags."""

    fields: tuple = ("u",)
    thetas: tuple = None
    params: tuple = ()
    laurent: tuple = None
    chart: str = "U"

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "params", tuple(self.params))
        if self.thetas is None:
            th = ("th",) if len(self.fields) == 1 else tuple(f"th{i + 1}" for i in range(len(self.fields)))
            object.__setattr__(self, "thetas", th)
        else:
            object.__setattr__(self, "thetas", tuple(self.thetas))
        if self.laurent is None:
            object.__setattr__(self, "laurent", (False,) * len(self.fields))
        else:
            object.__setattr__(self, "laurent", tuple(bool(x) for x in self.laurent))
        if not (len(self.thetas) == len(self.fields) == len(self.laurent)):
            raise ContextError("field, theta and Laurent-flag counts differ")
        names = list(self.fields) + list(self.thetas) + list(self.params)
        if len(set(names)) != len(names):
            raise ContextError(f"duplicate symbol names in context: {names}")

    @property
    def N(self):
        return len(self.fields)

    def with_params(self, *names):
        extra = [n for n in names if n not in self.params]
        return Context(self.fields, self.thetas, self.params + tuple(extra), self.laurent, self.chart)

    # constructors
    def zero(self):
        return DiffPoly(self)

    def const(self, c):
        if isinstance(c, ParamPoly):
            return DiffPoly(self, {((), (), k): v for k, v in c.terms.items()})
        return DiffPoly(self, {((), (), ()): c} if c else {})

    def one(self):
        return self.const(1)

    def u(self, field=0, order=0, exp=1):
        if exp < 0 and (order > 0 or not self.laurent[field]):
            raise ParityError(
                f"negative exponent on {self.fields[field]} (order {order}) outside a Laurent chart")
        if exp == 0:
            return self.one()
        return DiffPoly(self, {((), (((field, order), exp),), ()): 1})

    def theta(self, field=0, order=0):
        return DiffPoly(self, {(((field, order),), (), ()): 1})

    def param(self, name):
        if name not in self.params:
            raise ContextError(f"undeclared parameter {name!r}")
        return DiffPoly(self, {((), (), ((name, 1),)): 1})

    def gen(self, g: Generator):
        return self.u(g.field, g.order) if g.parity == "even" else self.theta(g.field, g.order)


# ---------------------------------------------------------------- DiffPoly
@dataclass(frozen=True)
class DiffMonomial:
    coefficient: ParamPoly
    even: dict = dc_field(hash=False)
    odd: tuple = ()


class DiffPoly:
    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms=None):
        self.ctx = ctx
        self.terms = terms if terms is not None else {}

    # -- basic protocol
    def _check(self, other):
        if other.ctx is not self.ctx and other.ctx != self.ctx:
            raise ContextError(f"context mismatch: chart {self.ctx.chart!r} vs {other.ctx.chart!r}")

    def _lift(self, other):
        if isinstance(other, DiffPoly):
            self._check(other)
            return other
        if isinstance(other, (ParamPoly, *Rational)):
            return self.ctx.const(other)
        return None

    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        acc = dict(self.terms)
        for k, v in other.terms.items():
            _add_into(acc, k, v)
        return DiffPoly(self.ctx, acc)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly(self.ctx, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        acc = dict(self.terms)
        for k, v in other.terms.items():
            _add_into(acc, k, -v)
        return DiffPoly(self.ctx, acc)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        if isinstance(c, ParamPoly):
            return self * self.ctx.const(c)
        if not c:
            return DiffPoly(self.ctx)
        return DiffPoly(self.ctx, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Rational):
            return self.scale(other)
        other = self._lift(other)
        if other is None:
            return NotImplemented
        acc = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k, s = _mul_key(k1, k2)
                if s:
                    _add_into(acc, k, s * v1 * v2)
        return DiffPoly(self.ctx, acc)

    def __rmul__(self, other):
        if isinstance(other, Rational):
            return self.scale(other)
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other * self

    def __truediv__(self, c):
        if isinstance(c, Rational):
            return self.scale(Fraction(1) / c)
        return NotImplemented

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.ctx.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def inverse(self):
        """Inverse of a single monomial in order-0 Laurent variables."""
        if len(self.terms) != 1:
            raise SingularMapError("only single monomials are invertible")
        (key, c), = self.terms.items()
        odd_, even_, par = key
        if odd_ or par:
            raise SingularMapError("monomial with odd or parameter factors is not invertible")
        for (f, s), _ in even_:
            if s > 0 or not self.ctx.laurent[f]:
                raise SingularMapError(
                    f"cannot invert {self.ctx.fields[f]}-jet of order {s} in chart {self.ctx.chart!r}")
        return DiffPoly(self.ctx, {((), tuple((g, -e) for g, e in even_), ()): Fraction(1) / c})

    def __eq__(self, other):
        if isinstance(other, (ParamPoly, *Rational)):
            other = self.ctx.const(other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        return hash((self.ctx, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def __repr__(self):
        return f"DiffPoly({self})"

    def __str__(self):
        from .frontend import print_canonical

        return print_canonical(self)

    # -- structure
    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: sort_key(kv[0]))

    def monomials(self):
        """Canonical list of :class:`DiffMonomial` (parameter part folded into the coefficient)."""
        groups = {}
        for (o, e, p), c in self.terms.items():
            groups.setdefault((o, e), {})[p] = c
        out = []
        for (o, e) in sorted(groups, key=lambda k: (len(k[0]), k[0], k[1])):
            out.append(DiffMonomial(ParamPoly(groups[(o, e)]),
                                    {Generator("even", f, s): x for (f, s), x in e},
                                    tuple(Generator("odd", f, s) for f, s in o)))
        return out

    def param_coefficients(self):
        """``{(odd, even): ParamPoly}``."""
        groups = {}
        for (o, e, p), c in self.terms.items():
            groups.setdefault((o, e), {})[p] = c
        return {k: ParamPoly(v) for k, v in groups.items()}

    def theta_degrees(self):
        return {len(k[0]) for k in self.terms}

    def theta_degree(self):
        """θ-degree of a homogeneous element (0 for zero)."""
        ds = self.theta_degrees()
        if len(ds) > 1:
            raise DegreeError(f"inhomogeneous θ-degree {sorted(ds)}")
        return ds.pop() if ds else 0

    def homogeneous_part(self, p):
        return DiffPoly(self.ctx, {k: v for k, v in self.terms.items() if len(k[0]) == p})

    def has_theta(self):
        return any(k[0] for k in self.terms)

    def is_laurent(self):
        return any(e < 0 for k in self.terms for _, e in k[1])

    def params_used(self):
        return sorted({n for k in self.terms for n, _ in k[2]})

    def max_order(self, field=None, parity=None):
        m = -1
        for o, e, _ in self.terms:
            if parity != "odd":
                for (f, s), _x in e:
                    if (field is None or f == field) and s > m:
                        m = s
            if parity != "even":
                for f, s in o:
                    if (field is None or f == field) and s > m:
                        m = s
        return m

    def constant_term(self):
        return ParamPoly({p: c for (o, e, p), c in self.terms.items() if not o and not e})

    def eval_params(self, values):
        """Substitute numbers (or ParamPolys) for parameter symbols."""
        out = {}
        for (o, e, p), c in self.terms.items():
            pp = ParamPoly({p: c}).evaluate(values)
            for pk, pv in pp.terms.items():
                _add_into(out, (o, e, pk), pv)
        return DiffPoly(self.ctx, out)

    def with_context(self, ctx):
        """Re-home into a compatible context (same generators, superset of params)."""
        if ctx.fields != self.ctx.fields or ctx.thetas != self.ctx.thetas:
            raise ContextError("contexts declare different generators")
        missing = set(self.params_used()) - set(ctx.params)
        if missing:
            raise ContextError(f"parameters {sorted(missing)} not declared in target")
        return DiffPoly(ctx, dict(self.terms))

    # -- calculus
    def D(self, times=1):
        """Total derivative ∂ (applied ``times`` times)."""
        p = self
        for _ in range(times):
            p = p._d1()
        return p

    total_derivative = D

    def _d1(self):
        acc = {}
        for (o, e, p), c in self.terms.items():
            for i, ((f, s), x) in enumerate(e):
                ne = dict(e)
                if x == 1:
                    del ne[(f, s)]
                else:
                    ne[(f, s)] = x - 1
                ne[(f, s + 1)] = ne.get((f, s + 1), 0) + 1
                if not ne[(f, s + 1)]:
                    del ne[(f, s + 1)]
                _add_into(acc, (o, tuple(sorted(ne.items())), p), c * x)
            if o:
                present = set(o)
                for i, (f, s) in enumerate(o):
                    if (f, s + 1) in present:
                        continue
                    # (f, s+1) occupies the same slot: no generator sits strictly between
                    no = o[:i] + ((f, s + 1),) + o[i + 1:]
                    _add_into(acc, (no, e, p), c)
        return DiffPoly(self.ctx, acc)

    def partial(self, g: Generator):
        """∂/∂g; left graded derivative for odd g."""
        acc = {}
        gk = (g.field, g.order)
        if g.parity == "even":
            for (o, e, p), c in self.terms.items():
                for i, (h, x) in enumerate(e):
                    if h == gk:
                        ne = e[:i] + (((h, x - 1),) if x != 1 else ()) + e[i + 1:]
                        _add_into(acc, (o, ne, p), c * x)
                        break
        else:
            for (o, e, p), c in self.terms.items():
                for i, h in enumerate(o):
                    if h == gk:
                        _add_into(acc, (o[:i] + o[i + 1:], e, p), -c if i & 1 else c)
                        break
        return DiffPoly(self.ctx, acc)

    def substitute(self, images, target: Context = None):
        """Differential-algebra homomorphism fixed by images of order-0 generators.

        ``images`` maps ``Generator(parity, field, 0)`` to a DiffPoly in ``target``.
        Higher jets go to iterated total derivatives of the images.
        """
        if target is None:
            target = next(iter(images.values())).ctx if images else self.ctx
        for g, img in images.items():
            if img.ctx != target:
                raise ContextError("all images must live in the target context")
            if g.order != 0:
                raise IncompleteMapError("images may only be given for order-0 generators")
            if g.parity == "even" and img.has_theta():
                raise ParityError(f"image of even generator {g} contains odd variables")
            if g.parity == "odd" and img and img.theta_degrees() != {1}:
                raise ParityError(f"image of odd generator {g} is not of θ-degree 1")
        ev_cache, od_cache, pw_cache = {}, {}, {}

        def ev_img(f, s):
            key = (f, s)
            if key not in ev_cache:
                base = images.get(Generator("even", f, 0))
                if base is None:
                    raise IncompleteMapError(f"no image for {self.ctx.fields[f]}")
                ev_cache[key] = base if s == 0 else ev_img(f, s - 1).D()
            return ev_cache[key]

        def od_img(f, s):
            key = (f, s)
            if key not in od_cache:
                base = images.get(Generator("odd", f, 0))
                if base is None:
                    raise IncompleteMapError(f"no image for {self.ctx.thetas[f]}")
                od_cache[key] = base if s == 0 else od_img(f, s - 1).D()
            return od_cache[key]

        def power(f, s, x):
            key = (f, s, x)
            if key not in pw_cache:
                pw_cache[key] = ev_img(f, s) ** x
            return pw_cache[key]

        out = DiffPoly(target)
        for (o, e, p), c in self.sorted_items():
            term = DiffPoly(target, {((), (), p): c})
            for (f, s), x in e:
                term = term * power(f, s, x)
            for f, s in o:
                term = term * od_img(f, s)
            out = out + term
        return out


def from_terms(ctx, items: Iterable):
    """Build a DiffPoly from (key, coefficient) pairs with arbitrary odd order (signs normalised)."""
    acc = {}
    for (o, e, p), c in items:
        k, s = (), 1
        for g in o:
            k, s2 = _merge_odd(k, (g,))
            if k is None:
                break
            s *= s2
        if k is None:
            continue
        _add_into(acc, (k, tuple(sorted((g, x) for g, x in e if x)), tuple(sorted(p))), s * c)
    return DiffPoly(ctx, acc)
