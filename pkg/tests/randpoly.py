"""Hypothesis strategies for random differential polynomials."""

from fractions import Fraction

from hypothesis import strategies as st

from qpva import Context

CTX1 = Context(("u",), params=("c",))
CTX2 = Context(("u", "w"), params=("c",))

coeffs = st.builds(Fraction, st.integers(-6, 6).filter(bool), st.integers(1, 4))


@st.composite
def monomial(draw, ctx, theta_degree=None, max_order=2, max_even=3, params=True):
    n = ctx.N
    p = ctx.const(draw(coeffs))
    for _ in range(draw(st.integers(0, max_even))):
        p = p * ctx.u(draw(st.integers(0, n - 1)), draw(st.integers(0, max_order)))
    k = draw(st.integers(0, 2)) if theta_degree is None else theta_degree
    odds = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, max_order + 1)),
                         min_size=k, max_size=k, unique=True))
    for f, s in odds:
        p = p * ctx.theta(f, s)
    if params and ctx.params and draw(st.booleans()):
        p = p * ctx.param(draw(st.sampled_from(ctx.params)))
    return p


@st.composite
def poly(draw, ctx=CTX1, theta_degree=None, max_terms=4, **kw):
    p = ctx.zero()
    for _ in range(draw(st.integers(1, max_terms))):
        p = p + draw(monomial(ctx, theta_degree, **kw))
    return p


def homogeneous(ctx=CTX1, degree=None, **kw):
    """Polynomial of a single θ-degree (drawn once when not given)."""
    if degree is None:
        return st.integers(0, 2).flatmap(lambda d: poly(ctx, d, **kw))
    return poly(ctx, degree, **kw)


def random_bivectors(count, seed=0):
    """Small bivectors in 2 or 3 variables, entries of degree ≤ 2.

    A third are Nambu brackets {u_i, u_j} = ε_ijk ∂C/∂u_k (always Poisson), a
    third are generic (mostly not Poisson), the rest are planar (always Poisson).
    """
    import random

    from qpva.algebra import even
    from qpva.finite import FinitePoisson

    rng = random.Random(seed)
    out = []

    def rand_poly(ctx, deg):
        p = ctx.zero()
        for _ in range(rng.randint(1, 3)):
            m = ctx.const(rng.randint(-3, 3))
            for _ in range(rng.randint(0, deg)):
                m = m * ctx.u(rng.randrange(ctx.N))
            p = p + m
        return p

    for i in range(count):
        kind = i % 3
        n = 2 if kind == 2 else 3
        ctx = Context(tuple(f"u{k + 1}" for k in range(n)))
        z = ctx.zero()
        m = [[z] * n for _ in range(n)]
        if kind == 0:
            C = rand_poly(ctx, 3)
            dC = [C.partial(even(k)) for k in range(3)]
            m[0][1], m[1][2], m[0][2] = dC[2], dC[0], -dC[1]
        else:
            for a in range(n):
                for b in range(a + 1, n):
                    m[a][b] = rand_poly(ctx, 2)
        for a in range(n):
            for b in range(a + 1, n):
                m[b][a] = -m[a][b]
        out.append(FinitePoisson(ctx, m))
    return out
