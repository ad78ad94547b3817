"""Euler operators, the normalizing operator and exactness modulo ∂."""

from __future__ import annotations

from fractions import Fraction

from .algebra import DiffPoly, even, odd
from .errors import DegreeError, UnsupportedInputError
from .lambdas import HamOperator


def euler_even(p: DiffPoly, alpha: int) -> DiffPoly:
    """δp/δu^alpha = Σ_s (−∂)^s ∂p/∂u^{alpha,(s)}."""
    out = p.ctx.zero()
    for s in range(p.max_order(alpha, "even") + 1):
        g = p.partial(even(alpha, s))
        if g:
            out = out + g.D(s) * ((-1) ** s)
    return out


def euler_odd(p: DiffPoly, alpha: int) -> DiffPoly:
    """δp/δth_alpha with left derivatives."""
    out = p.ctx.zero()
    for s in range(p.max_order(alpha, "odd") + 1):
        g = p.partial(odd(alpha, s))
        if g:
            out = out + g.D(s) * ((-1) ** s)
    return out


def euler_all(p: DiffPoly):
    """``{("u"|"th", alpha): derivative}`` for the nonzero variational derivatives."""
    out = {}
    for a in range(p.ctx.N):
        e = euler_even(p, a)
        if e:
            out[("u", a)] = e
        o = euler_odd(p, a)
        if o:
            out[("th", a)] = o
    return out


def normalizing_operator(p: DiffPoly) -> DiffPoly:
    """𝒩(p) = Σ_a th_a δp/δth_a; integrates to deg(p)·p."""
    ctx = p.ctx
    out = ctx.zero()
    for a in range(ctx.N):
        out = out + ctx.theta(a) * euler_odd(p, a)
    return out


def normalize2(p: DiffPoly) -> HamOperator:
    """Skew-adjoint H with ∫p = ½∫ th_a H^{ab}(∂) th_b."""
    ctx = p.ctx
    if p and p.theta_degrees() != {2}:
        raise DegreeError(f"normalize2 needs θ-degree 2, got {sorted(p.theta_degrees())}")
    n = ctx.N
    K = [[{} for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for (o, e, par), c in euler_odd(p, a).terms.items():
            (b, t), = o
            piece = DiffPoly(ctx, {((), e, par): c})
            cur = K[a][b].get(t)
            K[a][b][t] = piece if cur is None else cur + piece
    K = HamOperator(ctx, K)
    # K is already skew-adjoint in exact arithmetic; projecting makes that structural
    return (K - K.adjoint()).scale(Fraction(1, 2))


def is_exact(p: DiffPoly) -> bool:
    """Membership in ∂Â for polynomial p: Euler kernel and zero constant term."""
    if p.is_laurent():
        raise UnsupportedInputError("exactness is undecided for Laurent densities")
    if p.constant_term():
        return False
    return not euler_all(p)


def canonical_density(p: DiffPoly) -> DiffPoly:
    """Normalized representative of a degree-2 class: ½ th H th with H = normalize2(p)."""
    from .lambdas import operator_to_density

    return operator_to_density(normalize2(p), check=False)
