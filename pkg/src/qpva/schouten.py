"""Local functionals and the variational Schouten bracket.

    [∫P, ∫Q] = ∫ (−1)^p δP/δth_σ · δQ/δu^σ + δP/δu^σ · δQ/δth_σ

with left θ-derivatives and p the θ-degree of P. For even p this is
``δP/δth_σ δQ/δu^σ + (−1)^p δP/δu^σ δQ/δth_σ``; the overall (−1)^p keeps the
bracket graded skew and graded Jacobi for odd p as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import DiffPoly, ParamPoly
from .lambdas import HamOperator, operator_to_density
from .variational import canonical_density, euler_all, euler_even, euler_odd, is_exact, normalize2


class LocalFunctional:
    """∫ density, compared modulo ∂Â and constants."""

    __slots__ = ("density",)

    def __init__(self, density: DiffPoly):
        self.density = density

    @property
    def ctx(self):
        return self.density.ctx

    @property
    def degree(self):
        return self.density.theta_degree()

    def canonical(self):
        """Normalized representative (degree-2 only; other degrees returned as stored)."""
        if self.density and self.density.theta_degrees() == {2}:
            return LocalFunctional(canonical_density(self.density))
        return self

    def is_zero(self):
        d = self.density - self.density.constant_term()
        return is_exact(d)

    def __add__(self, other):
        return LocalFunctional(self.density + other.density)

    def __sub__(self, other):
        return LocalFunctional(self.density - other.density)

    def __neg__(self):
        return LocalFunctional(-self.density)

    def scale(self, c):
        return LocalFunctional(self.density * c)

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        return f"∫({self.density})"


def _as_density(x):
    return x.density if isinstance(x, LocalFunctional) else x


def nrb_density(P: DiffPoly, Q: DiffPoly) -> DiffPoly:
    """Density representing [∫P, ∫Q] for homogeneous P."""
    P, Q = _as_density(P), _as_density(Q)
    sign = -1 if P.theta_degree() & 1 else 1
    out = P.ctx.zero()
    for s in range(P.ctx.N):
        a = euler_odd(P, s)
        if a:
            b = euler_even(Q, s)
            if b:
                out = out + (a * b) * sign
        a = euler_even(P, s)
        if a:
            b = euler_odd(Q, s)
            if b:
                out = out + a * b
    return out


def nrb_bracket(P, Q) -> LocalFunctional:
    return LocalFunctional(nrb_density(P, Q))


@dataclass
class HamiltonianVerdict:
    hamiltonian: bool
    operator: HamOperator
    residual_density: DiffPoly
    witness: dict  # {("u"|"th", alpha): nonzero Euler derivative}

    def __bool__(self):
        return self.hamiltonian


def is_hamiltonian(P) -> HamiltonianVerdict:
    """Decide [∫P, ∫P] = 0 for a degree-2 density."""
    P = _as_density(P)
    H = normalize2(P)
    Pn = operator_to_density(H, check=False)
    res = nrb_density(Pn, Pn)
    witness = euler_all(res)
    return HamiltonianVerdict(not witness, H, res, witness)


def constraint_ideal(P) -> list:
    """Parameter polynomials whose common vanishing is equivalent to [∫P, ∫P] = 0.

    Each generator is scaled so its leading coefficient is 1; duplicates removed.
    """
    verdict = is_hamiltonian(P)
    seen = {}
    for key in sorted(verdict.witness):
        for _, coeff in sorted(verdict.witness[key].param_coefficients().items()):
            q = monic(coeff)
            if q and q not in seen:
                seen[q] = None
    return list(seen)


def monic(q: ParamPoly) -> ParamPoly:
    if not q:
        return q
    lead = q.sorted_terms()[-1][1]
    return q / lead if lead != 1 else q


def derived_bracket(P, F, G):
    """{F, G}_P as a nested bracket and as ∫ δG/δu^b P^{ba}(∂) δF/δu^a.

    The nested form is [[P, F], G]: with the graded-skew sign on degree-1
    arguments this is the same functional as −{{P, F}, G} written with the
    unsigned degree-1 formula. Returns ``(nested, operator_form)``.
    """
    P, F, G = _as_density(P), _as_density(F), _as_density(G)
    nested = LocalFunctional(nrb_density(nrb_density(P, F), G))
    H = normalize2(P)
    n = P.ctx.N
    dF = [euler_even(F, a) for a in range(n)]
    dG = [euler_even(G, b) for b in range(n)]
    dens = P.ctx.zero()
    for b in range(n):
        if not dG[b]:
            continue
        for a in range(n):
            dens = dens + dG[b] * H.apply(b, a, dF[a])
    return nested, LocalFunctional(dens)


def hamiltonian_vector(P, F):
    """X^a with [∫P, ∫F] = ∫ X^a th_a, X^a = −P^{ab}(∂) δF/δu^b."""
    P, F = _as_density(P), _as_density(F)
    H = normalize2(P)
    n = P.ctx.N
    dF = [euler_even(F, b) for b in range(n)]
    return [-sum((H.apply(a, b, dF[b]) for b in range(n)), P.ctx.zero()) for a in range(n)]


def mc_residual(P, Pi, check_identity=True) -> LocalFunctional:
    """[∫P, Θ] + ½[Θ, Θ] with Θ = ∫(Π − P)."""
    P, Pi = _as_density(P), _as_density(Pi)
    theta = Pi - P
    res = nrb_density(P, theta) + nrb_density(theta, theta) * Fraction(1, 2)
    out = LocalFunctional(res)
    if check_identity:
        ident = LocalFunctional((nrb_density(Pi, Pi) - nrb_density(P, P)) * Fraction(1, 2))
        if not (out == ident):
            raise AssertionError("Maurer-Cartan identity failed")
    return out
