from hypothesis import given, settings
from hypothesis import strategies as st
from randpoly import CTX1, CTX2, poly

from qpva import (Context, HamOperator, LambdaPoly, ParamPoly, RMatrix, deform_bracket, is_hamiltonian, is_jacobi,
                  is_skew, master_bracket, normalize2, operator_to_density, parse, parse_lambda, parse_table)
from qpva.finite import arc_lift, sl3_poisson
from qpva.lambdas import jacobi_check, skew_check
from qpva.variational import is_exact

CV = Context(("u",), params=("c",))
VIR = parse_table("u' + 2*u*L + c*L^3", CV)
HEI = parse_table("L", CV)


def test_master_bracket_virasoro():
    u = CV.u()
    assert master_bracket(VIR, u, u) == parse_lambda("u' + 2*u*L + c*L^3", CV)


def test_master_bracket_square_against_heisenberg():
    u = CV.u()
    assert master_bracket(HEI, u * u, u) == parse_lambda("2*u*L + 2*u'", CV)


def test_master_bracket_constant_argument():
    assert not master_bracket(VIR, CV.one(), CV.u() ** 3)


def test_skew_examples():
    assert is_skew(VIR)
    assert is_skew(HEI)
    res = skew_check(parse_table("u*L", CV))
    assert res[0][0] == LambdaPoly.const(-CV.u(0, 1))


def test_jacobi_examples():
    assert is_jacobi(VIR)
    q2 = parse_table("2*u*u' + 2*u^2*L", CV)
    assert is_jacobi(q2)


def test_order_one_q_family_member_is_hamiltonian():
    # u∂ + ½u' is q'(u)u' + 2q(u)∂ with q = u/2
    H = parse_table("u*L + 1/2*u'", CV)
    assert is_skew(H) and is_jacobi(H)
    assert is_hamiltonian(operator_to_density(H))


def test_non_hamiltonian_skew_operator():
    H = parse_table("u'*L + 1/2*u''", CV)
    assert is_skew(H)
    assert not is_jacobi(H)
    assert any(r for r in jacobi_check(H).values())


def test_operator_to_density_examples():
    assert operator_to_density(HEI) == parse("1/2*th*th'", CV)
    d = operator_to_density(VIR)
    assert is_exact(d - parse("1/2*(2*u*th*th' + c*th*th^(3))", CV))
    assert not operator_to_density(HamOperator(CV, [[{}]]))


def test_deform_identity_doubles():
    assert deform_bracket(VIR, RMatrix.identity(1)) == VIR.scale(2)


def test_deform_abelian_level_k():
    k = ParamPoly.symbol("k")
    ctx = Context(("u1", "u2"), params=("k",))
    H = HamOperator(ctx, [[{1: ctx.param("k")}, {}], [{}, {1: ctx.param("k")}]])
    R = RMatrix.symbolic(2, "r")
    HR = deform_bracket(H, R)
    for a in range(2):
        for b in range(2):
            want = (R.const(a, b) + R.const(b, a)) * k
            got = HR.symbol(b, a)
            assert set(got.coeffs) <= {1}
            assert got.coeffs.get(1, HR.ctx.zero()) == HR.ctx.const(want)
    assert HR.is_skew_adjoint()
    assert is_hamiltonian(operator_to_density(HR))


def test_deform_sl3_type_one_hamiltonian():
    A = arc_lift(sl3_poisson())
    a, b = ParamPoly.symbol("a"), ParamPoly.symbol("b")
    z = ParamPoly()
    R = RMatrix.constant([[a, z, z], [z, b, z], [z, z, a]])
    HR = deform_bracket(A, R)
    assert HR.is_skew_adjoint()
    assert is_hamiltonian(operator_to_density(HR))


# ---------------------------------------------------------------- properties
skew_ops = poly(CTX1, 2, max_terms=3).map(normalize2)
even_polys = poly(CTX1, 0, max_terms=3)


@settings(max_examples=50, deadline=None)
@given(skew_ops, even_polys, even_polys)
def test_sesquilinearity(H, a, b):
    lhs = master_bracket(H, a.D(), b) + master_bracket(H, a, b).times_lambda(1)
    assert not lhs


@settings(max_examples=50, deadline=None)
@given(skew_ops, even_polys, even_polys, even_polys)
def test_left_leibniz(H, a, b, c):
    lhs = master_bracket(H, a, b * c)
    rhs = master_bracket(H, a, b) * c + master_bracket(H, a, c) * b
    assert lhs == rhs


@settings(max_examples=30, deadline=None)
@given(poly(CTX2, 2, max_terms=2, max_order=1, max_even=2))
def test_correspondence_random(p):
    H = normalize2(p)
    assert is_jacobi(H) == bool(is_hamiltonian(operator_to_density(H)))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=2, max_size=2))
def test_deform_linear_in_r(vals):
    R1 = RMatrix.constant([[vals[0]]])
    R2 = RMatrix.constant([[vals[1]]])
    assert deform_bracket(VIR, R1 + R2) == deform_bracket(VIR, R1) + deform_bracket(VIR, R2)
