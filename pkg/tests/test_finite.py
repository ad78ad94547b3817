import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from randpoly import random_bivectors

from qpva import Context, ParamPoly, RMatrix, is_hamiltonian, parse
from qpva.algebra import even
from qpva.errors import ShapeError
from qpva.finite import (FinitePoisson, R, arc_lift, arc_lift_density, check_type, constraint_quadrics,
                         finite_mc_residual, hamiltonian_vf, level0_agree, pencil_check, poisson_commute, r_deform,
                         sl3_casimir, sl3_context, sl3_poisson, sl3_quadrics, sl3_second_integral, sn_bracket,
                         span_equal)

H = sl3_poisson()
z = ParamPoly()


def sym(name):
    return ParamPoly.symbol(name)


def type3(normalized=False):
    if normalized:
        return RMatrix.constant([[sym("R33"), z, 1], [z, sym("R33"), z], [1, z, sym("R33")]])
    return RMatrix.constant([[sym("R33"), z, sym("R13")], [z, sym("R22"), z], [sym("R31"), z, sym("R33")]])


def in_ctx(text, ctx):
    return parse(text, ctx)


# ---------------------------------------------------------------- Schouten–Nijenhuis
def test_sl3_is_poisson():
    assert not sn_bracket(H.bivector(), H.bivector())


def test_constant_bivector():
    ctx = Context(("x", "y", "z"))
    B = FinitePoisson(ctx, [[0, 2, -1], [-2, 0, 5], [1, -5, 0]])
    assert B.is_poisson()


def test_kks_sl2():
    ctx = Context(("e", "f", "h"))
    e, f, h = (ctx.u(i) for i in range(3))
    # {e,f} = h, {h,e} = 2e, {h,f} = −2f
    K = FinitePoisson(ctx, [[0, h, -2 * e], [-h, 0, 2 * f], [2 * e, -2 * f, 0]])
    assert K.is_poisson()


def test_bivector_round_trip():
    assert FinitePoisson.from_bivector(H.bivector()) == H


# ---------------------------------------------------------------- R-deformation
def test_identity_doubles():
    assert r_deform(H, RMatrix.identity(3)) == H.scale(2).eval_params({})


def test_zero_r():
    P = r_deform(H, RMatrix.constant([[0] * 3 for _ in range(3)]))
    assert all(not x for row in P.matrix for x in row)


def test_type3_entries():
    Rm = RMatrix.constant([[sym("R11"), z, sym("R13")], [z, sym("R22"), z], [sym("R31"), z, sym("R33")]])
    P = r_deform(H, Rm)
    ctx = P.ctx
    assert P.matrix[0][2] == in_ctx("(R11 + R33)*u2^2", ctx)
    assert P.matrix[0][1] == in_ctx("-2*(R11 + R22)*u1 + 2*R13*u3", ctx)


def test_r_deform_needs_constant():
    with pytest.raises(ShapeError):
        r_deform(H, RMatrix([[{1: 1}, {}, {}], [{}, {}, {}], [{}, {}, {}]]))


# ---------------------------------------------------------------- quadrics and types
def test_constraint_quadrics_span():
    q = constraint_quadrics(H, RMatrix.symbolic(3, "R"))
    assert span_equal(q, sl3_quadrics())["equal"]


def test_diag_100_violates_f3():
    f = sl3_quadrics()
    vals = {f"R{i}{j}": (1 if (i, j) == (1, 1) else 0) for i in range(1, 4) for j in range(1, 4)}
    assert f[2].evaluate(vals) == 1
    assert not check_type(RMatrix.constant([[1, 0, 0], [0, 0, 0], [0, 0, 0]])).valid


def test_type_one_both_branches():
    for sign in (1, -1):
        Rm = RMatrix.constant([[sym("a"), z, z], [z, sym("b"), z], [z, z, sym("a") * sign]])
        rep = check_type(Rm)
        assert rep.valid and rep.pattern["I"]


def test_type_two_example():
    Rm = RMatrix.constant([[1, 0, 5], [0, 2, 0], [0, 0, -1]])
    rep = check_type(Rm)
    assert rep.valid and rep.pattern["II"]
    assert all(rep.conditions_match.values())


def test_type_three_symbolic():
    assert check_type(type3()).valid


# ---------------------------------------------------------------- vector fields
def test_casimir_vector_field_vanishes():
    assert all(not x for x in hamiltonian_vf(H, sl3_casimir()))


def test_type3_field():
    P = r_deform(H, type3())
    X = hamiltonian_vf(P, sl3_casimir(P.ctx))
    ctx = P.ctx
    # Δ = R33 − R22
    assert X[0] == in_ctx("u2^2*((R33 - R22)*u1 + R13*u3)", ctx)
    assert X[1] == in_ctx("2*(R31*u1^2 - R13*u3^2)", ctx)
    assert X[2] == in_ctx("-u2^2*(R31*u1 + (R33 - R22)*u3)", ctx)


def test_normalized_field():
    P = r_deform(H, type3(True))
    X = hamiltonian_vf(P, sl3_casimir(P.ctx))
    ctx = P.ctx
    assert X == [in_ctx("u3*u2^2", ctx), in_ctx("2*(u1^2 - u3^2)", ctx), in_ctx("-u1*u2^2", ctx)]


def test_commute_examples():
    P = r_deform(H, type3(True))
    assert not poisson_commute(P, sl3_casimir(P.ctx), sl3_second_integral(P.ctx))
    ctx = sl3_context()
    for g in ("u1", "u2^2*u3", "u1*u3 + u2"):
        assert not poisson_commute(H, sl3_casimir(), in_ctx(g, ctx))
    assert poisson_commute(H, ctx.u(0), ctx.u(1)) == -2 * ctx.u(0)


# ---------------------------------------------------------------- pencils, MC, lift
def test_pencil_examples():
    assert pencil_check(H, r_deform(H, type3()))
    assert pencil_check(H, H)
    ctx = H.ctx
    bad = [row[:] for row in H.matrix]
    u1sq = ctx.u(0) ** 2
    bad[0][1], bad[1][0] = bad[0][1] + u1sq, bad[1][0] - u1sq
    assert not pencil_check(H, FinitePoisson(ctx, bad))


def test_finite_mc_identity():
    P = r_deform(H, RMatrix.symbolic(3, "R"))
    Hp = FinitePoisson(P.ctx, [[x.with_context(P.ctx) for x in row] for row in H.matrix])
    lhs = finite_mc_residual(Hp, P)
    rhs = sn_bracket(P.bivector(), P.bivector()) - sn_bracket(Hp.bivector(), Hp.bivector())
    assert lhs * 2 == rhs


def test_lift_examples():
    assert is_hamiltonian(arc_lift_density(H))
    ctx = Context(("x", "y", "z"))
    x, y = ctx.u(0), ctx.u(1)
    bad = FinitePoisson(ctx, [[0, x, y], [-x, 0, x], [-y, -x, 0]])
    assert level0_agree(bad) == (False, False)
    zero = FinitePoisson(ctx, [[0] * 3 for _ in range(3)])
    assert arc_lift(zero).is_zero()


def test_quadrics_named():
    f = sl3_quadrics()
    assert f[0] == R(1, 1) * R(2, 1) + R(2, 1) * R(2, 2) + R(2, 3) * R(3, 1)


# ---------------------------------------------------------------- properties
@pytest.mark.parametrize("B", random_bivectors(50, seed=1), ids=lambda b: f"n{b.n}")
def test_level0_bridge(B):
    fin, lift = level0_agree(B)
    assert fin == lift


ints = st.integers(-3, 3)
rmats = st.lists(st.lists(ints, min_size=3, max_size=3), min_size=3, max_size=3)


@settings(max_examples=40, deadline=None)
@given(rmats, rmats)
def test_r_deform_linear(a, b):
    Ra, Rb = RMatrix.constant(a), RMatrix.constant(b)
    assert r_deform(H, Ra + Rb) == r_deform(H, Ra) + r_deform(H, Rb)


@settings(max_examples=40, deadline=None)
@given(rmats, st.lists(st.tuples(ints, st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)),
                       min_size=1, max_size=3))
def test_chain_rule(rm, terms):
    P = r_deform(H, RMatrix.constant(rm))
    ctx = P.ctx
    C = ctx.zero()
    for c, a, b, d in terms:
        C = C + ctx.u(0, 0, a) * ctx.u(1, 0, b) * ctx.u(2, 0, d) * c
    h = sl3_casimir(ctx)
    X = hamiltonian_vf(P, h)
    ddt = sum((C.partial(even(i)) * X[i] for i in range(3)), ctx.zero())
    assert ddt == poisson_commute(P, C, h)
