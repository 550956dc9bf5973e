import itertools

import numpy as np
import pytest

from modsatake import hecke
from modsatake.hecke import (
    HeckeOperator,
    InducedVector,
    ParabolicFunction,
    act,
    convolve,
    equal_parabolic,
    evaluate,
    hecke_act,
    satake_classical,
    satake_prime,
    unit_operator,
    xi,
    zeta,
)
from modsatake.localfield import LaurentScalar, LocalGroupElement, canonical_coset, smith_invariants

from _support import context, rep_by_kind


def gl2(p, kind, s=None):
    return context(2, p, rep_by_kind(2, p, kind), (), s)


def test_act_examples(gl23_sym1):
    ctx = gl23_sym1
    f = InducedVector.basis(ctx.K, [1, 2])
    assert act(LocalGroupElement.identity(2, 3), f) == f
    k = LocalGroupElement.from_fq([[1, 1], [0, 2]], 3)
    image = act(k, f)
    (key, w), = image.items()
    assert key == ctx.K.identity_key() and np.array_equal(w, np.array([[1, 1], [0, 2]]) @ [1, 2] % 3)
    moved = act(ctx.s.inverse(), f)
    assert list(moved.terms) == [canonical_coset(ctx.s)]


def test_unit_laws(gl23_sym1):
    ctx = gl23_sym1
    unit = unit_operator(ctx.K)
    TG = ctx.op("T_G")
    assert convolve(unit, TG) == TG == convolve(TG, unit)
    f = InducedVector.basis(ctx.K, [0, 1])
    assert hecke_act(unit, f) == f


def test_T_Z_squared(gl23_sym1):
    ctx = gl23_sym1
    TZ = ctx.op("T_Z")
    sq = convolve(TZ, TZ)
    assert sq.types() == [(2, 0)]
    assert len(sq.cells) == 1
    assert np.array_equal(sq.value_at(ctx.s @ ctx.s), np.eye(ctx.Z.dim, dtype=np.int64))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_T_G_trivial_has_p_plus_one_cosets(p):
    ctx = gl2(p, "trivial")
    TG = ctx.op("T_G")
    assert len(TG.cells) == p + 1
    assert len(hecke_act(TG, InducedVector.basis(ctx.K, [1]))) == p + 1


def test_T_M_on_basis(gl23_sym1):
    ctx = gl23_sym1
    for w in np.eye(ctx.q, dtype=np.int64):
        f = InducedVector.basis(ctx.M, w)
        assert hecke_act(ctx.op("T_M"), f) == act(ctx.s.inverse(), f)


def test_T_KP_single_term(gl23_sym1):
    ctx = gl23_sym1
    for w in np.eye(ctx.q, dtype=np.int64):
        image = hecke_act(ctx.op("T_KP"), InducedVector.basis(ctx.P, w))
        assert image == act(ctx.s.inverse(), InducedVector.basis(ctx.K, ctx.phi @ w % 3))
        assert len(image) == 1


def test_satake_examples():
    for p in (2, 3):
        triv = gl2(p, "trivial")
        assert satake_prime(unit_operator(triv.K), triv.M) == unit_operator(triv.M)
        assert satake_prime(triv.op("T_G"), triv.M) == triv.op("T_M")
        steinberg = gl2(p, "steinberg")
        assert satake_prime(steinberg.op("T_G"), steinberg.M) == steinberg.op("T_M")


def _classical_count(p, m_exps, s_exps, lo=-2):
    """#{b in F/o : diag(t^m) n(b) in K diag(t^s) K}, by enumerating principal parts."""
    count = 0
    for coeffs in itertools.product(range(p), repeat=-lo):
        b = LaurentScalar.poly(p, {lo + i: c for i, c in enumerate(coeffs) if c})
        g = LocalGroupElement.diag_t(m_exps, p) @ LocalGroupElement.from_entries(2, p, {(0, 1): b})
        if smith_invariants(g) == tuple(s_exps):
            count += 1
    return count


def test_satake_classical_trivial():
    p = 3
    ctx = gl2(p, "trivial")
    Kd, Md = hecke.dual_levels(ctx)
    assert satake_classical(unit_operator(Kd), Md) == unit_operator(Md)
    ind = HeckeOperator.from_double_cosets(Kd, Kd, [(ctx.s, [[1]])])
    form = {c: X.tolist() for c, X in satake_classical(ind, Md).double_coset_form().items()}
    want = {}
    for m in [(1, 0), (0, 1)]:
        k = _classical_count(p, m, (1, 0)) % p
        if k:
            want[m] = [[k]]
    assert form == want


def test_duality_examples(gl23_sym1):
    ctx = gl2(3, "steinberg")
    Kd, _ = hecke.dual_levels(ctx)
    assert hecke.verify_duality(unit_operator(Kd), ctx)["equal"]
    for X in hecke.double_coset_value_space(Kd, Kd, ctx.s):
        assert hecke.verify_duality(HeckeOperator.from_double_cosets(Kd, Kd, [(ctx.s, X)]), ctx)["equal"]
    ctx = gl23_sym1
    Kd, _ = hecke.dual_levels(ctx)
    rng = np.random.default_rng(7)
    space = hecke.double_coset_value_space(Kd, Kd, ctx.s)
    X = sum(int(rng.integers(3)) * B for B in space) % 3
    assert hecke.verify_duality(HeckeOperator.from_double_cosets(Kd, Kd, [(ctx.s, X)]), ctx)["equal"]


def test_bad_double_coset_value_is_rejected(gl23_sym1):
    ctx = gl23_sym1
    with pytest.raises(hecke.WellDefinednessError):
        HeckeOperator.from_double_cosets(ctx.K, ctx.K, [(ctx.s, [[1, 1], [0, 1]])])


def test_xi_natural_gl22():
    ctx = gl2(2, "steinberg")
    image = xi(InducedVector.basis(ctx.K, [1, 0]), ctx)
    assert 1 <= len(image) <= 3
    for key, w in image.items():
        g = ctx.P.element(key).inverse()
        assert g.in_K()


def test_I0_and_zeta_values(gl23_sym1):
    ctx = gl23_sym1
    one = LocalGroupElement.identity(2, 3)
    w0 = LocalGroupElement.from_fq([[0, 1], [1, 0]], 3)
    for w in np.eye(ctx.q, dtype=np.int64):
        f = InducedVector.basis(ctx.P, w)
        assert evaluate(zeta(f, ctx), one) == InducedVector.basis(ctx.M, w)
        # F(m x) = m F(x) for m in the Levi, and F vanishes off P(F) Nbar_{0+}
        assert evaluate(zeta(f, ctx), ctx.s.inverse()) == act(ctx.s.inverse(), InducedVector.basis(ctx.M, w))
        assert evaluate(zeta(f, ctx), w0).is_zero()
    for v in np.eye(2, dtype=np.int64):
        val = evaluate(hecke.I0(InducedVector.basis(ctx.K, v), ctx), one)
        assert val == InducedVector.basis(ctx.M, ctx.pi @ v % 3)


def test_evaluate_commutes_with_post(gl23_sym1):
    ctx = gl23_sym1
    F = zeta(InducedVector.basis(ctx.P, [1]), ctx)
    G = F.with_post(ctx.op("T_M"))
    for x in hecke.certified_points([F], ctx.s):
        assert evaluate(G, x) == hecke_act(ctx.op("T_M"), evaluate(F, x))


@pytest.mark.parametrize("route", ["grid", "ball"])
def test_equal_parabolic_examples(gl23_sym1, route):
    ctx = gl23_sym1
    f = InducedVector.basis(ctx.P, [1])
    F = zeta(f, ctx)
    assert equal_parabolic(F, F, route=route).equal
    lhs = zeta(hecke_act(ctx.op("T_P"), f), ctx)
    assert equal_parabolic(lhs, F.with_post(ctx.op("T_M")), route=route, s=ctx.s).equal
    assert not equal_parabolic(F, F + zeta(f, ctx), route=route).equal


def test_grid_and_ball_agree_gl3():
    ctx = context(3, 2, rep_by_kind(3, 2, "steinberg"), (1,))
    f = InducedVector.basis(ctx.P, np.eye(ctx.q, dtype=np.int64)[0])
    lhs = zeta(hecke_act(ctx.op("T_P"), f), ctx)
    rhs = zeta(f, ctx).with_post(ctx.op("T_M"))
    grid = equal_parabolic(lhs, rhs, route="grid", s=ctx.s)
    ball = equal_parabolic(lhs, rhs, route="ball")
    assert grid.equal and ball.equal and (grid.route, ball.route) == ("grid", "ball")


def test_context_rejects_bad_s(gl23_sym1):
    data = gl23_sym1.data
    with pytest.raises(ValueError):
        hecke.SatakeContext(data, (), s=(0, 1))


def test_default_s():
    assert hecke.default_s(2, ()) == (1, 0)
    assert hecke.default_s(3, ()) == (2, 1, 0)
    assert hecke.default_s(3, {1}) == (1, 1, 0)
    assert hecke.default_s(3, {2}) == (1, 0, 0)


@pytest.mark.parametrize("p", [2, 3])
def test_remark_counts_against_cartan_cells(p):
    """Rows of the count table agree with coset enumeration of the Cartan cells."""
    from modsatake.localfield import cartan_cosets

    rows, _ = hecke.gl2_remark_table(p, 1)
    table = {tuple(r["t"]): r["double_coset"] for r in rows}
    assert table[(1, 0)] == 1 and table[(0, 1)] == p
    assert sum(table.values()) == len(cartan_cosets(2, p, (1, 0)))


def test_main_stage_trivial_gl22_obstruction():
    ctx = gl2(2, "trivial")
    checks = {c.name: c for c in hecke.verify_main_stage(ctx, 1)}
    assert checks["T_P not in image of xi"].status == "pass"
    assert not any(r["solvable"] for r in checks["T_P not in image of xi"].witness)


def test_main_stage_sym1_preimage(gl23_sym1):
    checks = {c.name: c for c in hecke.verify_main_stage(gl23_sym1, 1)}
    assert checks["T_P in image of xi"].status == "pass"
    assert all(r["explicit_T_KP"] for r in checks["T_P in image of xi"].witness)


def test_localization_depth_zero(gl23_sym1):
    ops = hecke.basis_operators(gl23_sym1.K, 0)
    assert [op.types() for op in ops] == [[(0, 0)]]
    assert satake_prime(ops[0], gl23_sym1.M) == unit_operator(gl23_sym1.M)


def test_parabolic_function_translate(gl23_sym1):
    ctx = gl23_sym1
    F = zeta(InducedVector.basis(ctx.P, [1]), ctx)
    h = LocalGroupElement.from_fq([[0, 1], [1, 0]], 3)
    moved = F.translate(h)
    assert isinstance(moved, ParabolicFunction)
    for x in hecke.certified_points([F, moved]):
        assert evaluate(moved, x) == evaluate(F, x @ h)
