import numpy as np
import pytest

from modsatake import ff, finred
from modsatake.meataxe import is_irreducible

from _support import classified, group


def brute_p_regular_classes(n, p):
    """Conjugacy classes of elements of order prime to p, by orbit closure under generators."""
    G = group(n, p)
    elements = [np.array(e) for e in G.elements]
    gens = [np.array(g) for g in G.gens]
    inv = [ff.invert(g, p) for g in gens]
    seen, count = set(), 0
    eye = np.eye(n, dtype=np.int64)
    for e in elements:
        key = e.tobytes()
        if key in seen:
            continue
        orbit, stack = {key}, [e]
        while stack:
            x = stack.pop()
            for g, gi in zip(gens, inv):
                y = g @ x @ gi % p
                if y.tobytes() not in orbit:
                    orbit.add(y.tobytes())
                    stack.append(y)
        seen |= orbit
        order, x = 1, e.copy()
        while not np.array_equal(x, eye):
            x = x @ e % p
            order += 1
        count += order % p != 0
    return count


@pytest.mark.parametrize("n,p,order", [(2, 2, 6), (2, 3, 48), (3, 2, 168)])
def test_group_orders(n, p, order):
    assert len(group(n, p)) == order == finred.gl_order(n, p)


@pytest.mark.parametrize("n,p", [(2, 2), (2, 3), (2, 5), (3, 2)])
def test_classification_count_matches_brute_force(n, p):
    assert len(classified(n, p)) == brute_p_regular_classes(n, p)


def test_gl22_example():
    reps = classified(2, 2)
    assert len(reps) == 2
    assert all(d.psi == (0, 0) for d in reps)
    assert sorted(sorted(d.delta_V) for d in reps) == [[], [1]]


def test_gl23_is_sym_times_det():
    G = group(2, 3)
    keys = set()
    for r in range(3):
        for m in range(2):
            mod = finred.sym_det_rep(G, r, m)
            assert is_irreducible(mod)
            keys.add(finred.parameters(G, mod).key())
    assert keys == {d.key() for d in classified(2, 3)}


def test_parameter_examples_gl23():
    G = group(2, 3)
    triv = finred.parameters(G, finred.trivial_rep(G))
    assert triv.psi == (0, 0) and triv.delta_psi == triv.delta_V == frozenset({1})
    st = finred.parameters(G, finred.sym_det_rep(G, 2, 0))
    assert st.psi == (2 % 2, 0) and st.delta_psi == frozenset({1}) and st.delta_V == frozenset()
    nat = finred.parameters(G, finred.sym_det_rep(G, 1, 1))
    # a^{1+m} d^m with m = 1 and exponents mod p - 1 = 2
    assert nat.psi == (0, 1) and nat.delta_psi == frozenset() and nat.delta_V == frozenset()


def test_special_reps():
    for n, p in [(2, 2), (2, 3), (3, 2)]:
        cls = list(classified(n, p))
        assert finred.special_rep(cls, range(1, n)).dim == 1
        steinberg = finred.special_rep(cls, ())
        assert steinberg.dim == p ** (n * (n - 1) // 2)
    cls = list(classified(3, 2))
    mid = finred.special_rep(cls, {1})
    assert 1 < mid.dim < 8


def test_fixed_spaces_natural():
    G = group(2, 3)
    table = finred.RepTable(G, finred.natural_rep(G))
    up = finred.fixed_space(table, G.unipotent_gens(frozenset()))
    down = finred.fixed_space(table, G.unipotent_gens(frozenset(), opposite=True))
    assert up.T.tolist() == [[1, 0]] and down.T.tolist() == [[0, 1]]
    assert finred.fixed_space(table, [np.eye(2, dtype=int)]).shape == (2, 2)


def test_coinvariants_examples():
    G = group(2, 2)
    table = finred.RepTable(G, finred.natural_rep(G))
    q, pi = finred.coinvariants(table, G.unipotent_gens(frozenset()))
    assert q == 1 and not (pi @ np.array([1, 0]) % 2).any() and (pi @ np.array([0, 1]) % 2).any()
    triv = finred.RepTable(G, finred.trivial_rep(G))
    assert finred.coinvariants(triv, G.gens)[0] == 1


def test_duality_gl23():
    for d in classified(2, 3):
        rep = finred.check_duality(d)
        assert rep["dual_psi"] and rep["dual_delta"]
    G = group(2, 3)
    for r in range(3):
        for m in range(2):
            data = finred.parameters(G, finred.sym_det_rep(G, r, m))
            star = finred.parameters(G, finred.contragredient(data.rep))
            assert star.psi == ((-m) % 2, (-r - m) % 2)


def test_coregularity_examples():
    for n, p in [(2, 2), (2, 3), (3, 2)]:
        cls = list(classified(n, p))
        steinberg = finred.special_rep(cls, ())
        trivial = finred.special_rep(cls, range(1, n))
        for J in finred.all_subsets(n, proper=True):
            assert finred.is_M_coregular(steinberg, J)
            assert not finred.is_M_coregular(trivial, J)
    with pytest.raises(ValueError):
        finred.is_M_coregular(finred.special_rep(list(classified(2, 2)), ()), {1})


def test_deck_split_examples():
    cls = list(classified(2, 2))
    nat = finred.special_rep(cls, ())
    split = finred.deck_split(nat, frozenset())
    assert split.n_fixed.T.tolist() == [[1, 0]] and split.complement.T.tolist() == [[0, 1]]
    assert split.phi.T.tolist() == [[0, 1]]
    triv = finred.special_rep(cls, {1})
    assert finred.deck_split(triv, frozenset()).pi.tolist() == [[1]]
    st3 = finred.special_rep(list(classified(3, 2)), ())
    s3 = finred.deck_split(st3, {1})
    assert s3.n_fixed.shape[1] + s3.complement.shape[1] == 8


def test_weight_support_gl22_steinberg():
    nat = finred.special_rep(list(classified(2, 2)), ())
    G = group(2, 2)
    split = finred.fixed_space(nat.table, G.unipotent_gens(frozenset()))
    _, pi = finred.coinvariants(nat.table, G.unipotent_gens(frozenset(), opposite=True))
    mask = finred.nonvanishing_set(nat, split, pi)
    assert int(mask.sum()) == 4
    # the four elements of Bbar B form the single double coset of the identity
    assert finred.weight_support(nat, (), ()) == [(0, 1)]


def test_rregu_examples():
    assert finred.rregu_conditions(3, (), {1}, {2}) == {"weyl": True, "roots": True}
    assert finred.rregu_conditions(3, {1}, {1}, ()) == {"weyl": True, "roots": True}
    assert finred.rregu_conditions(3, {1, 2}, {1}, {2}) == {"weyl": False, "roots": False}
