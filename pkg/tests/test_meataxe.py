import itertools

import numpy as np
import pytest

from modsatake import ff, finred
from modsatake.meataxe import (
    ModuleRep,
    chop,
    direct_sum,
    dual,
    is_absolutely_irreducible,
    is_irreducible,
    is_isomorphic,
    submodule_reps,
    tensor,
)

from _support import group


def submodule_lattice(m: ModuleRep):
    """Every invariant subspace, as frozensets of vectors, found by brute force."""
    d, p = m.dim, m.p
    vectors = [np.array(v) for v in itertools.product(range(p), repeat=d)]

    def span(basis):
        if basis.shape[1] == 0:
            return frozenset({(0,) * d})
        return frozenset(
            tuple(basis @ np.array(c) % p) for c in itertools.product(range(p), repeat=basis.shape[1])
        )

    cyclic = {span(ff.spin(v, m.gens, p)) for v in vectors if v.any()}
    lattice = {span(np.zeros((d, 0), dtype=int))} | cyclic
    grew = True
    while grew:
        grew = False
        for a, b in itertools.combinations(list(lattice), 2):
            gens = np.array(sorted(a | b)).T
            s = span(ff.column_space(gens, p))
            if s not in lattice:
                lattice.add(s)
                grew = True
    return lattice


def factor_dims_by_chain(m: ModuleRep):
    """Composition factor dimensions read off one maximal chain of the brute-force lattice."""
    p = m.p
    lattice = sorted(submodule_lattice(m), key=len)
    chain = [lattice[0]]
    while len(chain[-1]) < p**m.dim:
        cur = chain[-1]
        above = [s for s in lattice if cur < s]
        chain.append(min(above, key=len))
    dims = [round(np.log(len(s)) / np.log(p)) for s in chain]
    return sorted(b - a for a, b in zip(dims, dims[1:]))


def test_one_dimensional_is_irreducible():
    g = group(2, 3)
    assert is_irreducible(finred.trivial_rep(g))
    series = chop(finred.trivial_rep(g))
    assert [(f.dim, k) for f, k in series.factors] == [(1, 1)]


def test_natural_gl22_irreducible_by_lines():
    m = finred.natural_rep(group(2, 2))
    for v in ([1, 0], [0, 1], [1, 1]):
        assert ff.spin(v, m.gens, 2).shape[1] == 2
    assert is_irreducible(m)
    assert is_absolutely_irreducible(m)


def test_permutation_module_gl23_reducible_with_all_ones():
    m = finred.permutation_rep(group(2, 3), frozenset())
    assert m.dim == 4
    verdict = is_irreducible(m)
    assert not verdict
    ones = np.ones(4, dtype=np.int64)
    assert all(np.array_equal(g @ ones % 3, ones) for g in m.gens)
    sub = verdict.subspace
    for g in m.gens:
        assert ff.rank(np.concatenate([sub, g @ sub % 3], axis=1), 3) == sub.shape[1]


@pytest.mark.parametrize("n,p,expected", [(2, 3, [1, 3]), (2, 2, [1, 2])])
def test_chop_permutation_module_matches_lattice(n, p, expected):
    m = finred.permutation_rep(group(n, p), frozenset())
    assert factor_dims_by_chain(m) == expected
    assert chop(m).dims() == expected


def test_isomorphism_examples():
    g = group(2, 3)
    nat = finred.natural_rep(g)
    assert np.array_equal(is_isomorphic(nat, nat) @ np.eye(2, dtype=int) % 3, is_isomorphic(nat, nat))
    x = np.array([[1, 1], [0, 2]])
    xi = ff.invert(x, 3)
    conj = ModuleRep(tuple(x @ a @ xi % 3 for a in nat.gens), 3)
    inter = is_isomorphic(nat, conj)
    assert inter is not None
    assert all(np.array_equal(inter @ a % 3, b @ inter % 3) for a, b in zip(nat.gens, conj.gens))
    steinberg = chop(finred.permutation_rep(g, frozenset())).factors
    big = next(f for f, _ in steinberg if f.dim == 3)
    assert is_isomorphic(finred.trivial_rep(g), big) is None
    assert is_absolutely_irreducible(big)
    assert len(ff.solve_sylvester_family([(a, a) for a in big.gens], 3)) == 1


def test_constructions():
    g = group(2, 3)
    nat = finred.natural_rep(g)
    assert tensor(nat, nat).dim == 4
    assert direct_sum(nat, finred.trivial_rep(g)).dim == 3
    assert chop(direct_sum(nat, nat)).factors[0][1] == 2
    assert is_isomorphic(dual(dual(nat)), nat) is not None
    sub, quo = submodule_reps(finred.permutation_rep(g, frozenset()), np.ones((4, 1), dtype=np.int64))
    assert (sub.dim, quo.dim) == (1, 3)
