"""Cached groups and contexts shared by the test modules."""
from functools import lru_cache

from modsatake import finred, hecke


@lru_cache(maxsize=None)
def group(n, p):
    return finred.build_gl(n, p)


@lru_cache(maxsize=None)
def classified(n, p):
    return tuple(finred.classify_all(group(n, p)))


@lru_cache(maxsize=None)
def context(n, p, label, J=(), s=None):
    data = next(d for d in classified(n, p) if d.label == label)
    return hecke.SatakeContext(data, frozenset(J), s=s)


def rep_by_kind(n, p, kind):
    cls = classified(n, p)
    if kind == "trivial":
        return finred.special_rep(list(cls), range(1, n)).label
    if kind == "steinberg":
        return finred.special_rep(list(cls), ()).label
    raise KeyError(kind)
