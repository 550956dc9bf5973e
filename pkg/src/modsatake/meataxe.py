"""Composition factors and irreducibility certificates for modules over F_p.

A module is a finite list of generator matrices acting on column vectors.
Irreducibility is decided with Norton's criterion: for an element ``theta`` of
the enveloping algebra and an eigenvalue ``lam`` of it, every proper submodule
either meets ``ker(theta - lam)`` or has an annihilator meeting the left kernel.
Spinning all lines of both kernels (usually a single line each) is therefore a
complete test, and randomness only decides how quickly a usable ``theta`` turns up.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import ff

__all__ = [
    "ModuleRep",
    "Irreducible",
    "Reducible",
    "CompositionSeries",
    "is_irreducible",
    "chop",
    "is_isomorphic",
    "is_absolutely_irreducible",
    "submodule_reps",
    "tensor",
    "dual",
    "direct_sum",
]

# Kernels of dimension k are spun exhaustively (all (p^k - 1)/(p - 1) lines)
# only while p^k stays below this bound; otherwise a fresh theta is drawn.
_LINE_BUDGET = 2000
_MAX_ATTEMPTS = 400


@dataclass(frozen=True)
class ModuleRep:
    """Generator-to-matrix assignment over F_p."""

    gens: tuple
    p: int
    group_tag: str = ""

    def __post_init__(self):
        gens = tuple(ff.as_fq(g, self.p) for g in self.gens)
        if not gens:
            raise ValueError("a module needs at least one generator")
        d = gens[0].shape[0]
        for g in gens:
            if g.shape != (d, d):
                raise ValueError("generators must be square matrices of equal size")
        object.__setattr__(self, "gens", gens)

    @property
    def dim(self) -> int:
        return self.gens[0].shape[0]


@dataclass(frozen=True)
class Irreducible:
    kernel_line: np.ndarray | None = None
    theta_word: tuple = ()

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Reducible:
    subspace: np.ndarray  # columns span a proper nonzero invariant subspace

    def __bool__(self):
        return False


@dataclass
class CompositionSeries:
    factors: list = field(default_factory=list)  # (ModuleRep, multiplicity)

    def dims(self) -> list[int]:
        return sorted(f.dim for f, mult in self.factors for _ in range(mult))


def _lines(basis: np.ndarray, p: int):
    """One representative vector for every line in the column span of ``basis``."""
    k = basis.shape[1]
    for coeffs in itertools.product(range(p), repeat=k):
        nz = [c for c in coeffs if c]
        if not nz or nz[0] != 1:
            continue
        yield (basis @ np.array(coeffs, dtype=np.int64)) % p


def _random_algebra_element(gens, p, rng, d):
    """A random linear combination of a few random group words."""
    words = []
    cur = ff.identity(d)
    for _ in range(3 + d):
        cur = (cur @ gens[int(rng.integers(len(gens)))]) % p
        words.append(cur)
    theta = np.zeros((d, d), dtype=np.int64)
    for w in words:
        theta = (theta + int(rng.integers(p)) * w) % p
    return theta


def is_irreducible(m: ModuleRep, rng_seed: int = 0):
    """Return ``Irreducible(...)`` or ``Reducible(subspace)``; never guesses."""
    d, p = m.dim, m.p
    if d == 1:
        return Irreducible()
    rng = np.random.default_rng(rng_seed)
    gens_t = [g.T.copy() for g in m.gens]
    for _ in range(_MAX_ATTEMPTS):
        theta = _random_algebra_element(m.gens, p, rng, d)
        for lam in range(p):
            shifted = (theta - lam * ff.identity(d)) % p
            right = ff.kernel(shifted, p)
            k = right.shape[1]
            if k == 0 or p**k > _LINE_BUDGET:
                continue
            left = ff.kernel(shifted.T, p)
            for v in _lines(right, p):
                sub = ff.spin(v, m.gens, p)
                if sub.shape[1] < d:
                    return Reducible(sub)
            for w in _lines(left, p):
                dual_sub = ff.spin(w, gens_t, p)
                if dual_sub.shape[1] < d:
                    # annihilator of an invariant subspace of the dual
                    return Reducible(ff.kernel(dual_sub.T, p))
            return Irreducible(kernel_line=right[:, 0].copy())
    raise RuntimeError("no usable algebra element found; raise _MAX_ATTEMPTS")


def submodule_reps(m: ModuleRep, sub: np.ndarray) -> tuple[ModuleRep, ModuleRep]:
    """Actions on an invariant subspace and on the corresponding quotient."""
    p, d = m.p, m.dim
    k = sub.shape[1]
    ech = ff.Echelon(d, p)
    for j in range(k):
        ech.add(sub[:, j])
    comp = [e for e in ff.identity(d) if ech.add(e)]
    basis = np.concatenate([sub, np.array(comp, dtype=np.int64).T.reshape(d, -1)], axis=1)
    binv = ff.invert(basis, p)
    conj = [(binv @ g @ basis) % p for g in m.gens]
    if any(c[k:, :k].any() for c in conj):
        raise ValueError("subspace is not invariant")
    return (
        ModuleRep(tuple(c[:k, :k] for c in conj), p, m.group_tag),
        ModuleRep(tuple(c[k:, k:] for c in conj), p, m.group_tag),
    )


def _irreducible_factors(m: ModuleRep, rng_seed: int) -> list[ModuleRep]:
    stack, out = [m], []
    while stack:
        cur = stack.pop()
        verdict = is_irreducible(cur, rng_seed)
        if verdict:
            out.append(cur)
        else:
            sub, quo = submodule_reps(cur, verdict.subspace)
            stack.extend([quo, sub])
    return out


def chop(m: ModuleRep, rng_seed: int = 0) -> CompositionSeries:
    """Composition factors of ``m`` with multiplicities (isomorphism classes)."""
    series = CompositionSeries()
    for f in _irreducible_factors(m, rng_seed):
        for i, (g, mult) in enumerate(series.factors):
            if is_isomorphic(f, g) is not None:
                series.factors[i] = (g, mult + 1)
                break
        else:
            series.factors.append((f, 1))
    return series


def is_isomorphic(a: ModuleRep, b: ModuleRep):
    """Invertible intertwiner ``X`` with ``X a_i = b_i X``, or None.

    The search over the homomorphism space is exhaustive whenever it has at
    most a few thousand elements, which covers every irreducible input.
    """
    if a.dim != b.dim or a.p != b.p or len(a.gens) != len(b.gens):
        return None
    p = a.p
    hom = ff.solve_sylvester_family(list(zip(a.gens, b.gens)), p)
    if not hom:
        return None
    if p ** len(hom) <= _LINE_BUDGET:
        candidates = (
            sum(c * h for c, h in zip(coeffs, hom)) % p
            for coeffs in itertools.product(range(p), repeat=len(hom))
        )
    else:
        rng = np.random.default_rng(0)
        candidates = (
            sum(int(rng.integers(p)) * h for h in hom) % p for _ in range(_LINE_BUDGET)
        )
    for x in candidates:
        if ff.rank(x, p) == a.dim:
            return x
    return None


def is_absolutely_irreducible(m: ModuleRep) -> bool:
    if not is_irreducible(m):
        raise ValueError("is_absolutely_irreducible expects an irreducible module")
    return len(ff.solve_sylvester_family([(g, g) for g in m.gens], m.p)) == 1


def tensor(a: ModuleRep, b: ModuleRep) -> ModuleRep:
    return ModuleRep(tuple(np.kron(x, y) % a.p for x, y in zip(a.gens, b.gens)), a.p, a.group_tag)


def dual(m: ModuleRep) -> ModuleRep:
    """Contragredient: ``g`` acts by the inverse transpose."""
    return ModuleRep(tuple(ff.invert(g, m.p).T for g in m.gens), m.p, m.group_tag)


def direct_sum(a: ModuleRep, b: ModuleRep) -> ModuleRep:
    gens = []
    for x, y in zip(a.gens, b.gens):
        z = np.zeros((a.dim + b.dim,) * 2, dtype=np.int64)
        z[: a.dim, : a.dim] = x
        z[a.dim :, a.dim :] = y
        gens.append(z)
    return ModuleRep(tuple(gens), a.p, a.group_tag)
