"""The finite group GL(n, F_p), its standard parabolics, and the invariants of
its irreducible mod-p representations.

Elements are materialised once and addressed by integer index; a matrix maps
to its index through a base-p code.  Representations are realised as a full
table of images (one ``d x d`` matrix per group element) computed along a
breadth-first spanning tree of the Cayley graph, so every check here is an
honest scan over the whole group.

Simple roots are numbered 1..n-1 (``alpha_i = e_i - e_{i+1}``) and a subset
``J`` of them is a ``frozenset`` of those integers.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import ff
from .meataxe import ModuleRep, chop, dual, is_absolutely_irreducible, is_isomorphic, tensor

__all__ = [
    "ParameterContradiction",
    "FiniteGL",
    "RepTable",
    "IrreducibleData",
    "build_gl",
    "blocks_of",
    "all_subsets",
    "fixed_space",
    "coinvariants",
    "parameters",
    "classify_all",
    "special_rep",
    "contragredient",
    "check_duality",
    "is_M_regular",
    "is_M_coregular",
    "deck_split",
    "weight_support",
    "rregu_conditions",
    "rregu_equivalence",
    "sym_power_matrix",
    "sym_det_rep",
]

MAX_ORDER = 10_000


class ParameterContradiction(AssertionError):
    """An exhaustive check disagreed with a statement it was meant to confirm."""


def gl_order(n: int, p: int) -> int:
    out = 1
    for i in range(n):
        out *= p**n - p**i
    return out


def blocks_of(n: int, J) -> list[int]:
    """Block label of each coordinate: i and i+1 share a block iff i+1 is in J."""
    labels = [0]
    for i in range(1, n):
        labels.append(labels[-1] + (0 if i in J else 1))
    return labels


def all_subsets(n: int, proper: bool = False) -> list[frozenset]:
    roots = range(1, n)
    out = [frozenset(c) for r in range(n) for c in itertools.combinations(roots, r)]
    if proper:
        out = [J for J in out if len(J) < n - 1]
    return out


def _primitive_root(p: int) -> int:
    for w in range(1, p):
        if len({pow(w, e, p) for e in range(1, p)}) == p - 1:
            return w
    raise ValueError(p)


def elementary(n: int, i: int, j: int, c: int = 1) -> np.ndarray:
    x = np.eye(n, dtype=np.int64)
    x[i, j] = c
    return x


class FiniteGL:
    """All of GL(n, F_p), with index lookup and a fixed generating set.

    The generators are the transvections ``1 + E_{i,i+1}``, ``1 + E_{i+1,i}``
    and, for p > 2, ``diag(w, 1, ..., 1)`` with ``w`` a primitive root.
    """

    def __init__(self, n: int, p: int):
        ff.check_prime(p)
        order = gl_order(n, p)
        if order > MAX_ORDER:
            raise ValueError(f"|GL({n},{p})| = {order} exceeds the materialisation cap {MAX_ORDER}")
        self.n, self.p = n, p
        self.tag = f"GL({n},{p})"
        self.omega = _primitive_root(p)
        self._weights = p ** np.arange(n * n, dtype=np.int64)
        gens = [elementary(n, i, i + 1) for i in range(n - 1)]
        gens += [elementary(n, i + 1, i) for i in range(n - 1)]
        if p > 2:
            d = np.eye(n, dtype=np.int64)
            d[0, 0] = self.omega
            gens.append(d)
        self.gens = gens
        self._build(order)

    def _build(self, order: int) -> None:
        n, p = self.n, self.p
        lookup = np.full(p ** (n * n), -1, dtype=np.int64)
        elems = [np.eye(n, dtype=np.int64)]
        lookup[self.code(elems[0])] = 0
        parent, via = [-1], [-1]
        frontier = [0]
        while frontier:
            nxt = []
            for i in frontier:
                for s, g in enumerate(self.gens):
                    y = (elems[i] @ g) % p
                    c = self.code(y)
                    if lookup[c] < 0:
                        lookup[c] = len(elems)
                        elems.append(y)
                        parent.append(i)
                        via.append(s)
                        nxt.append(len(elems) - 1)
            frontier = nxt
        if len(elems) != order:
            raise RuntimeError("generators failed to produce the whole group")
        self.elements = np.array(elems)
        self.lookup = lookup
        self.parent = np.array(parent)
        self.via = np.array(via)
        self.right_gen = np.array(
            [self.indices(self.elements @ g % p) for g in self.gens]
        )

    def __len__(self) -> int:
        return len(self.elements)

    def code(self, m) -> int:
        return int((np.asarray(m, dtype=np.int64).reshape(-1) % self.p) @ self._weights)

    def index(self, m) -> int:
        i = int(self.lookup[self.code(m)])
        if i < 0:
            raise ValueError("matrix is not invertible over F_p")
        return i

    def indices(self, stack) -> np.ndarray:
        stack = np.asarray(stack, dtype=np.int64) % self.p
        codes = stack.reshape(len(stack), -1) @ self._weights
        return self.lookup[codes]

    def left_mult(self, h) -> np.ndarray:
        """Permutation ``i -> index(h @ elements[i])``."""
        return self.indices(np.einsum("ab,nbc->nac", np.asarray(h) % self.p, self.elements))

    def right_mult(self, h) -> np.ndarray:
        return self.indices(self.elements @ (np.asarray(h) % self.p))

    # -- subgroups, as boolean masks over the element list -----------------

    def parabolic_mask(self, J, opposite: bool = False) -> np.ndarray:
        b = np.array(blocks_of(self.n, J))
        bad = (b[:, None] < b[None, :]) if opposite else (b[:, None] > b[None, :])
        return ~(self.elements[:, bad] != 0).any(axis=1)

    def levi_mask(self, J) -> np.ndarray:
        b = np.array(blocks_of(self.n, J))
        return ~(self.elements[:, b[:, None] != b[None, :]] != 0).any(axis=1)

    def unipotent_mask(self, J, opposite: bool = False) -> np.ndarray:
        b = np.array(blocks_of(self.n, J))
        same = b[:, None] == b[None, :]
        eye = np.eye(self.n, dtype=np.int64)
        ok = (self.elements[:, same] == eye[same]).all(axis=1)
        bad = (b[:, None] < b[None, :]) if opposite else (b[:, None] > b[None, :])
        return ok & ~(self.elements[:, bad] != 0).any(axis=1)

    def torus_mask(self) -> np.ndarray:
        return self.levi_mask(frozenset())

    def unipotent_gens(self, J, opposite: bool = False) -> list[np.ndarray]:
        b = blocks_of(self.n, J)
        out = []
        for r in range(self.n):
            for c in range(self.n):
                if (b[r] > b[c]) if opposite else (b[r] < b[c]):
                    out.append(elementary(self.n, r, c))
        return out

    def torus_gens(self) -> list[np.ndarray]:
        if self.p == 2:
            return []
        out = []
        for i in range(self.n):
            d = np.eye(self.n, dtype=np.int64)
            d[i, i] = self.omega
            out.append(d)
        return out

    def levi_gens(self, J) -> list[np.ndarray]:
        out = self.torus_gens()
        for i in sorted(J):
            out += [elementary(self.n, i - 1, i), elementary(self.n, i, i - 1)]
        return out or [np.eye(self.n, dtype=np.int64)]

    def parabolic_gens(self, J, opposite: bool = False) -> list[np.ndarray]:
        return self.levi_gens(J) + self.unipotent_gens(J, opposite)

    def double_coset_closure(self, mask, left_gens, right_gens) -> np.ndarray:
        """Smallest set containing ``mask`` stable under left/right generator products."""
        perms = [self.left_mult(h) for h in left_gens] + [self.right_mult(h) for h in right_gens]
        out = mask.copy()
        frontier = np.nonzero(out)[0]
        while frontier.size:
            new = np.zeros(len(self), dtype=bool)
            for perm in perms:
                new[perm[frontier]] = True
            new &= ~out
            out |= new
            frontier = np.nonzero(new)[0]
        return out

    # -- Weyl group --------------------------------------------------------

    def weyl(self) -> list[tuple[int, ...]]:
        return list(itertools.permutations(range(self.n)))

    def perm_matrix(self, w) -> np.ndarray:
        """Matrix sending e_j to e_{w[j]}."""
        m = np.zeros((self.n, self.n), dtype=np.int64)
        for j, wj in enumerate(w):
            m[wj, j] = 1
        return m

    @cached_property
    def w0(self) -> np.ndarray:
        return self.perm_matrix(tuple(reversed(range(self.n))))

    # -- conjugacy classes ---------------------------------------------------

    @cached_property
    def conjugacy_classes(self) -> list[np.ndarray]:
        inv = [ff.invert(g, self.p) for g in self.gens]
        conj = [self.right_mult(g)[self.left_mult(gi)] for g, gi in zip(self.gens, inv)]
        label = np.full(len(self), -1)
        classes = []
        for start in range(len(self)):
            if label[start] >= 0:
                continue
            members = [start]
            label[start] = len(classes)
            i = 0
            while i < len(members):
                for c in conj:
                    y = int(c[members[i]])
                    if label[y] < 0:
                        label[y] = len(classes)
                        members.append(y)
                i += 1
            classes.append(np.array(sorted(members)))
        return classes

    def element_order(self, i: int) -> int:
        g = self.elements[i]
        x, k = g.copy(), 1
        eye = np.eye(self.n, dtype=np.int64)
        while not np.array_equal(x, eye):
            x = (x @ g) % self.p
            k += 1
        return k

    def p_regular_class_count(self) -> int:
        return sum(1 for cl in self.conjugacy_classes if self.element_order(int(cl[0])) % self.p)


def build_gl(n: int, p: int) -> FiniteGL:
    return FiniteGL(n, p)


class RepTable:
    """Images of every group element under a representation."""

    def __init__(self, group: FiniteGL, rep: ModuleRep, verify: bool = True):
        if len(rep.gens) != len(group.gens):
            raise ValueError("representation generators do not match the group's")
        self.group, self.rep, self.p = group, rep, rep.p
        d = rep.dim
        imgs = np.zeros((len(group), d, d), dtype=np.int64)
        imgs[0] = np.eye(d, dtype=np.int64)
        for i in range(1, len(group)):
            imgs[i] = imgs[group.parent[i]] @ rep.gens[group.via[i]] % self.p
        self.images = imgs
        if verify:
            for s, g in enumerate(rep.gens):
                if not np.array_equal(imgs @ g % self.p, imgs[group.right_gen[s]]):
                    raise ValueError("generator assignment does not extend to a homomorphism")

    @property
    def dim(self) -> int:
        return self.rep.dim

    def __call__(self, g) -> np.ndarray:
        return self.images[self.group.index(g)]


# -- representation constructors -----------------------------------------------


def det_mod_p(g, p: int) -> int:
    g = np.asarray(g, dtype=np.int64)
    n = g.shape[0]
    total = 0
    for perm in itertools.permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        term = sign
        for i in range(n):
            term *= int(g[i, perm[i]])
        total += term
    return total % p


def det_rep(group: FiniteGL, m: int) -> ModuleRep:
    p = group.p
    e = m % (p - 1) if p > 2 else 0
    gens = [np.array([[pow(det_mod_p(g, p), e, p)]]) for g in group.gens]
    return ModuleRep(tuple(gens), p, group.tag)


def _monomials(n: int, r: int) -> list[tuple[int, ...]]:
    return [e for e in itertools.product(range(r + 1), repeat=n) if sum(e) == r][::-1]


def sym_power_matrix(g, r: int, p: int) -> np.ndarray:
    """Action of ``g`` on degree-r polynomials in ``x_1..x_n`` (x_j -> sum_i g_ij x_i)."""
    g = np.asarray(g, dtype=np.int64) % p
    n = g.shape[0]
    mons = _monomials(n, r)
    pos = {m: i for i, m in enumerate(mons)}
    out = np.zeros((len(mons), len(mons)), dtype=np.int64)
    for col, mon in enumerate(mons):
        poly = {tuple([0] * n): 1}
        for j, e in enumerate(mon):
            for _ in range(e):
                nxt: dict = {}
                for key, c in poly.items():
                    for i in range(n):
                        if g[i, j]:
                            k2 = list(key)
                            k2[i] += 1
                            k2 = tuple(k2)
                            nxt[k2] = (nxt.get(k2, 0) + c * g[i, j]) % p
                poly = nxt
        for key, c in poly.items():
            out[pos[key], col] = (out[pos[key], col] + c) % p
    return out


def sym_det_rep(group: FiniteGL, r: int, m: int) -> ModuleRep:
    """Sym^r of the natural module twisted by det^m."""
    sym = ModuleRep(tuple(sym_power_matrix(g, r, group.p) for g in group.gens), group.p, group.tag)
    return tensor(sym, det_rep(group, m))


def natural_rep(group: FiniteGL) -> ModuleRep:
    return ModuleRep(tuple(group.gens), group.p, group.tag)


def trivial_rep(group: FiniteGL) -> ModuleRep:
    return ModuleRep(tuple(np.eye(1, dtype=np.int64) for _ in group.gens), group.p, group.tag)


def permutation_rep(group: FiniteGL, J) -> ModuleRep:
    """Permutation module on the cosets G/P_J."""
    pmask = group.parabolic_mask(J)
    label = np.full(len(group), -1)
    pel = group.elements[pmask]
    reps = []
    for i in range(len(group)):
        if label[i] < 0:
            label[group.indices(group.elements[i] @ pel % group.p)] = len(reps)
            reps.append(i)
    gens = []
    for g in group.gens:
        img = group.left_mult(g)
        m = np.zeros((len(reps), len(reps)), dtype=np.int64)
        for c, i in enumerate(reps):
            m[label[img[i]], c] = 1
        gens.append(m)
    return ModuleRep(tuple(gens), group.p, group.tag)


# -- fixed vectors and coinvariants --------------------------------------------


def fixed_space(table: RepTable, gens) -> np.ndarray:
    """Basis (columns) of the vectors fixed by every element of ``gens``."""
    d, p = table.dim, table.p
    mats = [(table(g) - np.eye(d, dtype=np.int64)) % p for g in gens]
    if not mats:
        return np.eye(d, dtype=np.int64)
    return ff.kernel(np.concatenate(mats, axis=0), p)


def augmentation_span(table: RepTable, gens) -> np.ndarray:
    """Basis of span{(g - 1)v}; equals the span over the generated group."""
    d, p = table.dim, table.p
    if not gens:
        return np.zeros((d, 0), dtype=np.int64)
    mats = [(table(g) - np.eye(d, dtype=np.int64)) % p for g in gens]
    return ff.column_space(np.concatenate(mats, axis=1), p)


def coinvariants(table: RepTable, gens) -> tuple[int, np.ndarray]:
    """``(quotient_dim, pi)`` where ``pi`` is a ``q x d`` surjection killing span{(g-1)v}."""
    aug = augmentation_span(table, gens)
    if aug.shape[1] == 0:
        return table.dim, np.eye(table.dim, dtype=np.int64)
    pi = ff.kernel(aug.T, table.p).T
    return pi.shape[0], pi


# -- parameters ---------------------------------------------------------------


def _line_stabilizer(table: RepTable, v) -> np.ndarray:
    p = table.p
    v = np.asarray(v, dtype=np.int64) % p
    w = table.images @ v % p
    c = int(np.nonzero(v)[0][0])
    return ~((w * v[c] - np.outer(w[:, c], v)) % p).any(axis=1)


def _match_parabolic(group: FiniteGL, mask, opposite: bool = False):
    for J in all_subsets(group.n):
        if np.array_equal(mask, group.parabolic_mask(J, opposite)):
            return J
    return None


def _dlog(x: int, omega: int, p: int) -> int:
    for e in range(p - 1):
        if pow(omega, e, p) == x % p:
            return e
    raise ValueError(x)


def _character_on_line(table: RepTable, v) -> tuple[int, ...]:
    """Exponents c with t·v = prod t_i^{c_i} v for diagonal t."""
    group, p = table.group, table.p
    if p == 2:
        return (0,) * group.n
    v = np.asarray(v) % p
    c = int(np.nonzero(v)[0][0])
    out = []
    for d in group.torus_gens():
        w = table(d) @ v % p
        out.append(_dlog(int(w[c]) * ff.scalar_inverse(int(v[c]), p), group.omega, p))
    return tuple(out)


def _char_value(exps, diag, p: int) -> int:
    out = 1
    for a, c in zip(diag, exps):
        out = out * pow(int(a), c, p) % p
    return out


def delta_of_character(exps, n: int, p: int) -> frozenset:
    """Simple roots a with the character trivial on T_a = {diag(..,x,x^-1,..)}."""
    out = set()
    for i in range(1, n):
        ok = True
        for x in range(1, p):
            diag = [1] * n
            diag[i - 1] = x
            diag[i] = ff.scalar_inverse(x, p)
            if _char_value(exps, diag, p) != 1:
                ok = False
                break
        if ok:
            out.add(i)
    return frozenset(out)


@dataclass
class IrreducibleData:
    rep: ModuleRep
    table: RepTable
    psi: tuple
    delta_psi: frozenset
    delta_V: frozenset
    u_line: np.ndarray
    coregular_cache: dict = field(default_factory=dict)
    label: str = ""

    @property
    def group(self) -> FiniteGL:
        return self.table.group

    @property
    def dim(self) -> int:
        return self.rep.dim

    def key(self) -> tuple:
        return (self.psi, tuple(sorted(self.delta_V)))

    @cached_property
    def ubar_line(self) -> np.ndarray:
        fixed = fixed_space(self.table, self.group.unipotent_gens(frozenset(), opposite=True))
        if fixed.shape[1] != 1:
            raise ParameterContradiction("lower-unipotent fixed space is not a line")
        return fixed[:, 0]

    @cached_property
    def stabilizer(self) -> np.ndarray:
        return _line_stabilizer(self.table, self.u_line)

    @cached_property
    def opposite_stabilizer(self) -> np.ndarray:
        return _line_stabilizer(self.table, self.ubar_line)


def parameters(group: FiniteGL, rep: ModuleRep, table: RepTable | None = None) -> IrreducibleData:
    """(psi_V, Delta_psi, Delta_V) of an absolutely irreducible representation."""
    table = table or RepTable(group, rep)
    fixed = fixed_space(table, group.unipotent_gens(frozenset()))
    if fixed.shape[1] != 1:
        raise ParameterContradiction(f"upper-unipotent fixed space has dimension {fixed.shape[1]}")
    line = fixed[:, 0]
    psi = _character_on_line(table, line) if group.p > 2 else (0,) * group.n
    psi = tuple(c % max(group.p - 1, 1) for c in psi)
    stab = _line_stabilizer(table, line)
    J = _match_parabolic(group, stab)
    if J is None:
        raise ParameterContradiction("stabilizer of the fixed line is not a standard parabolic")
    dpsi = delta_of_character(psi, group.n, group.p)
    if not J <= dpsi:
        raise ParameterContradiction("Delta_V is not contained in Delta_psi")
    return IrreducibleData(rep, table, psi, dpsi, J, line)


# -- classification ---------------------------------------------------------------


def classify_all(group: FiniteGL, rng_seed: int = 0) -> list[IrreducibleData]:
    """All irreducibles up to isomorphism, checked against the p-regular class count.

    Seeds are det twists, the natural module and its dual, and permutation
    modules on G/P_J; the inventory is closed under tensoring with the
    natural module, which reaches every factor of every tensor power.
    """
    target = group.p_regular_class_count()
    nat = natural_rep(group)
    dets = [det_rep(group, m) for m in range(max(group.p - 1, 1))]
    seeds = list(dets) + [tensor(nat, d) for d in dets] + [dual(nat)]
    seeds += [permutation_rep(group, J) for J in all_subsets(group.n, proper=True)]
    found: list[ModuleRep] = []
    queue = list(seeds)
    while queue and len(found) < target:
        mod = queue.pop(0)
        for f, _ in chop(mod, rng_seed).factors:
            if any(f.dim == g.dim and is_isomorphic(f, g) is not None for g in found):
                continue
            found.append(f)
            queue.append(tensor(f, nat))
    if len(found) != target:
        raise RuntimeError(f"found {len(found)} irreducibles, expected {target}; enlarge the seeds")
    out = []
    for f in found:
        if not is_absolutely_irreducible(f):
            raise ParameterContradiction("a composition factor is not absolutely irreducible")
        out.append(parameters(group, f))
    out.sort(key=lambda d: (d.dim, d.psi, sorted(d.delta_V)))
    keys = [d.key() for d in out]
    expected = {
        (psi, tuple(sorted(J)))
        for psi in _all_characters(group.n, group.p)
        for J in all_subsets(group.n)
        if J <= delta_of_character(psi, group.n, group.p)
    }
    if len(set(keys)) != len(keys) or set(keys) != expected:
        raise ParameterContradiction("parameters are not a bijection onto {(psi, J <= Delta_psi)}")
    for i, d in enumerate(out):
        d.label = f"#{i}"
    return out


def _all_characters(n: int, p: int):
    return itertools.product(range(max(p - 1, 1)), repeat=n) if p > 2 else [(0,) * n]


def special_rep(classified: list[IrreducibleData], J) -> IrreducibleData:
    J = frozenset(J)
    for d in classified:
        if not any(d.psi) and d.delta_V == J:
            return d
    raise LookupError(J)


# -- duality ------------------------------------------------------------------------


def contragredient(rep: ModuleRep) -> ModuleRep:
    return dual(rep)


def w0_character(psi) -> tuple:
    return tuple(reversed(psi))


def minus_w0(J, n: int) -> frozenset:
    return frozenset(n - i for i in J)


def check_duality(data: IrreducibleData) -> dict:
    """Parameters of V* and of the lower-unipotent line, against the duality lemmas."""
    group = data.group
    q = max(group.p - 1, 1)
    star = parameters(group, contragredient(data.rep))
    want_psi = tuple((-c) % q for c in w0_character(data.psi))
    want_delta = minus_w0(data.delta_V, group.n)
    bar_psi = tuple(c % q for c in _character_on_line(data.table, data.ubar_line))
    w0 = group.w0
    conj_stab = np.zeros(len(group), dtype=bool)
    conj_stab[group.indices(w0 @ group.elements[data.stabilizer] @ w0 % group.p)] = True
    report = {
        "dual_psi": star.psi == want_psi,
        "dual_delta": star.delta_V == want_delta,
        "opposite_psi": bar_psi == w0_character(data.psi),
        "opposite_stabilizer": bool(np.array_equal(conj_stab, data.opposite_stabilizer)),
        "witness": {"psi_dual": star.psi, "delta_dual": sorted(star.delta_V)},
    }
    if not all(v for k, v in report.items() if k != "witness"):
        raise ParameterContradiction(f"duality check failed: {report}")
    return report


# -- regularity ------------------------------------------------------------------------


def is_M_regular(data: IrreducibleData, J) -> bool:
    pm = data.group.parabolic_mask(J)
    return bool(not (data.stabilizer & ~pm).any())


def nonvanishing_set(data: IrreducibleData, source: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Mask of g with pi(g · span(source)) != 0."""
    p = data.table.p
    return (np.einsum("qd,nde,ek->nqk", pi, data.table.images, source) % p).reshape(len(data.group), -1).any(axis=1)


def is_M_coregular(data: IrreducibleData, J) -> bool:
    """Lower-unipotent line stabilizer inside the opposite parabolic, decided twice.

    Route (a) compares stabilizers directly.  Route (b) scans g for a nonzero
    image of g·V^{Nbar} in V_N, checks that set is P·Pbar_V·Pbar, and asks
    whether it stays inside the big cell P·Pbar.
    """
    J = frozenset(J)
    if J in data.coregular_cache:
        return data.coregular_cache[J]
    group = data.group
    if len(J) == group.n - 1:
        raise ValueError("J must be a proper subset of the simple roots")
    direct = bool(not (data.opposite_stabilizer & ~group.parabolic_mask(J, opposite=True)).any())
    nbar_fixed = fixed_space(data.table, group.unipotent_gens(J, opposite=True))
    _, pi = coinvariants(data.table, group.unipotent_gens(J))
    nonzero = nonvanishing_set(data, nbar_fixed, pi)
    predicted = group.double_coset_closure(
        data.opposite_stabilizer, group.parabolic_gens(J), group.parabolic_gens(J, opposite=True)
    )
    if not np.array_equal(nonzero, predicted):
        raise ParameterContradiction(f"nonvanishing set differs from P·Pbar_V·Pbar for J={sorted(J)}")
    big_cell = group.double_coset_closure(
        np.eye(1, len(group), 0, dtype=bool)[0], group.parabolic_gens(J), group.parabolic_gens(J, opposite=True)
    )
    via_cells = bool(not (nonzero & ~big_cell).any())
    if via_cells != direct:
        raise ParameterContradiction(f"coregularity routes disagree for J={sorted(J)}")
    data.coregular_cache[J] = direct
    return direct


@dataclass
class DeckSplit:
    n_fixed: np.ndarray  # V^N basis (columns)
    complement: np.ndarray  # span{(1 - nbar) v}
    nbar_fixed: np.ndarray  # V^{Nbar}
    pi: np.ndarray  # V -> V_N
    phi: np.ndarray  # V_N -> V^{Nbar}, inverse of pi on V^{Nbar}


def deck_split(data: IrreducibleData, J) -> DeckSplit:
    group, table, p = data.group, data.table, data.table.p
    J = frozenset(J)
    d = table.dim
    nfix = fixed_space(table, group.unipotent_gens(J))
    comp = augmentation_span(table, group.unipotent_gens(J, opposite=True))
    if nfix.shape[1] + comp.shape[1] != d or ff.rank(np.concatenate([nfix, comp], axis=1), p) != d:
        raise ParameterContradiction("V is not V^N plus (1 - Nbar)V")
    nbfix = fixed_space(table, group.unipotent_gens(J, opposite=True))
    q, pi = coinvariants(table, group.unipotent_gens(J))
    restricted = pi @ nbfix % p
    if restricted.shape != (q, q) or ff.rank(restricted, p) != q:
        raise ParameterContradiction("V^{Nbar} -> V_N is not an isomorphism")
    phi = nbfix @ ff.invert(restricted, p) % p
    return DeckSplit(nfix, comp, nbfix, pi, phi)


def weight_support(data: IrreducibleData, J, Jp) -> list[tuple]:
    """Double cosets W_J w W_J' on which g·V^{N_J'} survives in V_{Nbar_J}.

    The full-group scan is checked against Pbar_J·P_V·P_J' and against the
    scan over permutation matrices.  Returns the sorted nonzero Weyl elements,
    one minimal representative per double coset.
    """
    group, table = data.group, data.table
    J, Jp = frozenset(J), frozenset(Jp)
    src = fixed_space(table, group.unipotent_gens(Jp))
    _, pi = coinvariants(table, group.unipotent_gens(J, opposite=True))
    nonzero = nonvanishing_set(data, src, pi)
    predicted = group.double_coset_closure(
        data.stabilizer, group.parabolic_gens(J, opposite=True), group.parabolic_gens(Jp)
    )
    if not np.array_equal(nonzero, predicted):
        raise ParameterContradiction(
            f"weight support differs from Pbar·P_V·P' (J={sorted(J)}, J'={sorted(Jp)}, Delta_V={sorted(data.delta_V)})"
        )
    closed = group.double_coset_closure(nonzero, group.parabolic_gens(J, opposite=True), group.parabolic_gens(Jp))
    if not np.array_equal(closed, nonzero):
        raise ParameterContradiction("weight support is not a union of double cosets")
    reps = {}
    for w in group.weyl():
        idx = group.index(group.perm_matrix(w))
        cell = group.double_coset_closure(
            np.eye(1, len(group), idx, dtype=bool)[0],
            group.parabolic_gens(J, opposite=True),
            group.parabolic_gens(Jp),
        )
        key = tuple(np.nonzero(cell)[0][:1])
        if bool(nonzero[idx]) != bool(nonzero[cell].all()):
            raise ParameterContradiction("Weyl representative scan disagrees with the full scan")
        if nonzero[idx] and key not in reps:
            reps[key] = w
    return sorted(reps.values())


def _weyl_levi(n: int, J) -> set:
    b = blocks_of(n, J)
    return {w for w in itertools.permutations(range(n)) if all(b[w[i]] == b[i] for i in range(n))}


def _compose(a, b):
    return tuple(a[b[i]] for i in range(len(a)))


def rregu_conditions(n: int, delta_V, J, Jp) -> dict:
    """Weyl-group and simple-root forms of the condition M_V ⊆ Pbar·P'."""
    dv, J, Jp = frozenset(delta_V), frozenset(J), frozenset(Jp)
    wv = _weyl_levi(n, dv)
    prod = {_compose(a, b) for a in _weyl_levi(n, J) for b in _weyl_levi(n, Jp)}
    left = (dv & J) - Jp
    right = (dv & Jp) - J
    orth = all(abs(a - b) > 1 for a in left for b in right)
    return {"weyl": wv <= prod, "roots": dv <= (J | Jp) and orth}


def rregu_equivalence(data: IrreducibleData, J, Jp) -> dict:
    group = data.group
    J, Jp = frozenset(J), frozenset(Jp)
    left, right = group.parabolic_gens(J, opposite=True), group.parabolic_gens(Jp)
    mv = group.levi_mask(data.delta_V)
    cell = group.double_coset_closure(np.eye(1, len(group), 0, dtype=bool)[0], left, right)
    with_pv = group.double_coset_closure(data.stabilizer, left, right)
    report = {
        "levi_in_cell": bool(not (mv & ~cell).any()),
        "cells_equal": bool(np.array_equal(cell, with_pv)),
        **rregu_conditions(group.n, data.delta_V, J, Jp),
    }
    report["consistent"] = len({report[k] for k in ("levi_in_cell", "cells_equal", "weyl", "roots")}) == 1
    return report
