"""Arithmetic in F = F_p((t)) and in GL(n, F) over the valuation ring o = F_p[[t]].

Scalars are ``LaurentScalar`` values ``t^lead * num(t) / den(t)`` with
``den(0) = 1``.  With ``prec=None`` the value is exact; this covers Laurent
polynomials and the rational functions that appear whenever a unit such as
``1 + t`` is inverted during a reduction.  With an integer ``prec`` the value is
a series known only modulo ``t^prec``; any operation that would need more than
is known raises ``PrecisionError``.

Group elements are square matrices of exact scalars.  The right coset ``K g``
(``K = GL(n, o)``) has a unique Hermite representative: upper triangular,
diagonal ``t^{a_j}``, and every entry above the diagonal in column ``j`` a
Laurent polynomial with all exponents below ``a_j``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "PrecisionError",
    "NotInKError",
    "LaurentScalar",
    "invert_unit",
    "valuation",
    "LocalGroupElement",
    "CosetKey",
    "hermite",
    "canonical_coset",
    "smith_invariants",
    "iwasawa",
    "reduce_mod_t",
    "membership",
    "positivity",
    "Positivity",
    "enum_quotient",
    "cartan_cosets",
    "double_coset_size",
]


class PrecisionError(ArithmeticError):
    """A truncated series was asked for more than it knows."""


class NotInKError(ValueError):
    """An element expected to lie in GL(n, o) does not."""


# -- polynomials over F_p, as tuples of coefficients (low degree first) ------------


def _strip(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return tuple(a)


def _padd(a, b, p):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % p
    return _strip(out)


def _pneg(a, p):
    return tuple((-c) % p for c in a)


def _pmul(a, b, p):
    if not a or not b:
        return ()
    if len(b) == 1:
        c = b[0]
        return _strip(x * c % p for x in a)
    if len(a) == 1:
        c = a[0]
        return _strip(x * c % p for x in b)
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _strip(c % p for c in out)


def _pdivmod(a, b, p):
    a = list(a)
    inv = pow(b[-1], p - 2, p)
    db = len(b) - 1
    q = [0] * max(len(a) - db, 0)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i] * inv % p
        if c:
            q[i - db] = c
            for j, y in enumerate(b):
                a[i - db + j] = (a[i - db + j] - c * y) % p
    return _strip(q), _strip(a[:db])


def _pgcd(a, b, p):
    while b:
        a, b = b, _pdivmod(a, b, p)[1]
    return a


def _monic_low(a, p):
    """Scale so the constant term is 1 (requires a[0] != 0)."""
    inv = pow(a[0], p - 2, p)
    return tuple(c * inv % p for c in a), a[0]


def _series_div(num, den, terms, p):
    """First ``terms`` coefficients of num/den as a power series (den[0] != 0)."""
    inv0 = pow(den[0], p - 2, p)
    rem = list(num) + [0] * max(0, terms - len(num))
    out = []
    for i in range(terms):
        c = rem[i] * inv0 % p
        out.append(c)
        if c:
            for j in range(1, len(den)):
                if i + j < len(rem):
                    rem[i + j] = (rem[i + j] - c * den[j]) % p
                else:
                    break
    return out


class LaurentScalar:
    """``t^lead * num / den`` over F_p, exact (``prec=None``) or known mod ``t^prec``."""

    __slots__ = ("p", "lead", "num", "den", "prec")

    def __init__(self, p, num=(), lead=0, den=(1,), prec=None, _normal=False):
        self.p = p
        self.prec = prec
        if _normal:
            self.num, self.den, self.lead = num, den, lead
            return
        num = _strip(c % p for c in num)
        den = _strip(c % p for c in den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            self.num, self.den, self.lead = (), (1,), 0
            return
        k = next(i for i, c in enumerate(num) if c)
        num, lead = num[k:], lead + k
        k = next(i for i, c in enumerate(den) if c)
        den, lead = den[k:], lead - k
        if len(den) > 1:
            g = _pgcd(num, den, p)
            if len(g) > 1:
                num = _pdivmod(num, g, p)[0]
                den = _pdivmod(den, g, p)[0]
        den, c = _monic_low(den, p)
        if c != 1:
            inv = pow(c, p - 2, p)
            num = tuple(x * inv % p for x in num)
        if prec is not None:
            if len(den) > 1:
                num = tuple(_series_div(num, den, max(prec - lead, 0), p))
                den = (1,)
            num = _strip(num[: max(prec - lead, 0)])
            if not num:
                lead = 0
            else:
                k = next(i for i, c in enumerate(num) if c)
                num, lead = num[k:], lead + k
        self.num, self.den, self.lead = num, den, lead

    # -- constructors ------------------------------------------------------

    @classmethod
    def const(cls, p, c):
        return cls(p, (c % p,))

    @classmethod
    def monomial(cls, p, e, c=1):
        return cls(p, (c % p,), e)

    @classmethod
    def poly(cls, p, coeffs: dict):
        """From ``{exponent: coefficient}``."""
        if not coeffs:
            return cls(p)
        lo, hi = min(coeffs), max(coeffs)
        return cls(p, tuple(coeffs.get(e, 0) for e in range(lo, hi + 1)), lo)

    # -- basic queries -------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    @property
    def exact(self) -> bool:
        return self.prec is None

    @property
    def is_polynomial(self) -> bool:
        return self.den == (1,)

    @property
    def coeffs(self) -> tuple:
        if not self.is_polynomial:
            raise ValueError("not a Laurent polynomial; use expand()")
        return self.num

    def valuation(self) -> float:
        if not self.num:
            if self.prec is None:
                return float("inf")
            raise PrecisionError("valuation of a series that is zero to its precision")
        return self.lead

    def expand(self, upto: int) -> dict:
        """Coefficients of all exponents < ``upto`` as ``{exponent: coeff}``."""
        if self.prec is not None and upto > self.prec:
            raise PrecisionError(f"need t^{upto}, known to t^{self.prec}")
        if not self.num or upto <= self.lead:
            return {}
        terms = upto - self.lead
        cs = self.num[:terms] if self.is_polynomial else _series_div(self.num, self.den, terms, self.p)
        return {self.lead + i: c for i, c in enumerate(cs) if c}

    def truncate(self, upto: int) -> "LaurentScalar":
        """Exact Laurent polynomial keeping exponents < ``upto``."""
        return LaurentScalar.poly(self.p, self.expand(upto))

    def residue(self) -> int:
        """Constant term of an integral element."""
        v = self.valuation()
        if v < 0:
            raise NotInKError("element is not integral")
        return self.expand(1).get(0, 0)

    def key(self):
        if self.prec is not None:
            return (self.lead, self.num, "prec", self.prec)
        return (self.lead, self.num, self.den)

    def __eq__(self, other):
        if not isinstance(other, LaurentScalar):
            return NotImplemented
        if self.prec is None and other.prec is None:
            return self.key() == other.key()
        return (self - other).is_zero()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        if not self.num:
            return "0" if self.prec is None else f"O(t^{self.prec})"
        def fmt(cs, lead):
            return " + ".join(f"{c}*t^{lead + i}" for i, c in enumerate(cs) if c)
        s = fmt(self.num, self.lead)
        if self.den != (1,):
            s = f"({s}) / ({fmt(self.den, 0)})"
        if self.prec is not None:
            s += f" + O(t^{self.prec})"
        return s

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, LaurentScalar):
            return other
        return LaurentScalar.const(self.p, int(other))

    def __neg__(self):
        return LaurentScalar(self.p, _pneg(self.num, self.p), self.lead, self.den, self.prec, _normal=True)

    def __add__(self, other):
        other = self._coerce(other)
        p = self.p
        if not other.num and other.prec is None:
            return self
        if not self.num and self.prec is None:
            return other
        prec = _min_prec(self.prec, other.prec)
        lo = min(self.lead, other.lead)
        if self.den == (1,) and other.den == (1,):
            a = (0,) * (self.lead - lo) + self.num
            b = (0,) * (other.lead - lo) + other.num
            return LaurentScalar(p, _padd(a, b, p), lo, (1,), prec)
        a = _pmul((0,) * (self.lead - lo) + self.num, other.den, p)
        b = _pmul((0,) * (other.lead - lo) + other.num, self.den, p)
        return LaurentScalar(p, _padd(a, b, p), lo, _pmul(self.den, other.den, p), prec)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        p = self.p
        prec = None
        if self.prec is not None or other.prec is not None:
            cands = []
            if self.prec is not None:
                cands.append(self.prec + _val_or(other))
            if other.prec is not None:
                cands.append(other.prec + _val_or(self))
            prec = min(cands)
        if not self.num or not other.num:
            return LaurentScalar(p, (), 0, (1,), prec)
        num = _pmul(self.num, other.num, p)
        if self.den == (1,) and other.den == (1,):
            return LaurentScalar(p, num, self.lead + other.lead, (1,), prec, _normal=prec is None)
        return LaurentScalar(p, num, self.lead + other.lead, _pmul(self.den, other.den, p), prec)

    __rmul__ = __mul__

    def inverse(self) -> "LaurentScalar":
        if self.prec is not None:
            return invert_unit(self, self.prec - 2 * self.lead)
        if not self.num:
            raise ZeroDivisionError("inverse of 0")
        return LaurentScalar(self.p, self.den, -self.lead, self.num)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def shift(self, e: int) -> "LaurentScalar":
        """Multiply by t^e."""
        if not self.num:
            return LaurentScalar(self.p, (), 0, (1,), None if self.prec is None else self.prec + e)
        return LaurentScalar(
            self.p, self.num, self.lead + e, self.den, None if self.prec is None else self.prec + e, _normal=True
        )


def _min_prec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _val_or(x: LaurentScalar):
    if not x.num:
        return x.prec if x.prec is not None else 10**9
    return x.lead


def valuation(x: LaurentScalar):
    return x.valuation()


def invert_unit(x: LaurentScalar, target_prec: int) -> LaurentScalar:
    """Inverse of ``x = t^v * u`` as a series known modulo ``t^target_prec``."""
    if not x.num:
        raise ZeroDivisionError("cannot invert zero")
    v = x.lead
    need_rel = target_prec + v  # relative precision of x^{-1} that is requested
    if x.prec is not None and x.prec - v < need_rel:
        raise PrecisionError(f"inverse to t^{target_prec} needs x to t^{need_rel + v}")
    terms = max(need_rel, 0)
    cs = _series_div(x.den, x.num, terms, x.p)
    return LaurentScalar(x.p, tuple(cs), -v, (1,), target_prec)


# -- matrices over F ----------------------------------------------------------------


def _zero(p):
    return LaurentScalar(p)


def _one(p):
    return LaurentScalar(p, (1,), 0, (1,), None, _normal=True)


class LocalGroupElement:
    """Invertible n x n matrix over F with exact entries."""

    __slots__ = ("p", "n", "rows", "_key", "_det_val")

    def __init__(self, rows, p: int):
        self.p = p
        self.rows = tuple(tuple(x if isinstance(x, LaurentScalar) else LaurentScalar.const(p, x) for x in r) for r in rows)
        self.n = len(self.rows)
        self._key = None
        self._det_val = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls, n, p):
        return cls([[_one(p) if i == j else _zero(p) for j in range(n)] for i in range(n)], p)

    @classmethod
    def from_fq(cls, m, p):
        m = np.asarray(m, dtype=np.int64) % p
        return cls([[LaurentScalar.const(p, int(c)) for c in r] for r in m], p)

    @classmethod
    def diag_t(cls, exps, p, units=None):
        n = len(exps)
        units = units or [1] * n
        return cls(
            [[LaurentScalar.monomial(p, exps[i], units[i]) if i == j else _zero(p) for j in range(n)] for i in range(n)], p
        )

    @classmethod
    def from_entries(cls, n, p, entries: dict, base=None):
        """Identity (or ``base``) with entries ``{(i, j): LaurentScalar}`` overwritten."""
        rows = [list(r) for r in (base or cls.identity(n, p)).rows]
        for (i, j), v in entries.items():
            rows[i][j] = v
        return cls(rows, p)

    # -- basic ------------------------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def key(self):
        if self._key is None:
            self._key = (self.p,) + tuple(tuple(x.key() for x in r) for r in self.rows)
        return self._key

    def __eq__(self, other):
        return isinstance(other, LocalGroupElement) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "LocalGroupElement(" + "; ".join(", ".join(map(repr, r)) for r in self.rows) + ")"

    def __matmul__(self, other: "LocalGroupElement") -> "LocalGroupElement":
        p = self.p
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = _zero(p)
                for a, b in zip(r, c):
                    if a.num and b.num:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return LocalGroupElement(out, p)

    def det(self) -> LaurentScalar:
        n, p = self.n, self.p
        if n == 1:
            return self.rows[0][0]
        if n == 2:
            (a, b), (c, d) = self.rows
            return a * d - b * c
        total = _zero(p)
        for perm in itertools.permutations(range(n)):
            sign = _perm_sign(perm)
            term = _one(p) if sign > 0 else -_one(p)
            for i in range(n):
                term = term * self.rows[i][perm[i]]
                if term.is_zero():
                    break
            total = total + term
        return total

    @property
    def det_val(self) -> int:
        if self._det_val is None:
            d = self.det()
            if d.is_zero():
                raise ZeroDivisionError("singular matrix")
            self._det_val = d.lead
        return self._det_val

    def inverse(self) -> "LocalGroupElement":
        n, p = self.n, self.p
        a = [list(r) + [_one(p) if i == j else _zero(p) for j in range(n)] for i, r in enumerate(self.rows)]
        for c in range(n):
            piv = min((i for i in range(c, n) if not a[i][c].is_zero()), key=lambda i: (a[i][c].lead, i), default=None)
            if piv is None:
                raise ZeroDivisionError("singular matrix")
            a[c], a[piv] = a[piv], a[c]
            inv = a[c][c].inverse()
            a[c] = [x * inv for x in a[c]]
            for i in range(n):
                if i != c and not a[i][c].is_zero():
                    f = a[i][c]
                    a[i] = [x - f * y for x, y in zip(a[i], a[c])]
        return LocalGroupElement([r[n:] for r in a], p)

    def min_valuation(self):
        return min((x.lead for r in self.rows for x in r if x.num), default=float("inf"))

    def is_integral(self) -> bool:
        return self.min_valuation() >= 0

    def in_K(self) -> bool:
        return self.is_integral() and self.det_val == 0

    def is_diagonal(self) -> bool:
        return all(self.rows[i][j].is_zero() for i in range(self.n) for j in range(self.n) if i != j)

    def diagonal_exponents(self) -> tuple:
        return tuple(self.rows[i][i].lead for i in range(self.n))


def _perm_sign(perm) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def reduce_mod_t(k: LocalGroupElement) -> np.ndarray:
    """Image of ``k`` in GL(n, F_p)."""
    if not k.in_K():
        raise NotInKError("element is not in GL(n, o)")
    return np.array([[x.residue() for x in r] for r in k.rows], dtype=np.int64)


# -- Hermite form -------------------------------------------------------------------


@dataclass(frozen=True)
class CosetKey:
    """Hashable canonical representative of a right coset ``K g``."""

    p: int
    diag: tuple  # exponents a_j
    upper: tuple  # ((i, j, exponent->coeff items), ...) for i < j

    def element(self) -> LocalGroupElement:
        n = len(self.diag)
        ent = {(j, j): LaurentScalar.monomial(self.p, a) for j, a in enumerate(self.diag)}
        for i, j, items in self.upper:
            ent[(i, j)] = LaurentScalar.poly(self.p, dict(items))
        return LocalGroupElement.from_entries(n, self.p, ent, base=LocalGroupElement.diag_t([0] * n, self.p))

    def sort_key(self):
        return (self.diag, self.upper)


def _row_ops_hermite(rows, p, n, track):
    """Left-K reduction to Hermite form; ``track`` rows receive the same operations."""
    a = [list(r) for r in rows]
    k = [list(r) for r in track]
    for j in range(n):
        piv = min((i for i in range(j, n) if not a[i][j].is_zero()), key=lambda i: (a[i][j].lead, i), default=None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[j], a[piv] = a[piv], a[j]
        k[j], k[piv] = k[piv], k[j]
        pv = a[j][j]
        unit_inv = LaurentScalar(p, pv.den, 0, pv.num)  # (t^-v pv)^-1
        if unit_inv.num != (1,) or unit_inv.den != (1,):
            a[j] = [x * unit_inv for x in a[j]]
            k[j] = [x * unit_inv for x in k[j]]
        v = pv.lead
        for i in range(j + 1, n):
            x = a[i][j]
            if not x.is_zero():
                f = x.shift(-v)
                a[i] = [y - f * z for y, z in zip(a[i], a[j])]
                k[i] = [y - f * z for y, z in zip(k[i], k[j])]
    for j in range(n):
        aj = a[j][j].lead
        for i in range(j):
            x = a[i][j]
            if x.is_zero():
                continue
            keep = x.truncate(aj)
            if keep == x:
                continue
            f = (x - keep).shift(-aj)
            a[i] = [y - f * z for y, z in zip(a[i], a[j])]
            k[i] = [y - f * z for y, z in zip(k[i], k[j])]
    return a, k


def hermite(g: LocalGroupElement) -> tuple[LocalGroupElement, LocalGroupElement]:
    """``(H, k)`` with ``k`` in K, ``H = k @ g`` the Hermite representative of ``K g``."""
    n, p = g.n, g.p
    a, k = _row_ops_hermite(g.rows, p, n, LocalGroupElement.identity(n, p).rows)
    return LocalGroupElement(a, p), LocalGroupElement(k, p)


def _key_of(H: LocalGroupElement) -> CosetKey:
    n = H.n
    upper = []
    for i in range(n):
        for j in range(i + 1, n):
            x = H[i, j]
            if not x.is_zero():
                upper.append((i, j, tuple(sorted(x.expand(H[j, j].lead).items()))))
    return CosetKey(H.p, tuple(H[j, j].lead for j in range(n)), tuple(upper))


def canonical_coset(g: LocalGroupElement) -> CosetKey:
    return _canonical_cached(g)[0]


@lru_cache(maxsize=400_000)
def _canonical_cached(g: LocalGroupElement):
    H, k = hermite(g)
    return _key_of(H), reduce_mod_t(k)


def canonical_with_residue(g: LocalGroupElement) -> tuple[CosetKey, np.ndarray]:
    """Key of ``K g`` and the residue of the ``k`` with ``k g`` the key's matrix."""
    return _canonical_cached(g)


# -- Smith invariants and Iwasawa ----------------------------------------------------


def _minor_valuation(g: LocalGroupElement, size: int):
    n = g.n
    best = float("inf")
    for rows in itertools.combinations(range(n), size):
        for cols in itertools.combinations(range(n), size):
            sub = LocalGroupElement([[g[i, j] for j in cols] for i in rows], g.p)
            d = sub.det()
            if not d.is_zero():
                best = min(best, d.lead)
    return best


def smith_invariants(g: LocalGroupElement) -> tuple:
    """Nonincreasing exponents ``a`` with ``K g K = K diag(t^a) K``."""
    n = g.n
    prev, elem = 0, []
    for size in range(1, n + 1):
        d = _minor_valuation(g, size)
        elem.append(d - prev)
        prev = d
    return tuple(sorted(elem, reverse=True))


def iwasawa(g: LocalGroupElement, J):
    """``(n, m, k)`` with ``g = n m k``; n in N_J(F), m in M_J(F), k in K.

    Hermite reduction of ``g^{-1}`` gives ``k g^{-1} = H`` so ``g = H^{-1} k``
    with ``H^{-1}`` upper triangular; its block-diagonal part is ``m``.
    """
    from .finred import blocks_of

    H, k = hermite(g.inverse())
    b = H.inverse()
    blocks = blocks_of(g.n, J)
    p = g.p
    m = LocalGroupElement(
        [[b[i, j] if blocks[i] == blocks[j] else _zero(p) for j in range(g.n)] for i in range(g.n)], p
    )
    n_part = b @ m.inverse()
    return n_part, m, k


# -- positivity --------------------------------------------------------------------------


@dataclass(frozen=True)
class Positivity:
    positive: bool
    strict: bool
    central: bool

    @property
    def label(self) -> str:
        if self.strict:
            return "strictly M-positive"
        return "M-positive" if self.positive else "neither"


def positivity(z: LocalGroupElement, J) -> Positivity:
    if not z.is_diagonal():
        raise ValueError("positivity is defined for diagonal elements")
    from .finred import blocks_of

    b = z.diagonal_exponents()
    n = z.n
    outside = [i for i in range(1, n) if i not in J]
    diffs = [b[i - 1] - b[i] for i in outside]
    blocks = blocks_of(n, J)
    central = all(z[i, i] == z[j, j] for i in range(n) for j in range(n) if blocks[i] == blocks[j])
    return Positivity(all(d >= 0 for d in diffs), all(d > 0 for d in diffs), central)


# -- coset enumeration ------------------------------------------------------------------------


def _lower_block_positions(n, J):
    from .finred import blocks_of

    b = blocks_of(n, J)
    return [(i, j) for i in range(n) for j in range(n) if b[i] > b[j]]


def _upper_block_positions(n, J):
    from .finred import blocks_of

    b = blocks_of(n, J)
    return [(i, j) for i in range(n) for j in range(n) if b[i] < b[j]]


def _unipotent(n, p, entries):
    return LocalGroupElement.from_entries(n, p, {ij: v for ij, v in entries.items()})


def _poly_range(p, lo, hi):
    """All Laurent polynomials with exponents in [lo, hi)."""
    exps = list(range(lo, hi))
    for coeffs in itertools.product(range(p), repeat=len(exps)):
        yield LaurentScalar.poly(p, {e: c for e, c in zip(exps, coeffs) if c})


def enum_quotient(kind: str, s: LocalGroupElement, J, extra_depth: int = 0, p: int | None = None):
    """Exact coset representatives for the finite quotients used in Hecke sums.

    kinds (with ``Nb`` the lower block unipotent radical of P_J):
      ``"Nb0+/s-1Nb0+s"``  (s^-1 Nb_{0+} s)\\Nb_{0+}
      ``"Nb0+/s-1Nb0s"``   (s^-1 Nb_0 s)\\Nb_{0+}
      ``"Nb0/s-1Nb0s"``    (s^-1 Nb_0 s)\\Nb_0
      ``"Nb0/s-1Nb0+s"``   (s^-1 Nb_{0+} s)\\Nb_0
      ``"Nb0/Nb0+"``       Nb_{0+}\\Nb_0 (the constant lower block matrices)
      ``"N(F)/N0"``        N_0\\N(F), entries with exponents in [-extra_depth, 0)
      ``"K/P"``            calligraphic P\\K, as constant matrices

    The Nb quotients are abelian-by-filtration; representatives are lower block
    unipotent matrices whose (i, j) entry runs over polynomials with exponents
    in [lower, upper) where the bounds come from the valuations of the two groups.
    """
    n = s.n
    p = s.p
    b = s.diagonal_exponents()
    if kind.startswith("Nb"):
        pos = _lower_block_positions(n, J)
        if not positivity(s, J).strict:
            raise ValueError("s must be strictly M-positive")
        outer_lo = 1 if kind.startswith("Nb0+") else 0
        inner_plus = kind.endswith("Nb0+s")
        ranges = []
        for i, j in pos:
            # (s^-1 x s)_{ij} = t^{b_j - b_i} x_{ij}; b_j > b_i for i below j's block
            shift = b[j] - b[i]
            inner_lo = shift + (1 if inner_plus else 0)
            if kind == "Nb0/Nb0+":
                inner_lo = 1
            ranges.append((i, j, outer_lo, max(inner_lo, outer_lo)))
        out = []
        for combo in itertools.product(*[list(_poly_range(p, lo, hi)) for _, _, lo, hi in ranges]):
            out.append(_unipotent(n, p, {(i, j): c for (i, j, _, _), c in zip(ranges, combo)}))
        return out
    if kind == "N(F)/N0":
        pos = _upper_block_positions(n, J)
        out = []
        for combo in itertools.product(*[list(_poly_range(p, -extra_depth, 0)) for _ in pos]):
            out.append(_unipotent(n, p, dict(zip(pos, combo))))
        return out
    if kind == "K/P":
        return [LocalGroupElement.from_fq(c, p) for c in _flag_reps(n, p, frozenset(J))]
    raise ValueError(f"unknown quotient kind {kind!r}")


@lru_cache(maxsize=None)
def _flag_reps(n, p, J):
    """Minimal-index representatives of the cosets P(k) x in GL(n, F_p)."""
    G = _gl(n, p)
    pm = G.parabolic_mask(J)
    pel = G.elements[pm]
    label = np.full(len(G), -1)
    reps = []
    for i in range(len(G)):
        if label[i] < 0:
            label[G.indices(pel @ G.elements[i] % p)] = len(reps)
            reps.append(G.elements[i])
    return tuple(tuple(map(tuple, r)) for r in reps)


@lru_cache(maxsize=None)
def _gl(n, p):
    from .finred import build_gl

    return build_gl(n, p)


def _k_generators(n, p, depth):
    """Generators of GL(n, o) modulo 1 + t^depth M_n(o)."""
    G = _gl(n, p)
    gens = [LocalGroupElement.from_fq(g, p) for g in G.gens]
    for e in range(1, depth):
        te = LaurentScalar.monomial(p, e)
        for i in range(n):
            for j in range(n):
                if i != j:
                    gens.append(LocalGroupElement.from_entries(n, p, {(i, j): te}))
        gens.append(LocalGroupElement.from_entries(n, p, {(0, 0): LaurentScalar(p, (1,) + (0,) * (e - 1) + (1,))}))
    return gens


def double_coset_size(n: int, p: int, a) -> int:
    """|K \\ K diag(t^a) K| from the Bruhat-Tits index formula for GL(n).

    Counted as the number of Hermite forms with the right elementary divisors;
    for GL(2) this is sum over u + r = a1 - a2 of p^r weighted accordingly.
    """
    return len(cartan_cosets(n, p, tuple(a)))


@lru_cache(maxsize=None)
def cartan_cosets(n: int, p: int, a: tuple):
    """Right cosets ``K H`` inside ``K d K`` (``d = diag(t^a)``) with decomposition data.

    Returns a tuple of ``(key, left, right)`` such that ``H = k_l d k_r`` with
    residues ``left = k_l mod t`` and ``right = k_r mod t``; hence a bi-K
    equivariant ``Phi`` has ``Phi(H) = rho(left) Phi(d) rho(right)``.
    Found by breadth-first search over ``d k'`` with ``k'`` running through
    generators of K modulo the congruence subgroup fixing the coset space.
    """
    a = tuple(sorted(a, reverse=True))
    d = LocalGroupElement.diag_t(list(a), p)
    spread = a[0] - a[-1]
    gens = _k_generators(n, p, spread + 1) if spread else []
    start = LocalGroupElement.identity(n, p)
    seen = {}
    key, kres = canonical_with_residue(d)
    seen[key] = (start, kres)
    frontier = [start]
    while frontier:
        nxt = []
        for kr in frontier:
            for g in gens:
                k2 = kr @ g
                key, kres = canonical_with_residue(d @ k2)
                if key not in seen:
                    seen[key] = (k2, kres)
                    nxt.append(k2)
        frontier = nxt
    out = []
    for key, (kr, kres) in sorted(seen.items(), key=lambda kv: kv[0].sort_key()):
        out.append((key, kres, reduce_mod_t(kr)))
    return tuple(out)


# -- membership -------------------------------------------------------------------------


def membership(g: LocalGroupElement, region: str, s: LocalGroupElement | None = None, J=frozenset()) -> bool:
    """Exact membership of ``g`` in one of the named regions.

    ``"K"``, ``"K+"``, ``"calP"`` (inverse image of P_J(k) in K), ``"P(F)"``,
    ``"KsK"``, ``"calPs calP"``, ``"Ks calP"``, ``"M0s"``.
    """
    n = g.n
    from .finred import blocks_of

    if region == "K":
        return g.in_K()
    if region == "K+":
        return g.in_K() and np.array_equal(reduce_mod_t(g), np.eye(n, dtype=np.int64))
    if region == "calP":
        if not g.in_K():
            return False
        r = reduce_mod_t(g)
        blk = blocks_of(n, J)
        return all(r[i, j] == 0 for i in range(n) for j in range(n) if blk[i] > blk[j])
    if region == "P(F)":
        blk = blocks_of(n, J)
        return all(g[i, j].is_zero() for i in range(n) for j in range(n) if blk[i] > blk[j])
    if s is None:
        raise ValueError("region needs s")
    if region == "KsK":
        return smith_invariants(g) == smith_invariants(s)
    if region == "M0s":
        x = g @ s.inverse()
        return x.in_K() and membership(x, "P(F)", J=J) and membership(_transpose(x), "P(F)", J=J)
    if not positivity(s, J).strict:
        raise ValueError("s must be strictly M-positive")
    # calP s calP = calP s Nb_{0+}, and K s calP = K s Nb_{0+}: test g nbar^{-1} s^{-1}
    reps = enum_quotient("Nb0+/s-1Nb0+s", s, J)
    sinv = s.inverse()
    for nb in reps:
        x = g @ nb.inverse() @ sinv
        if region == "calPs calP" and membership(x, "calP", J=J):
            return True
        if region == "Ks calP" and x.in_K():
            return True
    if region in ("calPs calP", "Ks calP"):
        return False
    raise ValueError(f"unknown region {region!r}")


def _transpose(x: LocalGroupElement) -> LocalGroupElement:
    return LocalGroupElement([list(c) for c in zip(*x.rows)], x.p)
