"""Exact dense linear algebra over a prime field F_p.

Matrices are plain ``numpy`` integer arrays with entries in ``range(p)``; the
modulus travels alongside as an explicit argument.  Every routine returns a
fresh array and never mutates its input.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "MAX_PRIME",
    "SingularMatrixError",
    "as_fq",
    "check_prime",
    "identity",
    "rref",
    "rank",
    "kernel",
    "left_kernel",
    "solve",
    "invert",
    "solve_sylvester_family",
    "column_space",
    "in_span",
    "scalar_inverse",
    "Echelon",
    "spin",
]

MAX_PRIME = 13


class SingularMatrixError(ArithmeticError):
    """Raised when inverting a matrix that is not invertible over F_p."""


def check_prime(p: int) -> int:
    if p < 2 or p > MAX_PRIME or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
        raise ValueError(f"modulus must be a prime in [2, {MAX_PRIME}], got {p}")
    return p


def as_fq(m, p: int) -> np.ndarray:
    """Coerce ``m`` to a reduced int64 array over F_p (always a copy)."""
    a = np.array(m, dtype=np.int64)
    if a.ndim == 1:
        a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
    return a % p


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def scalar_inverse(x: int, p: int) -> int:
    x %= p
    if x == 0:
        raise ZeroDivisionError("0 has no inverse mod p")
    return pow(x, p - 2, p)


def rref(m, p: int) -> tuple[np.ndarray, int, list[int]]:
    """Reduced row echelon form of ``m`` over F_p.

    Returns ``(reduced, rank, pivots)`` where ``pivots`` lists pivot columns.
    """
    a = as_fq(m, p)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = (a[r] * scalar_inverse(int(a[r, c]), p)) % p
        col = a[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            a[nzr] = (a[nzr] - np.outer(col[nzr], a[r])) % p
        pivots.append(c)
        r += 1
    return a, r, pivots


def rank(m, p: int) -> int:
    a = as_fq(m, p)
    if a.size == 0:
        return 0
    return rref(a, p)[1]


def kernel(m, p: int) -> np.ndarray:
    """Basis of the right null space, as the columns of a ``cols x k`` array."""
    a = as_fq(m, p)
    cols = a.shape[1]
    red, rk, pivots = rref(a, p)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for j, f in enumerate(free):
        basis[f, j] = 1
        for i, pc in enumerate(pivots):
            basis[pc, j] = (-red[i, f]) % p
    return basis


def left_kernel(m, p: int) -> np.ndarray:
    """Rows ``y`` with ``y @ m == 0``, stacked as a ``k x rows`` array."""
    return kernel(as_fq(m, p).T, p).T


def column_space(m, p: int) -> np.ndarray:
    """Basis (as columns) of the column span of ``m``, in reduced form."""
    a = as_fq(m, p)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=np.int64)
    red, rk, _ = rref(a.T, p)
    return red[:rk].T.copy()


def solve(a, b, p: int) -> np.ndarray | None:
    """One solution ``x`` of ``a @ x == b`` (``b`` a vector or matrix), or None."""
    a = as_fq(a, p)
    b = np.array(b, dtype=np.int64) % p
    vec = b.ndim == 1
    if vec:
        b = b.reshape(-1, 1)
    rows, cols = a.shape
    aug = np.concatenate([a, b], axis=1)
    red, rk, pivots = rref(aug, p)
    if any(c >= cols for c in pivots):
        return None
    x = np.zeros((cols, b.shape[1]), dtype=np.int64)
    for i, pc in enumerate(pivots):
        x[pc] = red[i, cols:]
    return x[:, 0] if vec else x


def in_span(basis_cols, v, p: int) -> bool:
    basis_cols = np.asarray(basis_cols, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64) % p
    if basis_cols.size == 0:
        return not v.any()
    return solve(basis_cols, v, p) is not None


def invert(m, p: int) -> np.ndarray:
    a = as_fq(m, p)
    n, c = a.shape
    if n != c:
        raise ValueError("only square matrices can be inverted")
    red, rk, _ = rref(np.concatenate([a, identity(n)], axis=1), p)
    if rk < n or not np.array_equal(red[:, :n], identity(n)):
        raise SingularMatrixError("matrix is singular over F_%d" % p)
    return red[:, n:].copy()


def solve_sylvester_family(pairs, p: int) -> list[np.ndarray]:
    """Basis of ``{X : X @ A_i == B_i @ X for all i}``.

    ``A_i`` is ``dA x dA`` and ``B_i`` is ``dB x dB``; each ``X`` is ``dB x dA``.
    With ``X`` flattened row-major, ``vec(X A) = (I ⊗ A^T) vec X`` and
    ``vec(B X) = (B ⊗ I) vec X``.
    """
    pairs = [(as_fq(a, p), as_fq(b, p)) for a, b in pairs]
    if not pairs:
        raise ValueError("need at least one pair to fix the shapes")
    da = pairs[0][0].shape[0]
    db = pairs[0][1].shape[0]
    blocks = [
        (np.kron(identity(db), a.T) - np.kron(b, identity(da))) % p for a, b in pairs
    ]
    ker = kernel(np.concatenate(blocks, axis=0), p)
    return [ker[:, j].reshape(db, da).copy() for j in range(ker.shape[1])]


class Echelon:
    """Incrementally grown row-echelon basis of a subspace of F_p^d.

    Rows are kept normalised (pivot entry 1) and fully reduced against each
    other, so membership and reduction are single passes.
    """

    def __init__(self, d: int, p: int):
        self.d = d
        self.p = p
        self.rows: list[np.ndarray] = []
        self.pivots: list[int] = []

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, v) -> np.ndarray:
        v = np.array(v, dtype=np.int64) % self.p
        for row, c in zip(self.rows, self.pivots):
            if v[c]:
                v = (v - v[c] * row) % self.p
        return v

    def add(self, v) -> bool:
        """Insert ``v``; return True if it enlarged the span."""
        v = self.reduce(v)
        nz = np.nonzero(v)[0]
        if nz.size == 0:
            return False
        c = int(nz[0])
        v = (v * scalar_inverse(int(v[c]), self.p)) % self.p
        for i, row in enumerate(self.rows):
            if row[c]:
                self.rows[i] = (row - row[c] * v) % self.p
        self.rows.append(v)
        self.pivots.append(c)
        return True

    def contains(self, v) -> bool:
        return not self.reduce(v).any()

    def basis(self) -> np.ndarray:
        """Basis vectors as columns (``d x k``), ordered by pivot."""
        if not self.rows:
            return np.zeros((self.d, 0), dtype=np.int64)
        order = np.argsort(self.pivots)
        return np.array([self.rows[i] for i in order], dtype=np.int64).T


def spin(vectors, gens, p: int) -> np.ndarray:
    """Smallest subspace containing ``vectors`` and stable under ``gens``.

    ``vectors`` are the columns of a ``d x k`` array (or a single vector).
    Returns a basis as columns.
    """
    vs = np.array(vectors, dtype=np.int64) % p
    if vs.ndim == 1:
        vs = vs.reshape(-1, 1)
    d = vs.shape[0]
    ech = Echelon(d, p)
    queue = []
    for j in range(vs.shape[1]):
        if ech.add(vs[:, j]):
            queue.append(vs[:, j])
    while queue and len(ech) < d:
        v = queue.pop()
        for g in gens:
            w = (g @ v) % p
            if ech.add(w):
                queue.append(w)
    if len(ech) == d:
        return identity(d)
    return ech.basis()
