"""Acceptance criteria, each at exact equality, one PASS/FAIL line per criterion.

The lines are collected in ``RESULTS`` and printed in the terminal summary
(see conftest.py).  Criteria that do not hold are reported as FAIL and marked
``xfail(strict=True)``; the analysis lives in the decisions ledger.

Run just this file with ``pytest tests/test_acceptance.py -v``.
"""
import itertools
import time

import numpy as np
import pytest

from modsatake import ff, finred, hecke
from modsatake.hecke import (
    InducedVector,
    basis_operators,
    convolve,
    equal_parabolic,
    satake_prime,
    unit_operator,
    zeta,
)
from modsatake.localfield import LaurentScalar, LocalGroupElement, canonical_coset

from _support import classified, context, group, rep_by_kind

RESULTS: list[str] = []

GROUPS = [(2, 2), (2, 3), (2, 5), (3, 2)]
# p-regular class counts, from the brute-force oracle in test_finred.py
P_REGULAR_CLASSES = {(2, 2): 2, (2, 3): 6, (2, 5): 20, (3, 2): 4}


def record(label: str, ok: bool, detail: str, seconds: float) -> bool:
    line = f"{label}: {'PASS' if ok else 'FAIL'} ({seconds:.1f}s) {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def s_choices(n, J):
    base = hecke.default_s(n, J)
    return [base, tuple(2 * x for x in base)]


def operator_configs():
    """(n, p, label, J, s, depth) for criteria 4 to 6."""
    out = []
    for p in (2, 3):
        for d in classified(2, p):
            for s in s_choices(2, ()):
                out.append((2, p, d.label, (), s, 2))
    st = rep_by_kind(3, 2, "steinberg")
    for J in finred.all_subsets(3, proper=True):
        for s in s_choices(3, J):
            out.append((3, 2, st, tuple(sorted(J)), s, 1))
    return out


_PROP_XI = {}


def prop_xi(cfg):
    if cfg not in _PROP_XI:
        n, p, label, J, s, _ = cfg
        _PROP_XI[cfg] = {c.name: c for c in hecke.verify_prop_xi(context(n, p, label, J, s))}
    return _PROP_XI[cfg]


# 1. the GL(2) coset counts


@pytest.mark.parametrize(
    "n_power",
    [1, pytest.param(2, marks=pytest.mark.xfail(strict=True, reason="coset list is the union of Cartan cells"))],
)
def test_criterion_1_gl2_remark(n_power):
    t0 = time.time()
    failing = []
    for p in (2, 3, 5):
        _, checks = hecke.gl2_remark_table(p, n_power)
        failing += [f"p={p}:{c.name}" for c in checks if c.status != "pass"]
    ok = record(f"criterion 1 (n={n_power})", not failing, f"failing={failing}", time.time() - t0)
    assert ok and time.time() - t0 < 10


# 2. classification


def test_criterion_2_classification():
    t0 = time.time()
    problems = []
    for n, p in GROUPS:
        cls = finred.classify_all(finred.build_gl(n, p))
        if len(cls) != P_REGULAR_CLASSES[(n, p)]:
            problems.append(f"({n},{p}) count {len(cls)}")
        keys = [d.key() for d in cls]
        want = {
            (psi, tuple(sorted(J)))
            for psi in finred._all_characters(n, p)
            for J in finred.all_subsets(n)
            if J <= finred.delta_of_character(psi, n, p)
        }
        if len(set(keys)) != len(keys) or set(keys) != want:
            problems.append(f"({n},{p}) parameters not a bijection")
    elapsed = time.time() - t0
    ok = record("criterion 2", not problems and elapsed < 60, f"problems={problems}", elapsed)
    assert ok


# 3. the finite-group proposition suite


def test_criterion_3_finite_suite():
    t0 = time.time()
    problems, checked = [], 0
    for n, p in GROUPS:
        subsets = finred.all_subsets(n, proper=True)
        for d in classified(n, p):
            try:
                finred.check_duality(d)
                for J in subsets:
                    finred.deck_split(d, J)
                    finred.is_M_coregular(d, J)
                    for Jp in subsets:
                        finred.weight_support(d, J, Jp)
                        if not finred.rregu_equivalence(d, J, Jp)["consistent"]:
                            problems.append(f"({n},{p}) {d.label} rregu J={sorted(J)} J'={sorted(Jp)}")
                        checked += 1
            except finred.ParameterContradiction as exc:
                problems.append(f"({n},{p}) {d.label}: {exc}")
    elapsed = time.time() - t0
    ok = record("criterion 3", not problems and elapsed < 300, f"cases={checked} problems={problems}", elapsed)
    assert ok


# 4. operator identities


def test_criterion_4_operator_identities():
    t0 = time.time()
    problems = []
    for cfg in operator_configs():
        checks = prop_xi(cfg)
        cor = context(*cfg[:5]).coregular
        required = ["T_G = T_KP o xi", "zeta o T_P = T_M o zeta", "I0([1,v])(1) = [1,v_N]"]
        if cor:
            required += ["xi o T_KP = T_P", "S'(T_G) = T_M"]
        problems += [f"{cfg[:5]}:{name}" for name in required if checks[name].status != "pass"]
    elapsed = time.time() - t0
    ok = record("criterion 4 (a)-(d)", not problems and elapsed < 600, f"configs={len(operator_configs())} problems={problems}", elapsed)
    assert ok


@pytest.mark.parametrize(
    "power",
    [1, pytest.param(2, marks=pytest.mark.xfail(strict=True, reason="extra (p-1) term at diag(t,t)"))],
)
def test_criterion_4_trivial_gl2(power):
    t0 = time.time()
    failing = []
    for p in (2, 3):
        cfg = (2, p, rep_by_kind(2, p, "trivial"), (), (power, 0), 2)
        if not prop_xi(cfg)["S'(T_G) = T_M"].witness["holds"]:
            failing.append(p)
    ok = record(f"criterion 4 (d) trivial V, s=diag(t^{power},1)", not failing, f"failing p={failing}", time.time() - t0)
    assert ok


# 5. localization


def localization_configs():
    out = []
    for p in (2, 3):
        for d in classified(2, p):
            for s in s_choices(2, ()):
                out.append((2, p, d.label, (), s, 2))
    st = rep_by_kind(3, 2, "steinberg")
    for J in finred.all_subsets(3, proper=True):
        out.append((3, 2, st, tuple(sorted(J)), hecke.default_s(3, J), 1))
    return out


def test_criterion_5_localization():
    t0 = time.time()
    problems = []
    for cfg in localization_configs():
        n, p, label, J, s, depth = cfg
        for c in hecke.verify_localization(context(n, p, label, J, s), depth):
            if c.status != "pass":
                problems.append(f"{cfg}:{c.name}")
    elapsed = time.time() - t0
    ok = record("criterion 5", not problems and elapsed < 600, f"configs={len(localization_configs())} problems={problems}", elapsed)
    assert ok


# 6. finite stages of the main comparison


def test_criterion_6_main_stages():
    t0 = time.time()
    problems = []
    wanted = {"xi injective", "T_P in image of xi", "T_P not in image of xi", "ker zeta = T_P-torsion"}
    for cfg in operator_configs():
        n, p, label, J, s, depth = cfg
        ctx = context(n, p, label, J, s)
        checks = {c.name: c for c in hecke.verify_main_stage(ctx, depth)}
        problems += [f"{cfg[:5]}:{name}" for name in wanted & checks.keys() if checks[name].status != "pass"]
        if label == rep_by_kind(2, p, "trivial") and n == 2 and "T_P not in image of xi" not in checks:
            problems.append(f"{cfg[:5]}: trivial V treated as coregular")
    elapsed = time.time() - t0
    ok = record("criterion 6", not problems and elapsed < 600, f"configs={len(operator_configs())} problems={problems}", elapsed)
    assert ok


# 7. property suites


def _random_operator(ops, rng, p):
    out = None
    for op in ops:
        c = int(rng.integers(p))
        if c:
            out = op.scale(c) if out is None else out + op.scale(c)
    return out if out is not None else ops[int(rng.integers(len(ops)))]


def _random_k(n, p, rng):
    G = group(n, p)
    base = LocalGroupElement.from_fq(G.elements[int(rng.integers(len(G)))], p)
    ent = {}
    for i, j in itertools.product(range(n), repeat=2):
        poly = {e: int(rng.integers(p)) for e in range(1, 3)}
        x = LaurentScalar.poly(p, {e: c for e, c in poly.items() if c})
        ent[(i, j)] = LaurentScalar.const(p, 1) + x if i == j else x
    return base @ LocalGroupElement.from_entries(n, p, ent, base=LocalGroupElement.diag_t([0] * n, p))


def _random_g(n, p, rng):
    exps = [int(x) for x in rng.integers(-2, 3, size=n)]
    upper = {}
    for i in range(n):
        for j in range(i + 1, n):
            poly = {e: int(rng.integers(p)) for e in range(-2, 2)}
            upper[(i, j)] = LaurentScalar.poly(p, {e: c for e, c in poly.items() if c})
    u = LocalGroupElement.from_entries(n, p, upper)
    return _random_k(n, p, rng) @ u @ LocalGroupElement.diag_t(exps, p) @ _random_k(n, p, rng)


def test_criterion_7_properties():
    t0 = time.time()
    rng = np.random.default_rng(20261019)
    problems = []

    # associativity and unit on 100 triples per configuration
    for n, p, kind in [(2, 2, "steinberg"), (2, 3, "steinberg")]:
        ctx = context(n, p, rep_by_kind(n, p, kind))
        ops = basis_operators(ctx.K, 1)
        unit = unit_operator(ctx.K)
        for _ in range(100):
            a, b, c = (_random_operator(ops, rng, p) for _ in range(3))
            if convolve(convolve(a, b), c) != convolve(a, convolve(b, c)):
                problems.append(f"assoc ({n},{p})")
            if not convolve(unit, a) == a == convolve(a, unit):
                problems.append(f"unit ({n},{p})")

    # S' multiplicative on 50 pairs
    ctx = context(2, 3, next(d.label for d in classified(2, 3) if d.dim == 2 and d.psi == (1, 0)))
    ops = basis_operators(ctx.K, 1)
    for _ in range(50):
        a, b = _random_operator(ops, rng, 3), _random_operator(ops, rng, 3)
        if satake_prime(convolve(a, b), ctx.M) != convolve(satake_prime(a, ctx.M), satake_prime(b, ctx.M)):
            problems.append("S' multiplicativity")

    # canonical right-coset keys are left K-invariant on 200 pairs
    for i in range(200):
        n, p = [(2, 2), (2, 3), (3, 2)][i % 3]
        g, k = _random_g(n, p, rng), _random_k(n, p, rng)
        if canonical_coset(k @ g) != canonical_coset(g):
            problems.append(f"canonical ({n},{p})")

    # the grid separates 50 distinct presentations, and identifies presentations differing by torsion
    P = ctx.P
    keys = [(k, lab) for k in hecke.integral_keys(2, 3, 1) for lab in range(len(P._reps))]
    basis = [InducedVector(P, {k: e}) for k in keys for e in np.eye(ctx.q, dtype=np.int64)]
    zmat, _ = hecke._zeta_matrix(basis, ctx)
    kernel = ff.kernel(zmat, 3)

    def combo(coeffs):
        out = InducedVector.zero(P)
        for c, b in zip(coeffs, basis):
            if c:
                out = out + b.scale(int(c))
        return out

    separated = identified = 0
    while separated < 50:
        base = rng.integers(3, size=len(basis))
        extra = rng.integers(3, size=len(basis))
        if ff.in_span(kernel, extra, 3):
            continue
        F1 = zeta(combo(base), ctx)
        F2 = F1 + zeta(combo(extra), ctx)
        if equal_parabolic(F1, F2, route="grid").equal:
            problems.append("grid failed to separate")
        separated += 1
        if kernel.shape[1]:
            tors = kernel @ rng.integers(3, size=kernel.shape[1]) % 3
            same = zeta(combo((base + tors) % 3), ctx)
            identified += 1
            if not equal_parabolic(F1, same, route="grid").equal:
                problems.append("grid separated equal functions")
    detail = f"assoc/unit=200 S'=50 canonical=200 separated={separated} identified={identified} problems={sorted(set(problems))}"
    ok = record("criterion 7", not problems, detail, time.time() - t0)
    assert ok
