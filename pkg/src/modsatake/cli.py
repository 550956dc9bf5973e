"""Command-line reports for the verification suites.

Every command prints one report (JSON or TSV).  The exit status is 1 when any
check ends in ``fail`` and 0 otherwise; ``recorded`` checks never fail a run.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from . import ff, finred, hecke
from .localfield import LocalGroupElement, positivity
from .meataxe import is_irreducible

MAX_N = 3
SUITES = ("classify", "relations", "satake", "gl2-remark")


class SelectorError(ValueError):
    pass


def _parse_ints(text: str | None) -> tuple[int, ...]:
    if text is None or text.strip() == "":
        return ()
    return tuple(int(x) for x in text.replace(" ", "").split(","))


def select_rep(group: finred.FiniteGL, classified, selector: str):
    """Resolve ``trivial``, ``steinberg``, ``sym:r,det:m`` or an index (``3`` / ``#3``)."""
    sel = selector.strip().lower()
    if sel == "trivial":
        return finred.special_rep(classified, range(1, group.n))
    if sel == "steinberg":
        return finred.special_rep(classified, ())
    if sel.startswith("sym:"):
        parts = dict(item.split(":") for item in sel.split(","))
        mod = finred.sym_det_rep(group, int(parts["sym"]), int(parts.get("det", 0)))
        if not is_irreducible(mod):
            raise SelectorError(f"{selector} is not irreducible for p={group.p}")
        key = finred.parameters(group, mod).key()
        for d in classified:
            if d.key() == key:
                return d
        raise SelectorError(f"{selector} not found among the classified irreducibles")
    try:
        idx = int(sel.lstrip("#"))
    except ValueError:
        raise SelectorError(f"unknown representation selector {selector!r}") from None
    if not 0 <= idx < len(classified):
        raise SelectorError(f"index {idx} out of range (0..{len(classified) - 1})")
    return classified[idx]


def _configs(args):
    """The (levi, rep, s) triples requested; ``all`` expands deterministically."""
    n, p = args.n, args.p
    group = finred.build_gl(n, p)
    classified = finred.classify_all(group, rng_seed=args.seed)
    if args.rep == "all":
        reps = list(classified)
    else:
        reps = [select_rep(group, classified, r) for r in args.rep.split(";")]
    if args.levi == "all":
        levis = finred.all_subsets(n, proper=True)
    else:
        levis = [frozenset(_parse_ints(args.levi))]
    out = []
    for J in levis:
        if not J < frozenset(range(1, n)):
            raise SelectorError(f"levi {sorted(J)} must be a proper subset of 1..{n - 1}")
        if args.s == "both":
            base = hecke.default_s(n, J)
            choices = [base, tuple(2 * x for x in base)]
        elif args.s:
            choices = [_parse_ints(args.s)]
        else:
            choices = [hecke.default_s(n, J)]
        for s in choices:
            if len(s) != n or not positivity(LocalGroupElement.diag_t(s, p), J).strict:
                raise SelectorError(f"s={list(s)} is not strictly positive for levi {sorted(J)}")
            for d in reps:
                out.append((sorted(J), d.label, tuple(s)))
    return out


def _run_one(task):
    suite, p, n, seed, depth, levi, label, s = task
    group = finred.build_gl(n, p)
    classified = finred.classify_all(group, rng_seed=seed)
    data = select_rep(group, classified, label)
    ctx = hecke.SatakeContext(data, levi, s=s)
    if suite == "relations":
        checks = hecke.verify_prop_xi(ctx) + hecke.verify_main_stage(ctx, depth)
    else:
        checks = hecke.verify_localization(ctx, depth) + hecke.verify_duality_suite(ctx, depth)
    return {"config": ctx.config(), "suite": suite, "checks": [c.to_dict() for c in checks]}


def cmd_classify(args) -> list[dict]:
    group = finred.build_gl(args.n, args.p)
    classified = finred.classify_all(group, rng_seed=args.seed)
    subsets = finred.all_subsets(args.n, proper=True)
    rows = []
    for d in classified:
        rows.append(
            {
                "label": d.label,
                "dim": d.dim,
                "psi": list(d.psi),
                "delta_psi": sorted(d.delta_psi),
                "delta_V": sorted(d.delta_V),
                "regular": {",".join(map(str, sorted(J))): finred.is_M_regular(d, J) for J in subsets},
                "coregular": {",".join(map(str, sorted(J))): finred.is_M_coregular(d, J) for J in subsets},
            }
        )
    config = {"p": args.p, "n": args.n, "seed": args.seed}
    check = hecke.Check(
        "irreducible count",
        "classification by parameters",
        "pass" if len(rows) == group.p_regular_class_count() else "fail",
        {"rows": len(rows), "p_regular_classes": group.p_regular_class_count()},
    )
    return [{"config": config, "suite": "classify", "rows": rows, "checks": [check.to_dict()]}]


def _cmd_suite(args, suite) -> list[dict]:
    tasks = [(suite, args.p, args.n, args.seed, args.depth, J, label, s) for J, label, s in _configs(args)]
    tasks.sort(key=lambda t: (t[5], t[7], t[6]))
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def cmd_relations(args) -> list[dict]:
    return _cmd_suite(args, "relations")


def cmd_satake(args) -> list[dict]:
    return _cmd_suite(args, "satake")


def cmd_gl2_remark(args) -> list[dict]:
    rows, checks = hecke.gl2_remark_table(args.p, args.depth)
    config = {"p": args.p, "n": 2, "power": args.depth}
    return [{"config": config, "suite": "gl2-remark", "rows": rows, "checks": [c.to_dict() for c in checks]}]


COMMANDS = {
    "classify": cmd_classify,
    "relations": cmd_relations,
    "satake": cmd_satake,
    "gl2-remark": cmd_gl2_remark,
}


def to_tsv(reports: list[dict]) -> str:
    lines = ["suite\tconfig\tcheck\tstatus\tref"]
    for rep in reports:
        cfg = json.dumps(rep["config"], sort_keys=True, separators=(",", ":"))
        for c in rep["checks"]:
            lines.append("\t".join([rep["suite"], cfg, c["name"], c["status"], c["ref"]]))
    return "\n".join(lines) + "\n"


def render(reports: list[dict], fmt: str) -> str:
    if fmt == "tsv":
        return to_tsv(reports)
    return json.dumps(reports, indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modsatake", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=SUITES)
    ap.add_argument("--p", type=int, default=2, help="prime")
    ap.add_argument("--n", type=int, default=2, help="rank (at most %d)" % MAX_N)
    ap.add_argument("--levi", default="", help="simple roots of the Levi, e.g. '1' or '' for the torus, or 'all'")
    ap.add_argument("--rep", default="all", help="trivial, steinberg, sym:r,det:m, an index, 'all', or a ';' list")
    ap.add_argument("--s", default="", help="exponents of s, e.g. '2,0'; 'both' runs s_J and s_J^2")
    ap.add_argument("--depth", type=int, default=1, help="operator depth (power for gl2-remark)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=("json", "tsv"), default="json")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None, help="write the report here instead of stdout")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ff.check_prime(args.p)
        if not 1 <= args.n <= MAX_N:
            raise SelectorError(f"n must be in 1..{MAX_N}")
        if args.command == "gl2-remark":
            args.n = 2
        reports = COMMANDS[args.command](args)
    except (SelectorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(reports, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = any(c["status"] == "fail" for rep in reports for c in rep["checks"])
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
