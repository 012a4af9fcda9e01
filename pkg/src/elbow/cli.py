"""Command-line front end.

Exit codes: 0 affirmative or ok, 1 negative (not entailed, violated, not
dominated), 2 input error, 3 a resource bound was hit.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .feature_model import (
    FeatureInterpretation,
    SearchBudgetExceeded,
    enumerate_countermodel,
    is_model,
    validate_interpretation,
)
from .feature_reasoner import (
    classify,
    decide_subsumption,
    el_complete,
    interpolative_saturate,
)
from .gcpnet import (
    BoundExceeded,
    GcpNet,
    build_hardness_model,
    dominates,
    is_consistent,
    parse_gcp,
    random_consistent_net,
    reduce_to_tbox,
    target_ci,
    verify_all_targets,
)
from .geo_reasoner import entails_geo_sound, saturate_geo
from .geometry import CICertificate, GeometricModel, UnsupportedRegion, check_ci, format_rational
from .normalizer import normalize, normalize_query
from .prop_bridge import clause_from_ints, clauses_from_dimacs, reduce_entailment, truth_table_entails
from .syntax import ConceptInclusion, Name, parse_concept, parse_tbox, render_concept, render_tbox

OK, NEGATIVE, INPUT_ERROR, RESOURCE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _tbox(path: str):
    return parse_tbox(_read(path))


def _query(args) -> tuple:
    if not args.lhs or not args.rhs:
        raise InputError("--lhs and --rhs are required")
    return parse_concept(args.lhs), parse_concept(args.rhs)


def _emit(args, text: str, doc) -> None:
    if args.json:
        print(json.dumps(doc, indent=2, default=str))
    elif text:
        print(text)


def _trace_lines(steps) -> list[str]:
    return [f"  {s.conclusion}    [{s.rule}]" for s in steps or ()]


# --- feature-enriched reasoning ------------------------------------------------


def cmd_check(args) -> int:
    t = _tbox(args.tbox)
    lhs, rhs = _query(args)
    res = decide_subsumption(t, lhs, rhs, method=args.method)
    if res.entailed:
        lines = ["ENTAILED"]
        if args.trace:
            lines += _trace_lines(res.trace)
        doc = {"entailed": True, "trace": [s.to_json() for s in res.trace or ()],
               "forced": res.forced, "stats": vars(res.stats)}
        _emit(args, "\n".join(lines), doc)
        return OK
    doc = {"entailed": False, "features": sorted(res.theta.features),
           "theta": {k: sorted(v) for k, v in sorted(res.theta.theta.items())},
           "stats": vars(res.stats)}
    _emit(args, "NOT ENTAILED", doc)
    return NEGATIVE


def cmd_classify(args) -> int:
    t = _tbox(args.tbox)
    table = classify(t)
    pairs = sorted((a, b) for (a, b), v in table.items() if v and a != b)
    _emit(args, "\n".join(f"{a} <= {b}" for a, b in pairs), [list(p) for p in pairs])
    return OK


def cmd_normalize(args) -> int:
    nt = normalize(_tbox(args.tbox))
    text = render_tbox(nt.as_tbox())
    _emit(args, text.rstrip("\n"), {"tbox": text, "fresh": {k: render_concept(v) for k, v in nt.fresh_map.items()}})
    return OK


def cmd_saturate(args) -> int:
    t = _tbox(args.tbox)
    nt = normalize(t)
    if args.lhs or args.rhs:
        lhs, rhs = _query(args)
        if not args.interpolative:
            raise InputError("explaining a goal needs --interpolative")
        qt, ql, qr = normalize_query(t, lhs, rhs)
        state = interpolative_saturate(qt)
        goal = ConceptInclusion(Name(ql), Name(qr))
        if goal not in state.derived:
            _emit(args, "NOT DERIVED", {"derived": False})
            return NEGATIVE
        steps = state.explain(goal)
        _emit(args, "\n".join(["DERIVED"] + _trace_lines(steps)),
              {"derived": True, "trace": [s.to_json() for s in steps]})
        return OK
    if args.interpolative:
        facts = sorted(str(ci) for ci in interpolative_saturate(nt).derived)
    else:
        facts = sorted(str(ci) for ci in el_complete(nt).derived)
    _emit(args, "\n".join(facts), facts)
    return OK


def cmd_countermodel(args) -> int:
    t = _tbox(args.tbox)
    lhs, rhs = _query(args)
    if args.enumerate:
        if not (isinstance(lhs, Name) and isinstance(rhs, Name)):
            raise InputError("--enumerate works on concept names only")
        model = enumerate_countermodel(t, lhs.name, rhs.name, max_features=args.max_features)
        if model is None:
            print(f"no countermodel with at most {args.max_features} features", file=sys.stderr)
            return RESOURCE
        print(model.dumps())
        return NEGATIVE
    res = decide_subsumption(t, lhs, rhs)
    if res.entailed:
        _emit(args, "ENTAILED", {"entailed": True})
        return OK
    print(res.model.dumps())
    return NEGATIVE


def cmd_validate_model(args) -> int:
    try:
        model = FeatureInterpretation.from_json(_read(args.model))
    except json.JSONDecodeError as e:
        raise InputError(f"{args.model}: {e}") from None
    problems = validate_interpretation(model)
    if args.tbox:
        problems += is_model(model, _tbox(args.tbox))
    doc = {"valid": not problems, "violations": [{"condition": v.condition, "message": v.message} for v in problems]}
    _emit(args, "VALID" if not problems else "\n".join(["INVALID"] + [f"  {v}" for v in problems]), doc)
    return OK if not problems else NEGATIVE


# --- region semantics -----------------------------------------------------------


def cmd_geo_check(args) -> int:
    try:
        model = GeometricModel.from_json(_read(args.model))
    except json.JSONDecodeError as e:
        raise InputError(f"{args.model}: {e}") from None
    t = _tbox(args.tbox)
    rows, bad = [], 0
    for ci in t.inclusions:
        try:
            res = check_ci(model, CICertificate(ci))
            status = "ok" if res else "VIOLATED"
            detail = "" if res else f" {res.reason} at ({', '.join(map(format_rational, res.point))})"
        except (UnsupportedRegion, KeyError) as e:
            status, detail = "UNCHECKED", f" {e}"
        bad += status != "ok"
        rows.append({"ci": str(ci), "status": status, "detail": detail.strip()})
    text = "\n".join(f"{r['status']:9} {r['ci']}" + (f"  ({r['detail']})" if r["detail"] else "") for r in rows)
    if t.non_interference:
        text += f"\n{len(t.non_interference)} non-interference assertion(s) not checked"
    _emit(args, text, rows)
    return OK if not bad else NEGATIVE


def cmd_geo_derive(args) -> int:
    t = _tbox(args.tbox)
    lhs, rhs = _query(args)
    res = entails_geo_sound(t, ConceptInclusion(lhs, rhs))
    if res:
        _emit(args, "\n".join(["DERIVABLE"] + _trace_lines(res.trace)),
              {"derivable": True, "trace": [s.to_json() for s in res.trace]})
        return OK
    _emit(args, "UNKNOWN", {"derivable": False})
    return NEGATIVE


# --- reductions -------------------------------------------------------------------


def cmd_from_prop(args) -> int:
    premises = clauses_from_dimacs(_read(args.cnf))
    try:
        conclusion = clause_from_ints(int(x) for x in args.conclusion.split() if x != "0")
    except ValueError:
        raise InputError(f"bad conclusion clause {args.conclusion!r}") from None
    t, query = reduce_entailment(premises, conclusion, args.nesting)
    if args.decide:
        res = decide_subsumption(t, query.lhs, query.rhs, trace=False)
        verdict = "ENTAILED" if res.entailed else "NOT ENTAILED"
        doc = {"entailed": res.entailed, "query": str(query), "decisions": res.stats.decisions}
        if args.truth_table:
            doc["truth_table"] = truth_table_entails(premises, conclusion)
            verdict += f" (truth table: {'entailed' if doc['truth_table'] else 'not entailed'})"
        _emit(args, verdict, doc)
        return OK if res.entailed else NEGATIVE
    text = render_tbox(t) + f"# query: {query}"
    _emit(args, text, {"tbox": render_tbox(t), "query": str(query)})
    return OK


def _net(args) -> GcpNet:
    return parse_gcp(_read(args.net))


def _outcome(net: GcpNet, text: str | None, flag: str):
    if text is None:
        raise InputError(f"{flag} is required")
    try:
        return net.parse_outcome(text)
    except ValueError as e:
        raise InputError(f"{flag}: {e}") from None


def cmd_from_gcp(args) -> int:
    net = _net(args)
    initial = _outcome(net, args.initial, "--initial")
    if args.model:
        model, _ = build_hardness_model(net, initial)
        print(model.dumps())
        return OK
    try:
        t = reduce_to_tbox(net, initial, check=not args.allow_inconsistent)
    except ValueError as e:
        raise InputError(str(e)) from None
    text = render_tbox(t)
    doc = {"tbox": text}
    if args.target:
        q = target_ci(net, _outcome(net, args.target, "--target"))
        text += f"# query: {q}"
        doc["query"] = str(q)
    _emit(args, text.rstrip("\n"), doc)
    return OK


def cmd_dominance(args) -> int:
    net = _net(args)
    src = _outcome(net, getattr(args, "from"), "--from")
    dst = _outcome(net, args.to, "--to")
    res = dominates(net, src, dst)
    flips = [{"rule": i, "outcome": net.render_outcome(w)} for i, w in res.flips]
    if res:
        k = len(res.flips)
        lines = [f"DOMINATES ({k} flip{'s' if k != 1 else ''})"]
        lines += [f"  rule {f['rule']}: {f['outcome']}" for f in flips]
        _emit(args, "\n".join(lines), {"dominates": True, "flips": flips})
        return OK
    _emit(args, "NOT DOMINATED", {"dominates": False})
    return NEGATIVE


def _verify_one(net: GcpNet, initial) -> list[dict]:
    t = reduce_to_tbox(net, initial)
    out = []
    base = saturate_geo(t)
    for r in verify_all_targets(net, initial):
        if r.trivial:
            continue
        derivable = bool(entails_geo_sound(t, target_ci(net, r.target), base))
        out.append({
            "target": net.render_outcome(r.target),
            "dominates": r.dominates,
            "in_hull": r.in_hull,
            "geo_derivable": derivable,
            "certificates_failed": r.failed_certificates,
            "ok": r.ok and derivable == r.dominates,
        })
    return out


def _verify_job(job) -> tuple[str, str, list[dict]]:
    text, initial = job
    net = parse_gcp(text)
    return text, net.render_outcome(initial), _verify_one(net, initial)


def cmd_gcp_verify(args) -> int:
    jobs: list[tuple[str, tuple]] = []
    if args.random:
        rng = random.Random(args.seed)
        for _ in range(args.random):
            net = random_consistent_net(rng, rng.randint(1, args.atoms), rng.randint(1, args.rules))
            jobs.append((net.render(), rng.choice(net.outcomes())))
    else:
        if not args.net:
            raise InputError("give a net file or --random N")
        net = _net(args)
        if not is_consistent(net):
            raise InputError("the net is inconsistent; the reduction needs a consistent net")
        jobs.append((net.render(), _outcome(net, args.initial, "--initial")))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_verify_job, jobs))
    else:
        results = [_verify_job(j) for j in jobs]
    all_ok = all(row["ok"] for _, _, rows in results for row in rows)
    lines = []
    for text, init, rows in results:
        if len(results) > 1:
            lines.append(f"net: {' '.join(text.split())}")
        lines.append(f"initial: {init}")
        for row in rows:
            flag = "ok" if row["ok"] else "MISMATCH"
            lines.append(f"  {flag:8} {row['target']}: dominated={_yn(row['dominates'])} "
                         f"in_hull={_yn(row['in_hull'])} derivable={_yn(row['geo_derivable'])}")
            for ci in row["certificates_failed"]:
                lines.append(f"    certificate failed: {ci}")
    doc = [{"net": text, "initial": init, "targets": rows} for text, init, rows in results]
    _emit(args, "\n".join(lines), doc)
    return OK if all_ok else NEGATIVE


def _yn(b: bool) -> str:
    return "yes" if b else "no"


# --- wiring -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", type=int, default=0, help="seed for random generators")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    query = argparse.ArgumentParser(add_help=False)
    query.add_argument("--lhs", help="left-hand concept")
    query.add_argument("--rhs", help="right-hand concept")

    p = argparse.ArgumentParser(prog="elbow", description="Reasoning with betweenness and natural concepts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common, query], help="decide a subsumption")
    s.add_argument("tbox")
    s.add_argument("--method", choices=("fixpoint", "global"), default="fixpoint")
    s.add_argument("--trace", action="store_true", help="print the derivation when entailed")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("classify", parents=[common], help="all entailed inclusions between names")
    s.add_argument("tbox")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("normalize", parents=[common], help="print the normal form")
    s.add_argument("tbox")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("saturate", parents=[common, query], help="forward-chaining closure")
    s.add_argument("tbox")
    s.add_argument("--interpolative", action="store_true", help="add the interpolation rules")
    s.set_defaults(func=cmd_saturate)

    s = sub.add_parser("countermodel", parents=[common, query], help="print a model refuting the query")
    s.add_argument("tbox")
    s.add_argument("--enumerate", action="store_true", help="search small interpretations instead")
    s.add_argument("--max-features", type=int, default=2, help="feature bound for --enumerate (1-3)")
    s.set_defaults(func=cmd_countermodel)

    s = sub.add_parser("validate-model", parents=[common], help="check a feature-enriched interpretation")
    s.add_argument("model")
    s.add_argument("tbox", nargs="?")
    s.set_defaults(func=cmd_validate_model)

    s = sub.add_parser("geo-check", parents=[common], help="check a region model against a TBox")
    s.add_argument("model")
    s.add_argument("tbox")
    s.set_defaults(func=cmd_geo_check)

    s = sub.add_parser("geo-derive", parents=[common, query], help="sound derivation under region semantics")
    s.add_argument("tbox")
    s.set_defaults(func=cmd_geo_derive)

    s = sub.add_parser("from-prop", parents=[common], help="translate clause entailment to a TBox")
    s.add_argument("cnf")
    s.add_argument("--conclusion", required=True, help='DIMACS literals, e.g. "-1 3"')
    s.add_argument("--nesting", choices=("right", "left"), default="right")
    s.add_argument("--decide", action="store_true", help="decide the resulting query")
    s.add_argument("--truth-table", action="store_true", help="with --decide, compare with a truth table")
    s.set_defaults(func=cmd_from_prop)

    s = sub.add_parser("from-gcp", parents=[common], help="translate a dominance question to a TBox")
    s.add_argument("net")
    s.add_argument("--initial", required=True)
    s.add_argument("--target")
    s.add_argument("--model", action="store_true", help="print the region model instead")
    s.add_argument("--allow-inconsistent", action="store_true")
    s.set_defaults(func=cmd_from_gcp)

    s = sub.add_parser("dominance", parents=[common], help="search for improving flips")
    s.add_argument("net")
    s.add_argument("--from", required=True)
    s.add_argument("--to", required=True)
    s.set_defaults(func=cmd_dominance)

    s = sub.add_parser("gcp-verify", parents=[common], help="cross-check the dominance reduction")
    s.add_argument("net", nargs="?")
    s.add_argument("--initial")
    s.add_argument("--random", type=int, default=0, metavar="N", help="check N random consistent nets")
    s.add_argument("--atoms", type=int, default=3, help="atom bound for --random (at most 4)")
    s.add_argument("--rules", type=int, default=4, help="rule bound for --random")
    s.set_defaults(func=cmd_gcp_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return INPUT_ERROR if e.code not in (0, None) else OK
    try:
        return args.func(args)
    except (BoundExceeded, SearchBudgetExceeded) as e:
        print(f"elbow: resource bound: {e}", file=sys.stderr)
        return RESOURCE
    except (InputError, ValueError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"elbow: {msg}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
