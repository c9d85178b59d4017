"""Command line front end: validate, eval, verify, plan, serve.

Exit codes: 0 success (verify: goal holds; plan: at least one candidate),
1 verify failed / no candidates, 2 any parse, validation, or evaluation
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Mapping, Sequence

from .catalog import AtomApplied, Catalog, check_goal_static, load_catalog_file
from .composition import (
    Combination,
    CondTaken,
    IterCount,
    ParMerged,
    Trace,
    bind_combination,
    evaluate,
    parse_combination,
    render_combination,
    verify,
)
from .codec import (
    encode_candidate,
    encode_state,
    encode_trace,
    encode_verify_report,
)
from .errors import PatternForgeError, raise_collected
from .expr import (
    AttrRef,
    GoalAst,
    format_number,
    iter_expr_nodes,
    iter_goal_exprs,
    parse_goal,
    resolve_goal,
)
from .model import NUMBER, Schema, State, Tolerance, Value, validate_state
from .network import load_network_file
from .planner import Limits, Ranking, load_limits, load_ranking, plan


def _fmt_value(value: Value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f"'{value}'"
    return format_number(float(value))


def _goal_attr_order(goal: GoalAst, schema: Schema) -> list[str]:
    # summary line shows the quantities the goal constrains, in goal order
    seen: list[str] = []
    for e in iter_goal_exprs(goal):
        for node in iter_expr_nodes(e):
            if (isinstance(node, AttrRef) and node.name not in seen
                    and node.name in schema and schema[node.name].kind == NUMBER):
                seen.append(node.name)
    return seen


def _state_lines(state: State) -> list[str]:
    return [f"  {name} = {_fmt_value(value)}" for name, value in state.values.items()]


def _trace_lines(trace: Trace) -> list[str]:
    lines: list[str] = []
    for event in trace.events:
        if isinstance(event, AtomApplied):
            changes = {k: v for k, v in event.state_after.values.items()
                       if event.state_before.values.get(k) != v}
            shown = ", ".join(f"{k} = {_fmt_value(v)}" for k, v in changes.items()) \
                or "no change"
            flag = "" if event.pattern_goal_satisfied else "  [pattern goal not met]"
            lines.append(f"  {event.pattern_id}: {shown}{flag}")
        elif isinstance(event, ParMerged):
            branches = ", ".join(_fmt_value(v) for v in event.branch_values)
            lines.append(f"  merged {event.attribute} ({event.policy}): "
                         f"{branches} -> {_fmt_value(event.merged)}")
        elif isinstance(event, CondTaken):
            lines.append(f"  took {event.branch} branch (guard "
                         f"{'true' if event.guard_value else 'false'})")
        elif isinstance(event, IterCount):
            lines.append(f"  loop ran {event.count} time(s)")
    return lines


class Project:
    # artifacts None means the file did not override the network's initial set
    def __init__(self, state: State, goal: GoalAst, artifacts: frozenset[str] | None,
                 limits: Limits | None, ranking: Ranking | None):
        self.state = state
        self.goal = goal
        self.artifacts = artifacts
        self.limits = limits
        self.ranking = ranking


def load_project_file(path: str | Path, catalog: Catalog) -> Project:
    """Project file: {state, goal, artifacts?, limits?, ranking?}."""
    with open(path, encoding="utf-8") as fh:
        document = json.load(fh)
    if not isinstance(document, Mapping):
        raise PatternForgeError(f"{path}: project file must be a JSON object")
    errors = [PatternForgeError(f"unknown key {k!r}", str(path))
              for k in document
              if k not in ("state", "goal", "artifacts", "limits", "ranking")]
    raise_collected(errors)
    state = validate_state(catalog.schema, document.get("state", {}))
    goal_text = document.get("goal", "true")
    goal = resolve_goal(parse_goal(goal_text), catalog.schema)
    goal_errors: list[PatternForgeError] = []
    check_goal_static(goal, catalog.schema, catalog.functions, goal_errors,
                      f"{path}: goal")
    raise_collected(goal_errors)
    artifacts = (frozenset(document["artifacts"])
                 if "artifacts" in document else None)
    limits = load_limits(document["limits"]) if "limits" in document else None
    ranking = load_ranking(document["ranking"], catalog) if "ranking" in document else None
    return Project(state, goal, artifacts, limits, ranking)


def _tolerance(args: argparse.Namespace) -> Tolerance:
    return Tolerance(rel=args.tol_rel, abs=args.tol_abs)


def _load_combination(text: str, catalog: Catalog) -> Combination:
    return bind_combination(parse_combination(text), catalog)


def _load_goal(text: str, catalog: Catalog) -> GoalAst:
    goal = resolve_goal(parse_goal(text), catalog.schema)
    errors: list[PatternForgeError] = []
    check_goal_static(goal, catalog.schema, catalog.functions, errors, "goal")
    raise_collected(errors)
    return goal


# ---------------------------------------------------------------- commands


def cmd_validate(args: argparse.Namespace) -> int:
    catalog = load_catalog_file(args.catalog)
    print(f"catalog OK: {len(catalog.patterns)} pattern(s), "
          f"{len(catalog.functions)} function(s), "
          f"{len(catalog.schema.attributes)} attribute(s)")
    if args.network:
        net = load_network_file(args.network, catalog)
        print(f"network OK: {len(net.adjacency)} adjacency rule(s), "
              f"{len(net.compatibility)} compatibility predicate(s), "
              f"{len(net.initial_artifacts)} initial artifact(s)")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    catalog = load_catalog_file(args.catalog)
    project = load_project_file(args.project, catalog)
    comb = _load_combination(args.comb, catalog)
    final, trace = evaluate(comb, project.state, catalog,
                            iteration_cap=args.iteration_cap,
                            tolerance=_tolerance(args))
    if args.json:
        print(json.dumps({"final_state": encode_state(final),
                          "trace": encode_trace(trace)}, indent=2))
        return 0
    print("final state:")
    print("\n".join(_state_lines(final)))
    print("trace:")
    print("\n".join(_trace_lines(trace)))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    catalog = load_catalog_file(args.catalog)
    project = load_project_file(args.project, catalog)
    comb = _load_combination(args.comb, catalog)
    goal = _load_goal(args.goal, catalog) if args.goal else project.goal
    report = verify(comb, project.state, goal, catalog,
                    iteration_cap=args.iteration_cap, tolerance=_tolerance(args))
    if args.json:
        print(json.dumps(encode_verify_report(report), indent=2))
        return 0 if report.verified else 1
    shown = [name for name in _goal_attr_order(goal, catalog.schema)
             if name in report.final_state]
    summary = ", ".join(f"{name} = {_fmt_value(report.final_state.get(name))}"
                        for name in shown)
    verdict = "VERIFIED" if report.verified else "FAILED"
    print(f"{verdict} ({summary})" if summary else verdict)
    if not report.verified:
        for line in _failed_atoms(report.breakdown):
            print(f"  {line}")
    return 0 if report.verified else 1


def _failed_atoms(bd) -> list[str]:
    if not bd.children:
        if bd.value:
            return []
        shown = ""
        if bd.operands:
            shown = " (" + ", ".join(_fmt_value(v) for v in bd.operands) + ")"
        return [f"not satisfied: {bd.text}{shown}"]
    out: list[str] = []
    for child in bd.children:
        out.extend(_failed_atoms(child))
    return out


def cmd_plan(args: argparse.Namespace) -> int:
    catalog = load_catalog_file(args.catalog)
    net = load_network_file(args.network, catalog)
    project = load_project_file(args.project, catalog)
    if project.artifacts is not None:
        net = net.with_artifacts(project.artifacts)
    limits = project.limits or Limits()
    if args.max_atoms is not None:
        limits = replace(limits, max_atoms=args.max_atoms)
    if args.limit is not None:
        limits = replace(limits, max_results=args.limit)
    ranking = load_ranking(args.rank, catalog) if args.rank else \
        (project.ranking or Ranking())
    candidates = plan(catalog, net, project.state, project.goal, limits, ranking,
                      tolerance=_tolerance(args))
    if args.json:
        print(json.dumps({"candidates": [encode_candidate(c) for c in candidates]},
                         indent=2))
        return 0 if candidates else 1
    if not candidates:
        print("no candidates")
        return 1
    print(f"{len(candidates)} candidate(s):")
    for i, c in enumerate(candidates, start=1):
        scores = ", ".join(f"{attr} = {_fmt_value(v)}"
                           for (attr, _), v in zip(ranking.criteria, c.score))
        suffix = f"  [{scores}]" if scores else ""
        print(f"  {i}. {render_combination(c.combination)}{suffix}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    catalog = load_catalog_file(args.catalog)
    net = load_network_file(args.network, catalog)
    app = create_app(catalog, net)
    host = os.environ.get("PATTERNFORGE_BIND", "127.0.0.1")
    uvicorn.run(app, host=host, port=args.port)
    return 0


# ---------------------------------------------------------------- wiring


def _add_tolerance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-rel", type=float, default=1e-9,
                   help="relative tolerance for numeric equality")
    p.add_argument("--tol-abs", type=float, default=1e-12,
                   help="absolute tolerance for numeric equality")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patternforge",
        description="Compose, verify, and plan software process patterns.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load a catalog (and network) and report")
    p.add_argument("--catalog", required=True)
    p.add_argument("--network")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("eval", help="run a combination on the project state")
    p.add_argument("--catalog", required=True)
    p.add_argument("--project", required=True)
    p.add_argument("--comb", required=True)
    p.add_argument("--iteration-cap", type=int, default=100)
    p.add_argument("--json", action="store_true")
    _add_tolerance_flags(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("verify", help="run a combination and test the goal")
    p.add_argument("--catalog", required=True)
    p.add_argument("--project", required=True)
    p.add_argument("--comb", required=True)
    p.add_argument("--goal", help="overrides the project file's goal")
    p.add_argument("--iteration-cap", type=int, default=100)
    p.add_argument("--json", action="store_true")
    _add_tolerance_flags(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("plan", help="search for combinations that satisfy the goal")
    p.add_argument("--catalog", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--project", required=True)
    p.add_argument("--max-atoms", type=int)
    p.add_argument("--rank", help="e.g. \"min effort,max reliability\"")
    p.add_argument("--limit", type=int, help="maximum candidates to report")
    p.add_argument("--json", action="store_true")
    _add_tolerance_flags(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--catalog", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PatternForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"error: invalid JSON: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
