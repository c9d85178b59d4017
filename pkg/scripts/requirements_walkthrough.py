"""Walk the requirements fixture end to end: evaluate, verify, plan.

Run from anywhere: python3 scripts/requirements_walkthrough.py
"""

from pathlib import Path

from patternforge import (
    evaluate,
    load_catalog_file,
    load_network_file,
    parse_combination,
    parse_goal,
    plan,
    render_combination,
    render_goal,
    verify,
)
from patternforge.cli import load_project_file
from patternforge.expr import format_number
from patternforge.composition import AtomApplied, ParMerged

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
COMBINATION = "seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)"


def fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f"'{value}'"
    return format_number(value)


def main() -> None:
    root = FIXTURES / "requirements_basic"
    catalog = load_catalog_file(root / "catalog.json")
    network = load_network_file(root / "network.json", catalog)
    project = load_project_file(root / "project.json", catalog)

    print(f"catalog: {len(catalog.patterns)} patterns, "
          f"{len(catalog.schema.attributes)} attributes")
    for pattern in catalog.patterns.values():
        print(f"  {pattern.id}: {pattern.title}")

    print(f"\nevaluating: {COMBINATION}")
    comb = parse_combination(COMBINATION)
    final, trace = evaluate(comb, project.state, catalog)
    for event in trace.events:
        if isinstance(event, AtomApplied):
            changes = {k: v for k, v in event.state_after.values.items()
                       if event.state_before.values.get(k) != v}
            shown = ", ".join(f"{k} = {fmt(v)}" for k, v in changes.items())
            print(f"  {event.pattern_id}: {shown}")
        elif isinstance(event, ParMerged):
            branches = ", ".join(fmt(v) for v in event.branch_values)
            print(f"  merged {event.attribute} ({event.policy}): "
                  f"{branches} -> {fmt(event.merged)}")
    print("final state: " + ", ".join(f"{k} = {fmt(v)}"
                                      for k, v in final.values.items()))

    for goal_text in ("effort < 700 & requirements_document = 'verified'",
                      "effort < 600 & requirements_document = 'verified'"):
        report = verify(comb, project.state, parse_goal(goal_text), catalog)
        verdict = "VERIFIED" if report.verified else "FAILED"
        print(f"\ngoal {goal_text}\n  -> {verdict}")

    print(f"\nplanning toward: {render_goal(project.goal)}")
    candidates = plan(catalog, network, project.state, project.goal,
                      project.limits, project.ranking)
    if not candidates:
        print("  no candidates")
    for i, c in enumerate(candidates, start=1):
        effort = fmt(c.final_state.get("effort"))
        print(f"  {i}. {render_combination(c.combination)}  (effort {effort})")


if __name__ == "__main__":
    main()
