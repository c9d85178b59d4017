"""Survey the automation catalog: cluster search spaces and top plans.

Run from anywhere: python3 scripts/automation_survey.py
"""

from collections import Counter
from pathlib import Path

from patternforge import (
    enumerate_all,
    load_catalog_file,
    load_network_file,
    plan,
    render_combination,
    render_goal,
    verify,
)
from patternforge.cli import load_project_file
from patternforge.expr import format_number
from patternforge.composition import atoms_of

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def survey(catalog, name: str) -> None:
    net = load_network_file(FIXTURES / "automation" / f"{name}.network.json",
                            catalog)
    project = load_project_file(
        FIXTURES / "automation" / f"{name}.project.json", catalog)

    combos = enumerate_all(catalog, net, project.state, project.limits)
    by_length = Counter(len(list(atoms_of(c))) for c in combos)
    buckets = ", ".join(f"{by_length[n]} of length {n}"
                        for n in sorted(by_length))
    print(f"\n{name}: {len(combos)} admissible combinations ({buckets})")

    full = [c for c in combos
            if len(list(atoms_of(c))) == project.limits.max_atoms]
    verified = sum(verify(c, project.state, project.goal, catalog).verified
                   for c in full)
    print(f"  goal: {render_goal(project.goal)}")
    print(f"  full-length combinations verifying the goal: "
          f"{verified} of {len(full)}")

    candidates = plan(catalog, net, project.state, project.goal,
                      project.limits, project.ranking)
    for i, c in enumerate(candidates[:3], start=1):
        effort = format_number(c.final_state.get("effort"))
        print(f"  {i}. {render_combination(c.combination)}  (effort {effort})")


def main() -> None:
    catalog = load_catalog_file(FIXTURES / "automation" / "catalog.json")
    contexts = Counter(ctx for p in catalog.patterns.values()
                       for ctx in p.significance.contexts)
    print(f"catalog: {len(catalog.patterns)} patterns, "
          f"{len(catalog.schema.attributes)} attributes")
    top = ", ".join(f"{ctx} ({n})" for ctx, n in contexts.most_common(3))
    print(f"most common contexts: {top}")
    survey(catalog, "cluster_a")
    survey(catalog, "cluster_b")


if __name__ == "__main__":
    main()
