"""Goal-oriented composition: search the network-constrained space of
combinations for ones whose run satisfies the goal, ranked by priorities.

Synthesized shapes are sequences of steps where a step is an atom or a
parallel group of atoms; guards and loops are for hand-written combinations.
The search is exhaustive within the limits, so its output is exactly the
verified subset of enumerate_all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations as pick
from typing import Any, Iterator, Mapping

from .catalog import Catalog
from .composition import (
    Atom,
    Combination,
    Par,
    Seq,
    atoms_of,
    render_combination,
    verify,
)
from .errors import PatternForgeError, TypeMismatch, UnknownAttribute, raise_collected
from .expr import GoalAst
from .model import DEFAULT_TOLERANCE, State, Tolerance, kind_of
from .network import (
    Network,
    adjacency_allows,
    allowed_successors,
    check_combination,
    compatible_pair,
)

MINIMIZE = "minimize"
MAXIMIZE = "maximize"


@dataclass(frozen=True)
class Limits:
    max_atoms: int = 6
    max_par_width: int = 3
    allow_par: bool = True
    iteration_cap: int = 100
    max_results: int = 10

    def __post_init__(self):
        for name in ("max_atoms", "max_par_width", "iteration_cap", "max_results"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise TypeMismatch(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.allow_par, bool):
            raise TypeMismatch(f"allow_par must be a boolean, got {self.allow_par!r}")


@dataclass(frozen=True)
class Ranking:
    criteria: tuple[tuple[str, str], ...] = ()  # (attribute, minimize|maximize)

    def __post_init__(self):
        for attr, direction in self.criteria:
            if direction not in (MINIMIZE, MAXIMIZE):
                raise TypeMismatch(f"direction must be minimize or maximize, "
                                   f"got {direction!r}")


@dataclass(frozen=True)
class Candidate:
    combination: Combination
    final_state: State
    score: tuple[float, ...]
    significance_total: int = 0


# ---------------------------------------------------------------- loading


def load_limits(obj: Mapping[str, Any] | None) -> Limits:
    if obj is None:
        return Limits()
    if not isinstance(obj, Mapping):
        raise TypeMismatch("limits must be an object")
    known = {"max_atoms", "max_par_width", "allow_par", "iteration_cap", "max_results"}
    errors = [TypeMismatch(f"unknown limits key {k!r}") for k in obj if k not in known]
    raise_collected(errors)
    return Limits(**{k: obj[k] for k in known if k in obj})


def load_ranking(value: Any, catalog: Catalog) -> Ranking:
    """Accepts a list of {attribute, direction} objects or of compact strings
    like "min effort" / "max reliability"."""
    if value is None:
        return Ranking()
    if isinstance(value, str):
        value = [part.strip() for part in value.split(",") if part.strip()]
    if not isinstance(value, list):
        raise TypeMismatch("ranking must be a list")
    criteria: list[tuple[str, str]] = []
    errors: list[PatternForgeError] = []
    for item in value:
        if isinstance(item, str):
            words = item.split()
            if len(words) != 2 or words[0] not in ("min", "max", MINIMIZE, MAXIMIZE):
                errors.append(TypeMismatch(
                    f"ranking entry must be 'min <attr>' or 'max <attr>', got {item!r}"))
                continue
            direction = MINIMIZE if words[0].startswith("min") else MAXIMIZE
            attr = words[1]
        elif isinstance(item, Mapping):
            for k in item:
                if k not in ("attribute", "direction"):
                    errors.append(TypeMismatch(f"unknown ranking key {k!r}"))
            attr = item.get("attribute")
            direction = item.get("direction")
            if direction in ("min", "max"):
                direction = MINIMIZE if direction == "min" else MAXIMIZE
            if direction not in (MINIMIZE, MAXIMIZE):
                errors.append(TypeMismatch(f"invalid ranking direction {direction!r}"))
                continue
        else:
            errors.append(TypeMismatch(f"invalid ranking entry {item!r}"))
            continue
        if not isinstance(attr, str) or attr not in catalog.schema:
            errors.append(UnknownAttribute(f"ranking names unknown attribute {attr!r}"))
            continue
        if catalog.schema[attr].kind != "number":
            errors.append(TypeMismatch(f"ranking attribute '{attr}' must be a number"))
            continue
        criteria.append((attr, direction))
    raise_collected(errors)
    return Ranking(criteria=tuple(criteria))


# ---------------------------------------------------------------- enumeration


def _produced_by(catalog: Catalog, ids: tuple[str, ...]) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for pid in ids:
        out |= catalog.pattern(pid).produces
    return out


def _assemble(steps: list[Combination]) -> Combination:
    return steps[0] if len(steps) == 1 else Seq(tuple(steps))


def _expand(catalog: Catalog, net: Network, limits: Limits,
            tolerance: Tolerance) -> Iterator[Combination]:
    """Depth-first enumeration of valid step sequences.

    Pruning is safe because every constraint family is monotone over step
    prefixes: a violated adjacency pair, incompatible pair, or unmet
    consumption can never be repaired by appending more steps.
    """
    all_ids = sorted(catalog.patterns)

    def eligible_atoms(used: list[str], avail: frozenset[str],
                       last_atom: str | None) -> list[str]:
        if last_atom is not None:
            ids = allowed_successors(net, catalog, used, avail, tolerance)
        else:
            ids = [pid for pid in all_ids
                   if catalog.pattern(pid).consumes <= avail
                   and all(compatible_pair(net, catalog, q, pid, tolerance)
                           for q in used)]
        return [pid for pid in ids if pid not in used]

    def walk(steps: list[Combination], used: list[str], avail: frozenset[str],
             last_atom: str | None) -> Iterator[Combination]:
        if steps:
            yield _assemble(list(steps))
        room = limits.max_atoms - len(used)
        if room == 0:
            return
        singles = eligible_atoms(used, avail, last_atom)
        for pid in singles:
            produced = catalog.pattern(pid).produces
            yield from walk(steps + [Atom(pid)], used + [pid], avail | produced, pid)
        if not limits.allow_par or room < 2:
            return
        # parallel groups draw from atoms eligible ignoring adjacency: the
        # branch boundary cuts any adjacency requirement
        pool = [pid for pid in all_ids
                if pid not in used
                and catalog.pattern(pid).consumes <= avail
                and all(compatible_pair(net, catalog, q, pid, tolerance)
                        for q in used)]
        for width in range(2, min(limits.max_par_width, room) + 1):
            for group in pick(pool, width):
                if any(not compatible_pair(net, catalog, a, b, tolerance)
                       for a, b in pick(group, 2)):
                    continue
                produced = _produced_by(catalog, group)
                yield from walk(steps + [Par(tuple(Atom(p) for p in group))],
                                used + list(group), avail | produced, None)

    yield from walk([], [], net.initial_artifacts, None)


def enumerate_all(catalog: Catalog, net: Network, state: State, limits: Limits,
                  tolerance: Tolerance = DEFAULT_TOLERANCE) -> list[Combination]:
    """Every network-valid seq-of-(atom|par) combination within the limits,
    in canonical text order. The state parameter fixes the call shape shared
    with plan; enumeration itself is purely structural."""
    del state
    found = [comb for comb in _expand(catalog, net, limits, tolerance)
             if not check_combination(net, catalog, comb, tolerance=tolerance)]
    return sorted(found, key=render_combination)


# ---------------------------------------------------------------- ranking


def _score(candidate_state: State, ranking: Ranking) -> tuple[float, ...]:
    values: list[float] = []
    for attr, _ in ranking.criteria:
        value = candidate_state.get(attr)
        if kind_of(value) != "number":
            raise TypeMismatch(f"ranking attribute '{attr}' is not numeric in the "
                               f"final state: {value!r}")
        values.append(float(value))
    return tuple(values)


def _rank_key(candidate: Candidate, ranking: Ranking):
    adjusted = [value if direction == MINIMIZE else -value
                for value, (_, direction) in zip(candidate.score, ranking.criteria)]
    return (*adjusted, -candidate.significance_total,
            render_combination(candidate.combination))


def rank(candidates: list[Candidate], ranking: Ranking) -> list[Candidate]:
    """Lexicographic order over the criteria; ties go to the higher total
    significance, then to the lexicographically smaller canonical text."""
    return sorted(candidates, key=lambda c: _rank_key(c, ranking))


def significance_total(catalog: Catalog, comb: Combination) -> int:
    return sum(catalog.pattern(a.pattern_id).significance.usage_count
               for a in atoms_of(comb))


# ---------------------------------------------------------------- planning


def plan(catalog: Catalog, net: Network, state: State, goal: GoalAst,
         limits: Limits | None = None, ranking: Ranking | None = None,
         tolerance: Tolerance = DEFAULT_TOLERANCE) -> list[Candidate]:
    """Top-ranked combinations that satisfy the goal from the given state.

    A candidate whose evaluation fails at runtime (parallel write conflict,
    iteration overrun, missing binding) is skipped, not an error; an empty
    result means no combination within the limits satisfies the goal.
    """
    limits = limits or Limits()
    ranking = ranking or Ranking()
    satisfying: list[Candidate] = []
    for comb in _expand(catalog, net, limits, tolerance):
        if check_combination(net, catalog, comb, tolerance=tolerance):
            continue
        try:
            report = verify(comb, state, goal, catalog,
                            iteration_cap=limits.iteration_cap, tolerance=tolerance)
        except PatternForgeError:
            continue
        if not report.verified:
            continue
        satisfying.append(Candidate(
            combination=comb, final_state=report.final_state,
            score=_score(report.final_state, ranking),
            significance_total=significance_total(catalog, comb)))
    return rank(satisfying, ranking)[:limits.max_results]
