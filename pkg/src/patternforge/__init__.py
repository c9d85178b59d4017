"""Goal-driven composition of reusable software process patterns.

A catalog describes atomic patterns as state transformers over a typed
attribute schema; combinations arrange them sequentially, in parallel,
conditionally, or iteratively; a composition network constrains which
arrangements are admissible; and the planner searches the admissible space
for combinations whose final state satisfies a goal formula.
"""

from .catalog import (
    AtomApplied,
    Catalog,
    ProcessPattern,
    QualityModel,
    Significance,
    Transformation,
    apply_pattern,
    eval_function,
    load_catalog,
    load_catalog_file,
)
from .composition import (
    Atom,
    Augment,
    Combination,
    Cond,
    CondTaken,
    Iter,
    IterCount,
    Par,
    ParMerged,
    Refine,
    Replace,
    Seq,
    Trace,
    VerifyReport,
    bind_combination,
    evaluate,
    parse_combination,
    render_combination,
    replay,
    rewrite,
    verify,
)
from .errors import (
    ArityMismatch,
    BadPath,
    BadRefinesTarget,
    DivisionByZero,
    DuplicateId,
    IterationLimitExceeded,
    MultipleErrors,
    ParallelWriteConflict,
    ParseError,
    PatternForgeError,
    RefinementMismatch,
    TableDomainError,
    TypeMismatch,
    UnknownAttribute,
    UnknownFunction,
    UnknownPattern,
)
from .expr import (
    eval_expression,
    eval_goal,
    parse_expression,
    parse_goal,
    render_expression,
    render_goal,
    resolve_expression,
    resolve_goal,
)
from .model import (
    AttributeDef,
    Schema,
    State,
    Tolerance,
    compare,
    merge,
    numbers_equal,
    validate_state,
)
from .network import (
    AdjacencyRule,
    Network,
    Violation,
    allowed_successors,
    check_combination,
    compatible_pair,
    load_network,
    load_network_file,
)
from .planner import (
    Candidate,
    Limits,
    Ranking,
    enumerate_all,
    load_limits,
    load_ranking,
    plan,
    rank,
    significance_total,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyRule",
    "ArityMismatch",
    "Atom",
    "AtomApplied",
    "AttributeDef",
    "Augment",
    "BadPath",
    "BadRefinesTarget",
    "Candidate",
    "Catalog",
    "Combination",
    "Cond",
    "CondTaken",
    "DivisionByZero",
    "DuplicateId",
    "Iter",
    "IterCount",
    "IterationLimitExceeded",
    "Limits",
    "MultipleErrors",
    "Network",
    "Par",
    "ParMerged",
    "ParallelWriteConflict",
    "ParseError",
    "PatternForgeError",
    "ProcessPattern",
    "QualityModel",
    "Ranking",
    "Refine",
    "RefinementMismatch",
    "Replace",
    "Schema",
    "Seq",
    "Significance",
    "State",
    "Tolerance",
    "Trace",
    "Transformation",
    "TypeMismatch",
    "UnknownAttribute",
    "UnknownFunction",
    "UnknownPattern",
    "VerifyReport",
    "Violation",
    "allowed_successors",
    "apply_pattern",
    "bind_combination",
    "check_combination",
    "compare",
    "compatible_pair",
    "enumerate_all",
    "eval_expression",
    "eval_function",
    "eval_goal",
    "evaluate",
    "load_catalog",
    "load_catalog_file",
    "load_limits",
    "load_network",
    "load_network_file",
    "load_ranking",
    "merge",
    "numbers_equal",
    "parse_combination",
    "parse_expression",
    "parse_goal",
    "plan",
    "rank",
    "render_combination",
    "render_expression",
    "render_goal",
    "replay",
    "resolve_expression",
    "resolve_goal",
    "rewrite",
    "significance_total",
    "validate_state",
    "verify",
]
