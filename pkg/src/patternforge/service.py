"""Stateless HTTP/JSON API over a fixed catalog/network snapshot.

Every response is derivable from one library call on the request payload.
Client-side input problems (bad DSL, unknown names, malformed payloads) map
to 400; requests that are well-formed but fail during evaluation (iteration
overrun, parallel write conflict, numeric faults) map to 422.
"""

from __future__ import annotations

from typing import Any, Mapping

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .catalog import Catalog, check_goal_static
from .codec import (
    decode_combination,
    decode_goal,
    decode_state,
    encode_candidate,
    encode_catalog,
    encode_network,
    encode_state,
    encode_trace,
    encode_verify_report,
    encode_violation,
)
from .composition import bind_combination, evaluate, verify
from .errors import MultipleErrors, PatternForgeError, raise_collected
from .expr import GoalAst, resolve_goal
from .network import Network, allowed_successors, check_combination
from .planner import load_limits, load_ranking, plan

# codes produced only while running an otherwise valid request
RUNTIME_CODES = frozenset(
    {"DIVISION_BY_ZERO", "TABLE_DOMAIN", "PARALLEL_CONFLICT", "ITERATION_LIMIT"})


class BadRequest(PatternForgeError):
    code = "BAD_REQUEST"


def _error_body(e: PatternForgeError) -> dict[str, Any]:
    body: dict[str, Any] = {"code": e.code, "message": str(e)}
    location = getattr(e, "location", None)
    if location is not None:
        body["location"] = location
    position = getattr(e, "position", None)
    if position is not None:
        body["location"] = position
    if isinstance(e, MultipleErrors):
        body["errors"] = [_error_body(inner) for inner in e.errors]
    return body


def _require(payload: Mapping[str, Any], key: str) -> Any:
    if key not in payload:
        raise BadRequest(f"missing required field '{key}'")
    return payload[key]


def _decode_goal_checked(raw: Any, catalog: Catalog) -> GoalAst:
    goal = resolve_goal(decode_goal(raw), catalog.schema)
    errors: list[PatternForgeError] = []
    check_goal_static(goal, catalog.schema, catalog.functions, errors, "goal")
    raise_collected(errors)
    return goal


def _iteration_cap(payload: Mapping[str, Any]) -> int:
    cap = payload.get("iteration_cap", 100)
    if not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
        raise BadRequest(f"iteration_cap must be a positive integer, got {cap!r}")
    return cap


def create_app(catalog: Catalog, network: Network) -> FastAPI:
    app = FastAPI(title="patternforge", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(PatternForgeError)
    async def handle_domain_error(request: Request, e: PatternForgeError):
        status = 422 if e.code in RUNTIME_CODES else 400
        return JSONResponse(status_code=status, content=_error_body(e))

    @app.exception_handler(RequestValidationError)
    async def handle_malformed(request: Request, e: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "BAD_REQUEST",
                                     "message": "malformed request body"})

    @app.exception_handler(Exception)
    async def handle_unexpected(request: Request, e: Exception):
        return JSONResponse(status_code=500,
                            content={"code": "INTERNAL_ERROR",
                                     "message": "internal error"})

    @app.get("/api/catalog")
    def get_catalog():
        return encode_catalog(catalog)

    @app.get("/api/network")
    def get_network():
        return encode_network(network)

    @app.post("/api/evaluate")
    def post_evaluate(payload: dict = Body(...)):
        state = decode_state(_require(payload, "state"), catalog.schema)
        comb = bind_combination(decode_combination(_require(payload, "combination")),
                                catalog)
        final, trace = evaluate(comb, state, catalog,
                                iteration_cap=_iteration_cap(payload))
        return {"final_state": encode_state(final), "trace": encode_trace(trace)}

    @app.post("/api/verify")
    def post_verify(payload: dict = Body(...)):
        state = decode_state(_require(payload, "state"), catalog.schema)
        comb = bind_combination(decode_combination(_require(payload, "combination")),
                                catalog)
        goal = _decode_goal_checked(_require(payload, "goal"), catalog)
        report = verify(comb, state, goal, catalog,
                        iteration_cap=_iteration_cap(payload))
        return encode_verify_report(report)

    @app.post("/api/check")
    def post_check(payload: dict = Body(...)):
        comb = bind_combination(decode_combination(_require(payload, "combination")),
                                catalog)
        violations = check_combination(network, catalog, comb)
        return {"violations": [encode_violation(v) for v in violations]}

    @app.post("/api/successors")
    def post_successors(payload: dict = Body(...)):
        prefix = payload.get("prefix_atoms", [])
        if not isinstance(prefix, list) or any(not isinstance(p, str) for p in prefix):
            raise BadRequest("prefix_atoms must be a list of pattern ids")
        raw_artifacts = payload.get("artifacts")
        if raw_artifacts is None:
            artifacts = network.initial_artifacts
        elif (isinstance(raw_artifacts, list)
              and all(isinstance(a, str) for a in raw_artifacts)):
            artifacts = frozenset(raw_artifacts)
        else:
            raise BadRequest("artifacts must be a list of artifact names")
        ids = allowed_successors(network, catalog, prefix, artifacts)
        return {"pattern_ids": ids}

    @app.post("/api/plan")
    def post_plan(payload: dict = Body(...)):
        state = decode_state(_require(payload, "state"), catalog.schema)
        goal = _decode_goal_checked(_require(payload, "goal"), catalog)
        limits = load_limits(payload.get("limits"))
        ranking = load_ranking(payload.get("ranking"), catalog)
        candidates = plan(catalog, network, state, goal, limits, ranking)
        return {"candidates": [encode_candidate(c) for c in candidates]}

    return app
