/** JSON payload shapes exchanged with the composition service. */

export type Value = number | string | boolean;

export interface AttributeDef {
  name: string;
  kind: "number" | "enum" | "flag";
  merge: string;
  unit?: string;
  domain?: string[];
}

export interface FunctionDef {
  name: string;
  params: string[];
  body?: string;
  table?: [number, number][];
}

export interface PatternSummary {
  id: string;
  title: string;
  characterization: Record<string, Value>;
  significance: { usage_count: number; contexts: string[] };
  goal: string;
  transformations: string[];
  consumes: string[];
  produces: string[];
  refines?: string;
}

export interface CatalogSnapshot {
  schema: AttributeDef[];
  functions: FunctionDef[];
  patterns: PatternSummary[];
}

export interface NetworkSnapshot {
  adjacency: { from: string; to: string }[];
  compatibility: string[];
  initial_artifacts: string[];
}

export type StateMap = Record<string, Value>;

export type TraceEvent =
  | { event: "atom"; pattern: string; state_before: StateMap;
      state_after: StateMap; pattern_goal_satisfied: boolean }
  | { event: "par_merged"; attribute: string; policy: string;
      branch_values: Value[]; merged: Value }
  | { event: "cond"; branch: string; guard_value: boolean }
  | { event: "iter"; count: number };

export interface Breakdown {
  node: string;
  text: string;
  value: boolean;
  operands?: Value[];
  children?: Breakdown[];
}

export interface VerifyReport {
  verified: boolean;
  final_state: StateMap;
  breakdown: Breakdown;
  trace: TraceEvent[];
}

export interface EvaluateResult {
  final_state: StateMap;
  trace: TraceEvent[];
}

export interface Violation {
  kind: "adjacency" | "compatibility" | "artifact_flow";
  location: string[];
  message: string;
}

export interface Candidate {
  combination_text: string;
  combination: unknown;
  final_state: StateMap;
  score: Value[];
  significance_total: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  location?: unknown;
  errors?: ApiErrorBody[];
}
