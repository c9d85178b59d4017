/** Workbench UI: catalog browser, combination editor, live verify, planner. */

import { ApiError, apiBase, Client } from "./api.js";
import {
  atomsOf,
  Comb,
  CombError,
  nodeAt,
  parseComb,
  Path,
  refineAt,
  removeAt,
  replaceAt,
  augmentAt,
  renderComb,
} from "./comb.js";
import { createSync, Sync } from "./sync.js";
import type {
  CatalogSnapshot,
  NetworkSnapshot,
  PatternSummary,
  StateMap,
  TraceEvent,
  Value,
  VerifyReport,
  Violation,
} from "./types.js";

interface Model {
  catalog: CatalogSnapshot;
  network: NetworkSnapshot;
  stateText: string;
  goalText: string;
  comb: Comb;
  report?: VerifyReport;
  violations: Violation[];
  problem?: string;
  pending: boolean;
}

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string,
    ...children: (Node | string)[]): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  node.append(...children);
  return node;
}

function button(label: string, onClick: () => void,
                className = "btn"): HTMLButtonElement {
  const b = el("button", className, label);
  b.type = "button";
  b.addEventListener("click", onClick);
  return b;
}

function fmt(value: Value): string {
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "string") return `'${value}'`;
  return String(value);
}

function parseState(text: string): StateMap {
  const raw = JSON.parse(text) as unknown;
  if (raw === null || typeof raw !== "object" || Array.isArray(raw)) {
    throw new Error("state must be a JSON object");
  }
  return raw as StateMap;
}

class Workbench {
  private readonly model: Model;
  private readonly verifySync: Sync<{ state: StateMap; comb: Comb; goal: string }>;
  private readonly checkSync: Sync<Comb>;
  private readonly root: HTMLElement;

  constructor(private readonly client: Client, root: HTMLElement,
              catalog: CatalogSnapshot, network: NetworkSnapshot) {
    this.root = root;
    const first = catalog.patterns[0];
    this.model = {
      catalog,
      network,
      stateText: JSON.stringify(this.defaultState(catalog), null, 2),
      goalText: "true",
      comb: { type: "atom", pattern: first ? first.id : "missing" },
      violations: [],
      pending: false,
    };
    this.verifySync = createSync({
      send: (p) => this.client.verify(p.state, p.comb, p.goal),
      apply: (report) => {
        this.model.report = report;
        this.model.problem = undefined;
        this.model.pending = false;
        this.render();
      },
      onError: (error) => {
        this.model.report = undefined;
        this.model.problem = describe(error);
        this.model.pending = false;
        this.render();
      },
    });
    this.checkSync = createSync({
      send: (comb) => this.client.check(comb),
      apply: (result) => {
        this.model.violations = result.violations;
        this.render();
      },
      onError: () => undefined,
    });
  }

  private defaultState(catalog: CatalogSnapshot): StateMap {
    const state: StateMap = {};
    for (const attr of catalog.schema) {
      if (attr.kind === "number") state[attr.name] = 0;
      else if (attr.kind === "flag") state[attr.name] = false;
      else if (attr.domain && attr.domain.length > 0) {
        state[attr.name] = attr.domain[0]!;
      }
    }
    return state;
  }

  private refresh(): void {
    this.model.pending = true;
    try {
      const state = parseState(this.model.stateText);
      this.verifySync.schedule({
        state, comb: this.model.comb, goal: this.model.goalText });
      this.checkSync.schedule(this.model.comb);
    } catch (error) {
      this.model.report = undefined;
      this.model.problem = describe(error);
      this.model.pending = false;
    }
    this.render();
  }

  private edit(next: Comb): void {
    this.model.comb = next;
    this.refresh();
  }

  start(): void {
    this.refresh();
  }

  // ------------------------------------------------------------ rendering

  private render(): void {
    this.root.replaceChildren(
      this.catalogPanel(),
      el("div", "center",
         this.editorPanel(),
         this.textPanel(),
         this.projectPanel()),
      el("div", "side",
         this.verdictPanel(),
         this.planPanel()),
    );
  }

  private catalogPanel(): HTMLElement {
    const list = el("div", "pattern-list");
    for (const pattern of this.model.catalog.patterns) {
      const used = atomsOf(this.model.comb).includes(pattern.id);
      const card = el("div", used ? "pattern used" : "pattern",
        el("div", "pattern-id", pattern.id),
        el("div", "pattern-title", pattern.title),
        el("div", "pattern-meta",
           `${pattern.significance.usage_count} uses, ` +
           `${pattern.transformations.length} transformation(s)`));
      card.title = pattern.transformations.join("\n");
      list.append(card);
    }
    return el("div", "panel catalog",
       el("h2", undefined, `Catalog (${this.model.catalog.patterns.length})`),
       list);
  }

  private patternSelect(current: string,
                        onPick: (id: string) => void): HTMLSelectElement {
    const select = el("select", "pattern-select");
    for (const pattern of this.model.catalog.patterns) {
      const option = el("option", undefined, pattern.id);
      option.value = pattern.id;
      option.selected = pattern.id === current;
      select.append(option);
    }
    select.addEventListener("change", () => onPick(select.value));
    return select;
  }

  private refinersOf(id: string): PatternSummary[] {
    return this.model.catalog.patterns.filter((p) => p.refines === id);
  }

  private nodeCard(node: Comb, path: Path): HTMLElement {
    const controls = el("div", "node-controls");
    if (path.length > 0) {
      const parent = nodeAt(this.model.comb, path.slice(0, -1));
      if (parent.type === "seq" || parent.type === "par") {
        controls.append(button("remove", () =>
          this.edit(removeAt(this.model.comb, path)), "btn danger"));
      }
    }

    if (node.type === "atom") {
      const refiners = this.refinersOf(node.pattern);
      if (refiners.length > 0) {
        controls.append(button(`refine (${refiners.length})`, () => {
          const parts: Comb[] = refiners.map(
            (p) => ({ type: "atom", pattern: p.id }));
          const subtree: Comb =
            parts.length === 1 ? parts[0]! : { type: "seq", children: parts };
          this.edit(refineAt(this.model.comb, path, subtree));
        }));
      }
      return el("div", "node atom-node",
        this.patternSelect(node.pattern, (id) =>
          this.edit(replaceAt(this.model.comb, path,
                              { type: "atom", pattern: id }))),
        controls);
    }

    if (node.type === "seq" || node.type === "par") {
      const children = node.children.map((child, i) =>
        this.nodeCard(child, [...path, i]));
      const firstPattern = this.model.catalog.patterns[0];
      if (firstPattern) {
        controls.append(button("add step", () =>
          this.edit(augmentAt(this.model.comb, path,
                              { type: "atom", pattern: firstPattern.id },
                              node.children.length))));
      }
      return el("div", `node ${node.type}-node`,
        el("div", "node-head", el("span", "op", node.type), controls),
        el("div", "node-children", ...children));
    }

    const guardInput = el("input", "guard-input") as HTMLInputElement;
    guardInput.value = node.guard;
    guardInput.addEventListener("change", () => {
      const updated: Comb = node.type === "if"
        ? { ...node, guard: guardInput.value }
        : { ...node, guard: guardInput.value };
      this.edit(replaceAt(this.model.comb, path, updated));
    });

    if (node.type === "if") {
      const branches = [this.nodeCard(node.then, [...path, 0])];
      if (node.else !== undefined) {
        branches.push(el("div", "branch-label", "else"),
                      this.nodeCard(node.else, [...path, 1]));
      }
      return el("div", "node if-node",
        el("div", "node-head", el("span", "op", "if"), guardInput, controls),
        el("div", "node-children", ...branches));
    }
    return el("div", "node while-node",
      el("div", "node-head", el("span", "op", "while"), guardInput, controls),
      el("div", "node-children", this.nodeCard(node.body, [...path, 0])));
  }

  private editorPanel(): HTMLElement {
    return el("div", "panel editor",
      el("h2", undefined, "Combination"),
      this.nodeCard(this.model.comb, []));
  }

  private textPanel(): HTMLElement {
    const area = el("textarea", "comb-text") as HTMLTextAreaElement;
    area.value = renderComb(this.model.comb);
    area.rows = 3;
    const error = el("div", "inline-error");
    area.addEventListener("change", () => {
      try {
        this.edit(parseComb(area.value));
      } catch (e) {
        error.textContent = e instanceof CombError ? e.message : String(e);
      }
    });
    return el("div", "panel text-view",
      el("h2", undefined, "Text view"), area, error);
  }

  private projectPanel(): HTMLElement {
    const stateArea = el("textarea", "state-text") as HTMLTextAreaElement;
    stateArea.value = this.model.stateText;
    stateArea.rows = 6;
    stateArea.addEventListener("change", () => {
      this.model.stateText = stateArea.value;
      this.refresh();
    });
    const goalInput = el("input", "goal-input") as HTMLInputElement;
    goalInput.value = this.model.goalText;
    goalInput.addEventListener("change", () => {
      this.model.goalText = goalInput.value;
      this.refresh();
    });
    return el("div", "panel project",
      el("h2", undefined, "Project"),
      el("label", undefined, "Initial state (JSON)"), stateArea,
      el("label", undefined, "Goal"), goalInput);
  }

  private verdictPanel(): HTMLElement {
    const panel = el("div", "panel verdict");
    panel.append(el("h2", undefined, "Verification"));
    if (this.model.pending) {
      panel.append(el("div", "badge pending", "checking"));
    } else if (this.model.problem !== undefined) {
      panel.append(el("div", "badge error", "error"),
                   el("div", "problem", this.model.problem));
    } else if (this.model.report) {
      const report = this.model.report;
      panel.append(el("div",
        report.verified ? "badge ok" : "badge fail",
        report.verified ? "verified" : "not verified"));
      const rows = Object.entries(report.final_state).map(([name, value]) =>
        el("tr", undefined, el("td", undefined, name),
           el("td", undefined, fmt(value))));
      panel.append(el("h3", undefined, "Final state"),
                   el("table", "state-table", ...rows));
      panel.append(el("h3", undefined, "Trace"),
                   el("ul", "trace", ...report.trace.map((event) =>
                     el("li", undefined, describeEvent(event)))));
    }
    if (this.model.violations.length > 0) {
      panel.append(el("h3", undefined, "Network violations"),
        el("ul", "violations", ...this.model.violations.map((v) =>
          el("li", `violation ${v.kind}`, `${v.kind}: ${v.message}`))));
    }
    return panel;
  }

  private planPanel(): HTMLElement {
    const panel = el("div", "panel plan");
    panel.append(el("h2", undefined, "Planner"));
    const ranking = el("input", "ranking-input") as HTMLInputElement;
    ranking.value = "min effort";
    const maxAtoms = el("input", "atoms-input") as HTMLInputElement;
    maxAtoms.type = "number";
    maxAtoms.value = "3";
    const results = el("div", "plan-results");
    panel.append(
      el("label", undefined, "Ranking"), ranking,
      el("label", undefined, "Max atoms"), maxAtoms,
      button("run plan", () => {
        results.replaceChildren(el("div", "badge pending", "planning"));
        let state: StateMap;
        try {
          state = parseState(this.model.stateText);
        } catch (error) {
          results.replaceChildren(el("div", "problem", describe(error)));
          return;
        }
        this.client
          .plan(state, this.model.goalText,
                { max_atoms: Number(maxAtoms.value) }, ranking.value)
          .then((response) => {
            if (response.candidates.length === 0) {
              results.replaceChildren(el("div", "empty", "no candidates"));
              return;
            }
            results.replaceChildren(...response.candidates.map((c, i) => {
              const scores = c.score.map(fmt).join(", ");
              return el("div", "candidate",
                el("div", "candidate-text",
                   `${i + 1}. ${c.combination_text}  [${scores}]`),
                button("load", () => {
                  this.edit(parseComb(c.combination_text));
                }));
            }));
          })
          .catch((error) => {
            results.replaceChildren(el("div", "problem", describe(error)));
          });
      }),
      results);
    return panel;
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    const parts = [error.body.message];
    for (const inner of error.body.errors ?? []) parts.push(inner.message);
    return parts.join("; ");
  }
  return error instanceof Error ? error.message : String(error);
}

function describeEvent(event: TraceEvent): string {
  switch (event.event) {
    case "atom":
      return `${event.pattern}${event.pattern_goal_satisfied ? "" : " (pattern goal missed)"}`;
    case "par_merged":
      return `merged ${event.attribute} (${event.policy}): ` +
        `${event.branch_values.map(fmt).join(", ")} -> ${fmt(event.merged)}`;
    case "cond":
      return `took ${event.branch} branch (guard ${event.guard_value})`;
    case "iter":
      return `loop ran ${event.count} time(s)`;
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const client = new Client(apiBase(window.location.search));
  try {
    const [catalog, network] = await Promise.all(
      [client.getCatalog(), client.getNetwork()]);
    new Workbench(client, root, catalog, network).start();
  } catch (error) {
    root.replaceChildren(
      el("div", "panel",
         el("h2", undefined, "Service unreachable"),
         el("div", "problem", describe(error)),
         el("div", undefined,
            "Start the service and reload, or point the workbench at it " +
            "with ?api=http://host:port")));
  }
}

void boot();
