/** Client-side combination trees: syntax-only parsing, rendering, path edits.
 *
 * The shapes below mirror the service's structured combination JSON, so a
 * tree built here can be POSTed as-is. Guards stay raw strings; the service
 * owns goal semantics.
 */

export type Comb =
  | { type: "atom"; pattern: string }
  | { type: "seq"; children: Comb[] }
  | { type: "par"; children: Comb[] }
  | { type: "if"; guard: string; then: Comb; else?: Comb }
  | { type: "while"; guard: string; body: Comb };

export type Path = number[];

export class CombError extends Error {
  constructor(message: string, readonly position?: number) {
    super(position === undefined ? message : `${message} at ${position}`);
    this.name = "CombError";
  }
}

const IDENT = /^[a-z_][a-z0-9_]*/;

class Parser {
  private pos = 0;

  constructor(private readonly text: string) {}

  parse(): Comb {
    const node = this.comb();
    this.skipSpace();
    if (this.pos < this.text.length) {
      throw new CombError(`unexpected '${this.text[this.pos]}'`, this.pos);
    }
    return node;
  }

  private skipSpace(): void {
    while (this.pos < this.text.length && /\s/.test(this.text[this.pos]!)) {
      this.pos += 1;
    }
  }

  private ident(): string {
    this.skipSpace();
    const match = IDENT.exec(this.text.slice(this.pos));
    if (!match) {
      throw new CombError("expected a pattern id or operator", this.pos);
    }
    this.pos += match[0].length;
    return match[0];
  }

  private expect(ch: string): void {
    this.skipSpace();
    if (this.text[this.pos] !== ch) {
      throw new CombError(`expected '${ch}'`, this.pos);
    }
    this.pos += 1;
  }

  private peekIs(ch: string): boolean {
    this.skipSpace();
    return this.text[this.pos] === ch;
  }

  /** Raw guard text up to the next comma outside (), {} and '…' quotes. */
  private guard(): string {
    this.skipSpace();
    const start = this.pos;
    let depth = 0;
    let quoted = false;
    while (this.pos < this.text.length) {
      const ch = this.text[this.pos]!;
      if (quoted) {
        if (ch === "'") quoted = false;
      } else if (ch === "'") {
        quoted = true;
      } else if (ch === "(" || ch === "{") {
        depth += 1;
      } else if (ch === ")" || ch === "}") {
        if (depth === 0) break;
        depth -= 1;
      } else if (ch === "," && depth === 0) {
        break;
      }
      this.pos += 1;
    }
    const text = this.text.slice(start, this.pos).trim();
    if (!text) throw new CombError("expected a guard", start);
    return text;
  }

  private comb(): Comb {
    const name = this.ident();
    // operator names act as plain atoms unless a call follows
    if (!this.peekIs("(")) return { type: "atom", pattern: name };
    if (name === "seq" || name === "par") {
      this.expect("(");
      const children = [this.comb()];
      while (this.peekIs(",")) {
        this.expect(",");
        children.push(this.comb());
      }
      this.expect(")");
      if (children.length < 2) {
        throw new CombError(`${name} needs at least two children`, this.pos);
      }
      return { type: name, children };
    }
    if (name === "if") {
      this.expect("(");
      const guard = this.guard();
      this.expect(",");
      const then = this.comb();
      let orelse: Comb | undefined;
      if (this.peekIs(",")) {
        this.expect(",");
        orelse = this.comb();
      }
      this.expect(")");
      return orelse === undefined
        ? { type: "if", guard, then }
        : { type: "if", guard, then, else: orelse };
    }
    if (name === "while") {
      this.expect("(");
      const guard = this.guard();
      this.expect(",");
      const body = this.comb();
      this.expect(")");
      return { type: "while", guard, body };
    }
    throw new CombError(`'${name}' cannot be called like an operator`, this.pos);
  }
}

export function parseComb(text: string): Comb {
  return new Parser(text).parse();
}

export function renderComb(comb: Comb): string {
  switch (comb.type) {
    case "atom":
      return comb.pattern;
    case "seq":
    case "par":
      return `${comb.type}(${comb.children.map(renderComb).join(", ")})`;
    case "if":
      return comb.else === undefined
        ? `if(${comb.guard}, ${renderComb(comb.then)})`
        : `if(${comb.guard}, ${renderComb(comb.then)}, ${renderComb(comb.else)})`;
    case "while":
      return `while(${comb.guard}, ${renderComb(comb.body)})`;
  }
}

export function atomsOf(comb: Comb): string[] {
  switch (comb.type) {
    case "atom":
      return [comb.pattern];
    case "seq":
    case "par":
      return comb.children.flatMap(atomsOf);
    case "if":
      return comb.else === undefined
        ? atomsOf(comb.then)
        : [...atomsOf(comb.then), ...atomsOf(comb.else)];
    case "while":
      return atomsOf(comb.body);
  }
}

function childOf(comb: Comb, index: number, path: Path): Comb {
  switch (comb.type) {
    case "seq":
    case "par":
      if (index >= 0 && index < comb.children.length) {
        return comb.children[index]!;
      }
      break;
    case "if":
      if (index === 0) return comb.then;
      if (index === 1 && comb.else !== undefined) return comb.else;
      break;
    case "while":
      if (index === 0) return comb.body;
      break;
  }
  throw new CombError(`no child ${index} under [${path.join(", ")}]`);
}

export function nodeAt(comb: Comb, path: Path): Comb {
  let current = comb;
  path.forEach((index, depth) => {
    current = childOf(current, index, path.slice(0, depth + 1));
  });
  return current;
}

function withChild(comb: Comb, index: number, child: Comb, path: Path): Comb {
  switch (comb.type) {
    case "seq":
    case "par":
      if (index >= 0 && index < comb.children.length) {
        const children = comb.children.slice();
        children[index] = child;
        return { ...comb, children };
      }
      break;
    case "if":
      if (index === 0) return { ...comb, then: child };
      if (index === 1 && comb.else !== undefined) return { ...comb, else: child };
      break;
    case "while":
      if (index === 0) return { ...comb, body: child };
      break;
  }
  throw new CombError(`no child ${index} under [${path.join(", ")}]`);
}

export function replaceAt(comb: Comb, path: Path, node: Comb): Comb {
  if (path.length === 0) return node;
  const [head, ...rest] = path as [number, ...number[]];
  const updated = replaceAt(childOf(comb, head, [head]), rest, node);
  return withChild(comb, head, updated, [head]);
}

/** Swap an atom for the subtree that spells it out in more detail. */
export function refineAt(comb: Comb, path: Path, subtree: Comb): Comb {
  const target = nodeAt(comb, path);
  if (target.type !== "atom") {
    throw new CombError("refine needs an atom at the path");
  }
  return replaceAt(comb, path, subtree);
}

/** Insert a new child into the seq/par at `path`, before position `index`. */
export function augmentAt(comb: Comb, path: Path, node: Comb,
                          index: number): Comb {
  const target = nodeAt(comb, path);
  if (target.type !== "seq" && target.type !== "par") {
    throw new CombError("augment needs a seq or par at the path");
  }
  if (index < 0 || index > target.children.length) {
    throw new CombError(`insert position ${index} out of range`);
  }
  const children = target.children.slice();
  children.splice(index, 0, node);
  return replaceAt(comb, path, { ...target, children });
}

/** Remove a child of a seq/par; a container left with one child collapses. */
export function removeAt(comb: Comb, path: Path): Comb {
  if (path.length === 0) {
    throw new CombError("cannot remove the root");
  }
  const parentPath = path.slice(0, -1);
  const index = path[path.length - 1]!;
  const parent = nodeAt(comb, parentPath);
  if (parent.type !== "seq" && parent.type !== "par") {
    throw new CombError("remove needs a seq or par parent");
  }
  if (index < 0 || index >= parent.children.length) {
    throw new CombError(`no child ${index} under [${parentPath.join(", ")}]`);
  }
  const children = parent.children.filter((_, i) => i !== index);
  const replacement =
    children.length === 1 ? children[0]! : { ...parent, children };
  return replaceAt(comb, parentPath, replacement);
}
