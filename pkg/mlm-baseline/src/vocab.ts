/**
 * Token table shared with the stream producer.
 *
 * Ids follow the table file order (concrete blocks, then reserved tokens);
 * the model appends two specials of its own, [MASK] and [PAD], beyond the
 * stream vocabulary.  The table hash is recomputed here with the same
 * canonical serialization the producer uses, so files can be checked for
 * vocabulary agreement without trusting this package's copy blindly.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { join } from "node:path";

export interface TableEntry {
  name: string;
  category: string;
  shape: string;
}

export interface VocabularyTable {
  blocks: TableEntry[];
  reserved: TableEntry[];
  aliases?: Record<string, string>;
}

/** JSON with object keys sorted at every level and no whitespace. */
function canonicalJson(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(canonicalJson).join(",")}]`;
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => `${JSON.stringify(k)}:${canonicalJson(v)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

export class TokenTable {
  readonly names: string[];
  readonly entries: TableEntry[];
  readonly hash: string;
  readonly size: number;
  readonly procedureDef: number;
  readonly beginScript: number;
  readonly endScript: number;
  readonly beginSprite: number;
  readonly endSprite: number;
  readonly maskToken: number;
  readonly padToken: number;
  private readonly ids = new Map<string, number>();

  constructor(table: VocabularyTable) {
    this.entries = [...table.blocks, ...table.reserved];
    this.names = this.entries.map((e) => e.name);
    this.names.forEach((name, id) => this.ids.set(name, id));
    this.size = this.names.length;
    this.hash = createHash("sha256")
      .update(canonicalJson({ blocks: table.blocks, reserved: table.reserved }))
      .digest("hex")
      .slice(0, 16);
    this.procedureDef = this.idOf("PROCEDURE_DEF");
    this.beginScript = this.idOf("BEGIN_SCRIPT");
    this.endScript = this.idOf("END_SCRIPT");
    this.beginSprite = this.idOf("BEGIN_SPRITE");
    this.endSprite = this.idOf("END_SPRITE");
    this.maskToken = this.size;
    this.padToken = this.size + 1;
  }

  /** Stream vocabulary plus the [MASK]/[PAD] specials. */
  get modelVocabSize(): number {
    return this.size + 2;
  }

  idOf(name: string): number {
    const id = this.ids.get(name);
    if (id === undefined) throw new Error(`unknown token name: ${name}`);
    return id;
  }

  nameOf(id: number): string {
    if (id === this.maskToken) return "[MASK]";
    if (id === this.padToken) return "[PAD]";
    const name = this.names[id];
    if (name === undefined) throw new Error(`unknown token id: ${id}`);
    return name;
  }

  isStructural(id: number): boolean {
    const entry = this.entries[id];
    return entry !== undefined && entry.shape === "structural";
  }

  /** Tokens that must never be suggested to a user. */
  bannedSuggestions(): Set<number> {
    return new Set([
      this.procedureDef,
      this.beginScript,
      this.beginSprite,
      this.endSprite,
      this.maskToken,
      this.padToken,
    ]);
  }

  static fromFile(path: string): TokenTable {
    return new TokenTable(JSON.parse(readFileSync(path, "utf-8")));
  }

  static bundled(): TokenTable {
    return TokenTable.fromFile(join(__dirname, "..", "assets", "vocabulary.json"));
  }
}
