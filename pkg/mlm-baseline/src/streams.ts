/**
 * Reader/writer for the line-delimited token-stream interchange format.
 *
 * The serializer is byte-stable and matches the producer exactly (compact
 * separators, fixed key order, raw UTF-8), so a parse/serialize round trip
 * reproduces input files bit for bit.
 */

import { TokenTable } from "./vocab";

export const STREAM_FORMAT = "sb3-token-streams";
export const STREAM_VERSION = 1;

export interface StreamHeader {
  format: string;
  version: number;
  vocab: string;
}

export interface SpriteRecord {
  project: string;
  sprite: string;
  tokens: number[];
  reachable: boolean[];
}

export interface StreamFile {
  header: StreamHeader;
  records: SpriteRecord[];
}

export function parseStreamFile(text: string): StreamFile {
  const lines = text.split("\n");
  if (!lines.length || !lines[0]) throw new Error("empty stream file");
  const header = JSON.parse(lines[0]) as StreamHeader;
  if (header.format !== STREAM_FORMAT) {
    throw new Error(`not a ${STREAM_FORMAT} file`);
  }
  if (header.version !== STREAM_VERSION) {
    throw new Error(
      `stream format version ${header.version}, supported: ${STREAM_VERSION}`,
    );
  }
  const records: SpriteRecord[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (!line || !line.trim()) continue;
    const doc = JSON.parse(line);
    records.push({
      project: String(doc.project),
      sprite: String(doc.sprite),
      tokens: (doc.tokens as number[]).map(Number),
      reachable: (doc.reachable as boolean[]).map(Boolean),
    });
  }
  return { header, records };
}

export function serializeStreamFile(file: StreamFile): string {
  const head = JSON.stringify({
    format: file.header.format,
    version: file.header.version,
    vocab: file.header.vocab,
  });
  const body = file.records.map((r) =>
    JSON.stringify({
      project: r.project,
      sprite: r.sprite,
      tokens: r.tokens,
      reachable: r.reachable,
    }),
  );
  return [head, ...body].map((line) => line + "\n").join("");
}

export interface ScriptSpan {
  start: number; // index of BEGIN_SCRIPT
  end: number; // one past END_SCRIPT
}

/** Marker-delimited script spans within a flat sprite token list. */
export function scriptSpans(tokens: number[], table: TokenTable): ScriptSpan[] {
  const spans: ScriptSpan[] = [];
  let start: number | null = null;
  tokens.forEach((token, index) => {
    if (token === table.beginScript) start = index;
    else if (token === table.endScript && start !== null) {
      spans.push({ start, end: index + 1 });
      start = null;
    }
  });
  return spans;
}

/**
 * One token sequence per sprite: every procedure-definition script first,
 * then the remaining scripts in file order.
 */
export function buildSpriteSequence(
  record: SpriteRecord,
  table: TokenTable,
  proceduresFirst = true,
): number[] {
  const spans = scriptSpans(record.tokens, table);
  const scripts = spans.map((s) => record.tokens.slice(s.start, s.end));
  if (!proceduresFirst) return scripts.flat();
  const defs = scripts.filter((s) => s[1] === table.procedureDef);
  const rest = scripts.filter((s) => s[1] !== table.procedureDef);
  return [...defs, ...rest].flat();
}
