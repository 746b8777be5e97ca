/**
 * Splitting of sprite-level sequences into model-sized subsequences.
 *
 * The first subsequence is the sprite prefix of length min(n, m).  Each
 * following one centers the earliest script not yet fully contained in a
 * generated subsequence and fills the remaining room with surrounding
 * context, one token per side per round, spilling to the other side when one
 * end of the sprite is reached.  Scripts longer than m cannot be centered
 * whole; they are covered by consecutive m-sized chunks instead, which keeps
 * the coverage guarantee, and counted as truncation warnings.
 */

import { ScriptSpan } from "./streams";

export interface Subsequence {
  tokens: number[];
  start: number; // source index of tokens[0] within the sprite sequence
}

export interface SplitResult {
  subsequences: Subsequence[];
  truncatedScripts: number;
}

function contained(span: ScriptSpan, subsequences: Subsequence[]): boolean {
  return subsequences.some(
    (s) => span.start >= s.start && span.end <= s.start + s.tokens.length,
  );
}

export function splitSequences(
  tokens: number[],
  spans: ScriptSpan[],
  maxLen: number,
): SplitResult {
  if (maxLen < 1) throw new Error("maxLen must be >= 1");
  const n = tokens.length;
  const result: SplitResult = { subsequences: [], truncatedScripts: 0 };
  if (n === 0) return result;

  result.subsequences.push({ tokens: tokens.slice(0, Math.min(n, maxLen)), start: 0 });

  // An oversized script can never be contained in one subsequence; once
  // chunked it is marked done or the search would find it forever.
  const chunked = new Set<number>();
  for (;;) {
    const index = spans.findIndex(
      (span, i) => !chunked.has(i) && !contained(span, result.subsequences));
    if (index < 0) break;
    const next = spans[index];
    if (next.end - next.start > maxLen) {
      result.truncatedScripts += 1;
      chunked.add(index);
      for (let s = next.start; s < next.end; s += maxLen) {
        const end = Math.min(s + maxLen, next.end);
        result.subsequences.push({ tokens: tokens.slice(s, end), start: s });
      }
      continue;
    }
    let lo = next.start;
    let hi = next.end;
    while (hi - lo < maxLen && (lo > 0 || hi < n)) {
      if (lo > 0) lo -= 1;
      if (hi - lo < maxLen && hi < n) hi += 1;
    }
    result.subsequences.push({ tokens: tokens.slice(lo, hi), start: lo });
  }
  return result;
}

/** Source indices covered by at least one subsequence. */
export function coveredIndices(result: SplitResult): Set<number> {
  const covered = new Set<number>();
  for (const sub of result.subsequences) {
    for (let i = 0; i < sub.tokens.length; i++) covered.add(sub.start + i);
  }
  return covered;
}
