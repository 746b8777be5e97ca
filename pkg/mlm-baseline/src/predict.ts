/**
 * Next-block suggestion by appending a mask to the local context.
 *
 * The ranking rules mirror the n-gram completion engine: structural markers,
 * the procedure-definition token, and the model specials are never
 * suggested; when the best remaining candidate is END_SCRIPT, the result is
 * replaced by suggestions for a new first block.
 */

import { MaskedPredictor } from "./model";
import { TokenTable } from "./vocab";

export class ModelNotLoaded extends Error {}

export interface Suggestion {
  token: number;
  name: string;
  probability: number;
}

function softmax(logits: Float32Array): Float64Array {
  let max = -Infinity;
  for (const v of logits) max = Math.max(max, v);
  const out = new Float64Array(logits.length);
  let total = 0;
  for (let i = 0; i < logits.length; i++) {
    out[i] = Math.exp(logits[i] - max);
    total += out[i];
  }
  for (let i = 0; i < out.length; i++) out[i] /= total;
  return out;
}

function rankedCandidates(model: MaskedPredictor, context: number[],
                          table: TokenTable): { order: number[];
                            probs: Float64Array } {
  const window = context.slice(-Math.max(1, model.maxLen - 1));
  const logits = model.logitsForLastPosition([...window, table.maskToken]);
  const probs = softmax(logits);
  const order = Array.from(probs.keys()).sort(
    (a, b) => probs[b] - probs[a] || a - b);
  return { order, probs };
}

export function predictNext(model: MaskedPredictor, context: number[], x: number,
                            table: TokenTable): Suggestion[] {
  if (!context.length) throw new Error("context must be nonempty");
  if (x < 1) throw new Error("x must be >= 1");
  if (!model) throw new ModelNotLoaded("no model");

  const banned = table.bannedSuggestions();
  let { order, probs } = rankedCandidates(model, context, table);
  let candidates = order.filter((t) => !banned.has(t));
  if (candidates.length && candidates[0] === table.endScript) {
    // Suggest a fresh script start instead of an end-of-script prediction.
    ({ order, probs } = rankedCandidates(model, [table.beginScript], table));
    candidates = order.filter((t) => !banned.has(t));
  }
  return candidates
    .filter((t) => t !== table.endScript)
    .slice(0, x)
    .map((t) => ({ token: t, name: table.nameOf(t), probability: probs[t] }));
}
