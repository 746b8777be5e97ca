/**
 * Evaluation over stream records, emitting the shared prediction-record
 * schema (one JSON object per line: context ids, truth id, ranked
 * suggestion id/probability pairs) so the same scorer can compare this
 * model with the n-gram engine.
 */

import { MaskedPredictor } from "./model";
import { predictNext } from "./predict";
import { SpriteRecord, buildSpriteSequence } from "./streams";
import { TokenTable } from "./vocab";

export interface PredictionRecord {
  context: number[];
  truth: number;
  suggestions: [number, number][];
}

export function evaluateRecords(model: MaskedPredictor,
                                records: SpriteRecord[], table: TokenTable,
                                topX: number): PredictionRecord[] {
  const out: PredictionRecord[] = [];
  for (const record of records) {
    const sequence = buildSpriteSequence(record, table, true);
    for (let position = 1; position < sequence.length; position++) {
      const truth = sequence[position];
      if (truth === table.procedureDef || table.isStructural(truth)) continue;
      const context = sequence.slice(
        Math.max(0, position - (model.maxLen - 1)), position);
      const suggestions = predictNext(model, context, topX, table);
      out.push({
        context,
        truth,
        suggestions: suggestions.map((s) => [s.token, s.probability]),
      });
    }
  }
  return out;
}

export function serializeRecords(records: PredictionRecord[]): string {
  return records
    .map((r) => JSON.stringify({
      context: r.context, truth: r.truth, suggestions: r.suggestions,
    }) + "\n")
    .join("");
}
