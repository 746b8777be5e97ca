/**
 * Masked-token training over sprite subsequences.
 *
 * Masking follows the conventional random scheme: 15% of positions are
 * selected per example; of those, 80% become [MASK], 10% a random vocabulary
 * token, 10% stay unchanged.  At least one position is always selected so
 * short sequences still contribute signal.  Every run writes a training log
 * next to the model artifact.
 */

import * as tf from "@tensorflow/tfjs";
import { appendFileSync, writeFileSync, mkdirSync } from "node:fs";
import { join } from "node:path";

import { DEFAULT_CONFIG, MlmConfig, TransformerMLM } from "./model";

const DEFAULT_TRAIN_MAXLEN = DEFAULT_CONFIG.maxLen;
import { SpriteRecord, buildSpriteSequence, scriptSpans } from "./streams";
import { splitSequences } from "./split";
import { TokenTable } from "./vocab";

export class InsufficientData extends Error {}

export interface TrainOptions {
  steps: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  logEvery: number;
}

export const DEFAULT_TRAIN_OPTIONS: TrainOptions = {
  steps: 400,
  batchSize: 16,
  learningRate: 3e-3,
  seed: 1,
  logEvery: 25,
};

/** Deterministic 32-bit PRNG so runs are reproducible. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function buildSubsequences(records: SpriteRecord[], table: TokenTable,
                                  maxLen: number): number[][] {
  const out: number[][] = [];
  let truncated = 0;
  for (const record of records) {
    const sequence = buildSpriteSequence(record, table, true);
    if (!sequence.length) continue;
    const spans = scriptSpans(sequence, table);
    const split = splitSequences(sequence, spans, maxLen);
    truncated += split.truncatedScripts;
    out.push(...split.subsequences.map((s) => s.tokens));
  }
  if (truncated > 0) {
    console.warn(`${truncated} script(s) longer than ${maxLen} tokens were chunked`);
  }
  return out;
}

export interface MaskedBatch {
  ids: number[][];
  labels: number[][];
  weights: number[][];
}

export function maskBatch(sequences: number[][], table: TokenTable,
                          maskingRate: number, rand: () => number,
                          padTo?: number): MaskedBatch {
  const width = padTo ?? Math.max(...sequences.map((s) => s.length));
  const ids: number[][] = [];
  const labels: number[][] = [];
  const weights: number[][] = [];
  for (const sequence of sequences) {
    const row = [...sequence];
    const label = [...sequence];
    const weight = sequence.map(() => 0);
    const positions = sequence.map((_, i) => i);
    let chosen = positions.filter(() => rand() < maskingRate);
    if (!chosen.length) {
      chosen = [Math.floor(rand() * sequence.length)];
    }
    for (const position of chosen) {
      weight[position] = 1;
      const roll = rand();
      if (roll < 0.8) row[position] = table.maskToken;
      else if (roll < 0.9) row[position] = Math.floor(rand() * table.size);
      // else: keep the original token
    }
    while (row.length < width) {
      row.push(table.padToken);
      label.push(table.padToken);
      weight.push(0);
    }
    ids.push(row);
    labels.push(label);
    weights.push(weight);
  }
  return { ids, labels, weights };
}

export interface TrainResult {
  model: TransformerMLM;
  finalLoss: number;
  maskedAccuracy: number;
  steps: number;
}

export function trainMlm(records: SpriteRecord[], table: TokenTable,
                         config: Partial<MlmConfig> = {},
                         options: Partial<TrainOptions> = {},
                         artifactDir?: string): TrainResult {
  const opts = { ...DEFAULT_TRAIN_OPTIONS, ...options };
  const maxLen = config.maxLen ?? DEFAULT_TRAIN_MAXLEN;
  const subsequences = buildSubsequences(records, table, maxLen);
  if (!subsequences.length) {
    throw new InsufficientData("no training subsequences");
  }
  const model = new TransformerMLM({
    vocabSize: table.modelVocabSize,
    ...config,
  });

  const logPath = artifactDir ? join(artifactDir, "training.log") : undefined;
  if (logPath) {
    mkdirSync(artifactDir!, { recursive: true });
    writeFileSync(logPath, JSON.stringify({
      event: "start", config: model.config, options: opts,
      subsequences: subsequences.length,
    }) + "\n");
  }

  const rand = mulberry32(opts.seed);
  const optimizer = tf.train.adam(opts.learningRate);
  let finalLoss = Number.NaN;
  for (let step = 1; step <= opts.steps; step++) {
    const batch: number[][] = [];
    for (let i = 0; i < opts.batchSize; i++) {
      batch.push(subsequences[Math.floor(rand() * subsequences.length)]);
    }
    const masked = maskBatch(batch, table, model.config.maskingRate, rand);
    const cost = optimizer.minimize(
      () => model.maskedLoss(masked.ids, masked.labels, masked.weights),
      true, model.trainableVariables());
    finalLoss = cost!.dataSync()[0];
    cost!.dispose();
    if (logPath && (step % opts.logEvery === 0 || step === opts.steps)) {
      appendFileSync(logPath, JSON.stringify({
        event: "step", step, loss: Number(finalLoss.toFixed(5)),
      }) + "\n");
    }
  }
  optimizer.dispose();

  const accuracy = evaluateMaskedAccuracy(model, subsequences, table, rand);
  if (artifactDir) {
    model.save(artifactDir, { trainedSteps: opts.steps, seed: opts.seed });
    writeFileSync(join(artifactDir, "vocabulary.json"), JSON.stringify({
      names: table.names, hash: table.hash,
      mask: table.maskToken, pad: table.padToken,
    }, null, 1) + "\n");
    if (logPath) {
      appendFileSync(logPath, JSON.stringify({
        event: "done", loss: Number(finalLoss.toFixed(5)),
        maskedAccuracy: Number(accuracy.toFixed(4)),
      }) + "\n");
    }
  }
  return { model, finalLoss, maskedAccuracy: accuracy, steps: opts.steps };
}

/**
 * Deterministic evaluation: every position of every subsequence is masked
 * once (one position at a time, batched per sequence).
 */
export function evaluateMaskedAccuracy(model: TransformerMLM,
                                       subsequences: number[][],
                                       table: TokenTable,
                                       rand?: () => number,
                                       sampleLimit = 64): number {
  let pool = subsequences;
  if (pool.length > sampleLimit) {
    const r = rand ?? mulberry32(0);
    pool = Array.from({ length: sampleLimit },
      () => subsequences[Math.floor(r() * subsequences.length)]);
  }
  let hits = 0;
  let total = 0;
  for (const sequence of pool) {
    const ids: number[][] = [];
    const labels: number[][] = [];
    const weights: number[][] = [];
    for (let position = 0; position < sequence.length; position++) {
      const row = [...sequence];
      row[position] = table.maskToken;
      const weight = sequence.map((_, i) => (i === position ? 1 : 0));
      ids.push(row);
      labels.push([...sequence]);
      weights.push(weight);
    }
    const accuracy = model.maskedAccuracy(ids, labels, weights);
    hits += accuracy * sequence.length;
    total += sequence.length;
  }
  return total ? hits / total : 0;
}
