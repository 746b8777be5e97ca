/**
 * A small bidirectional transformer encoder trained with masked tokens.
 *
 * Word-level inputs over the closed block vocabulary plus [MASK]/[PAD];
 * learned position embeddings; post-norm residual blocks; logits through the
 * tied input embedding.  Defaults follow the tuned configuration: maximum
 * sequence length 256, 2 hidden layers of size 256 with intermediate size
 * 512, and 4 attention heads.
 */

import * as tf from "@tensorflow/tfjs";
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

export interface MlmConfig {
  maxLen: number;
  layers: number;
  hidden: number;
  intermediate: number;
  heads: number;
  vocabSize: number;
  maskingRate: number;
}

export const DEFAULT_CONFIG: Omit<MlmConfig, "vocabSize"> = {
  maxLen: 256,
  layers: 2,
  hidden: 256,
  intermediate: 512,
  heads: 4,
  maskingRate: 0.15,
};

/** The surface predict-time code needs; tests may stub it. */
export interface MaskedPredictor {
  readonly maxLen: number;
  readonly vocabSize: number;
  /** Logits over the vocabulary for the final position of `ids`. */
  logitsForLastPosition(ids: number[]): Float32Array;
}

function gelu(x: tf.Tensor): tf.Tensor {
  const c = Math.sqrt(2 / Math.PI);
  return tf.mul(
    tf.mul(x, 0.5),
    tf.add(1, tf.tanh(tf.mul(c, tf.add(x, tf.mul(0.044715, tf.pow(x, 3)))))),
  );
}

export class TransformerMLM implements MaskedPredictor {
  readonly config: MlmConfig;
  private readonly params = new Map<string, tf.Variable>();

  constructor(config: Partial<MlmConfig> & { vocabSize: number }) {
    this.config = { ...DEFAULT_CONFIG, ...config };
    if (this.config.hidden % this.config.heads !== 0) {
      throw new Error("hidden size must be divisible by the head count");
    }
    this.build();
  }

  get maxLen(): number {
    return this.config.maxLen;
  }

  get vocabSize(): number {
    return this.config.vocabSize;
  }

  private add(name: string, shape: number[], zero = false): void {
    const init = zero
      ? tf.zeros(shape)
      : tf.truncatedNormal(shape, 0, 0.02);
    // No global tf name: several models must coexist in one process.
    this.params.set(name, tf.variable(init, true));
  }

  private build(): void {
    const { hidden, intermediate, layers, maxLen, vocabSize } = this.config;
    this.add("tok_emb", [vocabSize, hidden]);
    this.add("pos_emb", [maxLen, hidden]);
    for (let l = 0; l < layers; l++) {
      for (const part of ["q", "k", "v", "o"]) {
        this.add(`l${l}.${part}.w`, [hidden, hidden]);
        this.add(`l${l}.${part}.b`, [hidden], true);
      }
      this.add(`l${l}.ffn1.w`, [hidden, intermediate]);
      this.add(`l${l}.ffn1.b`, [intermediate], true);
      this.add(`l${l}.ffn2.w`, [intermediate, hidden]);
      this.add(`l${l}.ffn2.b`, [hidden], true);
      for (const ln of ["ln1", "ln2"]) {
        this.params.set(`l${l}.${ln}.g`, tf.variable(tf.ones([hidden]), true));
        this.add(`l${l}.${ln}.b`, [hidden], true);
      }
    }
    this.add("out.b", [vocabSize], true);
  }

  private p(name: string): tf.Variable {
    const variable = this.params.get(name);
    if (!variable) throw new Error(`missing parameter ${name}`);
    return variable;
  }

  trainableVariables(): tf.Variable[] {
    return [...this.params.values()];
  }

  private layerNorm(x: tf.Tensor, gamma: tf.Tensor, beta: tf.Tensor): tf.Tensor {
    const { mean, variance } = tf.moments(x, -1, true);
    return tf.add(
      tf.mul(tf.div(tf.sub(x, mean), tf.sqrt(tf.add(variance, 1e-5))), gamma),
      beta,
    );
  }

  private padMaskFor(ids: number[][]): tf.Tensor2D {
    // [PAD] is the last id of the model vocabulary.
    const pad = this.config.vocabSize - 1;
    return tf.tensor2d(
      ids.map((row) => row.map((t) => (t === pad ? 0 : 1)))) as tf.Tensor2D;
  }

  /**
   * Logits for a batch: ids [batch, time] (padded), padMask [batch, time]
   * with 1 for real tokens.  Returns [batch, time, vocab].
   */
  forward(ids: tf.Tensor2D, padMask: tf.Tensor2D): tf.Tensor3D {
    const { heads, hidden, layers } = this.config;
    const [batch, time] = ids.shape;
    const headDim = hidden / heads;

    let x: tf.Tensor = tf.add(
      tf.gather(this.p("tok_emb"), ids),
      tf.slice(this.p("pos_emb"), [0, 0], [time, hidden]),
    );
    // Additive mask: large negative at padded key positions.
    const attnBias = tf.mul(tf.sub(1, padMask), -1e9).reshape([batch, 1, 1, time]);

    const dense = (input: tf.Tensor, name: string) =>
      tf.add(tf.matMul(input.reshape([batch * time, -1]) as tf.Tensor2D,
        this.p(`${name}.w`)), this.p(`${name}.b`));
    const toHeads = (t: tf.Tensor) =>
      t.reshape([batch, time, heads, headDim]).transpose([0, 2, 1, 3]);

    for (let l = 0; l < layers; l++) {
      const q = toHeads(dense(x, `l${l}.q`));
      const k = toHeads(dense(x, `l${l}.k`));
      const v = toHeads(dense(x, `l${l}.v`));
      const scores = tf.add(
        tf.div(tf.matMul(q, k, false, true), Math.sqrt(headDim)),
        attnBias,
      );
      const context = tf.matMul(tf.softmax(scores, -1), v)
        .transpose([0, 2, 1, 3]);
      const attnOut = dense(context, `l${l}.o`).reshape([batch, time, hidden]);
      x = this.layerNorm(tf.add(x, attnOut), this.p(`l${l}.ln1.g`),
        this.p(`l${l}.ln1.b`));

      const ffn = tf.add(
        tf.matMul(gelu(dense(x, `l${l}.ffn1`)) as tf.Tensor2D,
          this.p(`l${l}.ffn2.w`)),
        this.p(`l${l}.ffn2.b`)).reshape([batch, time, hidden]);
      x = this.layerNorm(tf.add(x, ffn), this.p(`l${l}.ln2.g`),
        this.p(`l${l}.ln2.b`));
    }

    const logits = tf.add(
      tf.matMul(x.reshape([batch * time, hidden]) as tf.Tensor2D,
        this.p("tok_emb"), false, true),
      this.p("out.b"),
    );
    return logits.reshape([batch, time, this.config.vocabSize]) as tf.Tensor3D;
  }

  /** Mean cross-entropy over the positions where weights[b][t] is 1. */
  maskedLoss(ids: number[][], labels: number[][],
             weights: number[][]): tf.Scalar {
    const logits = this.forward(
      tf.tensor2d(ids, undefined, "int32"), this.padMaskFor(ids));
    const logProbs = tf.logSoftmax(logits, -1);
    const picked = tf.sum(
      tf.mul(tf.oneHot(tf.tensor2d(labels, undefined, "int32"),
        this.config.vocabSize), logProbs), -1);
    const weightsT = tf.tensor2d(weights);
    return tf.div(tf.sum(tf.mul(tf.neg(picked), weightsT)),
      tf.add(tf.sum(weightsT), 1e-9)) as tf.Scalar;
  }

  /** Top-1 accuracy at the weighted positions. */
  maskedAccuracy(ids: number[][], labels: number[][],
                 weights: number[][]): number {
    return tf.tidy(() => {
      const logits = this.forward(
        tf.tensor2d(ids, undefined, "int32"), this.padMaskFor(ids));
      const predictions = logits.argMax(-1).arraySync() as number[][];
      let hits = 0;
      let total = 0;
      weights.forEach((row, b) => row.forEach((w, t) => {
        if (w > 0) {
          total += 1;
          if (predictions[b][t] === labels[b][t]) hits += 1;
        }
      }));
      return total ? hits / total : 0;
    });
  }

  logitsForLastPosition(ids: number[]): Float32Array {
    return tf.tidy(() => {
      const logits = this.forward(
        tf.tensor2d([ids], undefined, "int32"),
        tf.ones([1, ids.length]) as tf.Tensor2D,
      );
      const last = tf.slice(logits, [0, ids.length - 1, 0],
        [1, 1, this.config.vocabSize]);
      return last.dataSync() as Float32Array;
    });
  }

  // -- persistence ----------------------------------------------------

  save(dir: string, extraConfig: Record<string, unknown> = {}): void {
    mkdirSync(dir, { recursive: true });
    writeFileSync(join(dir, "config.json"),
      JSON.stringify({ ...this.config, ...extraConfig }, null, 1) + "\n");
    const manifest: { name: string; shape: number[]; offset: number;
      length: number }[] = [];
    const chunks: Float32Array[] = [];
    let offset = 0;
    for (const [name, variable] of this.params) {
      const data = variable.dataSync() as Float32Array;
      manifest.push({ name, shape: variable.shape.slice(), offset,
        length: data.length });
      chunks.push(data);
      offset += data.length;
    }
    const blob = new Float32Array(offset);
    manifest.forEach((entry, i) => blob.set(chunks[i], entry.offset));
    writeFileSync(join(dir, "weights.bin"), Buffer.from(blob.buffer));
    writeFileSync(join(dir, "weights.json"),
      JSON.stringify(manifest, null, 1) + "\n");
  }

  static load(dir: string): TransformerMLM {
    let config: MlmConfig;
    try {
      config = JSON.parse(readFileSync(join(dir, "config.json"), "utf-8"));
    } catch (err) {
      throw new Error(`model not loaded: ${dir}: ${err}`);
    }
    const model = new TransformerMLM(config);
    const manifest = JSON.parse(
      readFileSync(join(dir, "weights.json"), "utf-8"),
    ) as { name: string; shape: number[]; offset: number; length: number }[];
    const raw = readFileSync(join(dir, "weights.bin"));
    const blob = new Float32Array(raw.buffer, raw.byteOffset,
      raw.byteLength / 4);
    for (const entry of manifest) {
      const variable = model.params.get(entry.name);
      if (!variable) throw new Error(`unexpected weight ${entry.name}`);
      variable.assign(tf.tensor(
        blob.slice(entry.offset, entry.offset + entry.length), entry.shape));
    }
    return model;
  }
}
