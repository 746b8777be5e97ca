/**
 * Command line: train a masked model on a token-stream file, query next-block
 * suggestions, or emit prediction records for an evaluation stream file.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { TransformerMLM } from "./model";
import { predictNext } from "./predict";
import { evaluateRecords, serializeRecords } from "./records";
import { parseStreamFile } from "./streams";
import { trainMlm } from "./train";
import { TokenTable } from "./vocab";

function parseArgs(argv: string[]): { command: string;
  flags: Map<string, string> } {
  const [command, ...rest] = argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith("--") || i + 1 >= rest.length) {
      throw new Error(`bad argument: ${key}`);
    }
    flags.set(key.slice(2), rest[i + 1]);
  }
  return { command, flags };
}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key);
  if (value === undefined) throw new Error(`missing --${key}`);
  return value;
}

function loadRecords(path: string, table: TokenTable) {
  const file = parseStreamFile(readFileSync(path, "utf-8"));
  if (file.header.vocab !== table.hash) {
    throw new Error(
      `stream file vocabulary ${file.header.vocab} != table ${table.hash}`);
  }
  return file.records;
}

function parseContext(text: string, table: TokenTable): number[] {
  return text.split(/[\s,]+/).filter(Boolean).map((part) =>
    /^\d+$/.test(part) ? Number(part) : table.idOf(part));
}

function main(argv: string[]): number {
  const { command, flags } = parseArgs(argv);
  const table = flags.has("vocab")
    ? TokenTable.fromFile(flags.get("vocab")!)
    : TokenTable.bundled();

  if (command === "train") {
    const records = loadRecords(need(flags, "streams"), table);
    const config: Record<string, number> = {};
    for (const key of ["maxLen", "layers", "hidden", "intermediate",
                       "heads"] as const) {
      if (flags.has(key)) config[key] = Number(flags.get(key));
    }
    const result = trainMlm(records, table, config, {
      steps: Number(flags.get("steps") ?? 400),
      batchSize: Number(flags.get("batch") ?? 16),
      learningRate: Number(flags.get("lr") ?? 3e-3),
      seed: Number(flags.get("seed") ?? 1),
    }, need(flags, "out"));
    console.log(JSON.stringify({
      steps: result.steps,
      loss: Number(result.finalLoss.toFixed(5)),
      maskedAccuracy: Number(result.maskedAccuracy.toFixed(4)),
      artifact: flags.get("out"),
    }));
    return 0;
  }

  if (command === "predict") {
    const model = TransformerMLM.load(need(flags, "model"));
    const context = parseContext(need(flags, "context"), table);
    const suggestions = predictNext(model, context,
      Number(flags.get("top") ?? 3), table);
    console.log(JSON.stringify(suggestions.map(
      (s) => [s.token, s.name, Number(s.probability.toFixed(6))])));
    return 0;
  }

  if (command === "eval") {
    const model = TransformerMLM.load(need(flags, "model"));
    const records = loadRecords(need(flags, "streams"), table);
    const predictions = evaluateRecords(model, records, table,
      Number(flags.get("top") ?? 10));
    writeFileSync(need(flags, "records"), serializeRecords(predictions));
    console.log(JSON.stringify({ records: predictions.length,
      out: flags.get("records") }));
    return 0;
  }

  console.error(
    "usage: cli <train|predict|eval> [--streams f] [--model d] [--out d] " +
    "[--context ids] [--top x] [--records f] [--vocab f]");
  return 2;
}

if (require.main === module) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(JSON.stringify({ error: String(err) }));
    process.exit(1);
  }
}
