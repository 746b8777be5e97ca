export { TokenTable } from "./vocab";
export { parseStreamFile, serializeStreamFile, scriptSpans,
         buildSpriteSequence } from "./streams";
export type { SpriteRecord, StreamFile, ScriptSpan } from "./streams";
export { splitSequences, coveredIndices } from "./split";
export type { Subsequence, SplitResult } from "./split";
export { TransformerMLM, DEFAULT_CONFIG } from "./model";
export type { MlmConfig, MaskedPredictor } from "./model";
export { trainMlm, maskBatch, buildSubsequences, evaluateMaskedAccuracy,
         mulberry32, InsufficientData } from "./train";
export { predictNext, ModelNotLoaded } from "./predict";
export type { Suggestion } from "./predict";
export { evaluateRecords, serializeRecords } from "./records";
export type { PredictionRecord } from "./records";
