import { ToyResponseModel, TrainSample } from "./model.js";

interface InitRequest {
  seq: number;
  kind: "init";
  config: Record<string, unknown>;
}
interface TrainBatchRequest {
  seq: number;
  kind: "train_batch";
  samples: TrainSample[];
}
interface GenerateRequest {
  seq: number;
  kind: "generate";
  queries: string[][];
}
interface ShutdownRequest {
  seq: number;
  kind: "shutdown";
}
export type Request = InitRequest | TrainBatchRequest | GenerateRequest | ShutdownRequest;

export type ParseOutcome =
  | { ok: true; request: Request }
  | { ok: false; seq: number | null; error: string };

export interface HandledLine {
  reply: Record<string, unknown>;
  shutdown: boolean;
}

const isRecord = (x: unknown): x is Record<string, unknown> =>
  typeof x === "object" && x !== null && !Array.isArray(x);

const isTokenList = (x: unknown): x is string[] =>
  Array.isArray(x) && x.every((tok) => typeof tok === "string");

const isSample = (x: unknown): x is TrainSample =>
  isRecord(x) &&
  typeof x.id === "number" &&
  Number.isInteger(x.id) &&
  isTokenList(x.query) &&
  isTokenList(x.response);

// best effort: an error reply should name the offending seq when the line
// got far enough to carry one
const recoverSeq = (x: unknown): number | null =>
  isRecord(x) && typeof x.seq === "number" && Number.isInteger(x.seq) ? x.seq : null;

/**
 * Validate one request line.
 *
 * @param line - Raw line from the trainer.
 * @returns The typed request, or the error text plus whatever seq could be
 *   recovered from the malformed line.
 */
export function parseRequest(line: string): ParseOutcome {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    return { ok: false, seq: null, error: "unparsable request: not valid JSON" };
  }
  if (!isRecord(raw)) {
    return { ok: false, seq: null, error: "request is not a JSON object" };
  }
  const seq = recoverSeq(raw);
  if (seq === null || seq < 0) {
    return { ok: false, seq: null, error: "missing or invalid seq" };
  }
  switch (raw.kind) {
    case "init":
      if (!isRecord(raw.config)) {
        return { ok: false, seq, error: "init payload must carry a config object" };
      }
      return { ok: true, request: { seq, kind: "init", config: raw.config } };
    case "train_batch":
      if (!Array.isArray(raw.samples) || !raw.samples.every(isSample)) {
        return { ok: false, seq, error: "train_batch samples must be id/query/response records" };
      }
      return { ok: true, request: { seq, kind: "train_batch", samples: raw.samples } };
    case "generate":
      if (!Array.isArray(raw.queries) || !raw.queries.every(isTokenList)) {
        return { ok: false, seq, error: "generate queries must be token lists" };
      }
      return { ok: true, request: { seq, kind: "generate", queries: raw.queries } };
    case "shutdown":
      return { ok: true, request: { seq, kind: "shutdown" } };
    default:
      return { ok: false, seq, error: `unknown kind: ${String(raw.kind)}` };
  }
}

/**
 * Execute one validated request against the model.
 *
 * @param model - The session's model.
 * @param request - A request from parseRequest.
 * @returns The reply object and whether the session should end.
 */
export function handleRequest(model: ToyResponseModel, request: Request): HandledLine {
  switch (request.kind) {
    case "init":
      model.configure(request.config);
      return { reply: { seq: request.seq }, shutdown: false };
    case "train_batch": {
      const { loss, margin } = model.trainBatch(request.samples);
      return { reply: { seq: request.seq, loss, margin }, shutdown: false };
    }
    case "generate":
      return {
        reply: { seq: request.seq, responses: model.generate(request.queries) },
        shutdown: false,
      };
    case "shutdown":
      return { reply: { seq: request.seq }, shutdown: true };
  }
}

/**
 * Serve one raw line: parse, run, and never throw.
 *
 * @param model - The session's model.
 * @param line - Raw line from the trainer.
 * @returns The reply to write back; malformed input yields an error reply
 *   with the offending seq (or null) and keeps the session alive.
 */
export function handleLine(model: ToyResponseModel, line: string): HandledLine {
  const outcome = parseRequest(line);
  if (!outcome.ok) {
    return { reply: { seq: outcome.seq, error: outcome.error }, shutdown: false };
  }
  return handleRequest(model, outcome.request);
}
