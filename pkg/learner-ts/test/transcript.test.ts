import { spawn, ChildProcessWithoutNullStreams } from "node:child_process";
import { readFileSync } from "node:fs";
import { createInterface } from "node:readline";
import { fileURLToPath } from "node:url";

import { afterEach, describe, expect, it } from "vitest";

const MAIN_JS = fileURLToPath(new URL("../dist/main.js", import.meta.url));
const TRANSCRIPT = fileURLToPath(
  new URL("../../tests/data/protocol_transcript.jsonl", import.meta.url),
);
const REPLY_TIMEOUT_MS = 5000;

// one spawned learner with promise-based line turn-taking
class Session {
  private child: ChildProcessWithoutNullStreams;
  private waiting: Array<(line: string) => void> = [];
  private buffered: string[] = [];
  private exit: Promise<number | null>;

  constructor(args: string[]) {
    this.child = spawn(process.execPath, [MAIN_JS, ...args], {
      stdio: ["pipe", "pipe", "inherit"],
    });
    const rl = createInterface({ input: this.child.stdout, terminal: false });
    rl.on("line", (line) => {
      const waiter = this.waiting.shift();
      if (waiter) {
        waiter(line);
      } else {
        this.buffered.push(line);
      }
    });
    this.exit = new Promise((resolve) => this.child.on("close", resolve));
  }

  sendRaw(line: string): void {
    this.child.stdin.write(`${line}\n`);
  }

  nextReply(): Promise<Record<string, unknown>> {
    const buffered = this.buffered.shift();
    if (buffered !== undefined) {
      return Promise.resolve(JSON.parse(buffered));
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("no reply within timeout")),
        REPLY_TIMEOUT_MS,
      );
      this.waiting.push((line) => {
        clearTimeout(timer);
        resolve(JSON.parse(line));
      });
    });
  }

  async roundtrip(request: Record<string, unknown>): Promise<Record<string, unknown>> {
    this.sendRaw(JSON.stringify(request));
    return this.nextReply();
  }

  exitCode(): Promise<number | null> {
    return this.exit;
  }

  kill(): void {
    if (this.child.exitCode === null) {
      this.child.kill();
    }
  }
}

let session: Session | null = null;

afterEach(() => {
  session?.kill();
  session = null;
});

const isTokenLists = (x: unknown): boolean =>
  Array.isArray(x) && x.every((r) => Array.isArray(r) && r.every((t) => typeof t === "string"));

describe("wire protocol over a real pipe", () => {
  it("serves the canonical transcript and exits 0 on shutdown", async () => {
    session = new Session(["--seed", "7"]);
    const lines = readFileSync(TRANSCRIPT, "utf8").trim().split("\n");
    for (const line of lines) {
      const step = JSON.parse(line) as {
        send: Record<string, unknown>;
        require: Record<string, string>;
      };
      const reply = await session.roundtrip(step.send);
      expect(reply.seq).toBe(step.send.seq);
      expect(reply).not.toHaveProperty("error");
      for (const [key, shape] of Object.entries(step.require)) {
        if (shape === "number") {
          expect(typeof reply[key]).toBe("number");
          expect(Number.isFinite(reply[key])).toBe(true);
        } else if (shape === "token_lists") {
          expect(isTokenLists(reply[key])).toBe(true);
          expect((reply[key] as string[][]).length).toBe(
            (step.send.queries as string[][]).length,
          );
        }
      }
    }
    expect(await session.exitCode()).toBe(0);
  }, 15000);

  it("recovers from malformed requests without dying", async () => {
    session = new Session(["--seed", "1"]);
    session.sendRaw("garbage that is not json");
    const broken = await session.nextReply();
    expect(broken.seq).toBeNull();
    expect(typeof broken.error).toBe("string");

    const wrongKind = await session.roundtrip({ seq: 0, kind: "purchase" });
    expect(wrongKind.seq).toBe(0);
    expect(typeof wrongKind.error).toBe("string");

    const trained = await session.roundtrip({
      seq: 1,
      kind: "train_batch",
      samples: [{ id: 0, query: ["still"], response: ["alive"] }],
    });
    expect(trained.seq).toBe(1);
    expect(typeof trained.loss).toBe("number");

    const bye = await session.roundtrip({ seq: 2, kind: "shutdown" });
    expect(bye).toEqual({ seq: 2 });
    expect(await session.exitCode()).toBe(0);
  }, 15000);

  it("gives byte-identical replies for identical sessions", async () => {
    const traces: string[] = [];
    for (let run = 0; run < 2; run++) {
      session = new Session(["--seed", "5"]);
      const trace: unknown[] = [];
      trace.push(await session.roundtrip({ seq: 0, kind: "init", config: { seed: 5 } }));
      for (let call = 1; call <= 20; call++) {
        trace.push(await session.roundtrip({
          seq: call,
          kind: "train_batch",
          samples: [
            { id: 0, query: ["good", "morning"], response: ["morning", "to", "you"] },
            { id: 1, query: ["how", "are", "you"], response: ["fine", "thanks"] },
          ],
        }));
      }
      trace.push(await session.roundtrip({
        seq: 21,
        kind: "generate",
        queries: [["good", "morning"], ["how", "are", "you"]],
      }));
      trace.push(await session.roundtrip({ seq: 22, kind: "shutdown" }));
      expect(await session.exitCode()).toBe(0);
      traces.push(JSON.stringify(trace));
      session = null;
    }
    expect(traces[0]).toBe(traces[1]);
  }, 15000);
});
