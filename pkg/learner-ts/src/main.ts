import { createInterface } from "node:readline";

import { ToyResponseModel } from "./model.js";
import { handleLine } from "./protocol.js";

const parseSeed = (argv: string[]): number => {
  const at = argv.indexOf("--seed");
  if (at < 0 || at + 1 >= argv.length) {
    return 0;
  }
  const value = Number(argv[at + 1]);
  return Number.isFinite(value) ? value : 0;
};

const model = new ToyResponseModel(parseSeed(process.argv.slice(2)));

const rl = createInterface({
  input: process.stdin,
  terminal: false,
});

// single-threaded request loop: one line in, one reply out, in order
rl.on("line", (line) => {
  if (line.trim() === "") {
    return;
  }
  const { reply, shutdown } = handleLine(model, line);
  process.stdout.write(`${JSON.stringify(reply)}\n`);
  if (shutdown) {
    rl.close();
    process.exit(0);
  }
});
