/** Command line entry point. Subcommands:
 *
 *   export    decode WAV clips and write spectrograms, saliency maps,
 *             posteriorgrams, and a dataset manifest
 *   gen-demo  synthesize a few WAV test clips (band-limited tones plus
 *             noise bursts) so the export path can be exercised without
 *             external audio
 */

import * as fs from "node:fs";
import * as path from "node:path";
import * as process from "node:process";
import { parseArgs } from "node:util";

import { runExport } from "./export.js";
import { Method } from "./model.js";
import { seededUniform } from "./model.js";
import { encodeWavPcm16 } from "./wav.js";

function usage(): never {
  process.stderr.write(
    "usage: bridge export --out-dir DIR [--seed N] [--method gradient|ig]\n" +
      "                     [--ig-steps N] [--label L] [--target-class C] WAV...\n" +
      "       bridge gen-demo --out-dir DIR [--n N] [--seed N] [--duration SEC]\n"
  );
  process.exit(1);
}

function cmdExport(argv: string[]): number {
  const { values, positionals } = parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      "out-dir": { type: "string" },
      seed: { type: "string", default: "0" },
      method: { type: "string", default: "gradient" },
      "ig-steps": { type: "string", default: "16" },
      label: { type: "string", default: "unknown" },
      "target-class": { type: "string", default: "0" },
    },
  });
  if (!values["out-dir"] || positionals.length === 0) usage();
  const method = values.method as Method;
  if (method !== "gradient" && method !== "ig") {
    process.stderr.write(`unknown method: ${values.method}\n`);
    return 1;
  }
  for (const f of positionals) {
    if (!fs.existsSync(f)) {
      process.stderr.write(`no such file: ${f}\n`);
      return 2;
    }
  }
  const result = runExport({
    audioFiles: positionals,
    outDir: values["out-dir"],
    method,
    targetClass: Number(values["target-class"]),
    igSteps: Number(values["ig-steps"]),
    label: values.label!,
    seed: Number(values.seed),
  });
  process.stdout.write(`exported ${result.exported.length} clips -> ${result.manifestPath}\n`);
  for (const f of result.failures) {
    process.stderr.write(`skipped ${f.file}: ${f.error}\n`);
  }
  return result.failures.length > 0 ? 3 : 0;
}

function cmdGenDemo(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      "out-dir": { type: "string" },
      n: { type: "string", default: "4" },
      seed: { type: "string", default: "0" },
      duration: { type: "string", default: "1.0" },
    },
  });
  if (!values["out-dir"]) usage();
  const outDir = values["out-dir"];
  const n = Number(values.n);
  const dur = Number(values.duration);
  const sr = 16000;
  fs.mkdirSync(outDir, { recursive: true });
  const rand = seededUniform(Number(values.seed));
  for (let i = 0; i < n; i++) {
    const len = Math.round(dur * sr);
    const samples = new Float64Array(len);
    // two tones in distinct bands plus a noise burst in the middle third
    const f1 = 200 + 600 * rand();
    const f2 = 1500 + 2500 * rand();
    const phase1 = 2 * Math.PI * rand();
    const phase2 = 2 * Math.PI * rand();
    const burstLo = Math.floor(len / 3);
    const burstHi = Math.floor((2 * len) / 3);
    for (let t = 0; t < len; t++) {
      samples[t] =
        0.35 * Math.sin((2 * Math.PI * f1 * t) / sr + phase1) +
        0.25 * Math.sin((2 * Math.PI * f2 * t) / sr + phase2);
      if (t >= burstLo && t < burstHi) samples[t] += 0.3 * (2 * rand() - 1);
      // fade in/out to avoid clicks
      const edge = Math.min(t, len - 1 - t);
      if (edge < 160) samples[t] *= edge / 160;
    }
    const name = `clip_${String(i).padStart(3, "0")}.wav`;
    fs.writeFileSync(path.join(outDir, name), encodeWavPcm16(samples, sr));
  }
  process.stdout.write(`wrote ${n} clips to ${outDir}\n`);
  return 0;
}

export function main(argv: string[]): number {
  if (argv.length === 0) usage();
  const [cmd, ...rest] = argv;
  try {
    if (cmd === "export") return cmdExport(rest);
    if (cmd === "gen-demo") return cmdGenDemo(rest);
    usage();
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  path.resolve(process.argv[1]) === new URL(import.meta.url).pathname;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
