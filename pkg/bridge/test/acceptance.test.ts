/**
 * End-to-end acceptance: exports produced here must be consumable by the
 * python pdsm toolkit through files alone. Ten synthetic WAV clips are
 * exported; a spawned python process then validates the manifest, checks
 * that every matrix survives a bitwise f32 round trip through the python
 * writer, discretizes every saliency map against the exported
 * posteriorgram, and evaluates faithfulness on a freshly initialized
 * classifier.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { runExport } from "../src/export.js";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "bridge-ac-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

const PY_CHECK = `
import glob, json, os, sys
import numpy as np
from pdsm import (SaliencyMap, Posteriorgram, faithfulness, get_preset,
                  init_model, load_manifest, load_matrix, pdsm,
                  save_matrix, validate_manifest)

out = sys.argv[1]
man = load_manifest(out)
validate_manifest(man)
assert len(man.entries) == 10, len(man.entries)

for npy in sorted(glob.glob(os.path.join(out, "*", "*.npy"))):
    arr = load_matrix(npy)
    save_matrix(arr, npy + ".rt", precision="f32")
    with open(npy, "rb") as a, open(npy + ".rt", "rb") as b:
        assert a.read() == b.read(), f"round trip changed bytes: {npy}"
    os.remove(npy + ".rt")

model = init_model(seed=0)
cfg = get_preset("fs2", k=3)
n_checked = 0
for e in man.entries:
    x = load_matrix(man.resolve(e.spectrogram))
    ppg = Posteriorgram(load_matrix(man.resolve(e.posteriorgram)), vocab=man.vocab)
    map_path, = glob.glob(os.path.join(out, "saliency", e.sample_id + "__*.npy"))
    with open(map_path[:-4] + ".json") as fh:
        sidecar = json.load(fh)
    m = SaliencyMap(load_matrix(map_path), method_id=sidecar["method_id"],
                    target_class=sidecar["target_class"])
    assert m.shape == x.shape, (m.shape, x.shape)
    mask = pdsm(m, ppg, cfg)
    assert mask.data.shape == x.shape
    assert len(mask.selected) <= 3
    ff = faithfulness(model, x, mask, sidecar["target_class"])
    assert -1.0 <= ff <= 1.0
    n_checked += 1
assert n_checked == 10
print("python consumer ok")
`;

describe("export pipeline", () => {
  it("AC-9: python toolkit consumes a 10-clip export end to end", () => {
    const wavDir = path.join(tmp, "wavs");
    expect(main(["gen-demo", "--out-dir", wavDir, "--n", "10", "--seed", "1"])).toBe(0);
    const wavs = fs.readdirSync(wavDir).map((f) => path.join(wavDir, f));
    expect(wavs.length).toBe(10);

    const outDir = path.join(tmp, "export");
    const result = runExport({
      audioFiles: wavs,
      outDir,
      method: "gradient",
      targetClass: 0,
      igSteps: 16,
      label: "real",
      seed: 11,
    });
    expect(result.failures).toEqual([]);
    expect(result.exported.length).toBe(10);

    const stdout = execFileSync("python3", ["-c", PY_CHECK, outDir], { encoding: "utf8" });
    expect(stdout).toContain("python consumer ok");
    console.log("AC-9 PASS: 10-clip export validated, bit-stable, discretized and scored by the python toolkit");
  }, 120000);

  it("is byte-identical across repeated runs with the same seed", () => {
    const wavDir = path.join(tmp, "wavs2");
    main(["gen-demo", "--out-dir", wavDir, "--n", "3", "--seed", "2"]);
    const wavs = fs.readdirSync(wavDir).map((f) => path.join(wavDir, f));
    const dirs = [path.join(tmp, "runA"), path.join(tmp, "runB")];
    for (const outDir of dirs) {
      runExport({
        audioFiles: wavs,
        outDir,
        method: "ig",
        targetClass: 1,
        igSteps: 8,
        label: "real",
        seed: 5,
      });
    }
    const walk = (d: string): string[] =>
      fs
        .readdirSync(d, { withFileTypes: true })
        .flatMap((e) =>
          e.isDirectory() ? walk(path.join(d, e.name)) : [path.join(d, e.name)]
        );
    const relA = walk(dirs[0]).map((p) => path.relative(dirs[0], p)).sort();
    const relB = walk(dirs[1]).map((p) => path.relative(dirs[1], p)).sort();
    expect(relA).toEqual(relB);
    for (const rel of relA) {
      const a = fs.readFileSync(path.join(dirs[0], rel));
      const b = fs.readFileSync(path.join(dirs[1], rel));
      expect(a.equals(b), `differs: ${rel}`).toBe(true);
    }
  }, 120000);

  it("skips undecodable files but keeps the rest", () => {
    const wavDir = path.join(tmp, "wavs3");
    main(["gen-demo", "--out-dir", wavDir, "--n", "2", "--seed", "3"]);
    const bad = path.join(wavDir, "broken.wav");
    fs.writeFileSync(bad, Buffer.from("junk"));
    const wavs = fs.readdirSync(wavDir).map((f) => path.join(wavDir, f));
    const result = runExport({
      audioFiles: wavs,
      outDir: path.join(tmp, "partial"),
      method: "gradient",
      targetClass: 0,
      igSteps: 8,
      label: "real",
      seed: 0,
    });
    expect(result.exported.length).toBe(2);
    expect(result.failures.length).toBe(1);
    expect(result.failures[0].file).toBe(bad);
    const man = JSON.parse(
      fs.readFileSync(path.join(tmp, "partial", "manifest.json"), "utf8")
    );
    expect(man.entries.length).toBe(2);
  }, 60000);

  it("rejects an empty file list and wrong sample rates", () => {
    expect(() =>
      runExport({
        audioFiles: [],
        outDir: path.join(tmp, "never"),
        method: "gradient",
        targetClass: 0,
        igSteps: 8,
        label: "x",
        seed: 0,
      })
    ).toThrow(/no audio files/);
  });
});
