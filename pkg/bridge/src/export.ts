/** Orchestrates one export run: WAV -> log-mel spectrogram, saliency
 * map with sidecar, posteriorgram, manifest. All analysis beyond the
 * front end and the demo classifier's saliency lives downstream. */

import * as fs from "node:fs";
import * as path from "node:path";

import { DEFAULT_FRONTEND, FrontendConfig, logMelSpectrogram } from "./dsp.js";
import { encodeManifest, Manifest, ManifestEntry } from "./manifest.js";
import { DemoClassifier, Method } from "./model.js";
import { encodeMatrix, fromRows } from "./npy.js";
import { posteriorgramFromMel, VOCAB } from "./ppg.js";
import { decodeWav } from "./wav.js";

export interface ExportConfig {
  audioFiles: string[];
  outDir: string;
  method: Method;
  targetClass: number;
  igSteps: number;
  label: string;
  seed: number;
  frontend?: FrontendConfig;
}

export interface ExportResult {
  manifestPath: string;
  exported: string[];
  failures: { file: string; error: string }[];
}

export function runExport(cfg: ExportConfig): ExportResult {
  if (cfg.audioFiles.length === 0) throw new Error("no audio files given");
  const frontend = cfg.frontend ?? DEFAULT_FRONTEND;
  const out = cfg.outDir;
  for (const sub of ["spectrograms", "saliency", "ppgs"]) {
    fs.mkdirSync(path.join(out, sub), { recursive: true });
  }
  const model = new DemoClassifier(cfg.seed);
  const entries: ManifestEntry[] = [];
  const exported: string[] = [];
  const failures: { file: string; error: string }[] = [];

  for (const file of [...cfg.audioFiles].sort()) {
    const sampleId = path.basename(file).replace(/\.wav$/i, "");
    try {
      const clip = decodeWav(fs.readFileSync(file));
      if (clip.sampleRate !== frontend.sampleRate) {
        throw new Error(
          `sample rate ${clip.sampleRate} does not match front end ${frontend.sampleRate}`
        );
      }
      const mel = logMelSpectrogram(clip.samples, frontend);
      const saliency = model.saliency(mel, {
        method: cfg.method,
        targetClass: cfg.targetClass,
        igSteps: cfg.igSteps,
      });
      const ppg = posteriorgramFromMel(mel);

      const specRel = `spectrograms/${sampleId}.npy`;
      const mapRel = `saliency/${sampleId}__${cfg.method}.npy`;
      const ppgRel = `ppgs/${sampleId}.npy`;
      fs.writeFileSync(path.join(out, specRel), encodeMatrix(fromRows(mel), "f32"));
      fs.writeFileSync(path.join(out, mapRel), encodeMatrix(fromRows(saliency), "f32"));
      fs.writeFileSync(path.join(out, ppgRel), encodeMatrix(fromRows(ppg), "f32"));
      const sidecar = {
        method_id: cfg.method,
        target_class: cfg.targetClass,
        config: {
          ig_steps: cfg.igSteps,
          seed: cfg.seed,
          frontend,
          classifier: "bridge-demo-conv",
        },
        model_hash: null,
      };
      fs.writeFileSync(
        path.join(out, mapRel.replace(/\.npy$/, ".json")),
        JSON.stringify(sidecar, null, 2) + "\n"
      );
      entries.push({
        sample_id: sampleId,
        label: cfg.label,
        spectrogram: specRel,
        posteriorgram: ppgRel,
        split: "test",
      });
      exported.push(sampleId);
    } catch (err) {
      failures.push({ file, error: String(err instanceof Error ? err.message : err) });
      entries.push({
        sample_id: sampleId,
        label: cfg.label,
        spectrogram: `spectrograms/${sampleId}.npy`,
        ground_truth: { export_error: String(err instanceof Error ? err.message : err) },
      });
    }
  }
  if (exported.length === 0) {
    throw new Error(`all ${cfg.audioFiles.length} exports failed`);
  }
  const manifest: Manifest = {
    seed: cfg.seed,
    config: {
      task: "bridge_export",
      method: cfg.method,
      target_class: cfg.targetClass,
      ig_steps: cfg.igSteps,
      frontend: frontend as unknown as Record<string, unknown>,
    },
    entries: entries.filter((e) => !failures.some((f) => f.file.includes(e.sample_id))),
    vocab: VOCAB,
  };
  const manifestPath = path.join(out, "manifest.json");
  fs.writeFileSync(manifestPath, encodeManifest(manifest));
  return { manifestPath, exported, failures };
}
