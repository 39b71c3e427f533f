/** Dataset manifest writer matching the consumer's JSON layout:
 * sorted keys, 2-space indent, trailing newline, paths relative to the
 * manifest's directory. */

export interface ManifestEntry {
  sample_id: string;
  label: string;
  spectrogram: string;
  posteriorgram?: string;
  ground_truth?: unknown;
  split?: string;
}

export interface Manifest {
  seed: number;
  config: Record<string, unknown>;
  entries: ManifestEntry[];
  vocab?: string[];
}

function sortedJson(value: unknown, indent: string): string {
  if (Array.isArray(value)) {
    if (value.length === 0) return "[]";
    const items = value.map((v) => indent + "  " + sortedJson(v, indent + "  "));
    return "[\n" + items.join(",\n") + "\n" + indent + "]";
  }
  if (value !== null && typeof value === "object") {
    const keys = Object.keys(value as object).sort();
    if (keys.length === 0) return "{}";
    const items = keys.map(
      (k) =>
        indent + "  " + JSON.stringify(k) + ": " +
        sortedJson((value as Record<string, unknown>)[k], indent + "  ")
    );
    return "{\n" + items.join(",\n") + "\n" + indent + "}";
  }
  return JSON.stringify(value);
}

export function encodeManifest(man: Manifest): string {
  const doc: Record<string, unknown> = {
    seed: man.seed,
    config: man.config,
    entries: man.entries.map((e) => {
      const d: Record<string, unknown> = {
        sample_id: e.sample_id,
        label: e.label,
        spectrogram: e.spectrogram,
      };
      if (e.split !== undefined) d.split = e.split;
      if (e.posteriorgram !== undefined) d.posteriorgram = e.posteriorgram;
      if (e.ground_truth !== undefined) d.ground_truth = e.ground_truth;
      return d;
    }),
  };
  if (man.vocab !== undefined) doc.vocab = man.vocab;
  return sortedJson(doc, "") + "\n";
}
