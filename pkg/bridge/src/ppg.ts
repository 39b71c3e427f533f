/**
 * Demo phoneme posteriorgram from band energies.
 *
 * No phoneme recognizer checkpoint can ship here, so the posteriorgram
 * is a documented heuristic: each non-silence vocabulary entry owns a
 * contiguous band of mel bins, its frame score is the mean energy in
 * that band smoothed over time, and silence scores where total frame
 * energy is low. Scores are nonnegative; only the per-column argmax is
 * consumed downstream.
 */

export const VOCAB = ["<>", "aa", "iy", "uw", "eh", "ow", "s", "sh", "f", "t", "k", "m"];

export function posteriorgramFromMel(mel: Float64Array[]): Float64Array[] {
  const nMels = mel.length;
  const nFrames = mel[0].length;
  const nPhones = VOCAB.length;
  const bandSize = nMels / (nPhones - 1);

  const colMean = new Float64Array(nFrames);
  for (let t = 0; t < nFrames; t++) {
    let acc = 0;
    for (let f = 0; f < nMels; f++) acc += mel[f][t];
    colMean[t] = acc / nMels;
  }
  let global = 0;
  for (const v of colMean) global += v;
  global /= nFrames;

  const rows: Float64Array[] = Array.from({ length: nPhones }, () => new Float64Array(nFrames));
  for (let p = 1; p < nPhones; p++) {
    const lo = Math.floor((p - 1) * bandSize);
    const hi = Math.min(nMels, Math.floor(p * bandSize));
    for (let t = 0; t < nFrames; t++) {
      let acc = 0;
      for (let f = lo; f < hi; f++) acc += mel[f][t];
      rows[p][t] = acc / (hi - lo);
    }
  }
  // 5-frame moving average keeps segments longer than one hop
  const smooth = (row: Float64Array) => {
    const out = new Float64Array(nFrames);
    for (let t = 0; t < nFrames; t++) {
      let acc = 0;
      let n = 0;
      for (let d = -2; d <= 2; d++) {
        const i = t + d;
        if (i >= 0 && i < nFrames) {
          acc += row[i];
          n++;
        }
      }
      out[t] = acc / n;
    }
    return out;
  };
  for (let p = 1; p < nPhones; p++) rows[p] = smooth(rows[p]);
  for (let t = 0; t < nFrames; t++) {
    rows[0][t] = colMean[t] < 0.25 * global ? 10 * global : 0;
  }
  return rows;
}
