/** Spectral front end: Hann-windowed STFT via an iterative radix-2 FFT
 * and a mel filter bank. All constants live in FrontendConfig and are
 * echoed into every sidecar so downstream readers know the recipe. */

export interface FrontendConfig {
  sampleRate: number;
  nFft: number;
  hop: number;
  nMels: number;
  fminHz: number;
  fmaxHz: number;
  logFloor: number;
}

export const DEFAULT_FRONTEND: FrontendConfig = {
  sampleRate: 16000,
  nFft: 512,
  hop: 160,
  nMels: 64,
  fminHz: 0,
  fmaxHz: 8000,
  logFloor: 1e-10,
};

export function hannWindow(n: number): Float64Array {
  const w = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    w[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / n);
  }
  return w;
}

/** In-place iterative radix-2 FFT over interleaved re/im pairs. */
export function fft(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if ((n & (n - 1)) !== 0) throw new Error("FFT length must be a power of two");
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const ang = (-2 * Math.PI) / len;
    const wRe = Math.cos(ang);
    const wIm = Math.sin(ang);
    for (let i = 0; i < n; i += len) {
      let curRe = 1;
      let curIm = 0;
      for (let j = 0; j < len / 2; j++) {
        const uRe = re[i + j];
        const uIm = im[i + j];
        const vRe = re[i + j + len / 2] * curRe - im[i + j + len / 2] * curIm;
        const vIm = re[i + j + len / 2] * curIm + im[i + j + len / 2] * curRe;
        re[i + j] = uRe + vRe;
        im[i + j] = uIm + vIm;
        re[i + j + len / 2] = uRe - vRe;
        im[i + j + len / 2] = uIm - vIm;
        const nextRe = curRe * wRe - curIm * wIm;
        curIm = curRe * wIm + curIm * wRe;
        curRe = nextRe;
      }
    }
  }
}

/** Power spectrogram: rows = nFft/2 + 1 bins, columns = frames. */
export function stftPower(samples: Float64Array, cfg: FrontendConfig): Float64Array[] {
  const { nFft, hop } = cfg;
  const win = hannWindow(nFft);
  const nBins = nFft / 2 + 1;
  const nFrames = Math.max(1, Math.floor((samples.length - nFft) / hop) + 1);
  const rows: Float64Array[] = Array.from({ length: nBins }, () => new Float64Array(nFrames));
  const re = new Float64Array(nFft);
  const im = new Float64Array(nFft);
  for (let t = 0; t < nFrames; t++) {
    const start = t * hop;
    for (let i = 0; i < nFft; i++) {
      re[i] = (samples[start + i] ?? 0) * win[i];
      im[i] = 0;
    }
    fft(re, im);
    for (let b = 0; b < nBins; b++) {
      rows[b][t] = re[b] * re[b] + im[b] * im[b];
    }
  }
  return rows;
}

const hzToMel = (hz: number) => 2595 * Math.log10(1 + hz / 700);
const melToHz = (mel: number) => 700 * (10 ** (mel / 2595) - 1);

/** Triangular mel filter bank: nMels x (nFft/2 + 1). */
export function melFilterBank(cfg: FrontendConfig): Float64Array[] {
  const nBins = cfg.nFft / 2 + 1;
  const melPts = new Float64Array(cfg.nMels + 2);
  const lo = hzToMel(cfg.fminHz);
  const hi = hzToMel(cfg.fmaxHz);
  for (let i = 0; i < melPts.length; i++) {
    melPts[i] = melToHz(lo + ((hi - lo) * i) / (cfg.nMels + 1));
  }
  const binHz = cfg.sampleRate / cfg.nFft;
  const bank: Float64Array[] = [];
  for (let m = 0; m < cfg.nMels; m++) {
    const row = new Float64Array(nBins);
    const [l, c, r] = [melPts[m], melPts[m + 1], melPts[m + 2]];
    for (let b = 0; b < nBins; b++) {
      const hz = b * binHz;
      if (hz > l && hz < c) row[b] = (hz - l) / (c - l);
      else if (hz >= c && hz < r) row[b] = (r - hz) / (r - c);
    }
    bank.push(row);
  }
  return bank;
}

/** Log-mel spectrogram shifted to be nonnegative: rows = nMels. */
export function logMelSpectrogram(samples: Float64Array, cfg: FrontendConfig): Float64Array[] {
  const power = stftPower(samples, cfg);
  const bank = melFilterBank(cfg);
  const nFrames = power[0].length;
  const out: Float64Array[] = [];
  for (const filt of bank) {
    const row = new Float64Array(nFrames);
    for (let t = 0; t < nFrames; t++) {
      let acc = 0;
      for (let b = 0; b < filt.length; b++) {
        if (filt[b] > 0) acc += filt[b] * power[b][t];
      }
      // offset by -log(floor) so the quietest value maps to 0
      row[t] = Math.log(acc + cfg.logFloor) - Math.log(cfg.logFloor);
    }
    out.push(row);
  }
  return out;
}
