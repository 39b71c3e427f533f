"""Command-line entry point for the full pipeline.

Subcommands: gen-synth, train, attribute, discretize, evaluate,
sweep-k, global-importance, rank, report.  Every output directory is
assembled under a temporary name and renamed into place only on
success, so failed runs never leave partial state.  Each directory
carries a run_manifest.json recording the full configuration.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
The seed falls back to the PDSM_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attribution import AttributionConfig, attribute, write_saliency
from .core import PdsmConfig, get_preset, pdsm, random_phoneme_mask
from .errors import PdsmError, ValidationError
from .evaluation import (
    FaithfulnessReport,
    faithfulness,
    global_importance,
    length_normalized_curve,
    rank_phonemes,
    read_report_csv,
    sweep_item,
    sweep_k,
    write_aggregate_json,
    write_report_csv,
)
from .interchange import (
    DiscretizedMask,
    Posteriorgram,
    SaliencyMap,
    load_manifest,
    load_matrix,
    save_matrix,
    validate_manifest,
    METHOD_IDS,
)
from .synthgen import SynthConfig, fake_phoneme_defaults, gen_fake_phoneme_dataset, gen_noise_dataset
from .toy_model import (
    TrainConfig,
    accuracy,
    load_model,
    load_training_set,
    model_hash,
    save_model,
    train,
)
from .alignment import segmentation_from_ppg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("PDSM_SEED", "0"))


def _write_run_manifest(out_dir: Path, args, extra=None):
    doc = {
        "command": args.command,
        "version": __version__,
        "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
    }
    if extra:
        doc.update(extra)
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


class _StagedDir:
    """Build outputs in <out>.tmp, atomically rename to <out> on success."""

    def __init__(self, out_dir):
        self.final = Path(out_dir)
        self.tmp = self.final.with_name(self.final.name + f".tmp{os.getpid()}")

    def __enter__(self):
        if self.final.exists():
            raise IOError(f"output directory {self.final} already exists")
        if self.tmp.exists():
            shutil.rmtree(self.tmp)
        self.tmp.mkdir(parents=True)
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.tmp.rename(self.final)
        else:
            shutil.rmtree(self.tmp, ignore_errors=True)
        return False


def _pdsm_config(args) -> PdsmConfig:
    overrides = {}
    if args.k is not None:
        overrides["k"] = args.k
    if getattr(args, "pool", None):
        overrides["pool"] = args.pool
    if getattr(args, "exclude_silence", False):
        overrides["exclude_silence"] = True
        overrides["silence_index"] = args.silence_index
    return get_preset(args.preset, **overrides)


def _attr_map_path(attr_dir, sample_id, method) -> Path:
    return Path(attr_dir) / f"{sample_id}__{method}.npy"


def _load_ppg(manifest, entry) -> Posteriorgram:
    if entry.posteriorgram is None:
        raise ValidationError(f"{entry.sample_id} has no posteriorgram")
    return Posteriorgram(load_matrix(manifest.resolve(entry.posteriorgram)), vocab=manifest.vocab or [])


def _select_entries(manifest, split, labels):
    wanted = None if labels is None else set(labels.split(","))
    out = []
    for e in manifest.entries:
        if split and e.split != split:
            continue
        if wanted is not None and e.label not in wanted:
            continue
        out.append(e)
    if not out:
        raise ValidationError("no manifest entries match the requested split/labels")
    return out


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_gen_synth(args):
    seed = _default_seed(args)
    base = fake_phoneme_defaults if args.task == "fakephoneme" else SynthConfig
    overrides = {"seed": seed}
    for name in ("n_train", "n_test", "n_freq", "vocab_size", "n_corrupt_segments"):
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    if args.corruption_gain is not None:
        overrides["corruption_gain"] = args.corruption_gain
    if args.corruption_kind is not None:
        overrides["corruption_kind"] = args.corruption_kind
    if args.noise_frac is not None:
        overrides["noise_frac_range"] = (args.noise_frac[0], args.noise_frac[1])
    cfg = base(**overrides)
    with _StagedDir(args.out_dir) as tmp:
        if args.task == "noise":
            gen_noise_dataset(cfg, tmp)
        else:
            gen_fake_phoneme_dataset(cfg, tmp)
        _write_run_manifest(tmp, args, {"seed": seed})
    return 0


def cmd_train(args):
    seed = _default_seed(args)
    manifest = load_manifest(args.data)
    validate_manifest(manifest)
    train_entries = [e for e in manifest.entries if e.split in (None, "train")]
    sub = type(manifest)(train_entries, seed=manifest.seed, config=manifest.config,
                         vocab=manifest.vocab, root=manifest.root)
    xs, ys = load_training_set(sub)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, seed=seed, optimizer=args.optimizer)
    model, log = train(xs, ys, cfg)
    with _StagedDir(args.out_dir) as tmp:
        save_model(model, tmp)
        with open(tmp / "training_log.json", "w", encoding="utf-8") as fh:
            json.dump(log, fh, indent=2)
            fh.write("\n")
        _write_run_manifest(tmp, args, {"seed": seed, "model_hash": model_hash(model)})
    print(f"trained {len(xs)} samples; final loss {log[-1]['loss']:.4f} "
          f"acc {log[-1]['train_acc']:.3f}", file=sys.stderr)
    return 0


def cmd_attribute(args):
    seed = _default_seed(args)
    manifest = load_manifest(args.data)
    model = load_model(args.model)
    mhash = model_hash(model)
    entries = _select_entries(manifest, args.split, args.labels)
    cfg = AttributionConfig(method_id=args.method, ig_steps=args.ig_steps,
                            baseline_mode=args.baseline, n_samples=args.n_samples,
                            noise_sigma=args.noise_sigma, seed=seed)
    baseline_set = None
    mean_baseline = None
    if cfg.baseline_mode == "dataset_mean" or args.method == "gradshap":
        specs = [load_matrix(manifest.resolve(e.spectrogram)) for e in entries]
        if cfg.baseline_mode == "dataset_mean":
            # Shapes differ across samples; use a per-sample constant at the
            # dataset's global mean energy.
            mean_level = float(np.mean([s.mean() for s in specs]))
            mean_baseline = mean_level
        baseline_set = specs if args.method == "gradshap" else None

    with _StagedDir(args.out_dir) as tmp:
        def one(entry):
            x = load_matrix(manifest.resolve(entry.spectrogram))
            baseline = None
            if mean_baseline is not None:
                baseline = np.full_like(x, mean_baseline)
            bset = None
            if args.method == "gradshap":
                bset = [b for b in baseline_set if b.shape == x.shape] or [np.zeros_like(x)]
            smap = attribute(model, x, args.target_class, cfg, baseline=baseline, baseline_set=bset)
            write_saliency(smap, _attr_map_path(tmp, entry.sample_id, args.method), cfg, mhash)

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            list(pool.map(one, entries))
        _write_run_manifest(tmp, args, {"seed": seed, "model_hash": mhash})
    return 0


def cmd_discretize(args):
    m = SaliencyMap(load_matrix(args.map), method_id="ig")
    ppg = Posteriorgram(load_matrix(args.ppg))
    cfg = _pdsm_config(args)
    if cfg.k == 0:
        print("warning: k=0 produces an all-zero mask", file=sys.stderr)
    mask = pdsm(m, ppg, cfg)
    save_matrix(mask.data, args.out)
    return 0


def cmd_evaluate(args):
    model = load_model(args.model)
    x = load_matrix(args.spectrogram)
    mask = load_matrix(args.mask)
    ff = faithfulness(model, x, mask, args.target_class)
    print(format(ff, ".17g"))
    return 0


def cmd_sweep_k(args):
    seed = _default_seed(args)
    manifest = load_manifest(args.data)
    model = load_model(args.model)
    entries = _select_entries(manifest, args.split, args.labels)
    cfg = _pdsm_config(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    methods = args.methods.split(",")
    for m in methods:
        if m not in METHOD_IDS:
            raise ValidationError(f"unknown method {m!r}")
    k_range = list(range(args.k_min, args.k_max + 1))
    with _StagedDir(args.out_dir) as tmp:
        for method in methods:
            items = []
            for e in entries:
                x = load_matrix(manifest.resolve(e.spectrogram))
                map_path = _attr_map_path(args.attr_dir, e.sample_id, method)
                smap = SaliencyMap(load_matrix(map_path), method_id=method, target_class=args.target_class)
                items.append(sweep_item(e.sample_id, x, smap, _load_ppg(manifest, e)))
            report = sweep_k(model, items, cfg, k_range, seeds=seeds, c=args.target_class, method=method)
            write_report_csv(report, tmp / f"sweep_{method}.csv")
            curves = {
                variant: length_normalized_curve([r for r in report.rows if r.variant == variant])
                for variant in ("pdsm", "random", "continuous")
            }
            with open(tmp / f"curve_{method}.json", "w", encoding="utf-8") as fh:
                json.dump(curves, fh, indent=2, sort_keys=True)
                fh.write("\n")
        _write_run_manifest(tmp, args, {"seed": seed, "model_hash": model_hash(model)})
    return 0


def cmd_global_importance(args):
    manifest = load_manifest(args.data)
    entries = _select_entries(manifest, args.split, args.labels)
    cfg = _pdsm_config(args)
    vocab = manifest.vocab
    if vocab is None:
        raise ValidationError("manifest carries no vocab; global importance needs labels")
    items = []
    for e in entries:
        smap = SaliencyMap(load_matrix(_attr_map_path(args.attr_dir, e.sample_id, args.method)),
                           method_id=args.method)
        ppg = _load_ppg(manifest, e)
        seg = segmentation_from_ppg(ppg, t_target=smap.shape[1])
        items.append((smap, seg))
    table = global_importance(items, vocab, cfg)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,total_energy,total_frames,normalized_importance\n")
        for row in table:
            fh.write(f"{row['label']},{row['total_energy']:.17g},"
                     f"{row['total_frames']},{row['normalized_importance']:.17g}\n")
    return 0


def cmd_rank(args):
    m = SaliencyMap(load_matrix(args.map), method_id="ig")
    vocab = []
    if args.data:
        vocab = load_manifest(args.data).vocab or []
    ppg = Posteriorgram(load_matrix(args.ppg), vocab=vocab)
    cfg = _pdsm_config(args)
    ranking = rank_phonemes(m, ppg, cfg, args.top)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(ranking, fh, indent=2)
        fh.write("\n")
    return 0


def cmd_report(args):
    reports = [read_report_csv(p) for p in args.sweep]
    write_aggregate_json(reports, args.out, k=args.k)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--seed", type=int, default=None)


def _add_pdsm_flags(p, default_k=None):
    p.add_argument("--preset", choices=("tt2", "fs2"), default="fs2")
    p.add_argument("--pool", choices=("mean", "sum", "max"), default=None)
    p.add_argument("--k", type=int, default=default_k)
    p.add_argument("--exclude-silence", action="store_true")
    p.add_argument("--silence-index", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdsm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic dataset")
    p.add_argument("task", choices=("noise", "fakephoneme"))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--n-freq", type=int, default=None)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--n-corrupt-segments", type=int, default=None)
    p.add_argument("--corruption-gain", type=float, default=None)
    p.add_argument("--corruption-kind", choices=("additive_noise", "spectral_tilt"), default=None)
    p.add_argument("--noise-frac", type=float, nargs=2, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("train", help="train the toy classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--optimizer", choices=("sgd", "sgd_momentum"), default="sgd_momentum")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attribute", help="compute saliency maps")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=METHOD_IDS, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--labels", default=None)
    p.add_argument("--target-class", type=int, default=1)
    p.add_argument("--ig-steps", type=int, default=128)
    p.add_argument("--n-samples", type=int, default=32)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--baseline", choices=("zero", "dataset_mean"), default="zero")
    p.add_argument("--threads", type=int, default=os.cpu_count())
    _add_common(p)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("discretize", help="discretize one saliency map")
    p.add_argument("--map", required=True)
    p.add_argument("--ppg", required=True)
    p.add_argument("--out", required=True)
    _add_pdsm_flags(p, default_k=None)
    _add_common(p)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("evaluate", help="single-sample faithfulness")
    p.add_argument("--model", required=True)
    p.add_argument("--spectrogram", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--target-class", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-k", help="faithfulness vs k sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--attr-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--methods", default="ig")
    p.add_argument("--split", default="test")
    p.add_argument("--labels", default="fake,noisy")
    p.add_argument("--k-min", type=int, default=0)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--target-class", type=int, default=1)
    _add_pdsm_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("global-importance", help="dataset-level phoneme importance")
    p.add_argument("--data", required=True)
    p.add_argument("--attr-dir", required=True)
    p.add_argument("--method", choices=METHOD_IDS, default="ig")
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--labels", default="fake")
    _add_pdsm_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_global_importance)

    p = sub.add_parser("rank", help="top-m phoneme ranking for one sample")
    p.add_argument("--map", required=True)
    p.add_argument("--ppg", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--data", default=None, help="manifest supplying the vocab")
    p.add_argument("--top", type=int, default=10)
    _add_pdsm_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("report", help="aggregate sweep CSVs into a table")
    p.add_argument("--sweep", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PdsmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
