"""Command-line harness.

Subcommands: train, separate, evaluate, bench-rtf, param-count, make-corpus.
Errors print one machine-parsable line, ``error:<tag>: <detail>``, to stderr
and exit non-zero.
"""

import argparse
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from .archive import load_checkpoint, load_params_into
from .config import load_train_config
from .data import CorpusSpec, load_manifest, synth_corpus, write_corpus
from .errors import MixsepError
from .losses import EvalReport, si_sdri
from .profiling import profiler
from .separator import Separator, param_count
from .train import train
from .wavio import wav_read, wav_write


def _load_model(checkpoint_path):
    cfg, params = load_checkpoint(checkpoint_path)
    model = Separator(cfg, rng=np.random.default_rng(0))
    load_params_into(model, params)
    return model


def cmd_train(args):
    cfg = load_train_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    result = train(cfg, args.out, log=print)
    print(f"done: {result['epochs_run']} epochs, best si-sdri "
          f"{result['best_si_sdri']:.3f} dB -> {result['best_checkpoint']}")
    return 0


def cmd_separate(args):
    model = _load_model(args.checkpoint)
    wave, rate = wav_read(args.input)
    cfg = model.cfg
    padded_len = cfg.aligned_length(len(wave))
    padded = np.pad(wave, (0, padded_len - len(wave)))
    est = model.separate(padded)[:, :len(wave)]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.num_sources):
        clipped = np.clip(est[i], -1.0, 32767.0 / 32768.0)
        wav_write(out_dir / f"source_{i + 1}.wav", clipped, rate)
    print(f"wrote {cfg.num_sources} sources ({len(wave)} samples each) to {out_dir}")
    return 0


def cmd_evaluate(args):
    model = _load_model(args.checkpoint)
    manifest = Path(args.manifest)
    entries = load_manifest(manifest)
    base = manifest.parent
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    scores = []
    try:
        for i, entry in enumerate(entries):
            try:
                mix, rate = wav_read(base / entry["mix"])
                refs = np.stack([wav_read(base / p)[0] for p in entry["sources"]])
            except (OSError, MixsepError) as exc:
                report = EvalReport(index=i, si_sdr=[], permutation=[],
                                    si_sdri=0.0, error=str(exc))
                out_fh.write(report.to_json_line() + "\n")
                continue
            padded_len = model.cfg.aligned_length(len(mix))
            padded = np.pad(mix, (0, padded_len - len(mix)))
            start = time.perf_counter()
            est = model.separate(padded)[:, :len(mix)]
            elapsed = time.perf_counter() - start
            improvement, per_source, perm = si_sdri(est, refs, mix)
            rtf = elapsed / (len(mix) / rate)
            report = EvalReport(index=i, si_sdr=per_source,
                                permutation=list(perm),
                                si_sdri=improvement, rtf=rtf)
            scores.append(improvement)
            out_fh.write(report.to_json_line() + "\n")
        summary = {
            "samples": len(entries),
            "evaluated": len(scores),
            "mean_si_sdri": float(np.mean(scores)) if scores else 0.0,
        }
        out_fh.write(json.dumps({"summary": summary}) + "\n")
        if out_fh is not sys.stdout:
            print(f"mean si-sdri {summary['mean_si_sdri']:.3f} dB "
                  f"over {summary['evaluated']} samples")
    finally:
        if out_fh is not sys.stdout:
            out_fh.close()
    return 0


def bench_report(model, duration_s, repeats, sample_rate=8000):
    """Median RTF plus a per-component wall-clock split."""
    cfg = model.cfg
    num_samples = cfg.aligned_length(int(duration_s * sample_rate))
    rng = np.random.default_rng(0)
    clip = rng.uniform(-0.5, 0.5, num_samples).astype(np.float32)
    model.separate(clip)   # warm-up: JIT + allocator
    runs = []
    for _ in range(repeats):
        profiler.reset()
        profiler.enabled = True
        start = time.perf_counter()
        model.separate(clip)
        total = time.perf_counter() - start
        profiler.enabled = False
        times = dict(profiler.times)
        blocks = times.get("attention.block", 0.0)
        local = times.get("attention.local", 0.0)
        glob = times.get("attention.global", 0.0)
        recurrent = times.get("recurrent.module", 0.0)
        masknet = times.get("masknet", 0.0)
        components = {
            "encode": times.get("encode", 0.0),
            "attention.local": local,
            "attention.global": glob,
            "attention.other": max(blocks - local - glob, 0.0),
            "recurrent": recurrent,
            "masknet.other": max(masknet - blocks - recurrent, 0.0),
            "decode": times.get("decode", 0.0),
        }
        components["pipeline.other"] = max(total - sum(components.values()), 0.0)
        runs.append({"total_s": total, "components": components,
                     "rtf": total / (num_samples / sample_rate)})
    return {
        "duration_s": num_samples / sample_rate,
        "encoded_length": cfg.encoded_length(num_samples),
        "repeats": repeats,
        "median_rtf": statistics.median(r["rtf"] for r in runs),
        "runs": runs,
    }


def cmd_bench_rtf(args):
    if args.checkpoint:
        model = _load_model(args.checkpoint)
    else:
        cfg = load_train_config(args.config).model
        model = Separator(cfg, rng=np.random.default_rng(args.seed or 0))
    report = bench_report(model, args.duration, args.repeats)
    print(json.dumps(report, indent=2))
    return 0


def cmd_param_count(args):
    cfg = load_train_config(args.config).model
    rows = param_count(cfg)
    width = max(len(k) for k in rows)
    for key, value in rows.items():
        print(f"{key:<{width}}  {value:>12,}")
    return 0


def cmd_make_corpus(args):
    spec = CorpusSpec(count=args.count, duration_s=args.duration,
                      num_sources=args.sources, seed=args.seed or 0,
                      sample_rate=args.rate)
    manifest = write_corpus(synth_corpus(spec), args.out)
    print(f"wrote {args.count} mixtures, manifest at {manifest}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mixsep",
        description="Monaural speech separation: train, run and benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("separate", help="split one WAV into per-source WAVs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="mixture WAV (mono PCM16)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("evaluate", help="SI-SDRi over a corpus manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench-rtf", help="real-time factor with component split")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--duration", type=float, default=4.0, help="clip seconds")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench_rtf)

    p = sub.add_parser("param-count", help="closed-form parameter breakdown")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_param_count)

    p = sub.add_parser("make-corpus", help="write a synthetic WAV corpus + manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--sources", type=int, default=2)
    p.add_argument("--rate", type=int, default=8000)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_make_corpus)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bench-rtf" and not (args.checkpoint or args.config):
        print("error:config-invalid: bench-rtf needs --checkpoint or --config",
              file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except MixsepError as exc:
        print(f"error:{exc.tag}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
