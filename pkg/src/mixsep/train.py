"""Training loop: Adam + permutation-invariant SI-SDR loss, global gradient
clipping, a hold-then-decay learning-rate schedule, JSON-lines metrics and
best/last checkpoints. Fully reproducible from the config seed."""

import json
import math
from pathlib import Path

import numpy as np

from . import tensor as T
from .archive import save_checkpoint
from .config import TrainConfig
from .data import CorpusSpec, dynamic_mix, source_pool, synth_corpus
from .errors import TrainingDivergedError
from .losses import pit_loss, si_sdri
from .optim import Adam, clip_global_norm
from .separator import Separator


def lr_at_epoch(base, epoch, plateau_epochs, decay_window, decay_factor):
    """Constant for ``plateau_epochs`` epochs, then one decay per subsequent
    ``decay_window`` epochs (epochs are 1-based)."""
    if epoch <= plateau_epochs:
        return base
    steps = 1 + (epoch - plateau_epochs - 1) // decay_window
    return base * decay_factor ** steps


def _grad_list(model):
    return [p.grad for p in model.parameters() if p.grad is not None]


def train(cfg: TrainConfig, out_dir, log=None):
    """Run the full loop; returns a summary dict (model, history, best)."""
    cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.jsonl"

    corpus_spec = CorpusSpec(count=cfg.train_count, duration_s=cfg.duration_s,
                             num_sources=cfg.model.num_sources, seed=cfg.seed,
                             sample_rate=cfg.sample_rate)
    corpus = synth_corpus(corpus_spec)
    clip_len = len(corpus[0].mix)
    cfg.model.encoded_length(clip_len)   # fail before training, not mid-epoch

    pool = source_pool(corpus_spec) if cfg.dynamic_mixing else None
    mix_rng = np.random.default_rng([cfg.seed, 2])
    model = Separator(cfg.model, rng=np.random.default_rng([cfg.seed, 1]))
    opt = Adam(model.parameters(), lr=cfg.lr)

    history = []
    best_si_sdri = -math.inf
    with open(metrics_path, "w", encoding="utf-8") as metrics:
        for epoch in range(1, cfg.max_epochs + 1):
            opt.lr = lr_at_epoch(cfg.lr, epoch, cfg.plateau_epochs,
                                 cfg.decay_window, cfg.decay_factor)
            if pool is not None:
                samples = [dynamic_mix(pool, cfg.model.num_sources, clip_len,
                                       mix_rng, sample_rate=cfg.sample_rate)
                           for _ in range(cfg.train_count)]
            else:
                samples = corpus

            losses, pre_norms, post_norms = [], [], []
            for start in range(0, len(samples), cfg.batch_size):
                batch = samples[start:start + cfg.batch_size]
                opt.zero_grad()
                batch_losses = []
                for sample in batch:
                    est = model(T.tensor(sample.mix))
                    loss, _ = pit_loss(est, np.stack(sample.sources))
                    batch_losses.append(loss)
                total = batch_losses[0]
                for extra in batch_losses[1:]:
                    total = total + extra
                total = total * (1.0 / len(batch))
                value = total.item()
                if not math.isfinite(value):
                    raise TrainingDivergedError(
                        f"non-finite loss {value} at epoch {epoch}, "
                        f"step {start // cfg.batch_size + 1} (lr={opt.lr:g})")
                total.backward()
                grads = _grad_list(model)
                pre_norms.append(clip_global_norm(grads, cfg.clip_norm))
                post_norms.append(min(pre_norms[-1], cfg.clip_norm))
                opt.step()
                losses.append(value)

            scores = [si_sdri(model.separate(s.mix), np.stack(s.sources), s.mix)[0]
                      for s in corpus]
            epoch_si_sdri = float(np.mean(scores))
            record = {
                "epoch": epoch,
                "lr": opt.lr,
                "loss": float(np.mean(losses)),
                "si_sdri": epoch_si_sdri,
                "grad_norm_pre": float(np.mean(pre_norms)),
                "grad_norm_post": float(np.mean(post_norms)),
                "steps": len(losses),
            }
            history.append(record)
            metrics.write(json.dumps(record) + "\n")
            metrics.flush()
            if log is not None:
                log(f"epoch {epoch:4d}  lr {opt.lr:.2e}  loss {record['loss']:9.4f}  "
                    f"si-sdri {epoch_si_sdri:7.3f} dB")
            if epoch_si_sdri > best_si_sdri:
                best_si_sdri = epoch_si_sdri
                save_checkpoint(out_dir / "best.ckpt", model)
            if cfg.target_si_sdri != 0 and epoch_si_sdri >= cfg.target_si_sdri:
                break

    save_checkpoint(out_dir / "last.ckpt", model)
    return {
        "model": model,
        "history": history,
        "best_si_sdri": best_si_sdri,
        "epochs_run": len(history),
        "steps_run": sum(rec["steps"] for rec in history),
        "metrics_path": metrics_path,
        "best_checkpoint": out_dir / "best.ckpt",
        "last_checkpoint": out_dir / "last.ckpt",
    }
