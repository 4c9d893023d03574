"""mixsep: desk-scale monaural speech separation.

A learned filterbank encoder/decoder around a masking network that stacks
joint local-global attention blocks with convolutional memory modules, all on
a minimal numpy autodiff engine with numba-accelerated convolution kernels.
"""

from .attention import AttentionConfig, JointAttentionBlock
from .config import TrainConfig, load_train_config
from .data import CorpusSpec, MixtureSample, dynamic_mix, synth_corpus
from .losses import EvalReport, measure_rtf, pit_loss, si_sdr, si_sdri
from .optim import Adam, AdamState, clip_global_norm
from .recurrent import RecurrentConfig, RecurrentModule
from .separator import ModelConfig, Separator, build_config, param_count
from .tensor import Tensor, backward, no_grad, parameter

__version__ = "0.1.0"

__all__ = [
    "Adam", "AdamState", "AttentionConfig", "CorpusSpec", "EvalReport",
    "JointAttentionBlock", "MixtureSample", "ModelConfig", "RecurrentConfig",
    "RecurrentModule", "Separator", "Tensor", "TrainConfig", "backward",
    "build_config", "clip_global_norm", "dynamic_mix", "load_train_config",
    "measure_rtf", "no_grad", "parameter", "param_count", "pit_loss",
    "si_sdr", "si_sdri", "synth_corpus",
]
