"""Lightweight window-attention super-resolution toolkit.

A self-contained implementation: tape-based reverse-mode autodiff over
numpy, cascaded spatial/channel window attention, the full network with
parameter/FLOP accounting, the training protocol, luma-domain metrics,
and PNG/INI/checkpoint plumbing with a CLI."""

from .blocks import BlockConfig, OSABlock, OSAG
from .checkpoint import checkpoint_load, checkpoint_restore, checkpoint_save
from .config import Config, config_from_ini, config_load, config_to_ini, paper_config
from .errors import (CheckpointError, ConfigError, DecodeError, OmniSRError,
                     ShapeError, UsageError)
from .evalkit import (EvalReport, ablation_variant, bicubic_forward, feature_entropy,
                      infer_tiled, model_forward, psnr, rgb_to_y, run_benchmark, ssim)
from .network import NetworkConfig, OmniSR, count_flops, count_params
from .pngio import png_read, png_write
from .tensor import MacCounter, Tape, Tensor
from .training import (AdamWState, CropDataset, TrainConfig, adamw_step,
                       bicubic_resize, l1_loss, lr_at, sample_batch, train_loop)

__version__ = "0.1.0"
