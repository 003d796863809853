"""Command-line entry point: train, eval, infer, count, selftest.

Flag names and output formats are frozen in docs/cli.md.  Bad flags exit
with status 2 (argparse usage text); runtime failures print a diagnostic
and exit 1; success exits 0."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .checkpoint import checkpoint_load, checkpoint_restore, checkpoint_save
from .config import config_load
from .errors import OmniSRError
from .evalkit import infer_tiled, model_forward, run_benchmark
from .network import OmniSR, count_flops, count_params
from .pngio import png_read, png_write
from .selftest import run_selftest
from .training import AdamWState, CropDataset, TrainConfig, train_loop


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omnisr", description="Lightweight window-attention super-resolution toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="optimize a model from an INI config")
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--resume", default=None, metavar="CKPT",
                   help="checkpoint to continue from (restores optimizer and RNG)")

    p = sub.add_parser("eval", help="benchmark a checkpoint on a directory of HR PNGs")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--dataset", required=True, help="directory of ground-truth PNGs")
    p.add_argument("--scale", required=True, type=int, choices=(2, 3, 4))

    p = sub.add_parser("infer", help="super-resolve one PNG")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True, metavar="PNG")
    p.add_argument("--output", required=True, metavar="PNG")

    p = sub.add_parser("count", help="print parameter and FLOP totals for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--flops-res", default="1280x720", metavar="WxH",
                   help="output resolution for the FLOP count (default 1280x720)")

    p = sub.add_parser("selftest", help="run the built-in diagnostic suite")
    p.add_argument("--filter", default="", metavar="NAME",
                   help="only run checks whose name contains this substring")
    return parser


def _load_dataset(dataset_dir: str, scale: int, crop: int) -> CropDataset:
    paths = sorted(Path(dataset_dir).glob("*.png"))
    if not paths:
        raise OmniSRError(f"no PNG files in dataset directory {dataset_dir!r}")
    return CropDataset([png_read(p) for p in paths], scale, crop)


def _cmd_train(args) -> int:
    cfg = config_load(args.config)
    dataset = _load_dataset(cfg.train.dataset_dir, cfg.network.scale, cfg.train.crop)
    if args.resume:
        model, loaded = checkpoint_restore(args.resume)
        if loaded["config"] != cfg.network:
            raise OmniSRError(
                f"checkpoint {args.resume} was trained with a different network config")
        params = [p for _, p in model.named_parameters()]
        optimizer = AdamWState(params)
        if loaded["optimizer"] is not None:
            optimizer.m = [m.astype(np.float32) for m in loaded["optimizer"]["m"]]
            optimizer.v = [v.astype(np.float32) for v in loaded["optimizer"]["v"]]
            optimizer.step = loaded["iteration"]
        start = loaded["iteration"]
        resume_state = {"rng": loaded["rng"]} if loaded["rng"] is not None else None
    else:
        model, optimizer, start, resume_state = OmniSR(cfg.network), None, 0, None
    result = train_loop(model, dataset, cfg.train, log_path=cfg.io.log,
                        checkpoint_path=cfg.io.checkpoint, resume_state=resume_state,
                        start_iter=start, optimizer=optimizer)
    print(f"trained {result.iterations} iterations, final loss {result.final_loss:.6g}")
    print(f"checkpoint: {cfg.io.checkpoint}  log: {cfg.io.log}")
    return 0


def _cmd_eval(args) -> int:
    model, loaded = checkpoint_restore(args.ckpt)
    if model.config.scale != args.scale:
        raise OmniSRError(
            f"checkpoint is a x{model.config.scale} model, requested x{args.scale}")
    report = run_benchmark(model_forward(model), args.dataset, args.scale,
                           fingerprint=Path(args.ckpt).name)
    sys.stdout.write(report.render())
    return 0


def _cmd_infer(args) -> int:
    model, _ = checkpoint_restore(args.ckpt)
    lr = png_read(args.input)
    sr = np.clip(infer_tiled(model, lr), 0.0, 1.0)
    png_write(args.output, sr)
    s = model.config.scale
    print(f"{args.input} [{lr.shape[2]}x{lr.shape[1]}] -> "
          f"{args.output} [{lr.shape[2] * s}x{lr.shape[1] * s}] (x{s})")
    return 0


def _cmd_count(args) -> int:
    cfg = config_load(args.config)
    try:
        w, h = (int(v) for v in args.flops_res.lower().split("x"))
    except ValueError:
        raise OmniSRError(f"--flops-res expects WxH, got {args.flops_res!r}") from None
    params = count_params(cfg.network)
    flops = count_flops(cfg.network, h, w)
    flops_attn = count_flops(cfg.network, h, w, include_attention=True)
    print(f"scale: x{cfg.network.scale}")
    print(f"params: {params} ({params / 1e3:.0f}K)")
    print(f"flops @ {w}x{h}: {flops} ({flops / 1e9:.2f}G)")
    print(f"flops incl. attention maps: {flops_attn} ({flops_attn / 1e9:.2f}G)")
    return 0


def cli_main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"train": _cmd_train, "eval": _cmd_eval, "infer": _cmd_infer,
                "count": _cmd_count}
    try:
        if args.command == "selftest":
            return 1 if run_selftest(args.filter) else 0
        return handlers[args.command](args)
    except (OmniSRError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
