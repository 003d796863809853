#!/usr/bin/env python3
"""End-to-end demo: synthesize data, train a tiny model briefly, evaluate.

Runs in a few minutes on a laptop CPU.  The point is to exercise the whole
pipeline (data -> training -> checkpoint -> tiled inference -> report), not
to reach competitive quality.

Usage: python3 scripts/demo_train_eval.py [--workdir demo_run] [--iters 300]
"""

import argparse
import subprocess
import sys
from pathlib import Path

from omnisr.checkpoint import checkpoint_restore
from omnisr.evalkit import bicubic_forward, model_forward, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workdir", default="demo_run")
    ap.add_argument("--iters", type=int, default=300)
    args = ap.parse_args()

    work = Path(args.workdir)
    train_dir, eval_dir = work / "train_png", work / "eval_png"
    here = Path(__file__).resolve().parent
    subprocess.run([sys.executable, str(here / "make_demo_dataset.py"), str(train_dir),
                    "--count", "12", "--seed", "0"], check=True)
    subprocess.run([sys.executable, str(here / "make_demo_dataset.py"), str(eval_dir),
                    "--count", "4", "--seed", "99"], check=True)

    tiny = (here.parent / "configs" / "tiny_x2.ini").read_text()
    tiny = tiny.replace("total_iters = 2000", f"total_iters = {args.iters}")
    tiny = tiny.replace("dataset_dir = ", f"dataset_dir = {train_dir}", 1)
    tiny = tiny.replace("checkpoint = model.osr1", f"checkpoint = {work / 'demo.osr1'}")
    tiny = tiny.replace("log = train.log", f"log = {work / 'train.log'}")
    cfg_path = work / "demo.ini"
    cfg_path.write_text(tiny)
    subprocess.run([sys.executable, "-m", "omnisr.cli", "train",
                    "--config", str(cfg_path)], check=True)

    model, _ = checkpoint_restore(work / "demo.osr1")
    for label, fwd in (("bicubic", bicubic_forward(2)), ("model", model_forward(model))):
        report = run_benchmark(fwd, eval_dir, scale=2, fingerprint=label)
        print(f"== {label} ==")
        print(report.render())


if __name__ == "__main__":
    main()
