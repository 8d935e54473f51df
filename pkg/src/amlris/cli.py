"""Command-line entry point: ``amlris <subcommand> ...``.

Exit codes: 0 success, 1 usage, 2 IO, 3 validation.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import os
import sys
from pathlib import Path


from . import loss, plotting, projection, toy
from .afm import AmlConfig, afm
from .perturb import PerturbKind, perturb, perturb_directory
from .errors import AmlError
from .netpbm import read_pgm, read_ppm, write_pgm, write_ppm
from .pmme import SimilarityMap, pmme
from .tensor import read_tensor, write_tensor

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _pair(text: str) -> tuple[int, int]:
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError(f"sizes must be positive, got {text!r}")
    return h, w


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _cmd_pmme(args):
    v = read_tensor(args.visual)
    t = read_tensor(args.text)
    h_f, w_f = args.grid
    if v.ndim != 2 or t.ndim != 2:
        raise AmlError("visual and text tensors must be 2-D")
    proj = projection.sample_projection(args.seed, v.shape[1], t.shape[1], args.da)
    sim = pmme(v, t, proj, h_f, w_f)
    write_tensor(sim.grid, args.out)
    if args.figure:
        plotting.plot_similarity_map(sim, args.figure)


def _cmd_afm(args):
    grid = read_tensor(args.sim)
    if grid.ndim != 2:
        raise AmlError(f"similarity map must be 2-D, got shape {grid.shape}")
    image = read_ppm(args.image)
    cfg = AmlConfig(tau=args.tau, rho=args.rho, block_h=args.block[0], block_w=args.block[1], seed=args.seed)
    sim = SimilarityMap(grid)
    masked, mask = afm(sim, image, cfg)
    write_ppm(masked, args.out)
    if args.mask_out:
        write_pgm(mask.to_bitmap(), args.mask_out)
    if args.figure:
        plotting.plot_masked_image(image, masked, mask, args.figure)
    print(f"masked_fraction={mask.masked_fraction!r}")


def _cmd_jl_dim(args):
    print(projection.jl_dim_bound(args.m, args.n, args.sigma, args.eps))


def _cmd_jl_eps(args):
    print(repr(projection.jl_epsilon(args.da, args.m, args.n, args.sigma)))


def _cmd_jl_verify(args):
    if args.mode == "block-distance":
        errors = projection.block_distance_errors(args.seed, args.trials, args.di, args.dt, args.da)
        report = projection.mc_block_distance_distortion(args.seed, args.trials, args.di, args.dt, args.da, args.eps)
    elif args.mode == "cross-inner":
        errors = projection.random_cross_inner_errors(args.seed, args.trials, args.di, args.dt, args.da)
        report = projection.mc_cross_inner_error(args.seed, args.trials, args.di, args.dt, args.da, args.eps)
    else:
        errors = projection.chi2_ratio_errors(args.seed, args.trials, args.d)
        report = projection.mc_chi2_tail(args.seed, args.trials, args.d, args.eps)
    sys.stdout.write(report.to_text())
    if args.figure:
        plotting.plot_error_histogram(errors, args.figure, report.epsilon_target, title=args.mode)


def _load_corpus(pred_dir: Path, gt_dir: Path):
    gt_files = sorted(gt_dir.glob("*.pgm"))
    if not gt_files:
        raise FileNotFoundError(f"no .pgm files in {gt_dir}")
    samples = []
    for gt_path in gt_files:
        pred_path = pred_dir / gt_path.name
        if not pred_path.is_file():
            raise FileNotFoundError(f"missing prediction {pred_path}")
        samples.append(loss.EvalSample(read_pgm(pred_path), read_pgm(gt_path)))
    return samples


def _cmd_metrics(args):
    samples = _load_corpus(Path(args.pred_dir), Path(args.gt_dir))
    sys.stdout.write(loss.format_report(loss.metrics_report(samples)))


def _cmd_perturb(args):
    kind = PerturbKind(args.kind)
    if kind.stochastic and args.seed is None:
        raise UsageError(f"--seed is required for {kind.value}")
    if not kind.stochastic and args.seed is not None:
        raise UsageError(f"{kind.value} is deterministic and takes no --seed")
    src = Path(args.input)
    if src.is_dir():
        perturb_directory(src, args.output, kind, args.seed)
    else:
        write_ppm(perturb(read_ppm(src), kind, args.seed), args.output)


def _cmd_toy_train(args):
    cfg = dataclasses.replace(
        toy.TOY_CONFIG, tau=args.tau, rho=args.rho, block_h=args.block[0], block_w=args.block[1], d_a=args.da, seed=args.seed
    )
    data = toy.synth_dataset(args.seed, args.samples)
    hist = toy.train(data, args.epochs, cfg, lr=args.lr, seed=args.seed)
    Path(args.history).write_text(hist.to_csv())
    if args.figure:
        plotting.plot_train_history(hist, args.figure)
    print(f"first_loss={hist.loss[0]!r}")
    print(f"final_loss={hist.loss[-1]!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="amlris", description="Alignment-aware masked learning tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("pmme", help="patch-token alignment map from feature tensors")
    s.add_argument("--visual", required=True, help="AMLT [H_f*W_f, D_i]")
    s.add_argument("--text", required=True, help="AMLT [N_l, D_t]")
    s.add_argument("--da", type=int, default=2048)
    s.add_argument("--grid", type=_pair, default=(14, 14))
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--figure")
    s.set_defaults(func=_cmd_pmme)

    s = sub.add_parser("afm", help="mask poorly aligned blocks of an image")
    s.add_argument("--sim", required=True)
    s.add_argument("--image", required=True)
    s.add_argument("--tau", type=float, default=0.4)
    s.add_argument("--rho", type=float, default=0.25)
    s.add_argument("--block", type=_pair, default=(32, 32))
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mask-out")
    s.add_argument("--figure")
    s.set_defaults(func=_cmd_afm)

    s = sub.add_parser("jl-dim", help="projection dimension bound")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.set_defaults(func=_cmd_jl_dim)

    s = sub.add_parser("jl-eps", help="distortion guaranteed at a dimension")
    s.add_argument("--da", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--sigma", type=float, required=True)
    s.set_defaults(func=_cmd_jl_eps)

    s = sub.add_parser("jl-verify", help="Monte Carlo checks of the projection bounds")
    s.add_argument("--mode", choices=("block-distance", "cross-inner", "chi2-tail"), required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--di", type=int, default=16)
    s.add_argument("--dt", type=int, default=8)
    s.add_argument("--da", type=int, default=2048)
    s.add_argument("--d", type=int, default=512, help="chi-square degrees of freedom")
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--figure")
    s.set_defaults(func=_cmd_jl_verify)

    s = sub.add_parser("metrics", help="oIoU / mIoU / P@X over PGM corpora")
    s.add_argument("--pred-dir", required=True)
    s.add_argument("--gt-dir", required=True)
    s.set_defaults(func=_cmd_metrics)

    s = sub.add_parser("perturb", help="apply a robustness perturbation")
    s.add_argument("--kind", choices=[k.value for k in PerturbKind], required=True)
    s.add_argument("--seed", type=_seed)
    s.add_argument("input", help="PPM file or directory of PPMs")
    s.add_argument("output", help="PPM file or output directory")
    s.set_defaults(func=_cmd_perturb)

    s = sub.add_parser("toy-train", help="two-stage training on synthetic data")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--epochs", type=int, default=20)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--history", required=True, help="CSV output")
    s.add_argument("--tau", type=float, default=toy.TOY_CONFIG.tau)
    s.add_argument("--rho", type=float, default=toy.TOY_CONFIG.rho)
    s.add_argument("--block", type=_pair, default=(toy.TOY_CONFIG.block_h, toy.TOY_CONFIG.block_w))
    s.add_argument("--da", type=int, default=toy.TOY_CONFIG.d_a)
    s.add_argument("--lr", type=float, default=toy.DEFAULT_LR)
    s.add_argument("--figure")
    s.set_defaults(func=_cmd_toy_train)
    return p


def _thread_limit():
    raw = os.environ.get("AML_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"AML_THREADS must be an integer, got {raw!r}") from None
    if n <= 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "jl-verify" and args.mode != "cross-inner" and args.eps is None:
            raise UsageError(f"--eps is required for --mode {args.mode}")
        with _thread_limit():
            args.func(args)
    except UsageError as exc:
        print(f"amlris: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"amlris: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AmlError, ValueError) as exc:
        print(f"amlris: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


def main():
    sys.exit(run())
