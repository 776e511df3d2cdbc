"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .cbc import CbcConfig
from .corruptions import CorruptionSpec, corrupt
from .errors import ConfigurationError, DomainError, TrainingError
from .experiment import ExperimentConfig, build_prior, run_experiment
from .io import load_image_pgm, load_vectors, save_image_pgm, save_vectors
from .langevin import LangevinConfig
from .ode import make_grid, write_trajectory_csv
from .pipelines import EditConfig, SdeditConfig, code_full, ode_edit, sdedit
from .schedule import make_linear_schedule
from .score import GmmScoreModel, save_prior

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _depths(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"depths must be comma-separated integers, got {text!r}") from None


def _read_samples(path: str):
    """Returns ``(batch, image_shape)``; PGM files hold one image, anything else is vectors."""
    if path.lower().endswith(".pgm"):
        img = load_image_pgm(path)
        return img.reshape(1, -1), img.shape
    return load_vectors(path), None


def _write_samples(x, path: str, image_shape) -> None:
    if image_shape is not None:
        save_image_pgm(np.asarray(x).reshape(image_shape), path)
    else:
        save_vectors(x, path)


def _model(args):
    schedule = make_linear_schedule()
    if args.score_net:
        from .scorematch import NetScoreModel, load_net

        return NetScoreModel(load_net(args.score_net), schedule)
    return GmmScoreModel(build_prior(args.prior, args.jitter), schedule)


def _langevin(args) -> LangevinConfig:
    return LangevinConfig(args.langevin_steps, args.step_size, args.anneal_k, args.anneal_coef,
                          args.seed, args.score_sign)


def cmd_gen_prior(args) -> None:
    prior = build_prior(args.prior, args.jitter)
    save_prior(prior, args.out)
    if args.samples:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        xs = prior.sample(args.samples, args.seed)
        if prior.image_shape is None:
            save_vectors(xs, out_dir / "samples.txt")
        else:
            for i, x in enumerate(xs):
                save_image_pgm(x.reshape(prior.image_shape), out_dir / f"sample_{i:04d}.pgm")


def cmd_corrupt(args) -> None:
    x, shape = _read_samples(args.input)
    spec = CorruptionSpec.parse(args.spec)
    out = corrupt(x, spec, shape)
    _write_samples(out, args.output, shape)


def _edit(args, run) -> None:
    model = _model(args)
    x, shape = _read_samples(args.input)
    grid = make_grid(model.schedule, args.grid_steps, args.grid_spacing)
    out = run(model, x, grid)
    _write_samples(out, args.output, shape)


def cmd_code(args) -> None:
    cbc = CbcConfig(args.cbc_eta, not args.no_cbc)

    def run(model, x, grid):
        return code_full(model, x, EditConfig(args.depths, _langevin(args), cbc, grid))

    _edit(args, run)


def cmd_ode_edit(args) -> None:
    if len(args.depths) != 1:
        raise ConfigurationError("ode-edit takes a single depth")

    def run(model, x, grid):
        if args.trajectory:
            from .ode import decode, encode
            from .langevin import langevin_run

            traj = []
            latent = encode(model, x, grid, args.depths[0], trajectory=traj)
            latent = langevin_run(model, latent, replace(_langevin(args), anneal_steps=1))
            out = decode(model, latent, grid, trajectory=traj)
            write_trajectory_csv(args.trajectory, traj)
            return out
        return ode_edit(model, x, args.depths[0], replace(_langevin(args), anneal_steps=1), grid)

    _edit(args, run)


def cmd_sdedit(args) -> None:
    cfg = SdeditConfig(args.t0, args.n_denoise or args.t0, args.repeats, args.seed)
    _edit(args, lambda model, x, grid: sdedit(model, x, cfg))


def cmd_sweep(args) -> None:
    cfg = ExperimentConfig.load(args.config)
    overrides = {k: v for k, v in (("out_dir", args.out_dir), ("seed", args.seed)) if v is not None}
    if "out_dir" in overrides:
        overrides["out_dir"] = str(Path(overrides["out_dir"]).resolve())
    paths = run_experiment(replace(cfg, **overrides))
    for p in paths.values():
        print(p)


def cmd_train_score(args) -> None:
    from .scorematch import TinyScoreNet, save_net, train_dsm

    data = load_vectors(args.data)
    net = TinyScoreNet.init(data.shape[1], args.hidden, args.seed)
    history: list[float] = []
    net = train_dsm(net, data, make_linear_schedule(), args.epochs, args.learning_rate,
                    rng_seed=args.seed, batch_size=args.batch_size, history=history)
    save_net(net, args.out)
    if history:
        print(f"final epoch median loss {history[-1]:.6g}")


def _add_model_flags(p) -> None:
    p.add_argument("--prior", default="patterns16", help="template set, 'toy2d', or prior file")
    p.add_argument("--jitter", type=float, default=0.1, help="template jitter std")
    p.add_argument("--score-net", help="trained weights file used instead of the exact prior score")
    p.add_argument("--in", dest="input", required=True, help=".pgm image or vector text file")
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--grid-steps", type=int, default=200)
    p.add_argument("--grid-spacing", choices=("angle", "uniform"), default="angle")
    p.add_argument("--seed", type=int, default=0)


def _add_langevin_flags(p) -> None:
    p.add_argument("--depths", type=_depths, default=(40,), help="grid positions, deepest first, e.g. 150,40")
    p.add_argument("--step-size", type=float, default=1e-3)
    p.add_argument("--langevin-steps", type=int, default=200)
    p.add_argument("--anneal-k", type=int, default=4)
    p.add_argument("--anneal-coef", type=float, default=0.8)
    p.add_argument("--score-sign", type=int, choices=(1, -1), default=1,
                   help="+1 ascends log-density; -1 keeps the descent form for ablations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codedit", description="Blind editing with diffusion priors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-prior", help="write a prior file and optionally samples from it")
    p.add_argument("--prior", default="patterns16")
    p.add_argument("--jitter", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_prior)

    p = sub.add_parser("corrupt", help="apply kind:severity:seed to an image or vectors")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("code", help="annealed multi-latent editing with clipping")
    _add_model_flags(p)
    _add_langevin_flags(p)
    p.add_argument("--cbc-eta", type=float, default=1.7)
    p.add_argument("--no-cbc", action="store_true")
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("ode-edit", help="encode, Langevin at one depth, decode")
    _add_model_flags(p)
    _add_langevin_flags(p)
    p.add_argument("--trajectory", help="write the visited states as CSV")
    p.set_defaults(func=cmd_ode_edit)

    p = sub.add_parser("sdedit", help="noise the guide to t0 and denoise with the reverse SDE")
    _add_model_flags(p)
    p.add_argument("--t0", type=int, default=500)
    p.add_argument("--n-denoise", type=int, default=0, help="Euler-Maruyama steps (default t0)")
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_sdedit)

    p = sub.add_parser("sweep", help="run an experiment config and write CSV reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train-score", help="fit a small score network by denoising score matching")
    p.add_argument("--data", required=True, help="vector text file, one sample per line")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_score)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            args.func(args)
    except (ConfigurationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingError, DomainError, FloatingPointError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
