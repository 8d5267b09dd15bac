"""Command-line interface.

Exit status is 0 on success, 2 for usage, input or configuration errors
and 3 for numerical failures.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .exceptions import ConfigError, DegenerateInputError, MatrixFormatError, NumericalError
from .harness import SynthSpec, gen_hierarchical
from .matrix_core import format_value, read_matrix, write_matrix
from .metrics import similarity, test_retest_identifiability
from .rro import estimate_rank
from .sender_core import SenderConfig, decompose

EXIT_USAGE = 2
EXIT_NUMERIC = 3
FACTOR_NAMES = ("X", "Y", "U", "V", "S")

__all__ = ["load_config", "run_cli", "main"]


def load_config(path):
    """Read a flat JSON object into a :class:`SenderConfig`.

    Missing keys take their defaults; unknown keys are rejected.
    """
    try:
        with open(path) as fh:
            mapping = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return SenderConfig.from_dict(mapping)


def _config_from_args(args):
    base = load_config(args.config) if getattr(args, "config", None) else SenderConfig()
    values = base.to_dict()
    overrides = {
        "rho": getattr(args, "rho", None),
        "activation": getattr(args, "activation", None),
        "initial_rank": getattr(args, "initial_rank", None),
        "seed": getattr(args, "seed", None),
        "mbp_enabled": getattr(args, "mbp", None),
        "mbp_T": getattr(args, "mbp_t", None),
        "mbp_max_iter": getattr(args, "mbp_iters", None),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SenderConfig.from_dict(values)


def _initial_rank(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}") from None
    return value


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(path, entries):
    with open(path, "w") as fh:
        for key, value in entries:
            fh.write(f"{key}={value}\n")


def _rng_name():
    return f"numpy.random.PCG64 (numpy {np.__version__})"


def _cmd_decompose(args):
    config = _config_from_args(args)
    data = read_matrix(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = decompose(data, config)
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    files = []
    for k, layer in enumerate(result.layers, start=1):
        for name, mat in zip(FACTOR_NAMES, (layer.x, layer.y, layer.u, layer.v, layer.s)):
            fname = f"layer_{k}_{name}.bin"
            write_matrix(mat, out / fname, "bin")
            files.append(fname)
    with open(out / "loss_history.csv", "w") as fh:
        fh.write("sweep,layer,loss\n")
        for layer, sweep, loss in result.loss_history:
            fh.write(f"{sweep},{layer},{format_value(loss)}\n")
    with open(out / "ranks.csv", "w") as fh:
        fh.write("layer,rank_linear,rank_nonlinear\n")
        for k, layer in enumerate(result.layers, start=1):
            fh.write(f"{k},{layer.rank_linear},{layer.rank_nonlinear}\n")

    _write_manifest(
        out / "manifest.txt",
        [
            ("version", __version__),
            ("input", os.path.abspath(args.input)),
            ("input_sha256", _sha256(args.input)),
            ("rng", _rng_name()),
            ("threads", args.threads),
            ("config", json.dumps(config.to_dict(), sort_keys=True)),
            ("depth", result.depth),
            ("terminated_by", result.terminated_by),
            ("layer_files", ",".join(files)),
            ("loss_history", "loss_history.csv"),
            ("ranks", "ranks.csv"),
            ("timing_ms", f"{elapsed_ms:.0f}"),
        ],
    )
    return 0


def _cmd_estimate_rank(args):
    print(estimate_rank(read_matrix(args.file)).as_csv())
    return 0


def _cmd_identifiability(args):
    config = _config_from_args(args)
    data = read_matrix(args.input)
    # One seed drives both the column split and the factor initialization.
    score, test, retest = test_retest_identifiability(data, config.seed, config)
    print(f"{format_value(score)},{test.shape[0]},{retest.shape[0]}")
    return 0


def _cmd_similarity(args):
    dist = similarity(read_matrix(args.a), read_matrix(args.b), args.threshold_pct)
    print(",".join(format_value(v) for v in dist))
    return 0


def _cmd_synth(args):
    spec = SynthSpec(
        rows=args.rows,
        cols=args.cols,
        layer_ranks_linear=args.ranks,
        layer_ranks_nonlinear=args.nranks,
        sparsity=args.sparsity,
        noise_sigma=args.noise,
        activation=args.activation,
        seed=args.seed,
    )
    truth = gen_hierarchical(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(truth.clean, out / "clean.bin", "bin")
    write_matrix(truth.noisy, out / "noisy.bin", "bin")
    for k, layer in enumerate(truth.layers, start=1):
        for name, mat in zip(FACTOR_NAMES, (layer.x, layer.y, layer.u, layer.v, layer.s)):
            write_matrix(mat, out / f"layer_{k}_{name}.bin", "bin")
    _write_manifest(
        out / "manifest.txt",
        [
            ("seed", spec.seed),
            ("rows", spec.rows),
            ("cols", spec.cols),
            ("ranks", ",".join(map(str, spec.layer_ranks_linear))),
            ("nranks", ",".join(map(str, spec.layer_ranks_nonlinear))),
            ("sparsity", format_value(spec.sparsity)),
            ("noise_sigma", format_value(spec.noise_sigma)),
            ("activation", spec.activation),
            ("rng", _rng_name()),
        ],
    )
    return 0


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file with SenderConfig fields")
    p.add_argument("--rho", type=float)
    p.add_argument("--activation", choices=("relu", "sigmoid"))
    p.add_argument("--initial-rank", type=_initial_rank, dest="initial_rank")
    p.add_argument("--seed", type=int)
    p.add_argument("--mbp", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--mbp-t", type=float, dest="mbp_t")
    p.add_argument("--mbp-iters", type=int, dest="mbp_iters")
    p.add_argument("--threads", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="deephybrid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="factorize a matrix file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("estimate-rank", help="print rank,pos_wd,pos_wr,pos_wc")
    p.add_argument("file")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_estimate_rank)

    p = sub.add_parser("identifiability", help="test/retest identifiability of a matrix file")
    p.add_argument("--input", required=True)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_identifiability)

    p = sub.add_parser("similarity", help="Hausdorff distance between paired components")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--threshold-pct", type=float, default=90.0, dest="threshold_pct")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("synth", help="write a synthetic hierarchical dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--ranks", type=_int_list, required=True)
    p.add_argument("--nranks", type=_int_list, required=True)
    p.add_argument("--sparsity", type=float, default=0.02)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--activation", choices=("relu", "sigmoid"), default="relu")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_synth)
    return parser


def _fail(code, kind, message):
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def run_cli(argv=None):
    """Run one command and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        return _fail(EXIT_USAGE, "usage", "--threads must be a positive integer")
    try:
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except (ConfigError, MatrixFormatError, DegenerateInputError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, exc)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, exc)
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, exc)


def main():
    sys.exit(run_cli())
