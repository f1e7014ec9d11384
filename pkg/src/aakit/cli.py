"""Command-line surface: fit, encode, classify, bench.

Exit codes: 0 success, 2 bad flags or parameter values, 3 IO/format errors,
4 numeric failure.
"""

import argparse
import os
import sys

import numpy as np

from . import bench, classifier, fitting, model_io
from .errors import (AakitError, DataError, DimensionError, FormatError,
                     NumericError, ParameterError, ParseError)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _load_input(path, delimiter=None, transpose=False):
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == model_io.MATRIX_MAGIC:
        return model_io.load_matrix(path)
    return model_io.import_delimited_text(path, delimiter=delimiter,
                                          transpose=transpose)


def _add_input_flags(p):
    p.add_argument("--delimiter", default=None,
                   help="field delimiter for text inputs (default: whitespace)")
    p.add_argument("--transpose", action="store_true",
                   help="text input has points as rows")


def cmd_fit(args):
    X = _load_input(args.input, args.delimiter, args.transpose)
    config = fitting.FitConfig(
        p=args.p, n_iter=args.iterations, seed=args.seed, tol=args.tol,
        robust=args.robust, eps=args.epsilon, threads=args.threads)
    if args.robust:
        model = fitting.fit_robust(X, config)
    else:
        model = fitting.fit(X, config)
    if args.output_model:
        model_io.save_model(args.output_model, model)
    if args.output_codes:
        model_io.save_matrix(args.output_codes, model.A)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            for v in model.history:
                fh.write(f"{v!r}\n")
    return EXIT_OK


def cmd_encode(args):
    model = model_io.load_model(args.model)
    X = _load_input(args.input, args.delimiter, args.transpose)
    A = fitting.encode(model.Z, X, tol=model.config.tol, threads=args.threads)
    model_io.save_matrix(args.output_codes, A)
    return EXIT_OK


def _load_classes(args):
    if args.train_dir:
        names = sorted(os.listdir(args.train_dir))
        items = []
        for name in names:
            path = os.path.join(args.train_dir, name)
            if not os.path.isfile(path):
                continue
            label = os.path.splitext(name)[0]
            items.append((label, _load_input(path, args.delimiter,
                                             args.transpose)))
        if not items:
            raise DataError(f"no class files in {args.train_dir}")
        return items
    items = []
    for spec_arg in args.model:
        label, _, path = spec_arg.partition("=")
        if not path:
            raise ParameterError("--model expects label=path")
        items.append((label, model_io.load_model(path).Z))
    return items


def cmd_classify(args):
    items = _load_classes(args)
    if args.model:
        model = classifier.ClassifierModel([lab for lab, _ in items],
                                           [Z for _, Z in items],
                                           "learned-archetypes")
    else:
        p = "all" if args.all or args.p is None else args.p
        model = classifier.train(items, p=p, seed=args.seed, tol=args.tol)
    X = _load_input(args.test, args.delimiter, args.transpose)
    labels, residuals = classifier.classify(X, model, tol=args.tol,
                                          normalize=args.normalize)
    truth = None
    if args.labels:
        with open(args.labels, "r", encoding="utf-8") as fh:
            truth = [line.strip() for line in fh if line.strip()]
        if len(truth) != len(labels):
            raise DataError("label file length does not match test columns")
    for i, lab in enumerate(labels):
        res = "\t".join(f"{residuals[k, i]:.12g}"
                        for k in range(len(model.labels)))
        print(f"{lab}\t{res}")
    if truth is not None:
        errors = sum(1 for a, b in zip(labels, truth) if str(a) != str(b))
        print(f"error_rate\t{errors / len(truth):.6f}")
    return EXIT_OK


def cmd_bench(args):
    n_list = [int(v) for v in args.n_list.split(",")]
    p_list = [int(v) for v in args.p_list.split(",")]
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        out.write("n\tp\tseconds_per_iter\tstd\n")
        for n, p, sec, std in bench.run_grid(
                n_list, p_list, args.m, seed=args.seed,
                n_iter=args.iterations, reps=args.reps, threads=args.threads):
            out.write(f"{n}\t{p}\t{sec:.6g}\t{std:.3g}\n")
            out.flush()
    finally:
        if args.output:
            out.close()
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aakit", description="Archetypal analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    threads_default = os.cpu_count() or 1

    p_fit = sub.add_parser("fit", help="fit archetypes to a data matrix")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("-p", type=int, required=True, dest="p",
                       help="number of archetypes")
    p_fit.add_argument("-t", "--iterations", type=int, default=100)
    p_fit.add_argument("--robust", action="store_true")
    p_fit.add_argument("--epsilon", type=float, default=0.01)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--tol", type=float, default=1e-9)
    p_fit.add_argument("--threads", type=int, default=threads_default)
    p_fit.add_argument("--output-model")
    p_fit.add_argument("--output-codes")
    p_fit.add_argument("--history")
    _add_input_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_enc = sub.add_parser("encode", help="code new data against a model")
    p_enc.add_argument("--model", required=True)
    p_enc.add_argument("--input", required=True)
    p_enc.add_argument("--output-codes", required=True)
    p_enc.add_argument("--threads", type=int, default=threads_default)
    _add_input_flags(p_enc)
    p_enc.set_defaults(func=cmd_encode)

    p_cls = sub.add_parser("classify", help="nearest-archetype-hull labels")
    p_cls.add_argument("--train-dir",
                       help="directory with one matrix file per class")
    p_cls.add_argument("--model", action="append", default=[],
                       metavar="LABEL=PATH",
                       help="use a saved model's archetypes for a class")
    p_cls.add_argument("--test", required=True)
    p_cls.add_argument("-p", type=int, default=None, dest="p")
    p_cls.add_argument("--all", action="store_true",
                       help="use every training point as an archetype")
    p_cls.add_argument("--labels", help="true labels, one per line")
    p_cls.add_argument("--normalize", action="store_true")
    p_cls.add_argument("--seed", type=int, default=0)
    p_cls.add_argument("--tol", type=float, default=1e-9)
    _add_input_flags(p_cls)
    p_cls.set_defaults(func=cmd_classify)

    p_bench = sub.add_parser("bench", help="per-iteration timing grid")
    p_bench.add_argument("--n-list", required=True)
    p_bench.add_argument("--p-list", required=True)
    p_bench.add_argument("--m", type=int, required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("-t", "--iterations", type=int, default=4)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--output")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "classify" and bool(args.train_dir) == bool(args.model):
        parser.error("classify needs exactly one of --train-dir or --model")
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ParseError, DataError, DimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, AakitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
