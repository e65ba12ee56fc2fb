"""Command-line entry point.

Exit status: 0 on success, 1 when inputs fail validation, 2 on any other
error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ValidationError

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="electrolyte-sa",
                description="Electrolyte formulation property prediction from SA features.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("pretrain", help="pretrain the denoising model on a SMILES corpus")
    s.add_argument("--corpus", required=True)
    s.add_argument("--config", help="JSON with 'model' and 'training' sections")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("embed", help="print the representation of one molecule")
    s.add_argument("--model", required=True)
    s.add_argument("--smiles", required=True)

    s = sub.add_parser("train", help="fit the regressor on a formulation dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--split-seed", type=int, default=0)
    s.add_argument("--search-trials", type=int, default=50)
    s.add_argument("--search-seed", type=int, default=0)
    s.add_argument("--search-folds", type=int, default=5)
    s.add_argument("--log10-target", action="store_true")

    for name, text in (("predict", "predict targets for formulations"),
                       ("evaluate", "score a regressor on a labelled dataset")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--model", required=True)
        s.add_argument("--regressor", required=True)
        s.add_argument("--dataset", required=True)
        s.add_argument("--out", required=True)
        if name == "evaluate":
            s.add_argument("--log10-target", action="store_true")
    return p


def _run(args) -> None:
    from . import pipeline
    from .transformer import Embedder, TrainConfig

    if args.command == "pretrain":
        model_cfg, train_cfg = pipeline.read_run_config(args.config)
        train_cfg["seed"] = args.seed
        try:
            tc = TrainConfig(**train_cfg).validate()
        except TypeError as exc:
            raise ValidationError(f"bad training config: {exc}") from exc
        out = pipeline.run_pretrain(args.corpus, model_cfg, tc, args.out)
        print(f"wrote model bundle to {out}")
    elif args.command == "embed":
        vec = Embedder.from_bundle(args.model)(args.smiles)
        print(" ".join(repr(float(v)) for v in vec))
    elif args.command == "train":
        search = pipeline.SearchSettings(args.search_trials, args.search_folds, args.search_seed)
        report = pipeline.run_train(args.model, args.dataset, args.split_seed, search, args.out,
                                    log10_target=args.log10_target)
        print(f"test RMSE {report['rmse_rounded']:.3f} on {report['n']} formulations; "
              f"artifacts in {args.out}")
    elif args.command == "predict":
        preds = pipeline.run_predict(args.model, args.regressor, args.dataset, args.out)
        print(f"wrote {len(preds)} predictions to {args.out}")
    elif args.command == "evaluate":
        report = pipeline.evaluate(args.model, args.regressor, args.dataset, args.out,
                                   log10_target=args.log10_target)
        print(f"RMSE {report['rmse_rounded']:.3f} on {report['n']} formulations")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:       # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - the CLI reports, never tracebacks
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
