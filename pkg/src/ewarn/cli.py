"""Command line entry point.

Exit codes: 0 success, 1 computation error, 2 usage error.
"""

import argparse
import os
import sys

from .exceptions import EwarnError
from .network import TrainParams
from .pipeline import STAGES, PipelineConfig, run_stage


def build_parser():
    p = argparse.ArgumentParser(
        prog="ewarn",
        description="Public-opinion early warning: screening, grey relational grading, "
                    "LM-trained warning network and interpretation.",
    )
    p.add_argument("--stage", default="pipeline", choices=STAGES,
                   help="stage to run (default: the whole pipeline)")
    p.add_argument("--input", help="input CSV; 'fixture:<name>' selects a bundled table")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--labels", help="label,level CSV (train/predict/explain)")
    p.add_argument("--model", help="model.json (predict/explain)")
    p.add_argument("--levels", help="where grade writes the label,level CSV")
    p.add_argument("--rho", type=float, default=0.5, help="grey resolution factor")
    p.add_argument("--corr-threshold", type=float, default=0.85)
    p.add_argument("--var-threshold", type=float, default=0.8)
    p.add_argument("--load-threshold", type=float, default=0.8)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--hidden", type=int, default=6)
    p.add_argument("--split", type=int, default=25, help="number of leading training slices")
    p.add_argument("--seed", type=int, default=None, help="falls back to $EWARN_SEED, then 0")
    p.add_argument("--goal-mse", type=float, default=1e-5)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--explain-slice", help="slice label to explain (default: last)")
    return p


def _seed(arg):
    if arg is not None:
        return arg
    env = os.environ.get("EWARN_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"ewarn: error: EWARN_SEED must be an integer, got {env!r}") from None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        seed = _seed(args.seed)
        config = PipelineConfig(
            input=args.input, out_dir=args.out_dir, rho=args.rho,
            corr_threshold=args.corr_threshold, var_threshold=args.var_threshold,
            load_threshold=args.load_threshold, k=args.k, split=args.split, hidden=args.hidden,
            seed=seed, labels=args.labels, model=args.model, levels=args.levels,
            train=TrainParams(goal_mse=args.goal_mse, max_epochs=args.max_epochs, seed=seed),
            explain_slice=args.explain_slice,
        )
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"ewarn: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return 2

    try:
        run_stage(args.stage, config)
    except FileNotFoundError as exc:
        parser.print_usage(sys.stderr)
        print(f"ewarn: error: {exc}", file=sys.stderr)
        return 2
    except (EwarnError, ValueError, ArithmeticError) as exc:
        print(f"ewarn: {args.stage} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
