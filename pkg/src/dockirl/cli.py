"""Command-line pipeline: dataset generation, training, evaluation,
map rendering, and oracle self-checks.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

import argparse
import os
import sys


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser():
    p = _Parser(prog="dockirl",
                description="MaxEnt deep IRL docking pipeline")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate expert demonstrations")
    g.add_argument("--train", type=int, required=True, metavar="N")
    g.add_argument("--test", type=int, required=True, metavar="M")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--iters", type=int, default=10000,
                   help="RRT* iterations per plan")

    t = sub.add_parser("train", help="train the reward network")
    t.add_argument("--data", required=True)
    t.add_argument("--config", default=None,
                   help="key=value config file; defaults used if omitted")
    t.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    e.add_argument("--data", required=True)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config", default=None)
    e.add_argument("--out", required=True)

    r = sub.add_parser("render", help="render a CSV map as 8-bit PGM")
    r.add_argument("--input", required=True)
    r.add_argument("--out", required=True)

    sub.add_parser("oracle-check", help="run the brute-force / finite-difference suites")
    return p


def _cmd_gen_data(args):
    from .dataset import generate_dataset
    def progress(done, total):
        if done % 25 == 0 or done == total:
            print(f"generated {done}/{total} records")
    generate_dataset(args.train, args.test, args.seed, out_path=args.out,
                     max_iters=args.iters, progress=progress)
    print(f"wrote {args.train + args.test} records to {args.out}")
    return 0


def _load_config(path):
    from .trainer import TrainConfig, config_from_file
    return TrainConfig() if path is None else config_from_file(path)


def _cmd_train(args):
    from .dataset import load_dataset
    from .trainer import train
    dataset = load_dataset(args.data)
    config = _load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    train(dataset, config, out_dir=args.out, log=print)
    print(f"checkpoints and report written to {args.out}")
    return 0


def _cmd_eval(args):
    import json

    from .dataset import load_dataset
    from .rewardnet import load_checkpoint
    from .trainer import evaluate
    dataset = load_dataset(args.data)
    config = _load_config(args.config)
    params = load_checkpoint(args.checkpoint)
    os.makedirs(args.out, exist_ok=True)
    results = evaluate(params, dataset, config, out_dir=args.out)
    rows = [{k: r[k] for k in ("record", "t_index", "nll", "svf_l1",
                               "terminal", "goal_mass")} for r in results]
    with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as f:
        json.dump(rows, f, indent=1)
    print(f"evaluated {len(rows)} samples; outputs in {args.out}")
    return 0


def _cmd_render(args):
    from .io import read_csv, write_pgm
    write_pgm(read_csv(args.input), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_oracle_check(_args):
    from .oracles import run_all
    return 0 if run_all() else 2


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "render": _cmd_render,
    "oracle-check": _cmd_oracle_check,
}


def run(argv):
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # domain failures (planning, tracking, stalls)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
