"""Command-line entry point: ``epirl <command> ...``.

Results are printed (or written with ``--out``) as JSON. Any failure exits
with status 1 and a JSON object ``{"error": ..., "message": ...}`` on stderr.
"""

import argparse
import json
import sys
from pathlib import Path

from .agent.training import TrainConfig, train
from .data import load_dataset, load_simulation_config, simulate_dataset, write_dataset
from .exceptions import EpirlError
from .harness import compare_baseline, recall_at_k, run_trials
from .report import dump_json, dumps_json, write_trials_csv
from .reward import reward
from .search import exhaustive_topk


def _split(text):
    return [t for t in text.replace(";", ",").split(",") if t.strip()]


def _emit(obj, out):
    if out:
        dump_json(obj, out)
    else:
        print(dumps_json(obj))


def _train_config(args, **overrides):
    overrides.setdefault("seed", args.seed)
    if args.config:
        return TrainConfig.from_file(args.config, **overrides)
    return TrainConfig(**{k: v for k, v in overrides.items() if v is not None})


def _truth(data, text):
    return data.resolve(_split(text)) if text else None


def cmd_simulate(args):
    if not args.config:
        raise EpirlError("simulate needs --config")
    model, n_case, n_control, max_draws = load_simulation_config(args.config)
    if args.seed is not None:
        model.seed = args.seed
    data = simulate_dataset(model, n_case, n_control, max_draws=max_draws)
    if not args.out:
        raise EpirlError("simulate needs --out for the dataset file")
    write_dataset(data, args.out)
    info = {
        "path": str(args.out),
        "n_rows": data.n_rows,
        "n_snps": data.n_snps,
        "t1": data.t1,
        "t2": data.t2,
        "seed": model.seed,
        "interacting": list(model.interacting_snps),
        "interacting_names": [data.snp_names[j] for j in model.interacting_snps],
        "prevalence": model.prevalence,
        "heritability": model.heritability,
    }
    print(dumps_json(info))


def cmd_reward(args):
    data = load_dataset(args.dataset)
    snps = data.resolve(_split(args.snps))
    rv = reward(data, snps)
    _emit({"snps": list(snps), "names": [data.snp_names[j] for j in snps],
           **rv._asdict()}, args.out)


def cmd_exhaustive(args):
    data = load_dataset(args.dataset)
    res = exhaustive_topk(data, args.order, args.top, n_jobs=args.threads)
    _emit(res.to_dict(data), args.out)


def cmd_train(args):
    data = load_dataset(args.dataset)
    cfg = _train_config(args, max_iterations=args.max_iter)
    truth = _truth(data, args.ground_truth)
    sink = open(args.trajectory, "w") if args.trajectory else None
    try:
        on_step = (lambda rec: sink.write(json.dumps(rec.to_dict()) + "\n")) if sink else None
        report = train(data, cfg, ground_truth=truth, on_step=on_step)
    finally:
        if sink:
            sink.close()
    out = report.to_dict(include_timing=True)
    out["config"] = cfg.to_dict()
    _emit(out, args.out)


def cmd_trials(args):
    data = load_dataset(args.dataset)
    cfg = _train_config(args, max_iterations=args.max_iter)
    base = cfg.seed
    seeds = [int(s) for s in _split(args.seeds)] if args.seeds else list(range(base, base + args.trials))
    result = run_trials(data, cfg, seeds, ground_truth=_truth(data, args.ground_truth),
                        n_jobs=args.threads)
    report = result.to_dict()
    report["config"] = cfg.to_dict()
    report["seeds"] = seeds
    _emit(report, args.out)
    if args.out:
        out = Path(args.out)
        write_trials_csv(result.reports, out.with_suffix(".csv"))
        dump_json(result.timing, out.with_suffix(".timing.json"))


def cmd_recall(args):
    if len(args.truth) != len(args.datasets):
        raise EpirlError(
            f"--truth given {len(args.truth)} times for {len(args.datasets)} datasets"
        )
    datasets = [load_dataset(p) for p in args.datasets]
    truths = [d.resolve(_split(t)) for d, t in zip(datasets, args.truth)]
    cfg = _train_config(args, max_iterations=args.max_iter)
    rep = recall_at_k(datasets, truths, cfg, args.top, backend=args.backend,
                      order=args.order, n_jobs=args.threads)
    _emit(rep.to_dict(), args.out)


def cmd_compare(args):
    data = load_dataset(args.dataset)
    cfg = _train_config(args, max_iterations=args.max_iter)
    seeds = list(range(cfg.seed, cfg.seed + args.trials))
    record = compare_baseline(data, cfg, order=args.order,
                              ground_truth=_truth(data, args.ground_truth),
                              seeds=seeds, n_jobs=args.threads)
    _emit(record, args.out)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--out", help="write JSON here instead of stdout")

    parser = argparse.ArgumentParser(prog="epirl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a planted dataset")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reward", parents=[common], help="score one SNP set")
    p.add_argument("dataset")
    p.add_argument("--snps", required=True, help="comma-separated names or indices")
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("exhaustive", parents=[common], help="scan all k-combinations")
    p.add_argument("dataset")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=cmd_exhaustive)

    def agent_args(p):
        p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("train", parents=[common], help="train one agent")
    p.add_argument("dataset")
    agent_args(p)
    p.add_argument("--ground-truth", help="stop at the first exact hit of this set")
    p.add_argument("--trajectory", help="stream step records as JSON lines")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("trials", parents=[common], help="repeat training over seeds")
    p.add_argument("dataset")
    agent_args(p)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seeds", help="explicit comma-separated seed list")
    p.add_argument("--ground-truth")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("recall", parents=[common], help="R@K over several datasets")
    p.add_argument("datasets", nargs="+")
    agent_args(p)
    p.add_argument("--truth", action="append", required=True,
                   help="ground-truth set, once per dataset in order")
    p.add_argument("--top", type=int, required=True, help="K")
    p.add_argument("--backend", choices=["agent", "exhaustive"], default="agent")
    p.add_argument("--order", type=int, default=2)
    p.set_defaults(func=cmd_recall)

    p = sub.add_parser("compare", parents=[common], help="agent vs exhaustive timing")
    p.add_argument("dataset")
    agent_args(p)
    p.add_argument("--ground-truth")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--trials", type=int, default=1)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (EpirlError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
