"""Command-line entry point: ``soba datagen | run | sweep | check``.

Sweeps can be described in a TOML file; command-line flags override it::

    [dataset]
    kind = "synnonsep"      # synsep | synnonsep | file
    n = 100000
    k = 9
    d = 400
    seed = 0
    noise_rate = 0.05
    # path = "data.svm"     # for kind = "file"

    [[algorithm]]
    name = "sobadiag"
    a = 1.0
    gammas = [0.001, 0.01, 0.1]
    eta_report = [0.0, 1.0]

    [run]
    seeds = [0, 1, 2]
    checkpoints = "log:100"
    out = "results.csv"
    format = "csv"
    parallel = true
"""

import argparse
import logging
import sys
from dataclasses import replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import checks
from .datasets import DatasetSpec, load_dataset, save_snapshot
from .errors import ConfigurationError, ParseError
from .harness import AlgorithmSpec, Checkpoints, ExperimentConfig, report, run_sweep

log = logging.getLogger("soba")

SYNTHETIC = ("synsep", "synnonsep")


def parse_floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def parse_seeds(text):
    """``"0,3,7"`` or a half-open range ``"0:10"``."""
    text = str(text).strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(v) for v in text.split(",") if v.strip()]


def load_config(path):
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None


def dataset_spec(table, args):
    table = dict(table or {})
    if args.dataset:
        if args.dataset in SYNTHETIC:
            table["kind"] = args.dataset
        else:
            table["kind"], table["path"] = "file", args.dataset
    overrides = {"n": args.samples, "k": args.k, "d": args.d, "seed": args.data_seed,
                 "noise_rate": args.noise_rate, "margin": args.margin, "x_bound": args.x_bound}
    table.update({key: v for key, v in overrides.items() if v is not None})
    if "kind" not in table:
        raise ConfigurationError("no dataset given (use --dataset or a [dataset] table)")
    allowed = set(DatasetSpec.__dataclass_fields__)
    unknown = set(table) - allowed
    if unknown:
        raise ConfigurationError(f"unknown dataset keys {sorted(unknown)}")
    return DatasetSpec(**table)


def algorithm_specs(tables, args):
    specs = [AlgorithmSpec(t["name"], float(t.get("a", 1.0)),
                           tuple(t.get("gammas", [t.get("gamma", 0.01)])),
                           tuple(t.get("eta_report", ())))
             for t in tables or []]
    if args.algo:
        names = [n.strip() for n in args.algo.split(",")]
        gammas = tuple(parse_floats(args.gammas)) if args.gammas else (0.01,)
        specs = [AlgorithmSpec(n, 1.0, gammas) for n in names]
    elif args.gammas:
        specs = [replace(s, gammas=tuple(parse_floats(args.gammas))) for s in specs]
    if args.a is not None:
        specs = [replace(s, a=args.a) for s in specs]
    if not specs:
        raise ConfigurationError("no algorithm given (use --algo or [[algorithm]] tables)")
    return specs


def experiment_config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    run = cfg.get("run", {})
    seeds = parse_seeds(args.seeds) if args.seeds else run.get("seeds", list(range(10)))
    return ExperimentConfig(
        dataset=dataset_spec(cfg.get("dataset"), args),
        algorithms=algorithm_specs(cfg.get("algorithm"), args),
        seeds=[int(s) for s in seeds],
        checkpoints=Checkpoints.parse(args.checkpoints or run.get("checkpoints", "log:100")),
        output_path=args.out or run.get("out"),
        format=args.format or run.get("format", "csv"),
        parallel=args.parallel or bool(run.get("parallel", False)),
    )


def print_summary(result, stream=None):
    stream = stream or sys.stdout
    print(f"{'algorithm':<14} {'gamma':>10} {'mean_error':>11} {'std_error':>10} {'updates':>10}",
          file=stream)
    for row in result.summary:
        gamma = row.gamma if isinstance(row.gamma, str) else f"{row.gamma:.4g}"
        flag = f"  ({row.aborted} aborted)" if row.aborted else ""
        print(f"{row.algorithm:<14} {gamma:>10} {row.mean_error:>11.5f} {row.std_error:>10.5f} "
              f"{row.mean_updates:>10.1f}{flag}", file=stream)


def cmd_datagen(args):
    spec = dataset_spec({}, args)
    if spec.kind not in SYNTHETIC:
        raise ConfigurationError("datagen needs --dataset synsep or synnonsep")
    data = load_dataset(spec)
    save_snapshot(data, args.out)
    print(f"wrote {data.n} examples (k={data.k}, d={data.d}) to {args.out}")
    return 0


def cmd_sweep(args):
    config = experiment_config(args)
    result = run_sweep(config)
    print_summary(result)
    if config.output_path:
        for path in report(result, config.output_path, config.format):
            print(f"wrote {path}")
    return 1 if any(r.aborted for r in result.records) else 0


def cmd_run(args):
    if args.gammas and "," in args.gammas:
        raise ConfigurationError("run takes a single --gamma; use sweep for a grid")
    if not args.seeds:
        args.seeds = "0"
    if len(parse_seeds(args.seeds)) != 1:
        raise ConfigurationError("run takes a single --seeds value; use sweep for several")
    return cmd_sweep(args)


def cmd_check(args):
    results = checks.full_suite() if args.full else checks.quick_suite()
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def _add_data_flags(p):
    p.add_argument("--dataset", help="synsep, synnonsep, or a LibSVM / snapshot file path")
    p.add_argument("--samples", type=int, help="number of examples to generate")
    p.add_argument("--k", type=int, help="number of classes")
    p.add_argument("--d", type=int, help="feature dimension (bias coordinate included)")
    p.add_argument("--noise-rate", type=float)
    p.add_argument("--margin", type=float)
    p.add_argument("--x-bound", type=float, help="rescale features so the largest norm is this")
    p.add_argument("--data-seed", type=int, help="dataset generation seed")


def _add_run_flags(p):
    p.add_argument("--config", help="TOML experiment file")
    p.add_argument("--algo", help="comma-separated: soba, sobadiag, soba-adaptive, banditron, perceptron")
    p.add_argument("--gamma", "--gammas", dest="gammas", help="exploration rate(s), comma-separated")
    p.add_argument("--a", type=float, help="regularization of the initial matrix")
    p.add_argument("--seeds", help="'0,1,2' or a range '0:10'")
    p.add_argument("--checkpoints", help="'log:100' or 'linear:1000'")
    p.add_argument("--out", help="output file")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--parallel", action="store_true",
                   help="run cells in worker processes (count from SOBA_WORKERS or the CPU count)")


def build_parser():
    parser = argparse.ArgumentParser(prog="soba", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="write a synthetic dataset snapshot")
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_datagen)

    for name, func, text in (("run", cmd_run, "run a single (algorithm, gamma, seed) cell"),
                             ("sweep", cmd_sweep, "run an algorithm x gamma x seed grid")):
        p = sub.add_parser(name, help=text)
        _add_data_flags(p)
        _add_run_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("check", help="run the invariant and inequality checks")
    p.add_argument("--full", action="store_true", help="full-size checks instead of the quick ones")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
