"""Command-line interface.

Subcommands: train, label, evaluate, sweep, export, fetch-data, convergence.
Configuration precedence is defaults < --config JSON file < explicit flags;
the effective configuration is echoed into snapshots and result rows.

Exit codes: 0 success, 1 usage/configuration error, 2 data error (missing or
malformed files), 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, config_from_dict
from .data import DEFAULT_BASE_URL, DataError, fetch_dataset, load_split, resolve_data_dir
from .experiment import (
    SCHEMES,
    RunConfig,
    build_network,
    evaluate_network,
    label_network,
    result_keys,
    run_convergence,
    sweep_rows,
    train_network,
)
from .export import (
    export_assignment_map,
    export_filter_map,
    read_results,
    write_curve,
    write_results,
)
from .network import NumericDivergenceError
from .snapshot import SnapshotError, load_snapshot, network_from_snapshot, save_snapshot
from .topology import STRATEGIES, TWO_LEVEL

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGENCE = 3

DEFAULTS = {
    "neurons": 625,
    "inhibition": TWO_LEVEL,
    "p_low": 0.1,
    "p_grow": 1.0,
    "c_min": 0.1,
    "c_max": 20.0,
    "c_inhib": 0.5,
    "sparsity": 0.0,
    "dt": 0.5,
    "seed": 0,
    "epochs": 1,
    "trials": 5,
    "train_limit": None,
    "test_limit": None,
    "voting": None,
    "ngram_n": 2,
    "ngram_learn_limit": 12000,
}

SIM_KEYS = (
    "dt",
    "present_duration",
    "rest_duration",
    "rate_scale",
    "rate_offset",
    "min_spikes",
    "retry_rate_boost",
    "max_retries",
)

RC_EXTRA_KEYS = (
    "n_input",
    "distance_mode",
    "num_classes",
    "vote_all_normalized",
    "ngram_normalized",
)

logger = logging.getLogger("lmsnn")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


class Resolver:
    """Implements defaults < config file < flags for one parsed command."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        self.file: dict = {}
        cfg_path = self.args.get("config")
        if cfg_path:
            try:
                self.file = json.loads(Path(cfg_path).read_text())
            except OSError as exc:
                raise UsageError(f"cannot read config file: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise UsageError(f"config file is not valid JSON: {exc}") from exc
            if not isinstance(self.file, dict):
                raise UsageError("config file must hold a JSON object")

    def get(self, name: str, default=None):
        v = self.args.get(name)
        if v is not None:
            return v
        if name in self.file:
            return self.file[name]
        if name in DEFAULTS and DEFAULTS[name] is not None:
            return DEFAULTS[name]
        return default

    def sim_config(self, seed: int):
        payload = {k: self.file[k] for k in SIM_KEYS if k in self.file}
        if self.args.get("dt") is not None:
            payload["dt"] = self.args["dt"]
        elif "dt" not in payload:
            payload["dt"] = DEFAULTS["dt"]
        payload["seed"] = int(seed)
        if "lif" in self.file:
            payload["lif"] = self.file["lif"]
        if "stdp" in self.file:
            payload["stdp"] = self.file["stdp"]
        return config_from_dict(payload)

    def run_config(self, grid_mode: bool = False, **overrides) -> RunConfig:
        seed = int(self.get("seed"))
        voting = overrides.pop("voting", self.get("voting"))
        if isinstance(voting, str):
            voting = (voting,)
        elif isinstance(voting, list):
            voting = tuple(voting)
        if grid_mode:
            # the grid flags hold comma lists; real values substitute per point
            p_low, c_min, c_max = DEFAULTS["p_low"], DEFAULTS["c_min"], DEFAULTS["c_max"]
        else:
            p_low = float(self.get("p_low"))
            c_min = float(self.get("c_min"))
            c_max = float(self.get("c_max"))
        fields = dict(
            neurons=int(self.get("neurons")),
            strategy=self.get("inhibition"),
            p_low=p_low,
            p_grow=float(self.get("p_grow")),
            c_min=c_min,
            c_max=c_max,
            c_inhib=float(self.get("c_inhib")),
            sparsity=float(self.get("sparsity")),
            epochs=int(self.get("epochs")),
            seed=seed,
            trials=int(self.get("trials")),
            train_limit=_opt_int(self.get("train_limit")),
            test_limit=_opt_int(self.get("test_limit")),
            label_limit=int(self.get("label_limit", 12000)),
            voting=voting,
            ngram_n=int(self.get("ngram_n")),
            ngram_learn_limit=int(self.get("ngram_learn_limit")),
            sim=self.sim_config(seed),
        )
        for key in RC_EXTRA_KEYS:
            if key in self.file:
                fields[key] = self.file[key]
        fields.update(overrides)
        rc = RunConfig(**fields)
        rc.validate()
        return rc


def _opt_int(v):
    return None if v is None else int(v)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc
    if not values:
        raise UsageError(f"empty value list: {text!r}")
    return values


def _add_network_flags(p: argparse.ArgumentParser, grid_lists: bool = False) -> None:
    p.add_argument("--neurons", type=int, help=f"excitatory neuron count, a perfect square (default {DEFAULTS['neurons']})")
    p.add_argument(
        "--inhibition",
        choices=STRATEGIES,
        help=f"lateral inhibition strategy (default {DEFAULTS['inhibition']})",
    )
    if grid_lists:
        p.add_argument("--p-low", help="comma-separated two-level jump fractions to sweep (default 0.1)")
        p.add_argument("--c-min", help="comma-separated low inhibition levels to sweep (default 0.1)")
        p.add_argument("--c-max", help="comma-separated high inhibition levels to sweep (default 20.0)")
    else:
        p.add_argument("--p-low", type=float, help=f"training fraction at the low two-level setting (default {DEFAULTS['p_low']})")
        p.add_argument("--c-min", type=float, help=f"low/starting inhibition level (default {DEFAULTS['c_min']})")
        p.add_argument("--c-max", type=float, help=f"maximum inhibition level (default {DEFAULTS['c_max']})")
    p.add_argument("--p-grow", type=float, help=f"training fraction over which growing inhibition ramps (default {DEFAULTS['p_grow']})")
    p.add_argument("--c-inhib", type=float, help=f"fixed distance multiplier for the increasing strategy (default {DEFAULTS['c_inhib']})")
    p.add_argument("--sparsity", type=float, help=f"fraction of input synapses removed (default {DEFAULTS['sparsity']})")
    p.add_argument("--dt", type=float, help=f"simulation time-step in ms (default {DEFAULTS['dt']})")
    p.add_argument("--seed", type=int, help=f"base RNG seed (default {DEFAULTS['seed']})")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data-dir", help="dataset directory (default: $LMSNN_DATA_DIR or ./data)")
    p.add_argument("--config", help="JSON file of option overrides (flags win over the file)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lmsnn", description="Lattice-map spiking network trainer and evaluator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[], help="train a network and write a snapshot")
    _add_network_flags(p)
    _add_common(p)
    p.add_argument("--train-limit", type=int, help="training examples per epoch (default: full set)")
    p.add_argument("--epochs", type=int, help=f"passes over the training subset (default {DEFAULTS['epochs']})")
    p.add_argument("--out", required=True, help="snapshot output path")
    p.add_argument("--curve-out", help="also record per-example activity and write a convergence curve CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("label", help="assign classes to neurons from a labeling pass")
    _add_common(p)
    p.add_argument("--snapshot", required=True, help="trained snapshot to label")
    p.add_argument("--out", required=True, help="labeled snapshot output path")
    p.add_argument("--train-limit", type=int, help="labeling examples to replay (default 12000)")
    p.add_argument("--ngram-n", type=int, help=f"n-gram order (default {DEFAULTS['ngram_n']})")
    p.add_argument("--ngram-learn-limit", type=int, help=f"examples for the n-gram table (default {DEFAULTS['ngram_learn_limit']})")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("evaluate", help="score a labeled snapshot on the test set")
    _add_common(p)
    p.add_argument("--snapshot", required=True, help="labeled snapshot")
    p.add_argument("--test-limit", type=int, help="test examples to use (default: full set)")
    p.add_argument("--voting", choices=SCHEMES, help="voting scheme (default: all four)")
    p.add_argument("--out", default="results.csv", help="results CSV to append to (default results.csv)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid-sweep two-level parameters with repeated trials")
    _add_network_flags(p, grid_lists=True)
    _add_common(p)
    p.add_argument("--trials", type=int, help=f"independent seeds per grid point (default {DEFAULTS['trials']})")
    p.add_argument("--epochs", type=int, help=f"passes over the training subset (default {DEFAULTS['epochs']})")
    p.add_argument("--train-limit", type=int, help="training examples per run (default: full set)")
    p.add_argument("--test-limit", type=int, help="test examples per run (default: full set)")
    p.add_argument("--voting", choices=SCHEMES, help="scheme recorded for each grid point (default: all)")
    p.add_argument("--out", required=True, help="aggregated results CSV (resumes if it exists)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="export filter or assignment maps from a snapshot")
    p.add_argument("what", choices=("filters", "assignments"))
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", required=True, help="output path (PGM for filters, CSV+PPM for assignments)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("fetch-data", help="download and verify the dataset files")
    p.add_argument("--data-dir", help="target directory (default: $LMSNN_DATA_DIR or ./data)")
    p.add_argument("--url", default=DEFAULT_BASE_URL, help="base URL for the four IDX archives")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("convergence", help="train while estimating accuracy every 250 examples")
    _add_network_flags(p)
    _add_common(p)
    p.add_argument("--train-limit", type=int, help="training examples (default 20000)")
    p.add_argument("--epochs", type=int, help=f"passes over the training subset (default {DEFAULTS['epochs']})")
    p.add_argument("--out", required=True, help="curve CSV output path")
    p.set_defaults(func=cmd_convergence)

    return parser


def _meta_from_snapshot(snap) -> dict:
    if snap.run_meta:
        keys = ("strategy", "k", "p_low", "c_min", "c_max", "sparsity", "epochs", "seed")
        if all(k in snap.run_meta for k in keys):
            return {k: snap.run_meta[k] for k in keys}
    sched = snap.schedule
    return {
        "strategy": sched.strategy,
        "k": snap.k,
        "p_low": sched.p_low,
        "c_min": sched.c_min,
        "c_max": sched.c_max,
        "sparsity": snap.sparsity,
        "epochs": 1,
        "seed": snap.cfg.seed,
    }


def cmd_train(args) -> int:
    res = Resolver(args)
    rc = res.run_config()
    train_ds = load_split("train", args.data_dir).take(rc.train_limit)
    net = build_network(rc, rc.epochs * len(train_ds))
    logger.info("training %d examples x %d epochs on a %dx%d lattice (%s inhibition)",
                len(train_ds), rc.epochs, rc.k, rc.k, rc.strategy)
    records = train_network(net, train_ds, epochs=rc.epochs, collect=bool(args.curve_out))
    if args.curve_out:
        from .evaluation import convergence_curve

        write_curve(convergence_curve(records, num_classes=rc.num_classes), args.curve_out)
        print(f"wrote convergence curve to {args.curve_out}")
    run_meta = {**rc.metadata(), "neurons": rc.neurons, "train_limit": len(train_ds)}
    save_snapshot(net, args.out, run_meta=run_meta)
    print(f"wrote snapshot to {args.out}")
    return EXIT_OK


def cmd_label(args) -> int:
    res = Resolver(args)
    snap = load_snapshot(args.snapshot)
    net = network_from_snapshot(snap)
    label_limit = res.args.get("train_limit")
    if label_limit is None:
        label_limit = int(res.get("label_limit", 12000))
    if label_limit <= 0:
        raise UsageError("labeling requires at least one example (--train-limit > 0)")
    rc = RunConfig(
        neurons=net.n_exc,
        label_limit=label_limit,
        ngram_n=int(res.get("ngram_n")),
        ngram_learn_limit=int(res.get("ngram_learn_limit")),
        num_classes=int(res.get("num_classes", 10)),
    )
    train_ds = load_split("train", args.data_dir)
    model = label_network(net, train_ds, rc)
    save_snapshot(net, args.out, model=model, run_meta=snap.run_meta)
    n_assigned = int(model.assigned.sum())
    print(f"labeled {n_assigned}/{net.n_exc} neurons; wrote snapshot to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    res = Resolver(args)
    snap = load_snapshot(args.snapshot)
    if snap.voting_model is None:
        raise UsageError(f"snapshot {args.snapshot} is unlabeled; run `lmsnn label` on it first")
    net = network_from_snapshot(snap)
    voting = res.get("voting")
    rc = RunConfig(
        neurons=net.n_exc,
        test_limit=_opt_int(res.get("test_limit")),
        voting=(voting,) if isinstance(voting, str) else voting,
        num_classes=snap.voting_model.num_classes,
    )
    for key in ("vote_all_normalized", "ngram_normalized"):
        if key in res.file:
            setattr(rc, key, bool(res.file[key]))
    test_ds = load_split("test", args.data_dir)
    accs = evaluate_network(net, snap.voting_model, test_ds, rc)
    meta = _meta_from_snapshot(snap)
    rows = [{**meta, "scheme": s, "accuracy": a, "stddev": 0.0} for s, a in accs.items()]
    write_results(rows, args.out)
    for s, a in accs.items():
        print(f"{s}: {a:.4f}")
    print(f"appended {len(rows)} row(s) to {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    res = Resolver(args)
    voting = res.get("voting") or "all"
    rc = res.run_config(grid_mode=True, voting=(voting,) if isinstance(voting, str) else tuple(voting))
    p_lows = _float_list(str(res.get("p_low")))
    c_mins = _float_list(str(res.get("c_min")))
    c_maxs = _float_list(str(res.get("c_max")))
    out = Path(args.out)
    existing = result_keys(read_results(out)) if out.exists() else set()
    rows = sweep_rows(rc, p_lows, c_mins, c_maxs, args.data_dir, existing_keys=existing)
    write_results(rows, out)
    print(f"wrote {len(rows)} aggregated row(s) to {out}")
    return EXIT_OK


def cmd_export(args) -> int:
    snap = load_snapshot(args.snapshot)
    if args.what == "filters":
        export_filter_map(snap.weights, snap.k, snap.n_input, args.out)
        print(f"wrote filter map to {args.out}")
    else:
        if snap.voting_model is None:
            raise UsageError(f"snapshot {args.snapshot} is unlabeled; assignments require `lmsnn label`")
        csv_path, ppm_path = export_assignment_map(snap.voting_model, snap.k, args.out)
        print(f"wrote assignment grid to {csv_path} and color map to {ppm_path}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    paths = fetch_dataset(args.data_dir, base_url=args.url)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    res = Resolver(args)
    rc = res.run_config()
    if rc.train_limit is None:
        rc.train_limit = 20000
    train_ds = load_split("train", args.data_dir)
    curve = run_convergence(rc, train_ds)
    write_curve(curve, args.out)
    if len(curve):
        print(f"final smoothed estimate: {curve.smoothed[-1]:.4f}")
    print(f"wrote {len(curve)} estimates to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SnapshotError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericDivergenceError as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
