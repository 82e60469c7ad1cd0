"""Command-line entry point: ``gecc <subcommand> ...``.

Exit codes: 0 success, 1 internal error, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .clustering import ClusterConfig, ConfigurationError
from .condense import CondensedGraph, condense
from .evaluation import (
    BASELINES,
    bounds_sweep,
    condensed_accuracy,
    coreset_baselines,
    write_bounds_csv,
)
from .evolve import run_stream
from .graph import GraphFormatError, load_dataset, read_splits
from .propagation import DEFAULT_ALPHAS, PropagationConfig, propagate_graph
from .report import summarize_files
from .synth import SyntheticSpec, make_sbm, write_dataset

DATA_FILES = {
    "graph": "graph.edges",
    "features": "features.csv",
    "labels": "labels.txt",
    "splits": "splits.json",
    "stream": "stream.json",
}


@dataclass
class RunConfig:
    data: str | None = None
    graph: str | None = None
    features: str | None = None
    labels: str | None = None
    splits: str | None = None
    stream: str | None = None
    K: int = 2
    alphas: list = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    r: float = 0.5
    mode: str = "hard"
    fuzziness: float = 1.1
    repeats: int = 10
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-8
    balance_weight: float = 1.0
    seed_law: str = "quartic"
    epsilon: float = 1e-6
    warm_start: bool = True
    out_dir: str | None = None

    def path(self, name):
        explicit = getattr(self, name)
        if explicit:
            return Path(explicit)
        if self.data:
            return Path(self.data) / DATA_FILES[name]
        return None

    def propagation(self):
        return PropagationConfig(int(self.K), tuple(self.alphas))

    def clustering(self):
        return ClusterConfig(
            r=self.r, mode=self.mode, fuzziness=self.fuzziness, repeats=self.repeats,
            max_iter=self.max_iter, tol=self.tol, seed=self.seed,
            balance_weight=self.balance_weight, seed_law=self.seed_law,
        )

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, raw):
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def load_data(self, need_stream=False):
        paths = {name: self.path(name) for name in DATA_FILES}
        for name in ("graph", "features", "labels", "splits"):
            if paths[name] is None:
                raise ConfigurationError(f"no path for {name}; pass --data DIR or --{name}")
        stream = paths["stream"]
        if need_stream:
            if stream is None or not stream.exists():
                raise FileNotFoundError(f"no such file: {stream}")
        elif stream is not None and not stream.exists():
            stream = None
        return load_dataset(paths["graph"], paths["features"], paths["labels"],
                            paths["splits"], stream)


def _bool(text):
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _alphas(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from None


def _add_data_args(p):
    g = p.add_argument_group("data")
    g.add_argument("--config", help="JSON run config; explicit flags override it")
    g.add_argument("--data", help="directory holding graph.edges, features.csv, ...")
    for name in ("graph", "features", "labels", "splits"):
        g.add_argument(f"--{name}")


def _add_prop_args(p):
    g = p.add_argument_group("propagation")
    g.add_argument("--K", type=int)
    g.add_argument("--alphas", type=_alphas, help="a0,a1,...,aK")


def _add_cluster_args(p):
    g = p.add_argument_group("clustering")
    g.add_argument("--r", type=float, help="reduction rate in (0, 1]")
    g.add_argument("--mode", choices=["hard", "fuzzy"])
    g.add_argument("--fuzziness", type=float)
    g.add_argument("--repeats", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--balance-weight", dest="balance_weight", type=float)
    g.add_argument("--seed-law", dest="seed_law", choices=["quartic", "classic"])
    g.add_argument("--epsilon", type=float, help="ridge term of the downstream model")


def build_parser():
    parser = argparse.ArgumentParser(prog="gecc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("condense", help="condense the training split of a graph")
    _add_data_args(p)
    _add_prop_args(p)
    _add_cluster_args(p)
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("evolve", help="condense every snapshot of a batch stream")
    _add_data_args(p)
    _add_prop_args(p)
    _add_cluster_args(p)
    p.add_argument("--stream")
    p.add_argument("--warm-start", dest="warm_start", type=_bool)
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("eval", help="test accuracy of a linear model trained on a condensed graph")
    _add_data_args(p)
    _add_prop_args(p)
    p.add_argument("--condensed", required=True)
    p.add_argument("--test-split", dest="test_split")
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("bounds", help="random-instance sweep of the error bounds")
    p.add_argument("--theorem", choices=["1", "2", "3", "all"], default="all")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="bounds.csv")

    p = sub.add_parser("baseline", help="coreset selection baseline")
    _add_data_args(p)
    _add_prop_args(p)
    p.add_argument("--method", choices=BASELINES, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("synth", help="write a stochastic-block-model dataset")
    spec_defaults = SyntheticSpec()
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=spec_defaults.classes)
    p.add_argument("--nodes-per-class", type=int, default=spec_defaults.nodes_per_class)
    p.add_argument("--p-in", type=float, default=spec_defaults.p_in)
    p.add_argument("--p-out", type=float, default=spec_defaults.p_out)
    p.add_argument("--dim", type=int, default=spec_defaults.dim)
    p.add_argument("--sigma", type=float, default=spec_defaults.sigma)
    p.add_argument("--mean-scale", type=float, default=spec_defaults.mean_scale)
    p.add_argument("--subclusters", type=int, default=spec_defaults.subclusters)
    p.add_argument("--subcluster-spread", type=float, default=spec_defaults.subcluster_spread)
    p.add_argument("--batches", type=int, default=spec_defaults.batches)
    p.add_argument("--mode", choices=["transductive", "inductive"], default=spec_defaults.mode)
    p.add_argument("--split", type=_alphas, default=list(spec_defaults.split),
                   help="train,val,test fractions")

    p = sub.add_parser("report", help="summarize ledgers and bound sweeps")
    p.add_argument("--ledger", action="append", default=[])
    p.add_argument("--bounds", action="append", default=[])
    p.add_argument("--out-dir", dest="out_dir", default=".")
    return parser


def resolve_config(args):
    """Defaults, then ``--config`` file, then explicitly given flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"no such file: {path}")
        cfg = RunConfig.from_json(path.read_text())
    names = {f.name for f in fields(RunConfig)}
    for key, value in vars(args).items():
        if key in names and value is not None:
            setattr(cfg, key, value)
    return cfg


def _require_out(cfg):
    if not cfg.out_dir:
        raise ConfigurationError("--out-dir is required")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_condense(cfg):
    data = cfg.load_data()
    out = _require_out(cfg)
    condensed, report = condense(data.graph, data.features, data.labels, cfg.propagation(),
                                 cfg.clustering())
    condensed.write(out)
    report.write_csv(out / "report.csv")
    (out / "config.json").write_text(cfg.to_json())
    print(json.dumps({"condensed_nodes": condensed.num_nodes, "J": report.J,
                      "out_dir": str(out)}))
    return 0


def cmd_evolve(cfg):
    data = cfg.load_data(need_stream=True)
    out = _require_out(cfg)
    state, results = run_stream(data, data.stream, cfg.propagation(), cfg.clustering(),
                                warm_start=cfg.warm_start, out_dir=out)
    (out / "config.json").write_text(cfg.to_json())
    for res in results:
        print(json.dumps({"step": res.step, "condensed_nodes": res.condensed.num_nodes,
                          "warm": res.warm, "test_accuracy": res.accuracy}))
    return 0


def cmd_eval(cfg, args):
    cdir = Path(args.condensed)
    if not (cdir / "condensed_features.csv").exists():
        raise FileNotFoundError(f"no condensed graph in {cdir}")
    echoed = cdir / "config.json"
    if echoed.exists():
        base = RunConfig.from_json(echoed.read_text())
        # flags given on this command line win over the echoed run config
        for key, value in vars(args).items():
            if key in {f.name for f in fields(RunConfig)} and value is not None:
                setattr(base, key, value)
        cfg = base
    data = cfg.load_data()
    test = data.labels.test_idx
    if args.test_split:
        test = read_splits(args.test_split)["test"]
    condensed = CondensedGraph.read(cdir)
    F = propagate_graph(data.graph, data.features, cfg.propagation())
    acc = condensed_accuracy(condensed, F[test], data.labels.labels[test],
                             data.labels.num_classes, cfg.epsilon)
    print(json.dumps({"accuracy": acc, "test_nodes": int(test.size),
                      "condensed_nodes": condensed.num_nodes}))
    return 0


def cmd_bounds(args):
    theorems = [1, 2, 3] if args.theorem == "all" else [int(args.theorem)]
    entries = []
    for th in theorems:
        got = bounds_sweep(th, args.instances, args.seed)
        entries.extend(got)
        viol = sum(e.violation for e in got)
        prem = sum(e.premise is False for e in got)
        print(json.dumps({"theorem": th, "instances": len(got), "violations": viol,
                          "premise_failures": prem}))
    write_bounds_csv(entries, args.out)
    return 0


def cmd_baseline(cfg, method):
    data = cfg.load_data()
    out = _require_out(cfg)
    F = propagate_graph(data.graph, data.features, cfg.propagation())
    train = np.sort(data.labels.train_idx)
    condensed = coreset_baselines(F[train], data.labels.labels[train], cfg.r, method,
                                  seed=cfg.seed, node_ids=train,
                                  num_classes=data.labels.num_classes)
    condensed.write(out)
    (out / "config.json").write_text(cfg.to_json())
    print(json.dumps({"method": method, "condensed_nodes": condensed.num_nodes}))
    return 0


def cmd_synth(args):
    spec = SyntheticSpec(
        classes=args.classes, nodes_per_class=args.nodes_per_class, p_in=args.p_in,
        p_out=args.p_out, dim=args.dim, sigma=args.sigma, mean_scale=args.mean_scale,
        subclusters=args.subclusters, subcluster_spread=args.subcluster_spread,
        batches=args.batches, mode=args.mode, split=tuple(args.split),
    )
    out = write_dataset(make_sbm(spec, args.seed), args.out)
    (out / "synth.json").write_text(json.dumps({"seed": args.seed, **spec.to_dict()},
                                               indent=2, sort_keys=True) + "\n")
    print(json.dumps({"out": str(out), "nodes": spec.num_nodes}))
    return 0


def cmd_report(args):
    if not args.ledger and not args.bounds:
        raise ConfigurationError("pass at least one --ledger or --bounds file")
    for p in args.ledger + args.bounds:
        if not Path(p).exists():
            raise FileNotFoundError(f"no such file: {p}")
    summary = summarize_files(args.ledger, args.bounds, args.out_dir)
    print(summary["text"])
    return 0


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bounds":
        return cmd_bounds(args)
    if args.command == "synth":
        return cmd_synth(args)
    if args.command == "report":
        return cmd_report(args)
    cfg = resolve_config(args)
    if args.command == "condense":
        return cmd_condense(cfg)
    if args.command == "evolve":
        if args.stream:
            cfg.stream = args.stream
        return cmd_evolve(cfg)
    if args.command == "eval":
        return cmd_eval(cfg, args)
    if args.command == "baseline":
        return cmd_baseline(cfg, args.method)
    parser.error(f"unknown command {args.command}")


def main(argv=None):
    try:
        return run(argv)
    except (FileNotFoundError, GraphFormatError, ConfigurationError, IndexError,
            ValueError) as exc:
        print(f"gecc: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"gecc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
