"""``gnnlab`` command line: generate, train, sweep, distance, simulate, report.

Exit codes: 0 success, 1 bad input, 2 training diverged. Errors go to stderr
prefixed with ``error:``.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from gnnlab import __version__
from gnnlab.config import DEFAULTS, apply_seed_override, load_config
from gnnlab.distance import delta, generalization_bound
from gnnlab.errors import DivergenceError, InputError
from gnnlab.generators import generate_er, generate_random_regular, generate_sbm, split_train_test
from gnnlab.graphio import load_graph, save_graph
from gnnlab.metrics import read_metric_rows
from gnnlab.model import CE, MSE, init_gaussian
from gnnlab.report import charts, format_summary, summarize
from gnnlab.sampling import SamplerConfig
from gnnlab.simulator import HardwareProfile, estimate
from gnnlab.sweep import build_graph, config_from_manifest, model_for, run_sweep, train_config, write_outputs
from gnnlab.trainer import ModelClock, TrainConfig, train

log = logging.getLogger("gnnlab")

DISTANCE_COLUMNS = ["beta", "b", "seed", "delta_wasserstein", "sum_delta_full_mini", "pac_bayes_bound"]
SIMULATE_COLUMNS = ["mode", "b", "beta", "n", "C", "H", "t_cal", "t_comm", "total_s"]


def _intlist(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def cmd_generate(args):
    if args.kind == "sbm":
        if not args.blocks:
            raise InputError("sbm needs --blocks")
        graph = generate_sbm(args.blocks, args.intra_p, args.inter_p, args.features, args.seed)
    elif args.kind == "er":
        graph = generate_er(args.n, args.p, args.features, args.seed)
    else:
        graph = generate_random_regular(args.n, args.d, args.features, args.seed)
    if args.train_fraction is not None:
        graph = split_train_test(graph, args.train_fraction, args.split_seed)
    save_graph(graph, args.out)
    log.info("wrote %s (n=%d, edges=%d)", args.out, graph.n, graph.num_edges)
    return 0


def _load_split_graph(path, train_fraction, split_seed):
    graph = load_graph(path)
    if graph.n_test == 0 and train_fraction is not None:
        graph = split_train_test(graph, train_fraction, split_seed)
    return graph


def cmd_train(args):
    if args.config:
        cfg = apply_seed_override(load_config(args.config))
        graph, _ = build_graph(cfg["dataset"], os.path.dirname(os.path.abspath(args.config)))
        sweep = cfg["sweep"]
        b = args.b if args.b is not None else (sweep["b"][0] if "b" in sweep else None)
        beta = args.beta if args.beta is not None else (sweep["beta"][0] if "beta" in sweep else None)
        seed = args.seed if args.seed is not None else sweep["seeds"][0]
        eta = args.eta if args.eta is not None else (sweep["eta"][0] if "eta" in sweep else cfg["train"]["eta"])
        if args.max_iters is not None:
            cfg["train"]["max_iters"] = args.max_iters
        if args.loss is not None:
            cfg["model"]["loss"] = args.loss
    elif args.graph:
        graph = _load_split_graph(args.graph, args.train_fraction, args.split_seed)
        cfg = {section: dict(values) for section, values in DEFAULTS.items()}
        cfg["model"]["loss"] = args.loss or MSE
        cfg["model"]["kappa"] = args.kappa
        if args.max_iters is not None:
            cfg["train"]["max_iters"] = args.max_iters
        b, beta = args.b, args.beta
        env_seed = apply_seed_override({"sweep": {"seeds": [0]}})["sweep"]["seeds"][0]
        seed = args.seed if args.seed is not None else env_seed
        eta = args.eta if args.eta is not None else "theoretical"
    else:
        raise InputError("train needs --config or --graph")
    if args.eval_every is not None:
        cfg["train"]["eval_every"] = args.eval_every

    if args.mode == "full" or (args.mode is None and b is None and beta is None):
        sampler = None
    else:
        sampler = SamplerConfig(b if b is not None else graph.n_train,
                                beta if beta is not None else graph.d_max, seed,
                                cfg["train"]["nested"], cfg["train"]["normalization"])
    params = model_for(cfg, graph, seed)
    traj = train(graph, params, train_config(cfg, sampler, eta))
    _write_text(args.out, traj.to_csv())
    if args.weights_out:
        np.save(args.weights_out, traj.final_W)
    return 0


def cmd_sweep(args):
    if args.manifest:
        with open(args.manifest, encoding="utf-8") as fh:
            try:
                manifest = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{args.manifest}: invalid JSON ({exc})") from None
        cfg = config_from_manifest(manifest)
        base = "."
    elif args.config:
        cfg = apply_seed_override(load_config(args.config))
        base = os.path.dirname(os.path.abspath(args.config))
    else:
        raise InputError("sweep needs --config or --manifest")
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    metrics_csv, trajectories, manifest = run_sweep(cfg, jobs=args.jobs, base_dir=base)
    write_outputs(args.out, metrics_csv, trajectories, manifest)
    if manifest["diverged"]:
        for d in manifest["diverged"]:
            print(f"error: run {d['run_id']} diverged at iteration {d['iteration']}", file=sys.stderr)
        return 2
    return 0


def cmd_distance(args):
    graph = _load_split_graph(args.graph, args.train_fraction, args.split_seed)
    if graph.n_test == 0:
        raise InputError("the graph has no test split; pass --train-fraction")
    h = args.h if args.h is not None else graph.num_classes
    if args.weights:
        W = np.load(args.weights)
    else:
        W = init_gaussian(h, graph.r, args.kappa, args.seeds[0]).W
    rows = []
    for beta in args.beta:
        for b in args.b:
            for seed in args.seeds:
                SamplerConfig(b, beta, seed).validate(graph)
                value, _, cost = delta(graph, beta, b, h, args.c_delta, seed, args.draws)
                bound = generalization_bound(args.train_loss, W, args.kappa, h, graph.n_train, value,
                                             args.c_u, args.c_g)
                rows.append([beta, b, seed, float(value), float(cost.delta_full_mini.sum()), float(bound)])
    _write_text(args.out, _csv_text(DISTANCE_COLUMNS, rows))
    return 0


def cmd_simulate(args):
    profile = HardwareProfile(args.compute, args.bandwidth)
    modes = ["full", "mini"] if args.mode == "both" else [args.mode]
    rows = []
    for mode in modes:
        est = estimate(args.b, args.beta, args.iters, profile, mode)
        rows.append([mode, args.b, args.beta, args.iters, float(args.compute), float(args.bandwidth),
                     est.t_cal, est.t_comm, est.total])
    _write_text(args.out, _csv_text(SIMULATE_COLUMNS, rows))
    return 0


def cmd_report(args):
    with open(args.metrics, encoding="utf-8") as fh:
        rows = read_metric_rows(fh.read())
    if not rows:
        raise InputError(f"{args.metrics} has no rows")
    summary = summarize(rows)
    text = format_summary(summary)
    os.makedirs(args.out, exist_ok=True)
    _write_text(os.path.join(args.out, "summary.csv"), text)
    for name, svg in charts(summary).items():
        _write_text(os.path.join(args.out, name), svg)
    sys.stdout.write(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gnnlab", description="Mini-batch vs full-graph GNN training lab.")
    p.add_argument("--version", action="version", version=f"gnnlab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic graph file")
    g.add_argument("kind", choices=["sbm", "er", "regular"])
    g.add_argument("--out", required=True)
    g.add_argument("--blocks", type=_intlist)
    g.add_argument("--intra-p", type=float, default=0.3)
    g.add_argument("--inter-p", type=float, default=0.02)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--p", type=float, default=0.05)
    g.add_argument("--d", type=int, default=4)
    g.add_argument("--features", type=int, default=16)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--train-fraction", type=float)
    g.add_argument("--split-seed", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train one model and write its trajectory CSV")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--graph")
    t.add_argument("--out", help="trajectory CSV (default: stdout)")
    t.add_argument("--weights-out", help="save the final weights as .npy")
    t.add_argument("--mode", choices=["full", "mini"])
    t.add_argument("--loss", choices=[MSE, CE])
    t.add_argument("--b", type=int)
    t.add_argument("--beta", type=int)
    t.add_argument("--eta", type=lambda s: s if s == "theoretical" else float(s))
    t.add_argument("--kappa", type=float, default=0.1)
    t.add_argument("--max-iters", type=int)
    t.add_argument("--eval-every", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--train-fraction", type=float, default=0.8)
    t.add_argument("--split-seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="run a (b, beta, eta, seed) grid")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--manifest", help="replay a previous sweep")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("distance", help="Delta(beta, b) and the generalization bound")
    d.add_argument("--graph", required=True)
    d.add_argument("--beta", type=_intlist, required=True)
    d.add_argument("--b", type=_intlist, required=True)
    d.add_argument("--seeds", type=_intlist, default=[0])
    d.add_argument("--h", type=int)
    d.add_argument("--c-delta", type=float, default=1.0)
    d.add_argument("--c-u", type=float, default=1.0)
    d.add_argument("--c-g", type=float, default=0.05)
    d.add_argument("--kappa", type=float, default=0.1)
    d.add_argument("--train-loss", type=float, default=0.0)
    d.add_argument("--weights", help=".npy weights for the KL term (default: fresh init)")
    d.add_argument("--draws", type=int, default=1)
    d.add_argument("--train-fraction", type=float, default=0.8)
    d.add_argument("--split-seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_distance)

    m = sub.add_parser("simulate", help="analytic time estimate")
    m.add_argument("--b", type=int, required=True)
    m.add_argument("--beta", type=int, required=True)
    m.add_argument("--iters", type=int, required=True)
    m.add_argument("--compute", type=float, required=True)
    m.add_argument("--bandwidth", type=float, required=True)
    m.add_argument("--mode", choices=["full", "mini", "both"], default="both")
    m.add_argument("--out")
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="summary table and SVG charts from metrics.csv")
    r.add_argument("metrics")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
