"""Grid sweeps over (b, beta, eta, seed) with a replayable manifest."""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from gnnlab import __version__
from gnnlab.config import dump_config, parse_config
from gnnlab.errors import DivergenceError, InputError, NotDerivableError
from gnnlab.generators import generate_er, generate_random_regular, generate_sbm, split_train_test
from gnnlab.graphio import content_hash, load_graph
from gnnlab.metrics import (TargetSpec, derive_target_accuracy, derive_target_loss, format_metric_rows,
                            iteration_to, throughput, time_to)
from gnnlab.model import CE, init_gaussian
from gnnlab.sampling import SamplerConfig
from gnnlab.trainer import ModelClock, TrainConfig, train

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunSpec:
    run_id: str
    b: int
    beta: int
    eta: object
    seed: int


def build_graph(dataset, base_dir="."):
    """Load or generate the dataset; returns (graph, provenance dict)."""
    if "path" in dataset:
        path = os.path.abspath(os.path.join(base_dir, dataset["path"]))
        graph = load_graph(path)
        info = {"path": path, "sha": content_hash(path)}
    elif "generator" in dataset:
        kind = dataset["generator"]
        r, seed = dataset["features"], dataset["seed"]
        try:
            if kind == "sbm":
                graph = generate_sbm(dataset["blocks"], dataset["intra_p"], dataset["inter_p"], r, seed)
            elif kind == "er":
                graph = generate_er(dataset["n"], dataset["p"], r, seed)
            else:
                graph = generate_random_regular(dataset["n"], dataset["d"], r, seed)
        except KeyError as exc:
            raise InputError(f"generator {kind!r} needs [dataset] {exc.args[0]}") from None
        info = {"generator": kind}
    else:
        raise InputError("[dataset] needs a path or a generator")
    if "path" not in dataset or not graph.test_mask.any():
        graph = split_train_test(graph, dataset["train_fraction"], dataset["split_seed"])
    return graph, info


def model_for(cfg, graph, seed):
    m = cfg["model"]
    h = m.get("h", graph.num_classes if m["loss"] == "mse" else 2)
    return init_gaussian(h, graph.r, m["kappa"], seed, ce_head=m["loss"] == CE,
                         activation_scale=m["activation_scale"])


def train_config(cfg, sampler, eta):
    t = cfg["train"]
    clock = ModelClock(t["compute"], t["bandwidth"]) if t["clock"] == "model" else None
    return TrainConfig(loss=cfg["model"]["loss"], sampler=sampler, eta=eta, max_iters=t["max_iters"],
                       target_loss=t.get("target_loss"), eval_every=t["eval_every"],
                       loss_every=t["loss_every"], clock=clock)


def plan_runs(cfg, graph):
    sw = cfg["sweep"]
    bs = sw.get("b", [graph.n_train])
    betas = sw.get("beta", [graph.d_max])
    etas = sw.get("eta", [cfg["train"]["eta"]])
    runs = []
    for b in bs:
        for beta in betas:
            for k, eta in enumerate(etas):
                for seed in sw["seeds"]:
                    SamplerConfig(b, beta, seed).validate(graph)
                    runs.append(RunSpec(f"b{b:06d}-beta{beta:04d}-eta{k:02d}-seed{seed}", b, beta, eta, seed))
    return runs


def _execute(args):
    cfg, graph, run = args
    t = cfg["train"]
    sampler = SamplerConfig(run.b, run.beta, run.seed, t["nested"], t["normalization"])
    params = model_for(cfg, graph, run.seed)
    try:
        return run, train(graph, params, train_config(cfg, sampler, run.eta)), None
    except DivergenceError as exc:
        return run, None, exc.iteration


def _target(setting, reference, derive, kind, window):
    if setting != "derived":
        return TargetSpec(kind, float(setting))
    if reference is None:
        return None
    try:
        return derive(reference, window=window)
    except NotDerivableError as exc:
        log.warning("%s target not derivable: %s", kind, exc)
        return None


def run_sweep(cfg, jobs=1, base_dir="."):
    """Execute every grid point; returns (metrics CSV text, trajectories by run id, manifest dict)."""
    graph, dataset_info = build_graph(cfg["dataset"], base_dir)
    if "path" in dataset_info:
        # the manifest must resolve the dataset without knowing the config's directory
        cfg = {section: dict(values) for section, values in cfg.items()}
        cfg["dataset"]["path"] = dataset_info["path"]
    runs = plan_runs(cfg, graph)
    work = [(cfg, graph, run) for run in runs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, work))
    else:
        results = [_execute(w) for w in work]
    results.sort(key=lambda res: res[0].run_id)

    finished = [(run, traj) for run, traj, _ in results if traj is not None]
    reference = min(finished, key=lambda rt: (rt[0].b, rt[0].beta, rt[0].run_id))[1] if finished else None
    mcfg = cfg["metrics"]
    loss_target = _target(mcfg["loss_target"], reference, derive_target_loss, "loss", mcfg["window"])
    acc_target = _target(mcfg["acc_target"], reference, derive_target_accuracy, "accuracy", mcfg["window"])

    rows = []
    diverged = []
    trajectories = {}
    for run, traj, div_iter in results:
        row = {"run_id": run.run_id, "b": run.b, "beta": run.beta, "seed": run.seed,
               "eta": None, "itr2loss": None, "itr2acc": None, "time2acc_s": None, "throughput": None}
        if traj is None:
            diverged.append({"run_id": run.run_id, "iteration": div_iter})
        else:
            trajectories[run.run_id] = traj
            row["eta"] = float(traj.eta)
            if loss_target is not None:
                row["itr2loss"] = iteration_to(traj, loss_target)
            if acc_target is not None:
                row["itr2acc"] = iteration_to(traj, acc_target)
                row["time2acc_s"] = time_to(traj, acc_target)
            row["throughput"] = throughput(traj)
        rows.append(row)

    manifest = {
        "tool": "gnnlab",
        "version": __version__,
        "config": dump_config(cfg),
        "dataset": dataset_info,
        "runs": [{"run_id": r.run_id, "b": r.b, "beta": r.beta, "eta": r.eta, "seed": r.seed} for r in runs],
        "targets": {
            "loss": None if loss_target is None else loss_target.value,
            "accuracy": None if acc_target is None else acc_target.value,
        },
        "diverged": diverged,
    }
    return format_metric_rows(rows), trajectories, manifest


def write_outputs(out_dir, metrics_csv, trajectories, manifest):
    os.makedirs(os.path.join(out_dir, "trajectories"), exist_ok=True)
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metrics_csv)
    for run_id in sorted(trajectories):
        path = os.path.join(out_dir, "trajectories", f"{run_id}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(trajectories[run_id].to_csv())
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_from_manifest(manifest):
    """Resolved config of a previous sweep, after checking the dataset file is unchanged."""
    if manifest.get("tool") != "gnnlab":
        raise InputError("not a gnnlab sweep manifest")
    cfg = parse_config(manifest["config"], source="<manifest>")
    dataset = manifest.get("dataset", {})
    if "path" in dataset:
        if not os.path.exists(dataset["path"]):
            raise InputError(f"dataset {dataset['path']} referenced by the manifest is missing")
        if content_hash(dataset["path"]) != dataset["sha"]:
            raise InputError(f"dataset {dataset['path']} changed since the manifest was written")
    return cfg
