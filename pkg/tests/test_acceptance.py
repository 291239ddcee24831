"""Acceptance checks. Each test prints one PASS/FAIL line.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import itertools
import json
import math
import statistics
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest
from oracles import random_rational_instance, transport_by_vertex_enumeration

from gnnlab.cli import main as cli_main
from gnnlab.distance import delta, expected_delta_full_mini
from gnnlab.errors import NotDerivableError
from gnnlab.generators import generate_er, generate_sbm, split_train_test
from gnnlab.graph import normalized_rows_full
from gnnlab.graphio import save_graph
from gnnlab.metrics import derive_target_accuracy, derive_target_loss
from gnnlab.model import ModelParams, ce_loss_and_grad, init_gaussian, mse_loss_and_grad
from gnnlab.sampling import SamplerConfig, sample_minibatch, sample_neighbors
from gnnlab.simulator import HardwareProfile, estimate
from gnnlab.trainer import TrainConfig, Trajectory, theoretical_lr_mse_mini, train
from gnnlab.transport import solve_transport


@contextmanager
def criterion(capsys, number, title):
    detail = {}
    try:
        yield detail
    except BaseException:
        with capsys.disabled():
            print(f"\ncriterion {number:2d} FAIL  {title}  {detail.get('note', '')}".rstrip())
        raise
    with capsys.disabled():
        print(f"\ncriterion {number:2d} PASS  {title}  {detail.get('note', '')}".rstrip())


def test_criterion_01_simulator_worked_values(capsys):
    with criterion(capsys, 1, "simulator reproduces the four worked totals") as out:
        cases = [
            ((1000, 50, 10), 1000.0, "full", 5.1051e5),
            ((10, 10, 10000), 1000.0, "mini", 1.1001e6),
            ((1000, 50, 10), 0.1, "full", 5.61e6),
            ((10, 10, 10000), 0.1, "mini", 2.1e6),
        ]
        start = time.perf_counter()
        totals = [estimate(b, beta, n, HardwareProfile(1.0, H), mode).total
                  for (b, beta, n), H, mode, _ in cases]
        elapsed = time.perf_counter() - start
        errors = [abs(t - c[3]) / c[3] for t, c in zip(totals, cases)]
        out["note"] = f"max rel err {max(errors):.1e}, {elapsed * 1e6:.0f} us"
        assert max(errors) <= 1e-12
        assert elapsed < 1e-3


def _random_instance(rng):
    n = int(rng.integers(2, 11))
    g = generate_er(n, 0.4, int(rng.integers(1, 5)), seed=int(rng.integers(1 << 30)))
    agg = normalized_rows_full(g, np.arange(n)).aggregate(g.features)
    return agg


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def _numeric(loss, W, step=1e-6):
    g = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += step
        Wm[idx] -= step
        g[idx] = (loss(Wp) - loss(Wm)) / (2 * step)
    return g


def test_criterion_02_gradient_oracle(capsys):
    with criterion(capsys, 2, "analytic MSE/CE gradients match central differences") as out:
        rng = np.random.default_rng(2024)
        worst = 0.0
        done = 0
        while done < 50:
            agg = _random_instance(rng)
            h = 2 * int(rng.integers(1, 5))
            W = rng.normal(size=(h, agg.shape[1]))
            if np.min(np.abs(agg @ W.T)) < 1e-3:
                continue
            m = agg.shape[0]
            classes = rng.integers(0, h, m)
            mse = ModelParams(W, 0.1)
            num = _numeric(lambda w: mse_loss_and_grad(agg, mse.with_weights(w), classes)[0], W)
            worst = max(worst, _rel(mse_loss_and_grad(agg, mse, classes)[1], num))

            y = rng.choice([-1.0, 1.0], m)
            v = np.concatenate([np.ones(h // 2), -np.ones(h // 2)])
            ce = ModelParams(W, 0.1, v=v)
            num = _numeric(lambda w: ce_loss_and_grad(agg, ce.with_weights(w), y)[0], W)
            worst = max(worst, _rel(ce_loss_and_grad(agg, ce, y)[1], num))
            done += 1
        out["note"] = f"50 instances, max rel err {worst:.1e}"
        assert worst <= 1e-5


def _sbm200():
    return split_train_test(generate_sbm([100, 100], 0.3, 0.02, 16, seed=1), 0.8, seed=2)


def test_criterion_03_reduction_identity(capsys):
    with criterion(capsys, 3, "b = n_train, beta = d_max reproduces full GD bit for bit") as out:
        g = _sbm200()
        p = init_gaussian(2, 16, 0.1, seed=5)
        start = time.perf_counter()
        full = train(g, p, TrainConfig(eta=0.05, max_iters=500, eval_every=10**9))
        mini = train(g, p, TrainConfig(eta=0.05, max_iters=500, eval_every=10**9,
                                        sampler=SamplerConfig(g.n_train, g.d_max, seed=11)))
        elapsed = time.perf_counter() - start
        out["note"] = f"500 iters, {elapsed:.2f} s"
        assert len(full.full_loss) == 500
        assert full.full_loss == mini.full_loss
        assert np.array_equal(full.final_W, mini.final_W)
        assert elapsed < 10


def test_criterion_04_sgd_unbiased(capsys):
    with criterion(capsys, 4, "mean stochastic gradient over all batches equals the full gradient") as out:
        g = generate_sbm([5, 4], 0.6, 0.2, 3, seed=8)
        mask = np.zeros(9, dtype=bool)
        mask[[0, 1, 2, 5, 6, 7]] = True
        g = g.with_split(mask, ~mask)
        labels = g.labels
        p = ModelParams(np.random.default_rng(0).normal(size=(2, 3)), 0.1)
        full_agg = normalized_rows_full(g, g.train_ids).aggregate(g.features)
        full_grad = mse_loss_and_grad(full_agg, p, labels[g.train_ids])[1]
        grads = []
        for batch in itertools.combinations(g.train_ids.tolist(), 2):
            mb = sample_neighbors(g, batch, g.d_max, seed=0, iteration=0, normalization="full")
            agg = mb.adj.aggregate(g.features)
            grads.append(mse_loss_and_grad(agg, p, labels[mb.target_nodes])[1])
        err = np.max(np.abs(np.mean(grads, axis=0) - full_grad))
        out["note"] = f"{len(grads)} batches, max abs err {err:.1e}"
        assert len(grads) == 15
        assert np.any(full_grad != 0)
        assert err <= 1e-12


def test_criterion_05_ot_oracle(capsys):
    with criterion(capsys, 5, "network simplex equals vertex enumeration") as out:
        rng = np.random.default_rng(55)
        shapes = [(3, 3)] * 160 + [(4, 4)] * 60
        worst_res = 0.0
        for m, n in shapes:
            cost, a, b = random_rational_instance(rng, m, n)
            oracle = transport_by_vertex_enumeration(cost, a, b)
            exact = solve_transport(cost, a, b)
            assert exact.cost == oracle
            approx = solve_transport(np.array(cost, dtype=float), [float(x) for x in a], [float(x) for x in b])
            assert abs(approx.cost - float(oracle)) <= 1e-9
            worst_res = max(worst_res, exact.residuals(), approx.residuals())
        out["note"] = f"{len(shapes)} instances, max residual {worst_res:.1e}"
        assert worst_res <= 1e-9


def test_criterion_06_delta_monotone_in_b(capsys):
    with criterion(capsys, 6, "Delta(beta, b) non-increasing in b under nested coupling") as out:
        violations = 0
        checks = 0
        for gseed in range(10):
            g = split_train_test(generate_er(30, 0.15, 4, seed=100 + gseed), 0.6, seed=gseed)
            assert np.all(expected_delta_full_mini(g, g.d_max, seed=0) == 0)
            for seed in range(10):
                for beta in (1, 2, 3):
                    values = [delta(g, beta, b, h=2, seed=seed)[0] for b in range(1, g.n_train + 1)]
                    for prev, cur in zip(values, values[1:]):
                        checks += 1
                        if cur > prev + 1e-12 * max(abs(prev), 1.0):
                            violations += 1
        out["note"] = f"{checks} adjacent pairs, {violations} violations"
        assert violations == 0


def _iters_to(traj, target):
    for t, v in traj.loss_samples():
        if v <= target:
            return t
    return math.inf


def test_criterion_07_convergence_trend(capsys):
    with criterion(capsys, 7, "iteration-to-loss falls with larger b and beta (medians over 7 seeds)") as out:
        start = time.perf_counter()
        g = _sbm200()
        grid = [(20, 3), (100, 3), (160, 3), (50, 1), (50, 3), (50, 6)]
        intervals = [theoretical_lr_mse_mini(g.n_train, b, beta, C6=0.1) for b, beta in grid]
        lo = max(i[0] for i in intervals)
        hi = min(i[1] for i in intervals)
        assert lo < hi
        eta = 0.5 * (lo + hi)
        medians = {}
        for b, beta in grid:
            counts = []
            for s in range(7):
                p = init_gaussian(2, 16, 0.1, seed=s)
                full_agg = normalized_rows_full(g, g.train_ids).aggregate(g.features)
                initial = mse_loss_and_grad(full_agg, p, g.labels[g.train_ids])[0]
                target = 0.95 * initial
                traj = train(g, p, TrainConfig(eta=eta, max_iters=5000, target_loss=target, eval_every=10**9,
                                               sampler=SamplerConfig(b, beta, seed=s)))
                counts.append(_iters_to(traj, target))
            medians[(b, beta)] = statistics.median(counts)
        elapsed = time.perf_counter() - start

        def ordered(chain):
            # a single adjacent pair may fail by less than 10% of the larger median
            misses = []
            for small, large in zip(chain, chain[1:]):
                if medians[small] > medians[large]:
                    misses.append((medians[small] - medians[large]) / max(medians[small], medians[large]))
            return len(misses) == 0 or (len(misses) == 1 and misses[0] < 0.10)

        out["note"] = (f"eta={eta:.4g}, medians " +
                       ", ".join(f"b{b}/beta{beta}={medians[(b, beta)]:g}" for b, beta in grid) +
                       f", {elapsed:.0f} s")
        assert ordered([(20, 3), (100, 3), (160, 3)])
        assert ordered([(50, 6), (50, 3), (50, 1)])
        assert elapsed < 120


def _traj(losses=None, accs=None):
    n = len(losses if losses is not None else accs)
    t = Trajectory("mini", 1, 1, 0.1, 1.0)
    t.full_loss = list(losses) if losses is not None else [None] * n
    t.test_acc = list(accs) if accs is not None else [None] * n
    t.batch_loss = [None] * n
    t.elapsed_s = [float(k + 1) for k in range(n)]
    t.nodes_processed = list(range(1, n + 1))
    return t


def test_criterion_08_metric_fixtures(capsys):
    with criterion(capsys, 8, "derived targets match hand-computed fixtures") as out:
        assert derive_target_loss(_traj([0.3] * 100)).value == 0.3
        assert derive_target_loss(_traj([1.0] * 99 + [0.3] * 100)).value == 0.3
        noise = 1.0 + np.random.default_rng(0).normal(0, 0.1, 1000)
        with pytest.raises(NotDerivableError):
            derive_target_loss(_traj(noise.tolist()))
        assert derive_target_accuracy(_traj(accs=[0.9] * 100)).value == 0.9
        assert derive_target_accuracy(_traj(accs=[0.9, 0.92] * 50)).value == 0.9
        # population variance: 1e-4 here, while the n-1 convention would give about 1.0101e-4
        alt = [0.9, 0.92] * 50
        assert derive_target_accuracy(_traj(accs=alt), var_threshold=1.00005e-4).value == 0.9
        edge = [0.5, 0.54] * 50
        with pytest.raises(NotDerivableError):
            derive_target_accuracy(_traj(accs=edge), var_threshold=float(np.var(edge)))
        out["note"] = "constant, two-phase, noisy, alternating, boundary"


def test_criterion_09_row_norm_bound(capsys):
    with criterion(capsys, 9, "sampled row norms bounded by beta + 1 (beta without self)") as out:
        rng = np.random.default_rng(9)
        rows = 0
        worst = 0.0
        it = 0
        while rows < 10_000:
            it += 1
            if it % 2:
                g = split_train_test(generate_er(int(rng.integers(20, 80)), float(rng.uniform(0.05, 0.4)), 2,
                                                 seed=int(rng.integers(1 << 30))), 0.7, seed=it)
            else:
                g = split_train_test(generate_sbm([30, 30], 0.3, 0.05, 2, seed=int(rng.integers(1 << 30))),
                                     0.7, seed=it)
            beta = int(rng.integers(1, 8))
            b = int(rng.integers(1, g.n_train + 1))
            mb = sample_minibatch(g, SamplerConfig(b, beta, seed=it), it)
            full = mb.adj.sq_norms()
            nos = mb.adj.sq_norms(exclude_self=True)
            assert np.all(full <= beta + 1)
            assert np.all(nos <= beta)
            worst = max(worst, float(np.max(full / (beta + 1))))
            rows += full.size
        out["note"] = f"{rows} rows, max ||a||^2/(beta+1) = {worst:.3f}"


def test_criterion_10_manifest_replay(capsys, tmp_path):
    with criterion(capsys, 10, "manifest replay is byte identical across --jobs values") as out:
        g = split_train_test(generate_sbm([25, 25], 0.3, 0.05, 4, seed=3), 0.8, seed=1)
        save_graph(g, tmp_path / "g.txt")
        (tmp_path / "sweep.ini").write_text(
            "[dataset]\npath = g.txt\n[train]\neta = 0.02\nmax_iters = 150\neval_every = 1\n"
            "[sweep]\nb = 5, 20, 40\nbeta = 1, 4\nseeds = 0, 1\n[metrics]\nwindow = 20\n")
        assert cli_main(["sweep", "--config", str(tmp_path / "sweep.ini"), "--out", str(tmp_path / "orig")]) == 0
        manifest = tmp_path / "orig" / "manifest.json"
        for jobs in ("1", "4"):
            assert cli_main(["sweep", "--manifest", str(manifest), "--jobs", jobs,
                             "--out", str(tmp_path / f"replay{jobs}")]) == 0
        files = sorted(p.relative_to(tmp_path / "orig") for p in (tmp_path / "orig").rglob("*.csv"))
        assert len(files) == 1 + 12
        for rel in files + [manifest.relative_to(tmp_path / "orig")]:
            ref = (tmp_path / "orig" / rel).read_bytes()
            assert (tmp_path / "replay1" / rel).read_bytes() == ref
            assert (tmp_path / "replay4" / rel).read_bytes() == ref
        runs = json.loads(manifest.read_text())["runs"]
        out["note"] = f"{len(runs)} runs, {len(files)} CSV files compared"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
