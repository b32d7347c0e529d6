"""Desk-scale last-layer transfer-learning experiment.

``generate`` builds clean/noisy patch datasets and last-layer features from
a seeded stand-in for a pretrained convolutional denoiser; ``train`` fits
the last layer with the VI solver and the SGD/Adam baselines; ``evaluate``
reports SSIM/PSNR and l1/l2 errors; ``plot`` draws the error curves.

Output layout under the run directory::

    config.json
    network/            frozen network (all layers, incl. the original last one)
    data/{train,test}/  problem.json + features/targets, clean.vlt, noisy.vlt,
                        batches.json
    traces/<method>.csv
    params/<method>.vlt
    metrics.csv
    plots/errors_l1.svg, plots/errors_l2.svg
"""

import csv
import io
import json
import logging
from pathlib import Path

import numpy as np

from ..activations import parse_activation
from ..constraints import parse_constraint
from ..linops import FeatureConv2d
from ..network import FrozenNetwork, load_network, pseudo_pretrained, save_network
from ..problem import build_problem, load_problem, save_problem, step_from_fraction, training_errors
from ..solvers import (Stop, make_schedule, read_trace_csv, run_adam, run_alg1, run_alg2,
                       run_sgd, wall_clock)
from ..tensorio import atomic_write_text, load_tensor, save_pgm, save_tensor
from .config import METHODS, ExperimentConfig
from .data import add_gaussian_noise, child_seed, phantom, position_batches
from .metrics import summarize
from .plotting import plot_traces

log = logging.getLogger(__name__)

METRICS_HEADER = ("method", "split", "ssim_mean", "ssim_std", "psnr_mean", "l1", "l2")
SPLITS = ("train", "test")
# stream tags for child_seed
_IMAGES, _NOISE, _NETWORK, _ORDER = 1, 2, 3, 4


def build_network(cfg: ExperimentConfig) -> FrozenNetwork:
    n = cfg.network
    p = cfg.data.patch_size
    return pseudo_pretrained(list(n.channels) + [1], n.kernel_size, (p, p), n.slope,
                             seed=child_seed(cfg.seed, _NETWORK))


def feature_network(full: FrozenNetwork) -> FrozenNetwork:
    return FrozenNetwork(full.layers[:-1])


def make_split(cfg: ExperimentConfig, split, features_net):
    d = cfg.data
    offset = 0 if split == "train" else d.n_train
    n = d.n_train if split == "train" else d.n_test
    images = [phantom(d.image_size, child_seed(cfg.seed, _IMAGES, offset + i), d.n_ellipses)
              for i in range(n)]
    clean, blocks = position_batches(images, d.patch_size, d.batch_size)
    sidx = SPLITS.index(split)
    noisy = np.stack([add_gaussian_noise(c, d.noise_std, child_seed(cfg.seed, _NOISE, sidx, k))
                      for k, c in enumerate(clean)])
    feats = [np.asarray(f) for f in features_net.extract_features(noisy)]
    feats = [f[None] if f.ndim == 2 else f for f in feats]
    ks = cfg.layer.kernel_size
    ops = [FeatureConv2d(f, (f.shape[0], 1, ks, ks)) for f in feats]
    problem = build_problem(ops, list(clean), parse_activation(cfg.layer.activation),
                            parse_constraint(cfg.layer.constraint), bias=cfg.layer.bias)
    return problem, clean, noisy, blocks


def generate(cfg: ExperimentConfig, out):
    out = Path(out)
    atomic_write_text(out / "config.json", cfg.to_json())
    full = build_network(cfg)
    save_network(full, out / "network")
    feats_net = feature_network(full)
    for split in SPLITS:
        problem, clean, noisy, blocks = make_split(cfg, split, feats_net)
        root = out / "data" / split
        save_problem(problem, root, bias=cfg.layer.bias)
        save_tensor(root / "clean.vlt", clean)
        save_tensor(root / "noisy.vlt", noisy)
        atomic_write_text(root / "batches.json", json.dumps([list(b) for b in blocks]) + "\n")
        save_pgm(root / "preview_clean.pgm", clean[0])
        save_pgm(root / "preview_noisy.pgm", noisy[0])
        log.info("%s split: K=%d samples in %d batches", split, problem.K, len(blocks))


def load_split(out, split):
    root = Path(out) / "data" / split
    problem = load_problem(root)
    blocks = tuple(tuple(b) for b in json.loads((root / "batches.json").read_text()))
    return problem, load_tensor(root / "clean.vlt"), load_tensor(root / "noisy.vlt"), blocks


def train_method(cfg: ExperimentConfig, problem, blocks, method, **overrides):
    """Run one method on ``problem`` with the configured hyperparameters.

    ``overrides`` replace entries of the method's config section (for
    grids over ``gamma_fraction`` or ``lr``).
    """
    sec = dict(vars(getattr(cfg, method)))
    sec.update(overrides)
    order_seed = child_seed(cfg.seed, _ORDER)
    clock = wall_clock if cfg.timing else None
    gamma_monitor = step_from_fraction(problem, 0.95)
    if method == "vi":
        gamma = step_from_fraction(problem, sec["gamma_fraction"])
        sched = make_schedule("shuffled_cyclic", len(blocks), seed=order_seed)
        stop = Stop(max_epochs=cfg.epochs, tol=None)
        if sec["algorithm"] == "alg2":
            trace = run_alg2(problem, blocks, gamma, sched, stop=stop, clock=clock,
                             gamma_monitor=gamma_monitor)
        else:
            trace = run_alg1(problem, gamma, sched.lift(blocks), stop=stop, clock=clock,
                             gamma_monitor=gamma_monitor)
    elif method == "sgd":
        trace = run_sgd(problem, sec["loss"], sec["lr"], epochs=cfg.epochs, seed=order_seed,
                        partition=blocks, clock=clock, gamma_monitor=gamma_monitor)
    elif method == "adam":
        trace = run_adam(problem, sec["loss"], sec["lr"], sec["beta1"], sec["beta2"], sec["eps"],
                         epochs=cfg.epochs, seed=order_seed, partition=blocks, clock=clock,
                         gamma_monitor=gamma_monitor)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    trace.method = method
    return trace


def train(cfg: ExperimentConfig, out, methods=METHODS):
    out = Path(out)
    problem, _, _, blocks = load_split(out, "train")
    traces = {}
    for method in methods:
        trace = train_method(cfg, problem, blocks, method)
        trace.write_csv(out / "traces" / f"{method}.csv")
        save_tensor(out / "params" / f"{method}.vlt", trace.theta)
        log.info("%s: final l1 %.6g, l2 %.6g", method, trace.last.l1_err, trace.last.l2_err)
        traces[method] = trace
    return traces


def _fmt(x):
    return repr(float(x))


def _row(method, split, refs, preds, l1, l2):
    s = summarize(refs, preds)
    return [method, split, _fmt(s["ssim_mean"]), _fmt(s["ssim_std"]), _fmt(s["psnr_mean"]),
            _fmt(l1), _fmt(l2)]


def _errors(refs, preds):
    diffs = [np.asarray(p) - np.asarray(r) for r, p in zip(refs, preds)]
    return (float(np.mean([np.abs(d).sum() for d in diffs])),
            float(np.mean([np.vdot(d, d) for d in diffs])))


def evaluate(cfg: ExperimentConfig, out):
    """Write ``metrics.csv``; rows cover the noisy input, the original
    (untrained) last layer, and every trained method found under
    ``params/``."""
    out = Path(out)
    full = load_network(out / "network")
    methods = [m for m in METHODS if (out / "params" / f"{m}.vlt").exists()]
    rows = []
    for split in SPLITS:
        problem, clean, noisy, _ = load_split(out, split)
        refs = list(clean)
        rows.append(_row("noisy", split, refs, list(noisy), *_errors(refs, noisy)))
        untrained = [full.forward(x) for x in noisy]
        rows.append(_row("untrained", split, refs, untrained, *_errors(refs, untrained)))
        for m in methods:
            theta = load_tensor(out / "params" / f"{m}.vlt")
            preds = [problem.predict(k, theta) for k in range(problem.K)]
            rows.append(_row(m, split, refs, preds, *training_errors(problem, theta)))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    writer.writerows(rows)
    atomic_write_text(out / "metrics.csv", buf.getvalue())
    return rows


def plot(out):
    out = Path(out)
    traces = {p.stem: read_trace_csv(p, p.stem) for p in sorted((out / "traces").glob("*.csv"))}
    if not traces:
        raise FileNotFoundError(f"no trace CSVs under {out / 'traces'}")
    paths = []
    for col, name in (("l1_err", "errors_l1.svg"), ("l2_err", "errors_l2.svg")):
        path = out / "plots" / name
        plot_traces(traces, path, col)
        paths.append(path)
    return paths


def run_all(cfg: ExperimentConfig, out, methods=METHODS):
    generate(cfg, out)
    train(cfg, out, methods)
    evaluate(cfg, out)
    return plot(out)
