"""Variational-inequality formulation of single-layer training.

Given samples ``(L_k, y_k, w_k)``, an activation ``R`` and a constraint set
``C``, the layer parameters solve

    find theta in C such that <t - theta, F(theta)> >= 0 for all t in C,
    F(theta) = sum_k w_k L_k^* (R(L_k theta) - y_k).

There is no loss function here; losses only appear in the minimization
baselines.
"""

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .activations import Activation, activate, parse_activation
from .constraints import WHOLE_SPACE, ConstraintSet, parse_constraint, project
from .linops import (BiasAugmented, DenseOperator, FeatureConv2d, LinearOperator,
                     ShapeError, as_shape, operator_norm_sq)
from .tensorio import atomic_write_text, load_tensor, save_tensor

WEIGHT_SUM_TOL = 1e-12
# underestimation guard applied to power-iteration norms before step checks
NORM_INFLATION = 1e-6
MANIFEST_FORMAT = "vilayer-problem/1"


class DegenerateProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    operator: LinearOperator
    target: np.ndarray
    weight: float

    def __post_init__(self):
        target = np.asarray(self.target, dtype=np.float64)
        if target.shape != self.operator.codomain_shape:
            raise ShapeError(
                f"target shape {target.shape} != operator codomain {self.operator.codomain_shape}"
            )
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"sample weight must lie in (0, 1], got {self.weight}")
        object.__setattr__(self, "target", target)


def uniform_weights(K):
    return np.full(K, 1.0 / K)


def normalize_weights(weights):
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    return weights / weights.sum()


class VIProblem:
    """The sample family plus ``R`` and ``C``.  Immutable after construction.

    Operator norms are estimated lazily, once, by power iteration.
    """

    def __init__(self, samples, activation: Activation = Activation(),
                 constraint: ConstraintSet = WHOLE_SPACE, param_shape=None):
        samples = list(samples)
        if not samples:
            raise ValueError("a problem needs at least one sample")
        self.samples = tuple(samples)
        self.activation = activation
        self.constraint = constraint
        self.param_shape = as_shape(param_shape or samples[0].operator.domain_shape)
        for k, s in enumerate(self.samples):
            if s.operator.domain_shape != self.param_shape:
                raise ShapeError(
                    f"sample {k} operator domain {s.operator.domain_shape} "
                    f"!= parameter shape {self.param_shape}"
                )
        total = sum(s.weight for s in self.samples)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {total!r})")

    @property
    def K(self):
        return len(self.samples)

    @cached_property
    def weights(self):
        w = np.array([s.weight for s in self.samples])
        w.setflags(write=False)
        return w

    @cached_property
    def norm_estimates(self):
        return tuple(operator_norm_sq(s.operator) for s in self.samples)

    @property
    def norms_sq(self):
        return np.array([e.norm_sq for e in self.norm_estimates])

    @property
    def max_norm_sq(self):
        return float(self.norms_sq.max())

    def zeros(self):
        return np.zeros(self.param_shape)

    def check_param(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != self.param_shape:
            raise ShapeError(f"parameter has shape {theta.shape}, expected {self.param_shape}")
        return theta

    def sample_residual(self, k, theta):
        """``R(L_k theta) - y_k``."""
        s = self.samples[k]
        return activate(self.activation, s.operator.apply(theta)) - s.target

    def predict(self, k, theta):
        return activate(self.activation, self.samples[k].operator.apply(theta))

    def residual_map(self, theta):
        return residual_map(self, theta)


def build_problem(operators, targets, activation=Activation(), constraint=WHOLE_SPACE,
                  weights=None, bias=False) -> VIProblem:
    """Assemble a :class:`VIProblem`.

    With ``bias=True`` each operator is wrapped so that the parameter vector
    becomes ``(weights, bias)`` flattened and ``L_k theta = W x_k + b``.
    """
    operators = list(operators)
    targets = list(targets)
    if len(operators) != len(targets):
        raise ValueError(f"{len(operators)} operators but {len(targets)} targets")
    if bias:
        operators = [BiasAugmented(op) for op in operators]
    w = uniform_weights(len(operators)) if weights is None else normalize_weights(weights)
    samples = [Sample(op, y, float(wk)) for op, y, wk in zip(operators, targets, w)]
    return VIProblem(samples, activation, constraint)


def residual_map(p: VIProblem, theta):
    """``F(theta) = sum_k w_k L_k^*(R(L_k theta) - y_k)``, summed in index order."""
    theta = p.check_param(theta)
    F = np.zeros(p.param_shape)
    for k, s in enumerate(p.samples):
        F += s.weight * s.operator.adjoint_apply(p.sample_residual(k, theta))
    return F


def max_step_size(p: VIProblem) -> float:
    """``2 / max_k ||L_k||^2``; admissible steps lie strictly below it."""
    m = p.max_norm_sq
    if m <= 0.0:
        raise DegenerateProblemError("degenerate problem: zero operator family")
    return 2.0 / m


def step_from_fraction(p: VIProblem, fraction) -> float:
    """Step size ``fraction * max_step_size``; ``fraction=0.95`` gives
    ``1.9 / max ||L_k||^2``."""
    return fraction * max_step_size(p)


def step_is_admissible(p: VIProblem, gamma) -> bool:
    return 0.0 < gamma < 2.0 / (p.max_norm_sq * (1.0 + NORM_INFLATION))


def natural_residual(p: VIProblem, theta, gamma) -> float:
    """``||theta - P_C(theta - gamma F(theta))||``; zero exactly at solutions."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    theta = p.check_param(theta)
    return float(np.linalg.norm(theta - project(p.constraint, theta - gamma * residual_map(p, theta))))


def training_error(p: VIProblem, theta, ord=1) -> float:
    """``(1/K) sum_k ||R(L_k theta) - y_k||_p^p`` for ``p = ord`` in {1, 2}."""
    if ord not in (1, 2):
        raise ValueError("ord must be 1 or 2")
    return training_errors(p, theta)[ord - 1]


def training_errors(p: VIProblem, theta):
    """Both averaged errors ``(l1, l2)`` from a single pass over the samples."""
    theta = p.check_param(theta)
    l1 = l2 = 0.0
    for k in range(p.K):
        r = p.sample_residual(k, theta)
        l1 += float(np.abs(r).sum())
        l2 += float(np.vdot(r, r))
    return l1 / p.K, l2 / p.K


def monitor(p: VIProblem, theta, gamma):
    """``(l1, l2, natural residual)`` sharing one operator pass per sample."""
    theta = p.check_param(theta)
    F = np.zeros(p.param_shape)
    l1 = l2 = 0.0
    for k, s in enumerate(p.samples):
        r = p.sample_residual(k, theta)
        l1 += float(np.abs(r).sum())
        l2 += float(np.vdot(r, r))
        F += s.weight * s.operator.adjoint_apply(r)
    res = float(np.linalg.norm(theta - project(p.constraint, theta - gamma * F)))
    return l1 / p.K, l2 / p.K, res


def interpolation_gap(p: VIProblem, theta) -> float:
    """``max_k ||R(L_k theta) - y_k||_inf``."""
    theta = p.check_param(theta)
    return max(float(np.abs(p.sample_residual(k, theta)).max()) for k in range(p.K))


# -- manifest -------------------------------------------------------------------

def save_problem(p: VIProblem, directory, bias=False):
    """Write ``problem.json`` plus one VLT1 file per operator payload and target.

    Problems built with ``bias=True`` must pass ``bias=True`` here too.
    """
    directory = Path(directory)
    entries = []
    for k, s in enumerate(p.samples):
        op = s.operator.base if bias else s.operator
        entry = {"weight": s.weight, "target": f"target_{k:04d}.vlt"}
        save_tensor(directory / entry["target"], s.target)
        if isinstance(op, FeatureConv2d):
            entry.update(kind="conv2d", features=f"features_{k:04d}.vlt",
                         kernel_shape=list(op.domain_shape))
            save_tensor(directory / entry["features"], op.features)
        elif isinstance(op, DenseOperator):
            entry.update(kind="dense", matrix=f"matrix_{k:04d}.vlt",
                         domain_shape=list(op.domain_shape),
                         codomain_shape=list(op.codomain_shape))
            save_tensor(directory / entry["matrix"], op.matrix)
        else:
            raise TypeError(f"cannot serialize operator {op!r}")
        entries.append(entry)
    manifest = {
        "format": MANIFEST_FORMAT,
        "activation": p.activation.spec(),
        "constraint": p.constraint.spec(),
        "bias": bool(bias),
        "samples": entries,
    }
    atomic_write_text(directory / "problem.json", json.dumps(manifest, indent=2) + "\n")


def load_problem(path) -> VIProblem:
    path = Path(path)
    if path.is_dir():
        path = path / "problem.json"
    manifest = json.loads(path.read_text())
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: unsupported manifest format {manifest.get('format')!r}")
    root = path.parent
    operators, targets, weights = [], [], []
    for entry in manifest["samples"]:
        if entry["kind"] == "conv2d":
            op = FeatureConv2d(load_tensor(root / entry["features"]), entry["kernel_shape"])
        elif entry["kind"] == "dense":
            op = DenseOperator(load_tensor(root / entry["matrix"]),
                               entry["domain_shape"], entry["codomain_shape"])
        else:
            raise ValueError(f"{path}: unknown operator kind {entry['kind']!r}")
        operators.append(op)
        targets.append(load_tensor(root / entry["target"]))
        weights.append(entry.get("weight", 1.0))
    return build_problem(operators, targets,
                         activation=parse_activation(manifest.get("activation", "identity")),
                         constraint=parse_constraint(manifest.get("constraint", "none")),
                         weights=weights, bias=manifest.get("bias", False))
