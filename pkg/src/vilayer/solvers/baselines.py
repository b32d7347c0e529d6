"""Mini-batch SGD and Adam on the empirical loss, for comparison.

Both minimize ``(1/K) sum_k loss(R(L_k theta), y_k)`` with ``loss`` the
l1 norm or the squared l2 norm.  Gradient conventions:

* l1: elementwise ``sign(r)`` with ``sign(0) = 0``;
* l2: ``2 r``;
* activation derivative: ``slope`` for negative inputs, ``1`` otherwise.

Each step is followed by a projection onto ``C``, which is a no-op for
the unconstrained case.
"""

from dataclasses import dataclass

import numpy as np

from ..constraints import project
from ..problem import VIProblem, step_from_fraction
from .forward_backward import ConfigurationError, _Recorder
from .schedules import make_schedule
from .trace import Trace

LOSSES = ("l1", "l2")


def sample_gradient(p: VIProblem, k, theta, loss="l1"):
    s = p.samples[k]
    z = s.operator.apply(theta)
    r = p.activation(z) - s.target
    g_out = np.sign(r) if loss == "l1" else 2.0 * r
    return s.operator.adjoint_apply(g_out * p.activation.derivative(z))


def batch_gradient(p, batch, theta, loss="l1"):
    g = np.zeros(p.param_shape)
    for k in batch:
        g += sample_gradient(p, k, theta, loss)
    return g / len(batch)


def _batches(p, partition, batch, seed):
    """Yield ``(epoch, block)`` forever.

    With an explicit partition, each epoch visits every block once in a
    freshly shuffled order; otherwise samples are re-permuted every epoch
    and cut into consecutive chunks of ``batch``.
    """
    if partition is not None:
        sched = make_schedule("shuffled_cyclic", len(partition), seed=seed)
        it = sched.selections()
        epoch = 0
        while True:
            for _ in range(len(partition)):
                (j,) = next(it)
                yield epoch, partition[j]
            epoch += 1
    epoch = 0
    while True:
        order = np.random.default_rng([seed, epoch]).permutation(p.K)
        for start in range(0, p.K, batch):
            yield epoch, tuple(int(i) for i in order[start:start + batch])
        epoch += 1


def _steps_per_epoch(p, partition, batch):
    return len(partition) if partition is not None else -(-p.K // batch)


@dataclass
class OptimizerState:
    theta: np.ndarray
    iteration: int = 0
    m: np.ndarray = None
    v: np.ndarray = None


def _minimize(p, update, loss, batch, epochs, seed, partition, theta0, clock,
              gamma_monitor, method, state):
    if loss not in LOSSES:
        raise ConfigurationError(f"loss must be one of {LOSSES}")
    if partition is None and (batch is None or batch < 1):
        raise ConfigurationError("give either a partition or a positive batch size")
    gamma_monitor = gamma_monitor or step_from_fraction(p, 0.95)
    per_epoch = _steps_per_epoch(p, partition, batch)
    trace = Trace(method, state=state)
    rec = _Recorder(p, trace, gamma_monitor, clock, per_epoch)
    rec.record(0, state.theta)
    stream = _batches(p, partition, batch, seed)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, epochs * per_epoch + 1):
            _, block = next(stream)
            g = batch_gradient(p, block, state.theta, loss)
            state.iteration = n
            state.theta = project(p.constraint, update(state, g))
            if n % per_epoch == 0:
                rec.record(n, state.theta)
    trace.theta = state.theta.copy()
    return trace


def run_sgd(p: VIProblem, loss="l1", lr=1e-2, batch=None, epochs=100, seed=0,
            partition=None, theta0=None, clock=None, gamma_monitor=None) -> Trace:
    """Constant-step projected (sub)gradient descent on mini-batches.

    Divergence is not trapped: a too-large ``lr`` shows up as growing
    errors in the returned trace.
    """
    if lr <= 0:
        raise ConfigurationError("lr must be positive")
    theta = p.zeros() if theta0 is None else p.check_param(theta0).copy()

    def update(state, g):
        return state.theta - lr * g

    return _minimize(p, update, loss, batch, epochs, seed, partition, theta, clock,
                     gamma_monitor, f"sgd-{loss}", OptimizerState(theta))


def run_adam(p: VIProblem, loss="l1", lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
             batch=None, epochs=100, seed=0, partition=None, theta0=None, clock=None,
             gamma_monitor=None) -> Trace:
    """Adam with bias-corrected moment estimates on the same subgradients as
    :func:`run_sgd`."""
    if lr <= 0:
        raise ConfigurationError("lr must be positive")
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1) or eps <= 0:
        raise ConfigurationError("need 0 <= beta1, beta2 < 1 and eps > 0")
    theta = p.zeros() if theta0 is None else p.check_param(theta0).copy()
    state = OptimizerState(theta, m=np.zeros(p.param_shape), v=np.zeros(p.param_shape))

    def update(state, g):
        t = state.iteration
        state.m = beta1 * state.m + (1 - beta1) * g
        state.v = beta2 * state.v + (1 - beta2) * g * g
        m_hat = state.m / (1 - beta1 ** t)
        v_hat = state.v / (1 - beta2 ** t)
        return state.theta - lr * m_hat / (np.sqrt(v_hat) + eps)

    return _minimize(p, update, loss, batch, epochs, seed, partition, theta, clock,
                     gamma_monitor, f"adam-{loss}", state)
