"""Block-iterative forward-backward solvers for the layer VI.

``run_alg1`` keeps one memory ``m_k`` per sample and updates the selected
ones with a forward step from the current iterate; the new iterate is the
projection of the weighted memory average.  ``run_alg2`` is the batch
rewriting: samples are partitioned into ``J`` blocks, one block is
refreshed per iteration and only ``J`` block aggregates are stored.
"""

import time
from dataclasses import dataclass

import numpy as np

from ..activations import Activation, activate
from ..constraints import project
from ..linops import operator_norm_sq
from ..problem import NORM_INFLATION, Sample, VIProblem, max_step_size, monitor, step_is_admissible
from .schedules import CoverageMonitor, make_schedule
from .trace import Record, Trace

DEFAULT_TOL = 1e-8


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class Stop:
    """Stop after ``max_iter`` iterations or ``max_epochs`` passes, or once
    the natural residual drops to ``tol`` (checked every ``check_every``
    iterations, one pass by default).  ``tol=None`` disables the residual
    test."""

    max_iter: int = None
    max_epochs: int = None
    tol: float = DEFAULT_TOL
    check_every: int = None

    def budget(self, epoch_length):
        limits = [n for n in (self.max_iter,
                              None if self.max_epochs is None else self.max_epochs * epoch_length)
                  if n is not None]
        if not limits:
            raise ConfigurationError("Stop needs max_iter or max_epochs")
        return min(limits)


def _forward(theta, gamma, s: Sample, R: Activation):
    r = activate(R, s.operator.apply(theta)) - s.target
    return theta - gamma * s.operator.adjoint_apply(r)


def forward_step(theta, gamma, s: Sample, R: Activation, allow_any_step=False):
    """``theta - gamma L^*(R(L theta) - y)`` for one sample.

    Raises :class:`ConfigurationError` unless ``0 < gamma < 2/||L||^2``
    (with the power-iteration estimate inflated slightly), except when
    ``allow_any_step`` is set.
    """
    if not allow_any_step:
        ns = operator_norm_sq(s.operator).norm_sq
        if not 0.0 < gamma < 2.0 / (ns * (1.0 + NORM_INFLATION)):
            raise ConfigurationError(f"step {gamma} outside (0, 2/||L||^2 = {2.0 / ns})")
    return _forward(np.asarray(theta, dtype=np.float64), gamma, s, R)


class _Recorder:
    def __init__(self, p, trace, gamma_monitor, clock, epoch_length):
        self.p = p
        self.trace = trace
        self.gamma = gamma_monitor
        self.clock = clock
        self.t0 = clock() if clock else None
        self.epoch_length = epoch_length

    def record(self, n, theta):
        l1, l2, res = monitor(self.p, theta, self.gamma)
        wall = 1e3 * (self.clock() - self.t0) if self.clock else 0.0
        self.trace.append(Record(n, n / self.epoch_length, l1, l2, res, wall))
        return res


def _check_gamma(p, gamma, allow_any_step):
    if allow_any_step:
        if gamma <= 0:
            raise ConfigurationError("step must be positive")
        return
    if not step_is_admissible(p, gamma):
        raise ConfigurationError(
            f"step {gamma} outside (0, 2/max||L_k||^2 = {max_step_size(p)})"
        )


def _run(p, trace, state, step, schedule, stop, gamma, clock, callback, use_monitor=True):
    epoch_length = schedule.epoch_length
    every = stop.check_every or epoch_length
    budget = stop.budget(epoch_length)
    rec = _Recorder(p, trace, gamma, clock, epoch_length)
    res = rec.record(0, state.theta)
    if stop.tol is not None and res <= stop.tol:
        trace.converged = True
        return trace
    coverage = CoverageMonitor(schedule.universe, schedule.window) if use_monitor else None
    selections = schedule.selections()
    n = 0
    while n < budget:
        selected = next(selections)
        if coverage:
            coverage.update(selected)
        step(selected)
        n += 1
        state.iteration = n
        if callback is not None:
            callback(n, state.theta)
        if n % every == 0 or n == budget:
            res = rec.record(n, state.theta)
            if stop.tol is not None and res <= stop.tol:
                trace.converged = True
                break
    trace.theta = state.theta.copy()
    return trace


# -- algorithm 1 ---------------------------------------------------------------

@dataclass
class Alg1State:
    theta: np.ndarray
    memories: np.ndarray  # (K, *param_shape)
    iteration: int = 0


def run_alg1(p: VIProblem, gamma, schedule=None, theta0=None, memories0=None,
             stop=Stop(max_iter=50_000), allow_any_step=False, clock=None, callback=None,
             gamma_monitor=None) -> Trace:
    """Block-iterative forward-backward iteration.

    Parameters
    ----------
    p : VIProblem
    gamma : float
        Step size in ``(0, 2 / max_k ||L_k||^2)``.
    schedule : Schedule, optional
        Selection rule over the ``K`` samples; cyclic by default.  Coverage
        within the schedule's window is enforced while running.
    theta0 : array, optional
        Starting point, zero by default.
    memories0 : array of shape ``(K, *param_shape)``, optional
        Initial per-sample memories; every memory starts at ``theta0`` by
        default.
    stop : Stop
    clock : callable, optional
        Returns seconds; when omitted ``wall_ms`` is recorded as 0 so traces
        are reproducible bit for bit.
    callback : callable, optional
        Called as ``callback(n, theta_n)`` after every iteration.
    gamma_monitor : float, optional
        Step used in the recorded natural residual; ``gamma`` by default.
    """
    K = p.K
    schedule = schedule or make_schedule("cyclic", K)
    if schedule.universe != K:
        raise ConfigurationError(f"schedule covers {schedule.universe} indices, problem has {K}")
    _check_gamma(p, gamma, allow_any_step)
    theta = p.zeros() if theta0 is None else p.check_param(theta0).copy()
    if memories0 is None:
        memories = np.broadcast_to(theta, (K,) + p.param_shape).copy()
    else:
        memories = np.array(memories0, dtype=np.float64)
        if memories.shape != (K,) + p.param_shape:
            raise ConfigurationError(f"memories have shape {memories.shape}")
    state = Alg1State(theta, memories)
    R, C, w = p.activation, p.constraint, p.weights

    def step(selected):
        theta_n = state.theta
        for k in selected:
            state.memories[k] = _forward(theta_n, gamma, p.samples[k], R)
        state.theta = project(C, np.tensordot(w, state.memories, axes=1))

    trace = Trace("vi-alg1", state=state)
    return _run(p, trace, state, step, schedule, stop, gamma_monitor or gamma, clock, callback)


# -- algorithm 2 ---------------------------------------------------------------

@dataclass
class Alg2State:
    theta: np.ndarray
    aggregates: np.ndarray  # (J, *param_shape)
    running_sum: np.ndarray
    partition: tuple
    iteration: int = 0

    def working_vectors(self):
        """Every parameter-sized buffer the iteration keeps alive."""
        return [*self.aggregates, self.running_sum, self.theta]

    def resummed(self):
        total = np.zeros_like(self.running_sum)
        for a in self.aggregates:
            total += a
        return total


def check_partition(partition, K):
    blocks = [tuple(int(i) for i in b) for b in partition]
    if not blocks or any(len(b) == 0 for b in blocks):
        raise ConfigurationError("partition blocks must be nonempty")
    flat = [i for b in blocks for i in b]
    if sorted(flat) != list(range(K)):
        raise ConfigurationError(f"blocks do not partition 0..{K - 1}")
    return tuple(blocks)


def contiguous_partition(K, block_size):
    return tuple(tuple(range(s, min(s + block_size, K))) for s in range(0, K, block_size))


def run_alg2(p: VIProblem, partition, gamma, schedule=None, theta0=None, aggregates0=None,
             stop=Stop(max_iter=50_000), allow_any_step=False, clock=None, callback=None,
             gamma_monitor=None, update="replace") -> Trace:
    """Deterministic batch forward-backward iteration.

    Each iteration refreshes block ``j`` by
    ``a_j = sum_{k in block j} w_k (theta - gamma L_k^*(R(L_k theta) - y_k))``,
    updates the running sum ``s <- s + a_j(new) - a_j(old)`` and sets
    ``theta = P_C(s)``.  The running sum always equals the sum of the block
    aggregates, which makes this an exact rewriting of :func:`run_alg1`
    selecting whole blocks.

    ``update="literal_sign"`` uses ``s <- s - a_j(new) + a_j(old)`` instead;
    that sign breaks the invariant and exists only to demonstrate it.

    Only ``J + 2`` parameter-sized buffers persist (aggregates, running
    sum, iterate), independent of ``K``.
    """
    if update not in ("replace", "literal_sign"):
        raise ConfigurationError(f"unknown update rule {update!r}")
    partition = check_partition(partition, p.K)
    J = len(partition)
    schedule = schedule or make_schedule("cyclic", J)
    if schedule.universe != J:
        raise ConfigurationError(f"schedule covers {schedule.universe} batches, partition has {J}")
    _check_gamma(p, gamma, allow_any_step)
    theta = p.zeros() if theta0 is None else p.check_param(theta0).copy()
    w = p.weights
    if aggregates0 is None:
        aggregates = np.empty((J,) + p.param_shape)
        for j, block in enumerate(partition):
            aggregates[j] = sum(w[k] for k in block) * theta
    else:
        aggregates = np.array(aggregates0, dtype=np.float64)
        if aggregates.shape != (J,) + p.param_shape:
            raise ConfigurationError(f"aggregates have shape {aggregates.shape}")
    running = np.zeros(p.param_shape)
    for a in aggregates:
        running += a
    state = Alg2State(theta, aggregates, running, partition)
    R, C = p.activation, p.constraint
    literal = update == "literal_sign"

    def step(selected):
        if len(selected) != 1:
            raise ConfigurationError("batch schedule must select exactly one block per iteration")
        (j,) = selected
        agg = state.aggregates[j]
        theta_n = state.theta
        if literal:
            state.running_sum += agg
        else:
            state.running_sum -= agg
        agg[...] = 0.0
        for k in partition[j]:
            agg += w[k] * _forward(theta_n, gamma, p.samples[k], R)
        if literal:
            state.running_sum -= agg
        else:
            state.running_sum += agg
        state.theta[...] = project(C, state.running_sum)

    trace = Trace("vi-alg2", state=state)
    return _run(p, trace, state, step, schedule, stop, gamma_monitor or gamma, clock, callback)


def wall_clock():
    return time.perf_counter()
