"""Index-selection schedules with quasi-cyclic coverage control.

Indices are 0-based.  A schedule yields one nonempty index set per
iteration; it is valid for window ``P`` when every index of the universe
appears in any ``P`` consecutive selections.
"""

from dataclasses import dataclass

import numpy as np


class CoverageError(ValueError):
    """A selection sequence leaves some index unvisited inside a window."""

    def __init__(self, window_start, missing, window):
        self.window_start = window_start
        self.missing = tuple(missing)
        self.window = window
        super().__init__(
            f"coverage violated in window {window_start} "
            f"(selections {window_start}..{window_start + window - 1}): "
            f"indices {sorted(self.missing)} never selected"
        )


@dataclass(frozen=True)
class Schedule:
    """Selection rule over ``range(universe)``.

    kind
        ``"cyclic"``: singletons 0, 1, ..., U-1, 0, 1, ... (``P = U``).
        ``"shuffled_cyclic"``: a fresh seeded permutation every pass
        (``P = 2U - 1``).
        ``"explicit"``: the given list of sets, repeated periodically.
    """

    kind: str
    universe: int
    window: int
    sets: tuple = ()
    seed: int = 0

    @property
    def epoch_length(self):
        """Selections per pass over the universe."""
        return len(self.sets) if self.kind == "explicit" else self.universe

    def selections(self):
        """Fresh iterator over the (infinite) selection sequence."""
        U = self.universe
        if self.kind == "cyclic":
            n = 0
            while True:
                yield (n % U,)
                n += 1
        elif self.kind == "shuffled_cyclic":
            epoch = 0
            while True:
                rng = np.random.default_rng([self.seed, epoch])
                for i in rng.permutation(U):
                    yield (int(i),)
                epoch += 1
        else:
            n = 0
            while True:
                yield self.sets[n % len(self.sets)]
                n += 1

    def lift(self, partition):
        """Schedule over samples that selects whole blocks ``partition[j]``."""
        if len(partition) != self.universe:
            raise ValueError(f"partition has {len(partition)} blocks, schedule covers {self.universe}")
        K = sum(len(b) for b in partition)
        return LiftedSchedule("lifted", K, self.window, base=self,
                              partition=tuple(tuple(int(i) for i in b) for b in partition))


@dataclass(frozen=True)
class LiftedSchedule(Schedule):
    """Selects the union of blocks chosen by ``base``."""

    base: Schedule = None
    partition: tuple = ()

    @property
    def epoch_length(self):
        return self.base.epoch_length

    def selections(self):
        for sel in self.base.selections():
            yield tuple(sorted(i for j in sel for i in self.partition[j]))


def make_schedule(kind, universe, window=None, seed=0, sets=None) -> Schedule:
    """Build a schedule and check its coverage window.

    Explicit schedules are verified over one full period of their cyclic
    extension; a failing window raises :class:`CoverageError` naming the
    first violating window.
    """
    if universe < 1:
        raise ValueError("universe must be >= 1")
    if kind == "cyclic":
        return Schedule("cyclic", universe, window or universe)
    if kind == "shuffled_cyclic":
        return Schedule("shuffled_cyclic", universe, window or 2 * universe - 1, seed=seed)
    if kind == "full":
        return make_schedule("explicit", universe, window or 1, sets=[range(universe)])
    if kind != "explicit":
        raise ValueError(f"unknown schedule kind {kind!r}")
    if not sets:
        raise ValueError("explicit schedule needs at least one index set")
    norm = []
    for n, s in enumerate(sets):
        s = tuple(sorted({int(i) for i in s}))
        if not s:
            raise ValueError(f"selection {n} is empty")
        if s[0] < 0 or s[-1] >= universe:
            raise ValueError(f"selection {n} = {s} leaves the universe 0..{universe - 1}")
        norm.append(s)
    window = window or len(norm)
    periodic = [norm[n % len(norm)] for n in range(len(norm) + window - 1)]
    bad = verify_coverage(periodic, universe, window)
    if bad is not None:
        raise bad
    return Schedule("explicit", universe, window, tuple(norm))


def verify_coverage(history, universe, window):
    """Return ``None`` if every ``window`` consecutive selections of
    ``history`` cover the universe, else the :class:`CoverageError` for the
    first violating window."""
    history = list(history)
    if len(history) < window:
        seen = set().union(*map(set, history)) if history else set()
        missing = set(range(universe)) - seen
        return CoverageError(0, missing, window) if missing else None
    for start in range(len(history) - window + 1):
        seen = set()
        for sel in history[start:start + window]:
            seen.update(sel)
        if len(seen) < universe:
            return CoverageError(start, set(range(universe)) - seen, window)
    return None


class CoverageMonitor:
    """Incremental coverage check for a running selection sequence."""

    def __init__(self, universe, window):
        self.universe = universe
        self.window = window
        self.last_seen = np.full(universe, -1, dtype=np.int64)
        self.n = 0

    def update(self, selected):
        self.last_seen[list(selected)] = self.n
        start = self.n - self.window + 1
        self.n += 1
        if start >= 0 and self.last_seen.min() < start:
            missing = np.flatnonzero(self.last_seen < start)
            raise CoverageError(start, missing.tolist(), self.window)
