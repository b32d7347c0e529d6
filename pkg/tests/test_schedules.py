import itertools

import numpy as np
import pytest

from vilayer.solvers import CoverageError, CoverageMonitor, make_schedule, verify_coverage


def take(schedule, n):
    return list(itertools.islice(schedule.selections(), n))


class TestKinds:
    def test_cyclic(self):
        s = make_schedule("cyclic", 3)
        assert s.window == 3
        assert take(s, 7) == [(0,), (1,), (2,), (0,), (1,), (2,), (0,)]
        assert verify_coverage(take(s, 30), 3, 3) is None

    def test_shuffled_is_permutation_per_epoch(self):
        s = make_schedule("shuffled_cyclic", 5, seed=3)
        assert s.window == 9
        sel = [i for (i,) in take(s, 50)]
        for e in range(10):
            assert sorted(sel[5 * e:5 * e + 5]) == list(range(5))
        assert verify_coverage([(i,) for i in sel], 5, 9) is None
        assert take(s, 50) == take(make_schedule("shuffled_cyclic", 5, seed=3), 50)
        assert take(s, 50) != take(make_schedule("shuffled_cyclic", 5, seed=4), 50)

    def test_shuffled_worst_case_exhaustive(self):
        # any two consecutive permutations of 3 indices cover every 5-window
        for a in itertools.permutations(range(3)):
            for b in itertools.permutations(range(3)):
                for c in itertools.permutations(range(3)):
                    history = [(i,) for i in a + b + c]
                    assert verify_coverage(history, 3, 5) is None
        assert verify_coverage([(i,) for i in (2, 1, 0, 0, 1, 2)], 3, 4) is not None

    def test_full(self):
        s = make_schedule("full", 4)
        assert take(s, 2) == [(0, 1, 2, 3)] * 2

    def test_explicit_periodic(self):
        s = make_schedule("explicit", 3, sets=[{0, 1}, {2}])
        assert take(s, 4) == [(0, 1), (2,), (0, 1), (2,)]

    def test_lift(self):
        s = make_schedule("cyclic", 2).lift([(0, 3), (1, 2)])
        assert s.universe == 4 and s.epoch_length == 2
        assert take(s, 3) == [(0, 3), (1, 2), (0, 3)]


class TestCoverage:
    def test_explicit_missing_index_rejected(self):
        with pytest.raises(CoverageError) as exc:
            make_schedule("explicit", 2, window=3, sets=[{0}, {0}, {0}])
        assert exc.value.window_start == 0
        assert exc.value.missing == (1,)
        assert "window 0" in str(exc.value)

    def test_explicit_violation_window_identified(self):
        sets = [{0}, {1}, {2}, {0}, {0}, {1}, {2}]
        with pytest.raises(CoverageError) as exc:
            make_schedule("explicit", 3, window=3, sets=sets)
        assert exc.value.window_start == 2
        assert exc.value.missing == (1,)

    def test_wraparound_checked(self):
        # fine on one period, violates across the period boundary
        with pytest.raises(CoverageError):
            make_schedule("explicit", 3, window=3, sets=[{0}, {1}, {2}, {2}])

    def test_bad_sets(self):
        with pytest.raises(ValueError):
            make_schedule("explicit", 3, sets=[{0}, set()])
        with pytest.raises(ValueError):
            make_schedule("explicit", 3, sets=[{0, 3}])
        with pytest.raises(ValueError):
            make_schedule("random", 3)

    def test_monitor_raises_at_first_bad_window(self):
        mon = CoverageMonitor(3, 3)
        for sel in [(0,), (1,), (2,), (0,), (1,)]:
            mon.update(sel)
        with pytest.raises(CoverageError) as exc:
            mon.update((1,))
        assert exc.value.window_start == 3 and exc.value.missing == (2,)

    def test_monitor_agrees_with_batch_check(self, rng):
        for _ in range(200):
            history = [tuple(rng.choice(4, rng.integers(1, 3), replace=False)) for _ in range(12)]
            expected = verify_coverage(history, 4, 5)
            mon = CoverageMonitor(4, 5)
            got = None
            for sel in history:
                try:
                    mon.update(sel)
                except CoverageError as e:
                    got = e
                    break
            assert (got is None) == (expected is None)
            if got is not None:
                assert got.window_start == expected.window_start
                assert set(got.missing) == set(expected.missing)
