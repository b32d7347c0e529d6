import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vilayer.activations import Activation, activate, check_firm_nonexpansive, parse_activation
from vilayer.constraints import WHOLE_SPACE, ConstraintSet, parse_constraint, project
from vilayer.linops import ShapeError

SLOPES = (0.0, 0.001, 0.01, 0.5, 1.0)
ALL_ACTIVATIONS = [Activation("identity"), Activation("relu")] + [
    Activation("leaky_relu", a) for a in SLOPES]

finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestActivationExamples:
    def test_leaky(self):
        np.testing.assert_array_equal(activate(Activation("leaky_relu", 0.01), np.array([1.0, -1.0])),
                                      [1.0, -0.01])

    def test_relu(self):
        np.testing.assert_array_equal(activate(Activation("relu"), np.array([-2.0, 0.0, 3.0])),
                                      [0.0, 0.0, 3.0])

    def test_identity(self, rng):
        z = rng.standard_normal(7)
        np.testing.assert_array_equal(activate(Activation(), z), z)

    def test_nan_propagates(self):
        for R in ALL_ACTIVATIONS:
            assert np.isnan(activate(R, np.array([np.nan]))[0])

    def test_derivative_convention(self):
        R = Activation("leaky_relu", 0.01)
        np.testing.assert_array_equal(R.derivative(np.array([-1.0, 0.0, 2.0])), [0.01, 1.0, 1.0])

    @pytest.mark.parametrize("slope", [-0.1, 1.5])
    def test_slope_outside_unit_interval_rejected(self, slope):
        with pytest.raises(ValueError):
            Activation("leaky_relu", slope)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Activation("tanh")

    def test_parse_round_trip(self):
        for R in ALL_ACTIVATIONS:
            assert parse_activation(R.spec()) == R
        assert parse_activation("leaky_relu:0.001") == Activation("leaky_relu", 0.001)
        with pytest.raises(ValueError):
            parse_activation("leaky_relu")
        with pytest.raises(ValueError):
            parse_activation("relu:2")


class TestFirmness:
    def test_scalar_margin(self):
        R = Activation("leaky_relu", 0.01)
        d, rd = 2.0, 1.01
        assert d * rd - rd * rd == pytest.approx(0.9999, abs=1e-12)
        assert check_firm_nonexpansive(R).violations == 0

    def test_identity_margin_zero(self):
        rep = check_firm_nonexpansive(Activation(), trials=1000, dim=3)
        assert rep.violations == 0 and abs(rep.worst_margin) <= 1e-9

    @pytest.mark.parametrize("R", ALL_ACTIVATIONS, ids=lambda R: R.spec())
    def test_no_violations(self, R):
        for dim in (1, 4):
            assert check_firm_nonexpansive(R, trials=10_000, dim=dim, seed=dim).violations == 0

    @settings(max_examples=200, deadline=None)
    @given(z1=st.lists(finite, min_size=1, max_size=6), data=st.data(),
           idx=st.integers(0, len(ALL_ACTIVATIONS) - 1))
    def test_nonexpansive_and_elementwise(self, z1, data, idx):
        R = ALL_ACTIVATIONS[idx]
        z2 = data.draw(st.lists(finite, min_size=len(z1), max_size=len(z1)))
        a, b = np.array(z1), np.array(z2)
        ra, rb = activate(R, a), activate(R, b)
        assert np.linalg.norm(ra - rb) <= np.linalg.norm(a - b) * (1 + 1e-12) + 1e-12
        both = activate(R, np.concatenate([a, b]))
        np.testing.assert_array_equal(both, np.concatenate([ra, rb]))


BOX = ConstraintSet("box", lo=-1.0, hi=1.0)
BALL = ConstraintSet("ball", center=0.0, radius=1.0)
SETS = [WHOLE_SPACE, BOX, BALL, ConstraintSet("nonneg"),
        ConstraintSet("ball", center=np.array([1.0, -2.0, 0.5]), radius=2.5)]
SET_IDS = ["none", "box", "ball", "nonneg", "shifted-ball"]


def sample_in(C, rng, n):
    """Random points of ``C`` in R^3."""
    if C.kind == "box":
        return rng.uniform(C.lo, C.hi, (n, 3))
    if C.kind == "nonneg":
        return np.abs(rng.standard_normal((n, 3))) * 3
    if C.kind == "ball":
        d = rng.standard_normal((n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return C.center + d * C.radius * rng.uniform(0, 1, (n, 1)) ** (1 / 3)
    return 5 * rng.standard_normal((n, 3))


class TestProjection:
    def test_examples(self):
        np.testing.assert_array_equal(project(WHOLE_SPACE, np.array([5.0, -3.0])), [5.0, -3.0])
        np.testing.assert_array_equal(project(BOX, np.array([5.0, -3.0, 0.5])), [1.0, -1.0, 0.5])
        np.testing.assert_allclose(project(BALL, np.array([3.0, 4.0])), [0.6, 0.8], rtol=1e-15)

    def test_ball_boundary_and_interior_unchanged(self):
        for x in (np.array([0.6, 0.8]), np.array([0.1, -0.2])):
            assert project(BALL, x) is not x
            np.testing.assert_array_equal(project(BALL, x), x)

    def test_invalid_sets(self):
        with pytest.raises(ValueError):
            ConstraintSet("box", lo=1.0, hi=0.0)
        with pytest.raises(ValueError):
            ConstraintSet("ball", center=0.0, radius=0.0)

    def test_ball_center_shape_mismatch(self):
        C = ConstraintSet("ball", center=np.zeros(3), radius=1.0)
        with pytest.raises(ShapeError):
            project(C, np.zeros(4))

    @pytest.mark.parametrize("C", SETS, ids=SET_IDS)
    def test_idempotent(self, C, rng):
        for _ in range(200):
            p = project(C, 5 * rng.standard_normal(3))
            np.testing.assert_array_equal(project(C, p), p)
            assert C.contains(p, tol=1e-12)

    @pytest.mark.parametrize("C", SETS, ids=SET_IDS)
    def test_firmly_nonexpansive(self, C, rng):
        for _ in range(1000):
            a, b = 5 * rng.standard_normal((2, 3))
            pa, pb = project(C, a), project(C, b)
            assert np.vdot(a - b, pa - pb) >= np.vdot(pa - pb, pa - pb) - 1e-12

    @pytest.mark.parametrize("C", SETS, ids=SET_IDS)
    def test_nearest_point(self, C, rng):
        for _ in range(20):
            x = 5 * rng.standard_normal(3)
            d = np.linalg.norm(x - project(C, x))
            for c in sample_in(C, rng, 100):
                assert d <= np.linalg.norm(x - c) + 1e-12

    def test_parse(self):
        assert parse_constraint("none") == WHOLE_SPACE
        assert parse_constraint("box:-1:1") == BOX
        assert parse_constraint("ball:0:10") == ConstraintSet("ball", center=0.0, radius=10.0)
        assert parse_constraint("nonneg") == ConstraintSet("nonneg")
        with pytest.raises(ValueError):
            parse_constraint("box:1")
