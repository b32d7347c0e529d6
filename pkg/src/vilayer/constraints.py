"""Closed convex parameter sets and their Euclidean projections."""

from dataclasses import dataclass, field

import numpy as np

from .linops import ShapeError

KINDS = ("whole_space", "box", "ball", "nonneg")
# a radially shrunk point can land a few ulps outside the ball; counting
# those as inside keeps the projection exactly idempotent
BALL_RTOL = 8 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class ConstraintSet:
    """One of: the whole space, a box ``[lo, hi]^n``, a Euclidean ball, or
    the nonnegative orthant.

    For a ball, ``center`` is either a scalar (broadcast to every
    coordinate) or an array of the parameter shape.
    """

    kind: str = "whole_space"
    lo: float = -np.inf
    hi: float = np.inf
    center: object = 0.0
    radius: float = np.inf
    _center_arr: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint {self.kind!r}; choose from {KINDS}")
        if self.kind == "box" and not self.lo <= self.hi:
            raise ValueError(f"box needs lo <= hi, got [{self.lo}, {self.hi}]")
        if self.kind == "ball":
            if not self.radius > 0:
                raise ValueError(f"ball radius must be positive, got {self.radius}")
            object.__setattr__(self, "_center_arr", np.asarray(self.center, dtype=np.float64))

    def project(self, theta):
        return project(self, theta)

    def contains(self, theta, tol=0.0) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == "whole_space":
            return True
        if self.kind == "box":
            return bool(np.all(theta >= self.lo - tol) and np.all(theta <= self.hi + tol))
        if self.kind == "nonneg":
            return bool(np.all(theta >= -tol))
        return float(np.linalg.norm(theta - self._center_arr)) <= self.radius * (1 + BALL_RTOL) + tol

    def spec(self) -> str:
        if self.kind == "whole_space":
            return "none"
        if self.kind == "box":
            return f"box:{self.lo!r}:{self.hi!r}"
        if self.kind == "ball":
            if np.ndim(self.center) != 0:
                raise ValueError("only scalar-centre balls have a string form")
            return f"ball:{float(self.center)!r}:{self.radius!r}"
        return "nonneg"


WHOLE_SPACE = ConstraintSet()


def project(C: ConstraintSet, theta):
    """Euclidean projection of ``theta`` onto ``C``.

    Points already inside the ball (boundary included) are returned
    unchanged; outside points are shrunk radially towards the centre.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if C.kind == "whole_space":
        return theta.copy()
    if C.kind == "box":
        return np.clip(theta, C.lo, C.hi)
    if C.kind == "nonneg":
        return np.maximum(theta, 0.0)
    if C._center_arr.ndim and C._center_arr.shape != theta.shape:
        raise ShapeError(f"ball centre has shape {C._center_arr.shape}, parameter {theta.shape}")
    center = np.broadcast_to(C._center_arr, theta.shape)
    d = theta - center
    dist = float(np.linalg.norm(d))
    if dist <= C.radius * (1.0 + BALL_RTOL):
        return theta.copy()
    return center + (C.radius / dist) * d


def parse_constraint(text: str) -> ConstraintSet:
    """Parse ``"none"``, ``"nonneg"``, ``"box:lo:hi"`` or ``"ball:center:radius"``."""
    parts = text.strip().split(":")
    name, args = parts[0], parts[1:]
    if name in ("none", "whole_space"):
        if args:
            raise ValueError(f"{name!r} takes no parameters")
        return WHOLE_SPACE
    if name == "nonneg":
        return ConstraintSet("nonneg")
    if name == "box" and len(args) == 2:
        return ConstraintSet("box", lo=float(args[0]), hi=float(args[1]))
    if name == "ball" and len(args) == 2:
        return ConstraintSet("ball", center=float(args[0]), radius=float(args[1]))
    raise ValueError(f"cannot parse constraint {text!r}")
