"""Firmly nonexpansive elementwise activations."""

from dataclasses import dataclass

import numpy as np

KINDS = ("identity", "relu", "leaky_relu")


@dataclass(frozen=True)
class Activation:
    """Elementwise activation ``R``.

    ``leaky_relu`` maps ``z`` to ``z`` for ``z >= 0`` and ``slope * z``
    otherwise.  Slopes outside ``[0, 1]`` are rejected because the map is
    then no longer firmly nonexpansive.
    """

    kind: str = "identity"
    slope: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation {self.kind!r}; choose from {KINDS}")
        if self.kind == "leaky_relu" and not 0.0 <= self.slope <= 1.0:
            raise ValueError(f"leaky_relu slope must lie in [0, 1], got {self.slope}")
        if self.kind == "relu":
            object.__setattr__(self, "slope", 0.0)
        elif self.kind == "identity":
            object.__setattr__(self, "slope", 1.0)

    def __call__(self, z):
        return activate(self, z)

    def derivative(self, z):
        """Elementwise (sub)derivative, taking the value 1 at ``z == 0``."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "identity":
            return np.ones_like(z)
        return np.where(z >= 0, 1.0, self.slope)

    def spec(self) -> str:
        if self.kind == "leaky_relu":
            return f"leaky_relu:{self.slope!r}"
        return self.kind


def activate(R: Activation, z):
    """Apply ``R`` elementwise.  NaNs propagate."""
    z = np.asarray(z, dtype=np.float64)
    if R.kind == "identity":
        return z.copy()
    if R.kind == "relu":
        return np.where(z >= 0, z, 0.0 * z)
    return np.where(z >= 0, z, R.slope * z)


def parse_activation(text: str) -> Activation:
    """Parse ``"identity"``, ``"relu"`` or ``"leaky_relu:<slope>"``."""
    name, _, arg = text.strip().partition(":")
    if name == "leaky_relu":
        if not arg:
            raise ValueError("leaky_relu needs a slope, e.g. 'leaky_relu:0.001'")
        return Activation("leaky_relu", float(arg))
    if arg:
        raise ValueError(f"activation {name!r} takes no parameter")
    return Activation(name)


@dataclass(frozen=True)
class FirmnessReport:
    violations: int
    worst_margin: float


def check_firm_nonexpansive(R: Activation, trials=10_000, dim=1, seed=0,
                            scale=10.0, slack=1e-12) -> FirmnessReport:
    """Sample random pairs and test ``<z1 - z2, Rz1 - Rz2> >= ||Rz1 - Rz2||^2``.

    Returns the number of pairs whose margin falls below ``-slack`` and the
    smallest margin observed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    z1 = scale * rng.standard_normal((trials, dim))
    z2 = scale * rng.standard_normal((trials, dim))
    d = z1 - z2
    rd = activate(R, z1) - activate(R, z2)
    margin = np.einsum("ij,ij->i", d, rd) - np.einsum("ij,ij->i", rd, rd)
    return FirmnessReport(int(np.count_nonzero(margin < -slack)), float(margin.min()))
