"""Dirichlet Green's kernel, the solution operator K and the fixed-point maps.

Everything lives on a uniform grid with N interior nodes.  K is discretised
with the composite trapezoid rule; because the kernel is piecewise linear in
each variable, the trapezoid matrix is exactly the inverse of the three-point
Laplacian, so the integral and finite-difference formulations agree to
rounding error.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import MagnitudeFault
from .indexset import IndexSet

MAGNITUDE_GUARD = 1e12
DEFAULT_N = 2049
TEST_N = 257


@dataclass(frozen=True)
class Grid:
    N: int
    L: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("a grid needs at least one interior node")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / (self.N + 1)

    @property
    def x(self) -> np.ndarray:
        x = np.arange(self.N + 2) * self.h
        x[-1] = self.L
        return x

    def refine(self) -> "Grid":
        return Grid(2 * self.N + 1, self.L)

    @classmethod
    def for_values(cls, u, L: float) -> "Grid":
        return cls(len(u) - 2, L)


@dataclass
class GridProfile:
    """Grid samples of a candidate or converged solution (boundary nodes included)."""

    grid: Grid
    values: np.ndarray
    lam: float
    residual_norm: float = float("nan")
    source: str = "newton"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).copy()
        if self.values.shape != (self.grid.N + 2,):
            raise ValueError("values must have N + 2 entries")
        self.values[0] = 0.0
        self.values[-1] = 0.0
        if self.source not in ("newton", "shooting", "continuation"):
            raise ValueError(f"unknown profile source {self.source!r}")

    @property
    def x(self):
        return self.grid.x

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def sup_on(self, a: float, b: float) -> float:
        """Max of u over grid nodes in the closed interval [a, b]."""
        x = self.x
        mask = (x >= a - 1e-14) & (x <= b + 1e-14)
        return float(np.max(self.values[mask])) if np.any(mask) else 0.0

    def interval_sups(self, pattern) -> list[float]:
        return [self.sup_on(s, t) for s, t in pattern.positive_intervals()]

    def slopes(self) -> tuple[float, float]:
        """One-sided second-order slopes u'(0), u'(L)."""
        u, h = self.values, self.grid.h
        left = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
        right = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
        return float(left), float(right)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.grid.N,
            "L": self.grid.L,
            "residual_norm": self.residual_norm,
            "source": self.source,
            "values": self.values.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "GridProfile":
        return cls(
            Grid(int(obj["N"]), float(obj.get("L", 1.0))),
            np.asarray(obj["values"], dtype=float),
            float(obj["lambda"]),
            float(obj.get("residual_norm", float("nan"))),
            obj.get("source", "newton"),
        )

    @classmethod
    def from_json(cls, text: str) -> "GridProfile":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["x", "u"])
        for xi, ui in zip(self.x, self.values):
            wr.writerow([f"{xi:.17g}", f"{ui:.17g}"])
        return buf.getvalue()

    def equals(self, other: "GridProfile") -> bool:
        return (
            self.grid == other.grid
            and self.lam == other.lam
            and np.array_equal(self.values, other.values)
            and (self.residual_norm == other.residual_norm
                 or (np.isnan(self.residual_norm) and np.isnan(other.residual_norm)))
            and self.source == other.source
        )


def kernel(x, y, L):
    """Unnormalised Dirichlet kernel: y(L-x) for y <= x, x(L-y) otherwise.

    The true Green's function of -u'' is kernel/L; apply_K carries the 1/L.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x < 0) | (x > L) | (y < 0) | (y > L)):
        raise ValueError("kernel arguments must lie in [0, L]")
    out = np.where(y <= x, y * (L - x), x * (L - y))
    return float(out) if out.ndim == 0 else out


def apply_K(f, L: float = 1.0):
    """Trapezoid quadrature of the Green's kernel against nodal samples ``f``.

    ``f`` carries all N + 2 nodes. The boundary nodes drop out because the
    kernel vanishes there. Runs in O(N) with two cumulative sums.
    """
    f = np.asarray(f, dtype=float)
    grid = Grid.for_values(f, L)
    x, h = grid.x, grid.h
    # (Kf)(x_j) = [(L - x_j) * sum_{k<=j} y_k f_k + x_j * sum_{k>j} (L - y_k) f_k] * h / L
    left = np.cumsum(x * f)
    right_all = (L - x) * f
    right = np.cumsum(right_all[::-1])[::-1]
    right = np.r_[right[1:], 0.0]
    u = ((L - x) * left + x * right) * h / L
    u[0] = 0.0
    u[-1] = 0.0
    return u


def _check_magnitude(u):
    if np.any(~np.isfinite(u)) or np.max(np.abs(u)) > MAGNITUDE_GUARD:
        raise MagnitudeFault(f"|u| exceeds {MAGNITUDE_GUARD:g}; refusing to apply the operator")


def nonlinear_field(lam, u, a_vals, p):
    up = np.maximum(u, 0.0)
    return lam * up + a_vals * up ** p


def apply_Phi(lam, u, weight, p):
    """Fixed-point map u -> K(lam*u+ + a*(u+)^p)."""
    u = np.asarray(u, dtype=float)
    _check_magnitude(u)
    L = weight.L
    a_vals = weight(Grid.for_values(u, L).x)
    return apply_K(nonlinear_field(lam, u, a_vals, p), L)


def apply_homotopy(kind, param, lam, u, weight, p, bump=None):
    """Homotopy right-hand sides used for the degree computations.

    kind == "theta": K(theta * (lam*u+ + a*(u+)^p)), theta in [0, 1].
    kind == "mu":    K(lam*u+ + a*(u+)^p + mu*w) with w a BumpWeight, mu >= 0.
    """
    u = np.asarray(u, dtype=float)
    _check_magnitude(u)
    L = weight.L
    a_vals = weight(Grid.for_values(u, L).x)
    f = nonlinear_field(lam, u, a_vals, p)
    if kind == "theta":
        if not 0.0 <= param <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        return apply_K(param * f, L)
    if kind == "mu":
        if param < 0:
            raise ValueError("mu must be non-negative")
        if bump is None:
            raise ValueError("the mu homotopy needs a BumpWeight")
        if len(bump.samples) != len(u):
            raise ValueError("bump weight and u live on different grids")
        return apply_K(f + param * bump.samples, L)
    raise ValueError(f"unknown homotopy kind {kind!r}")


def bump_function(index_set: IndexSet, pattern, x):
    """w(x) = dist(x, boundary of I+_i)**gamma_i on the selected humps, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in index_set:
        s, t = pattern.sigma[i - 1], pattern.tau[i - 1]
        g = pattern.gamma[i - 1]
        mask = (x > s) & (x < t)
        out[mask] = np.minimum(x[mask] - s, t - x[mask]) ** g
    return out


@dataclass(frozen=True)
class BumpWeight:
    index_set: IndexSet
    grid: Grid
    samples: np.ndarray = field(repr=False)
    sigma: tuple = ()
    tau: tuple = ()
    gamma: tuple = ()


def build_bump_weight(index_set: IndexSet, weight, grid: Grid) -> BumpWeight:
    if len(index_set) == 0:
        raise ValueError("the bump weight needs a non-empty index set")
    index_set.check_range(weight.n)
    pat = weight.pattern
    sel = [i - 1 for i in index_set]
    return BumpWeight(
        index_set,
        grid,
        bump_function(index_set, pat, grid.x),
        tuple(pat.sigma[i] for i in sel),
        tuple(pat.tau[i] for i in sel),
        tuple(pat.gamma[i] for i in sel),
    )


@dataclass(frozen=True)
class Eigenpair:
    """Principal Dirichlet eigenpair: Sigma1 = (pi/L)^2, phi = sin(pi x / L)."""

    grid: Grid

    @property
    def Sigma1(self) -> float:
        return (np.pi / self.grid.L) ** 2

    @property
    def phi(self) -> np.ndarray:
        phi = np.sin(np.pi * self.grid.x / self.grid.L)
        phi[0] = phi[-1] = 0.0
        return phi


def trapezoid(f, grid: Grid) -> float:
    return float(np.trapezoid(f, dx=grid.h)) if hasattr(np, "trapezoid") else float(np.trapz(f, dx=grid.h))
