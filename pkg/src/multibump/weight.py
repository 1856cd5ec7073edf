"""Sign-changing weights a(x) on [0, L] and their sign-pattern geometry.

Three kinds are supported:

``sin_multibump``
    a(x) = sin(m*pi*x/L) with m odd, giving n = (m+1)/2 positivity intervals.
``piecewise_power``
    a(x) = c_i * dist(x, boundary of I+_i)**gamma_i on each positivity
    interval, a negative sine arch of depth d_i on every interior negativity
    interval and a linear ramp (zero at the positivity side, -d at the wall)
    on boundary negativity intervals.
``tabulated``
    piecewise-linear interpolation of user samples.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import SpecError

SCAN_POINTS = 10_000
ROOT_XTOL = 1e-12
MIN_TABULATED = 64

# integer codes understood by the compiled integrator in _ivp
KIND_CODES = {"sin_multibump": 0, "piecewise_power": 1, "tabulated": 2}


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    L: float = 1.0
    m: int | None = None
    sigma: tuple[float, ...] = ()
    tau: tuple[float, ...] = ()
    gamma: tuple[float, ...] = ()
    c: tuple[float, ...] = ()
    d: tuple[float, ...] = ()
    x: tuple[float, ...] = ()
    a: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.L > 0:
            raise SpecError(f"domain length L must be positive, got {self.L}")
        if self.kind == "sin_multibump":
            if self.m is None or int(self.m) != self.m or self.m < 1 or self.m % 2 == 0:
                raise SpecError(f"sin_multibump needs an odd positive integer m, got {self.m}")
        elif self.kind == "piecewise_power":
            self._check_piecewise()
        elif self.kind == "tabulated":
            if len(self.x) != len(self.a):
                raise SpecError("tabulated x and a samples differ in length")
            if len(self.x) < MIN_TABULATED:
                raise SpecError(
                    f"tabulated weight needs at least {MIN_TABULATED} samples, got {len(self.x)}"
                )
            xs = np.asarray(self.x)
            if np.any(np.diff(xs) <= 0):
                raise SpecError("tabulated x samples must be strictly increasing")
            if abs(xs[0]) > 1e-14 or abs(xs[-1] - self.L) > 1e-12 * self.L:
                raise SpecError("tabulated x samples must span [0, L]")
        else:
            raise SpecError(f"unknown weight kind {self.kind!r}")

    def _check_piecewise(self):
        n = len(self.sigma)
        if n == 0 or len(self.tau) != n or len(self.gamma) != n or len(self.c) != n:
            raise SpecError("piecewise_power needs sigma, tau, gamma, c of equal nonzero length")
        chain = []
        for s, t in zip(self.sigma, self.tau):
            chain += [s, t]
        if chain[0] < 0 or chain[-1] > self.L or np.any(np.diff(chain) <= 0):
            raise SpecError("piecewise_power breakpoints must increase strictly inside [0, L]")
        if min(self.c) <= 0 or min(self.gamma) <= 0:
            raise SpecError("piecewise_power needs c_i > 0 and gamma_i > 0")
        if len(self.d) != self.n_negative or (self.d and min(self.d) <= 0):
            raise SpecError(
                f"piecewise_power needs {self.n_negative} positive depths d (one per negativity interval)"
            )

    @property
    def n_negative(self) -> int:
        n = len(self.sigma)
        return n - 1 + int(self.sigma[0] > 0) + int(self.tau[-1] < self.L)

    @classmethod
    def from_dict(cls, obj: dict) -> "WeightSpec":
        obj = dict(obj)
        kind = obj.pop("kind", None)
        L = float(obj.pop("L", 1.0))
        kw = {}
        for key in ("sigma", "tau", "gamma", "c", "d", "x", "a"):
            if key in obj:
                kw[key] = tuple(float(v) for v in obj.pop(key))
        if "m" in obj:
            m = obj.pop("m")
            if int(m) != m:
                raise SpecError(f"m must be an integer, got {m}")
            kw["m"] = int(m)
        if obj:
            raise SpecError(f"unexpected weight fields: {sorted(obj)}")
        return cls(kind=kind, L=L, **kw)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "L": self.L}
        if self.kind == "sin_multibump":
            out["m"] = self.m
        elif self.kind == "piecewise_power":
            for key in ("sigma", "tau", "gamma", "c", "d"):
                out[key] = list(getattr(self, key))
        else:
            out["x"] = list(self.x)
            out["a"] = list(self.a)
        return out

    @classmethod
    def from_json(cls, text: str) -> "WeightSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SignPattern:
    """Positivity intervals I+_i = (sigma_i, tau_i) and their growth exponents."""

    sigma: tuple[float, ...]
    tau: tuple[float, ...]
    gamma: tuple[float, ...]
    L: float

    @property
    def n(self) -> int:
        return len(self.sigma)

    def positive_intervals(self):
        return list(zip(self.sigma, self.tau))

    def negative_intervals(self):
        """Negativity intervals (tau_{i}, sigma_{i+1}), i = 0..n, skipping empty ones."""
        left = (0.0,) + self.tau
        right = self.sigma + (self.L,)
        return [(t, s) for t, s in zip(left, right) if s > t]

    def interior_negative_intervals(self):
        return list(zip(self.tau[:-1], self.sigma[1:]))


def _sin_eval(m, L, x):
    return np.sin(m * np.pi * x / L)


def _piecewise_eval(spec: WeightSpec, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    sig, tau, L = spec.sigma, spec.tau, spec.L
    depths = list(spec.d)
    if sig[0] > 0:
        d0 = depths.pop(0)
        mask = x < sig[0]
        out[mask] = -d0 * (sig[0] - x[mask]) / sig[0]
    if tau[-1] < L:
        dn = depths.pop()
        mask = x > tau[-1]
        out[mask] = -dn * (x[mask] - tau[-1]) / (L - tau[-1])
    for i, (s, t) in enumerate(zip(sig, tau)):
        mask = (x > s) & (x < t)
        dist = np.minimum(x[mask] - s, t - x[mask])
        out[mask] = spec.c[i] * dist ** spec.gamma[i]
    for i in range(len(sig) - 1):
        t, s = tau[i], sig[i + 1]
        mask = (x > t) & (x < s)
        out[mask] = -depths[i] * np.sin(np.pi * (x[mask] - t) / (s - t))
    return out


def _raw_eval(spec: WeightSpec, x):
    if spec.kind == "sin_multibump":
        return _sin_eval(spec.m, spec.L, np.asarray(x, dtype=float))
    if spec.kind == "piecewise_power":
        return _piecewise_eval(spec, x)
    return np.interp(x, spec.x, spec.a)


def _fit_exponent(f, edge, direction, L):
    """Least-squares slope of log|a| against log dist on dist in [1e-4, 1e-2]."""
    dist = np.geomspace(1e-4, 1e-2, 25) * L
    vals = np.abs(f(edge + direction * dist))
    if np.any(vals <= 0):
        return np.nan
    slope, _ = np.polyfit(np.log(dist), np.log(vals), 1)
    return float(slope)


def detect_sign_pattern(f, L, n_scan=SCAN_POINTS):
    """Locate the positivity intervals of ``f`` and check the alternating chain.

    The scan samples are classified into signs (values below 1e-14 of the
    sup count as zeros); every sign change is refined with brentq to 1e-12.
    Raises SpecError when the pattern is not an alternation of positive and
    negative runs, e.g. when ``f`` touches zero without changing sign.
    """
    xs = np.linspace(0.0, L, n_scan + 1)
    vals = f(xs)
    scale = np.max(np.abs(vals))
    if not scale > 0:
        raise SpecError("weight vanishes identically")
    sgn = np.where(np.abs(vals) <= 1e-14 * scale, 0, np.sign(vals)).astype(int)

    # collapse into runs of constant sign
    runs = []
    start = 0
    for j in range(1, len(sgn) + 1):
        if j == len(sgn) or sgn[j] != sgn[start]:
            runs.append((int(sgn[start]), start, j - 1))
            start = j
    inner = [r for r in runs if not (r[0] == 0 and (r[1] == 0 or r[2] == len(sgn) - 1))]
    for k, (s, lo, hi) in enumerate(inner):
        if s == 0 and hi > lo:
            raise SpecError(f"weight vanishes on a subinterval near x={xs[lo]:.6g}")
    nonzero = [r for r in inner if r[0] != 0]
    for r1, r2 in zip(nonzero, nonzero[1:]):
        if r1[0] == r2[0]:
            raise SpecError(f"weight touches zero without changing sign near x={xs[r1[2]]:.6g}")
    if not any(r[0] > 0 for r in nonzero):
        raise SpecError("weight has no positivity interval")

    def edge(lo_idx, hi_idx):
        # root between two scan nodes whose signs differ (either may be an exact zero)
        if sgn[lo_idx] == 0:
            return float(xs[lo_idx])
        if sgn[hi_idx] == 0:
            return float(xs[hi_idx])
        return float(brentq(f, xs[lo_idx], xs[hi_idx], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps))

    sigma, tau = [], []
    for s, lo, hi in nonzero:
        if s < 0:
            continue
        sigma.append(0.0 if lo == 0 else edge(lo - 1, lo))
        tau.append(L if hi == len(sgn) - 1 else edge(hi, hi + 1))
    # neighbouring zero-separated runs share the zero sample as their edge
    for i in range(len(sigma)):
        if i > 0 and sigma[i] <= tau[i - 1]:
            raise SpecError("positivity intervals are not separated by a negativity interval")

    # reject a near-touching zero inside a run (undetectable by sign alone)
    for s, lo, hi in nonzero:
        seg = np.abs(vals[lo:hi + 1])
        if len(seg) > 2:
            inner_min = np.r_[False, (seg[1:-1] < seg[:-2]) & (seg[1:-1] < seg[2:]), False]
            if np.any(seg[inner_min] < 1e-8 * scale):
                raise SpecError("weight nearly touches zero inside a sign interval")

    gamma = []
    for sg, ta in zip(sigma, tau):
        g_left = _fit_exponent(f, sg, +1.0, L)
        g_right = _fit_exponent(f, ta, -1.0, L)
        gamma.append(0.5 * (g_left + g_right))
    return SignPattern(tuple(sigma), tuple(tau), tuple(gamma), float(L))


@dataclass(frozen=True)
class Weight:
    spec: WeightSpec
    pattern: SignPattern
    sup_norm: float

    @property
    def L(self) -> float:
        return self.spec.L

    @property
    def n(self) -> int:
        return self.pattern.n

    def __call__(self, x):
        return _raw_eval(self.spec, x)

    def positive_part(self, x):
        return np.maximum(self(x), 0.0)

    def negative_part(self, x):
        return np.maximum(-self(x), 0.0)

    def codes(self):
        """(kind code, float params, xs, ys) for the compiled integrator."""
        spec = self.spec
        empty = np.zeros(1)
        if spec.kind == "sin_multibump":
            return 0, np.array([float(spec.m), spec.L]), empty, empty
        if spec.kind == "piecewise_power":
            n = len(spec.sigma)
            d = list(spec.d)
            d_left = d.pop(0) if spec.sigma[0] > 0 else 0.0
            d_right = d.pop() if spec.tau[-1] < spec.L else 0.0
            d_inner = d + [0.0]  # padded so the array has n entries
            params = np.concatenate([
                [float(n), spec.L, d_left, d_right],
                spec.sigma, spec.tau, spec.gamma, spec.c, d_inner,
            ])
            return 1, params, empty, empty
        return 2, np.array([spec.L]), np.asarray(spec.x, float), np.asarray(spec.a, float)


def build_weight(spec: WeightSpec | dict) -> Weight:
    """Build a Weight, detecting sigma_i, tau_i, gamma_i from the sampled function."""
    if isinstance(spec, dict):
        spec = WeightSpec.from_dict(spec)
    f = lambda x: _raw_eval(spec, x)
    pattern = detect_sign_pattern(f, spec.L)
    if spec.kind == "sin_multibump":
        if pattern.n != (spec.m + 1) // 2:
            raise SpecError("detected pattern disagrees with m")
        sup = 1.0
    elif spec.kind == "piecewise_power":
        half = [(t - s) / 2 for s, t in zip(spec.sigma, spec.tau)]
        sup = max(max(c * h ** g for c, h, g in zip(spec.c, half, spec.gamma)), max(spec.d, default=0.0))
    else:
        sup = float(np.max(np.abs(spec.a)))
    return Weight(spec, pattern, float(sup))


def eval_weight(w: Weight, x):
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > w.L):
        raise SpecError(f"x outside [0, {w.L}]")
    out = w(xa)
    return float(out) if np.ndim(out) == 0 else out


def sin_weight(m: int, L: float = 1.0) -> Weight:
    return build_weight(WeightSpec("sin_multibump", L=L, m=m))
