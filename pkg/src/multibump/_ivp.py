"""Compiled Dormand-Prince 5(4) integrator for the scalar second-order fields.

Two fields are supported (``mode``):

0   u'' = -(theta*(lam*u+ + a(x)*(u+)^p) + mu*w(x))      shooting field
1   v'' = -(alpha*(x+kappa)^gamma*(v+)^p + beta)          Liouville field

The weight a(x) is evaluated from the integer kind code and parameter arrays
produced by ``Weight.codes()``; w(x) is the bump weight given by the selected
(sigma, tau, gamma) triples.
"""
import numpy as np
from numba import njit

OK = 0
BLOWUP_POS = 1
BLOWUP_NEG = 2
UNDERFLOW = 3
EXITED = 4
MAXSTEPS = 5

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40


@njit(cache=True)
def weight_at(kind, par, xs, ys, x):
    if kind == 0:
        return np.sin(par[0] * np.pi * x / par[1])
    if kind == 1:
        n = int(par[0])
        L = par[1]
        sig = par[4:4 + n]
        tau = par[4 + n:4 + 2 * n]
        gam = par[4 + 2 * n:4 + 3 * n]
        cc = par[4 + 3 * n:4 + 4 * n]
        dd = par[4 + 4 * n:4 + 5 * n]
        if x < sig[0]:
            return -par[2] * (sig[0] - x) / sig[0]
        if x > tau[n - 1]:
            return -par[3] * (x - tau[n - 1]) / (L - tau[n - 1])
        for i in range(n):
            if x > sig[i] and x < tau[i]:
                dist = min(x - sig[i], tau[i] - x)
                return cc[i] * dist ** gam[i]
            if i < n - 1 and x > tau[i] and x < sig[i + 1]:
                return -dd[i] * np.sin(np.pi * (x - tau[i]) / (sig[i + 1] - tau[i]))
        return 0.0
    return np.interp(x, xs, ys)


@njit(cache=True)
def bump_at(bs, bt, bg, x):
    for i in range(bs.shape[0]):
        if x > bs[i] and x < bt[i]:
            return min(x - bs[i], bt[i] - x) ** bg[i]
    return 0.0


@njit(cache=True)
def accel(mode, x, u, fp, kind, par, xs, ys, bs, bt, bg):
    # fp: mode 0 -> [lam, p, theta, mu]; mode 1 -> [alpha, gamma, kappa, beta, p]
    if mode == 0:
        up = u if u > 0.0 else 0.0
        a = weight_at(kind, par, xs, ys, x)
        f = fp[2] * (fp[0] * up + a * up ** fp[1])
        if fp[3] != 0.0:
            f += fp[3] * bump_at(bs, bt, bg, x)
        return -f
    vp = u if u > 0.0 else 0.0
    return -(fp[0] * (x + fp[2]) ** fp[1] * vp ** fp[4] + fp[3])


@njit(cache=True)
def _quintic(x0, u0, v0, a0, x1, u1, v1, a1, x):
    # quintic Hermite in u using u, u', u'' at both ends
    h = x1 - x0
    t = (x - x0) / h
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    return ((1 - 10 * t3 + 15 * t4 - 6 * t5) * u0
            + (t - 6 * t3 + 8 * t4 - 3 * t5) * h * v0
            + 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * h * h * a0
            + (10 * t3 - 15 * t4 + 6 * t5) * u1
            + (-4 * t3 + 7 * t4 - 3 * t5) * h * v1
            + 0.5 * (t3 - 2 * t4 + t5) * h * h * a1)


@njit(cache=True)
def integrate(mode, x0, x1, u0, v0, fp, kind, par, xs, ys, bs, bt, bg,
              rtol, atol, ucap, xout, isig, itau, band_lo, band_hi, max_steps):
    """Integrate (u, u') from x0 to x1.

    Returns (status, x, u, v, uout, sups, umin, nsteps, x_exit).  ``uout``
    holds u at every point of ``xout`` reached, from the quintic Hermite
    interpolant of each accepted step, so requesting output does not change
    the step sequence.  ``sups`` tracks max u over accepted points inside each
    [isig[i], itau[i]].  For the Liouville field integration stops with
    EXITED when u leaves [band_lo, band_hi]; x_exit is then located on the
    quintic Hermite interpolant by bisection.
    """
    nout = xout.shape[0]
    uout = np.full(nout, np.nan)
    nint = isig.shape[0]
    sups = np.zeros(nint)
    x = x0
    u = u0
    v = v0
    umin = u0
    k = 0
    while k < nout and xout[k] <= x0:
        uout[k] = u0
        k += 1
    span = x1 - x0
    h = min(1e-3 * span, 1e-2 / (1.0 + abs(v0)))
    h = max(h, 1e-10 * span)
    a1 = accel(mode, x, u, fp, kind, par, xs, ys, bs, bt, bg)
    err_prev = 1e-4
    nsteps = 0
    x_exit = np.nan
    check_band = band_lo < band_hi
    while x < x1:
        if nsteps >= max_steps:
            return MAXSTEPS, x, u, v, uout, sups, umin, nsteps, x_exit
        hmin = 1e-14 * max(1.0, abs(x))
        if h < hmin:
            return UNDERFLOW, x, u, v, uout, sups, umin, nsteps, x_exit
        target = x1
        landing = False
        hp = h
        if x + h >= target:
            h = target - x
            landing = True
        # stages for the first-order system (u, v)' = (v, accel)
        ku1 = v
        kv1 = a1
        uu = u + h * A21 * ku1
        vv = v + h * A21 * kv1
        ku2 = vv
        kv2 = accel(mode, x + C2 * h, uu, fp, kind, par, xs, ys, bs, bt, bg)
        uu = u + h * (A31 * ku1 + A32 * ku2)
        vv = v + h * (A31 * kv1 + A32 * kv2)
        ku3 = vv
        kv3 = accel(mode, x + C3 * h, uu, fp, kind, par, xs, ys, bs, bt, bg)
        uu = u + h * (A41 * ku1 + A42 * ku2 + A43 * ku3)
        vv = v + h * (A41 * kv1 + A42 * kv2 + A43 * kv3)
        ku4 = vv
        kv4 = accel(mode, x + C4 * h, uu, fp, kind, par, xs, ys, bs, bt, bg)
        uu = u + h * (A51 * ku1 + A52 * ku2 + A53 * ku3 + A54 * ku4)
        vv = v + h * (A51 * kv1 + A52 * kv2 + A53 * kv3 + A54 * kv4)
        ku5 = vv
        kv5 = accel(mode, x + C5 * h, uu, fp, kind, par, xs, ys, bs, bt, bg)
        uu = u + h * (A61 * ku1 + A62 * ku2 + A63 * ku3 + A64 * ku4 + A65 * ku5)
        vv = v + h * (A61 * kv1 + A62 * kv2 + A63 * kv3 + A64 * kv4 + A65 * kv5)
        ku6 = vv
        kv6 = accel(mode, x + h, uu, fp, kind, par, xs, ys, bs, bt, bg)
        un = u + h * (B1 * ku1 + B3 * ku3 + B4 * ku4 + B5 * ku5 + B6 * ku6)
        vn = v + h * (B1 * kv1 + B3 * kv3 + B4 * kv4 + B5 * kv5 + B6 * kv6)
        ku7 = vn
        kv7 = accel(mode, x + h, un, fp, kind, par, xs, ys, bs, bt, bg)
        eu = h * (E1 * ku1 + E3 * ku3 + E4 * ku4 + E5 * ku5 + E6 * ku6 + E7 * ku7)
        ev = h * (E1 * kv1 + E3 * kv3 + E4 * kv4 + E5 * kv5 + E6 * kv6 + E7 * kv7)
        su = atol + rtol * max(abs(u), abs(un))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = max(abs(eu) / su, abs(ev) / sv)
        if not np.isfinite(err):
            h *= 0.1
            continue
        if err <= 1.0:
            nsteps += 1
            xn = target if landing else x + h
            while k < nout and xout[k] <= xn:
                if xout[k] == xn:
                    uout[k] = un
                else:
                    uout[k] = _quintic(x, u, v, a1, xn, un, vn, kv7, xout[k])
                k += 1
            if check_band and (un < band_lo or un > band_hi):
                edge = band_lo if un < band_lo else band_hi
                lo = x
                hi = xn
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    um = _quintic(x, u, v, a1, xn, un, vn, kv7, mid)
                    if (um - edge) * (u - edge) > 0:
                        lo = mid
                    else:
                        hi = mid
                x_exit = 0.5 * (lo + hi)
                return EXITED, xn, un, vn, uout, sups, min(umin, un), nsteps, x_exit
            x = xn
            u = un
            v = vn
            a1 = kv7
            if u < umin:
                umin = u
            for i in range(nint):
                if x >= isig[i] and x <= itau[i] and u > sups[i]:
                    sups[i] = u
            if u > ucap:
                return BLOWUP_POS, x, u, v, uout, sups, umin, nsteps, x_exit
            if u < -ucap:
                return BLOWUP_NEG, x, u, v, uout, sups, umin, nsteps, x_exit
            # PI controller
            fac = 0.9 * err ** (-0.7 / 5) * err_prev ** (0.4 / 5) if err > 0 else 5.0
            fac = min(5.0, max(0.2, fac))
            if landing and fac >= 1.0:
                h = max(hp, h * fac)
            else:
                h = h * fac
            err_prev = max(err, 1e-4)
        else:
            h *= max(0.1, 0.9 * err ** (-1 / 5))
    return OK, x, u, v, uout, sups, umin, nsteps, x_exit
