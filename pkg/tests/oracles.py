"""Independent oracles used to freeze expected values in the tests.

Nothing here imports the toolkit's algorithm modules: the hull is a brute
force chord minimum, integrals use plain midpoint product quadrature and the
sawtooth energy is evaluated from an explicit slope pattern.
"""

import math

import numpy as np


def lower_hull_1d(xs, vals):
    """Brute-force lower convex hull of 1-D samples, evaluated on the grid.

    For every grid point the value is the minimum over all chords through
    pairs of finite sample points that bracket it.  O(N^2) per point, fully
    independent of any Legendre transform code.
    """
    xs = np.asarray(xs, dtype=float)
    v = np.asarray(vals, dtype=float)
    n = xs.size
    out = v.copy()
    finite = np.isfinite(v)
    for i in range(n):
        left = np.flatnonzero(finite[: i + 1])
        right = i + np.flatnonzero(finite[i:])
        if left.size == 0 or right.size == 0:
            continue
        best = out[i]
        xl, vl = xs[left], v[left]
        xr, vr = xs[right], v[right]
        span = xr[None, :] - xl[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(span > 0, (xs[i] - xl[:, None]) / span, 0.0)
        cand = (1.0 - lam) * vl[:, None] + lam * vr[None, :]
        same = span <= 0
        cand[same] = np.broadcast_to(vl[:, None], cand.shape)[same]
        ok = (lam >= -1e-12) & (lam <= 1.0 + 1e-12)
        if np.any(ok):
            best = min(best, float(cand[ok].min()))
        out[i] = best
    return out


def midpoint_integral(g, lo, hi, resolution=64):
    """Composite midpoint integral of g over an axis-aligned box."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = lo.size
    axes = [
        lo[i] + (hi[i] - lo[i]) * (np.arange(resolution) + 0.5) / resolution
        for i in range(d)
    ]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    vol = float(np.prod(hi - lo))
    return vol * float(np.mean(g(pts)))


def quadratic_box_integral(lo, hi, c0=1.0, c2=1.0):
    """Exact integral of c0 + c2 |x|^2 over a box, by antiderivative."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    vol = float(np.prod(hi - lo))
    total = c0 * vol
    for i in range(lo.size):
        rest = np.prod(np.delete(hi - lo, i)) if lo.size > 1 else 1.0
        total += c2 * (hi[i] ** 3 - lo[i] ** 3) / 3.0 * float(rest)
    return total


def sawtooth_slopes(xi, n):
    """Slope pattern of the balanced two-slope sawtooth with mean xi.

    Slopes live in {+1, -1} except possibly one corrective cell so that the
    nodal values close up exactly (zero boundary for the oscillation).
    Only meaningful for |xi| <= 1.
    """
    if abs(xi) > 1:
        raise ValueError("sawtooth oracle needs |xi| <= 1")
    k = round((1.0 + xi) * n / 2.0)
    k = min(max(k, 0), n)
    slopes = np.array([1.0] * k + [-1.0] * (n - k))
    mismatch = xi - slopes.mean()
    slopes[-1] += n * mismatch
    # interleave so the profile looks like a sawtooth rather than one ramp
    order = np.argsort(np.tile(np.arange(n // 2 + 1), 2)[:n], kind="stable")
    return slopes[order]


def sawtooth_energy(f_scalar, xi, n):
    """Mean of f over one period of the explicit sawtooth with mean slope xi."""
    slopes = sawtooth_slopes(xi, n)
    return float(np.mean([f_scalar(s) for s in slopes]))


def double_well(s):
    return (s * s - 1.0) ** 2


def double_well_envelope(s):
    """Convex envelope of the scalar double-well, validated against
    lower_hull_1d in the tests before being used anywhere else."""
    u = np.asarray(s, dtype=float)
    return np.where(np.abs(u) >= 1.0, (u * u - 1.0) ** 2, 0.0)
