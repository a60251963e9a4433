"""Planar dynamics engine.

Orbits, saddle solving, Lyapunov exponents, invariant-manifold polylines,
and tangency detection/classification between an unstable and a stable
curve measured along vertical fibers.

Sign conventions for tangency events
------------------------------------
Per fiber the raw gap is (unstable ordinate) - (stable ordinate).  An event
is the interior extremum of that gap nearest zero; it is *peak* type when
the gap is locally concave (unstable curve crests against the stable one
from below) and *valley* type when locally convex.  The reported
`penetration` is the gap at a peak and minus the gap at a valley, so that
penetration > 0 exactly when transverse crossings exist near the event.
With that orientation, contact-making means the penetration crosses zero
upward as the scan parameter increases, contact-breaking downward; at an
upper (peak) event the penetration slope equals the raw gap slope, at a
lower (valley) event it is the negative of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .maps1d import Cubic1D

__all__ = [
    "PlanarFamily",
    "cubic_henon",
    "Orbit",
    "iterate",
    "NewtonDivergenceError",
    "SaddlePoint",
    "find_saddle",
    "find_fixed_points",
    "LyapunovEstimate",
    "lyapunov",
    "ManifoldCurve",
    "grow_manifold",
    "polyline_curve",
    "WindowRejected",
    "TangencyCandidate",
    "detect_tangencies",
    "window_extremal_gap",
    "FiberGapProbe",
    "TangencyEvent",
    "classify_tangency",
    "periodic_ordinate",
    "velocity_table",
    "limit_upper_gap",
    "LocusFit",
    "tangency_locus",
]


@dataclass(frozen=True)
class PlanarFamily:
    """A parameterized planar map: scalar-in/scalar-out callables, numpy safe.

    `forward(params, x, y) -> (x', y')`; `inverse` optional (None for
    endomorphisms); `jacobian(params, x, y) -> ((a,b),(c,d))` optional with a
    finite-difference fallback.
    """

    name: str
    param_names: tuple
    forward: Callable
    inverse: Callable | None = None
    jacobian: Callable | None = None

    def jac(self, params, x, y, h=1e-6):
        if self.jacobian is not None:
            return self.jacobian(params, x, y)
        fxp = self.forward(params, x + h, y)
        fxm = self.forward(params, x - h, y)
        fyp = self.forward(params, x, y + h)
        fym = self.forward(params, x, y - h)
        return (
            ((fxp[0] - fxm[0]) / (2 * h), (fyp[0] - fym[0]) / (2 * h)),
            ((fxp[1] - fxm[1]) / (2 * h), (fyp[1] - fym[1]) / (2 * h)),
        )


def cubic_henon(name: str = "cubic-henon") -> PlanarFamily:
    """The constant-Jacobian family (x, y) -> (b*y, -y^3 + a*y + x)."""

    def fwd(p, x, y):
        a, b = p
        return (b * y, -(y ** 3) + a * y + x)

    def inv(p, x, y):
        a, b = p
        yy = x / b
        return (y + yy ** 3 - a * yy, yy)

    def jac(p, x, y):
        a, b = p
        z = 0.0 * y
        return ((z, b + z), (1.0 + z, -3.0 * y ** 2 + a))

    return PlanarFamily(name, ("a", "b"), fwd, inverse=inv, jacobian=jac)


# ---------------------------------------------------------------------------
# Orbits and exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Orbit:
    points: np.ndarray
    escaped: bool = False
    steps_requested: int = 0


def iterate(family: PlanarFamily, params, start, steps: int, bailout: float = 1e6) -> Orbit:
    """Successive images of `start`; truncates with a flag on escape or non-finite values."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    x, y = float(start[0]), float(start[1])
    pts = np.empty((steps + 1, 2))
    pts[0] = (x, y)
    for k in range(1, steps + 1):
        x, y = family.forward(params, x, y)
        if not (math.isfinite(x) and math.isfinite(y)) or x * x + y * y > bailout * bailout:
            return Orbit(pts[:k].copy(), escaped=True, steps_requested=steps)
        pts[k] = (x, y)
    return Orbit(pts, escaped=False, steps_requested=steps)


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    drift: float  # |last-quarter mean - full mean|, convergence diagnostic
    steps_used: int
    escaped: bool = False


def lyapunov(
    family: PlanarFamily,
    params,
    start,
    steps: int,
    discard: int = 1000,
    bailout: float = 1e6,
) -> LyapunovEstimate:
    """Top Lyapunov exponent by tangent-vector renormalization.

    The first `discard` steps align the vector and are excluded from the
    average, which makes the estimate exact (to roundoff) on linear maps.
    """
    if steps < 10_000:
        raise ValueError("need steps >= 10^4 for a meaningful estimate")
    x, y = float(start[0]), float(start[1])
    vx, vy = 0.673, 0.7397  # arbitrary unit-ish direction, no special alignment
    logs = np.empty(steps)
    for k in range(discard):
        (j11, j12), (j21, j22) = family.jac(params, x, y)
        vx, vy = j11 * vx + j12 * vy, j21 * vx + j22 * vy
        nv = math.hypot(vx, vy)
        if nv == 0.0:
            return LyapunovEstimate(float("nan"), float("nan"), 0, escaped=True)
        vx, vy = vx / nv, vy / nv
        x, y = family.forward(params, x, y)
        if not (math.isfinite(x) and math.isfinite(y)) or x * x + y * y > bailout * bailout:
            return LyapunovEstimate(float("nan"), float("nan"), k, escaped=True)
    used = 0
    for k in range(steps):
        (j11, j12), (j21, j22) = family.jac(params, x, y)
        vx, vy = j11 * vx + j12 * vy, j21 * vx + j22 * vy
        nv = math.hypot(vx, vy)
        if nv == 0.0:
            break
        logs[k] = math.log(nv)
        vx, vy = vx / nv, vy / nv
        x, y = family.forward(params, x, y)
        used = k + 1
        if not (math.isfinite(x) and math.isfinite(y)) or x * x + y * y > bailout * bailout:
            return LyapunovEstimate(float("nan"), float("nan"), used, escaped=True)
    logs = logs[:used]
    full = float(np.mean(logs))
    quarter = float(np.mean(logs[-max(1, used // 4):]))
    return LyapunovEstimate(full, abs(quarter - full), used)


# ---------------------------------------------------------------------------
# Saddles
# ---------------------------------------------------------------------------

class NewtonDivergenceError(RuntimeError):
    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class SaddlePoint:
    location: tuple
    period: int
    eig_unstable: float
    eig_stable: float
    vec_unstable: tuple
    vec_stable: tuple

    @property
    def is_saddle(self) -> bool:
        return abs(self.eig_unstable) > 1.0 > abs(self.eig_stable)

    @property
    def eigenvalues(self) -> tuple:
        return (self.eig_unstable, self.eig_stable)


def _orbit_jacobian(family, params, x, y, period):
    J = np.eye(2)
    for _ in range(period):
        (a, b), (c, d) = family.jac(params, x, y)
        J = np.array([[a, b], [c, d]], dtype=float) @ J
        x, y = family.forward(params, x, y)
    return J, (x, y)


def find_saddle(
    family: PlanarFamily,
    params,
    period: int = 1,
    seed=(0.0, 0.0),
    tol: float = 1e-12,
    max_iter: int = 100,
) -> SaddlePoint:
    """Newton solve of map^period - id from `seed`, with eigendata attached.

    A non-saddle spectrum is reported in the result, not raised; divergence
    raises `NewtonDivergenceError` carrying the last iterate.
    """
    z = np.array([float(seed[0]), float(seed[1])])
    for _ in range(max_iter):
        J, img = _orbit_jacobian(family, params, z[0], z[1], period)
        r = np.array(img) - z
        try:
            step = np.linalg.solve(J - np.eye(2), -r)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergenceError(f"singular Newton system at {tuple(z)}", tuple(z)) from exc
        z = z + step
        if np.linalg.norm(r) < tol and np.linalg.norm(step) < 100 * tol * max(1.0, np.linalg.norm(z)):
            break
    else:
        raise NewtonDivergenceError(f"no convergence after {max_iter} iterations", tuple(z))
    J, _ = _orbit_jacobian(family, params, z[0], z[1], period)
    w, v = np.linalg.eig(J)
    w, v = np.real_if_close(w), np.real_if_close(v)
    order = np.argsort(-np.abs(w))
    w, v = w[order], v[:, order]
    return SaddlePoint(
        location=(float(z[0]), float(z[1])),
        period=period,
        eig_unstable=float(np.real(w[0])),
        eig_stable=float(np.real(w[1])),
        vec_unstable=tuple(float(t) for t in np.real(v[:, 0])),
        vec_stable=tuple(float(t) for t in np.real(v[:, 1])),
    )


def find_fixed_points(family: PlanarFamily, params, box=((-3, 3), (-3, 3)), grid: int = 50, tol: float = 1e-12):
    """Exhaustive Newton sweep over a seed grid, deduplicated by location."""
    (xlo, xhi), (ylo, yhi) = box
    found = []
    for xs in np.linspace(xlo, xhi, grid):
        for ys in np.linspace(ylo, yhi, grid):
            try:
                s = find_saddle(family, params, period=1, seed=(xs, ys), tol=tol, max_iter=40)
            except NewtonDivergenceError:
                continue
            lx, ly = s.location
            if not (xlo - 1 <= lx <= xhi + 1 and ylo - 1 <= ly <= yhi + 1):
                continue
            if any(math.hypot(lx - f.location[0], ly - f.location[1]) < 1e-7 for f in found):
                continue
            found.append(s)
    found.sort(key=lambda s: s.location)
    return found


# ---------------------------------------------------------------------------
# Invariant manifolds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifoldCurve:
    points: np.ndarray  # (N, 2) polyline
    kind: str  # "unstable" | "stable"
    base: SaddlePoint | None
    arclength: np.ndarray
    complete: bool = True  # False when truncated by budget or clip

    @property
    def total_arclength(self) -> float:
        return float(self.arclength[-1]) if len(self.arclength) else 0.0


def polyline_curve(points, kind: str = "unstable") -> ManifoldCurve:
    """Wrap a raw polyline (e.g. an analytic test curve) as a ManifoldCurve."""
    pts = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return ManifoldCurve(pts, kind, None, np.concatenate([[0.0], np.cumsum(seg)]))


def grow_manifold(
    family: PlanarFamily,
    params,
    saddle: SaddlePoint,
    kind: str = "unstable",
    target_arclength: float = 10.0,
    h_min: float = 1e-5,
    h_max: float = 1e-2,
    angle_max: float = 0.2,
    max_points: int = 2_000_000,
    seed_eps: float = 1e-6,
    branch: int = +1,
    direction=None,
    clip: float = 50.0,
    max_levels: int = 64,
) -> ManifoldCurve:
    """Adaptive polyline for one branch of a saddle's invariant manifold.

    Seeds a linear fundamental domain [p + eps*v, M(p + eps*v)] on the
    relevant eigendirection (M is the period-composed map, squared when the
    multiplier is negative so the branch is preserved; the inverse map for
    stable manifolds) and pushes it forward level by level, bisecting the
    seed parameter until consecutive image points meet the spacing and
    turning-angle controls.  `direction` orients the eigenvector (its sign
    is otherwise arbitrary); `branch` then selects the side.  Growth stops
    at `target_arclength`, at the point budget, or when the curve leaves
    the |coordinate| <= clip box (the last two mark the curve incomplete).
    """
    if kind == "unstable":
        mult, v = saddle.eig_unstable, saddle.vec_unstable
        base_map = family.forward
    elif kind == "stable":
        if family.inverse is None:
            raise ValueError("stable manifold needs an inverse map")
        mult, v = saddle.eig_stable, saddle.vec_stable
        base_map = family.inverse
    else:
        raise ValueError("kind must be 'unstable' or 'stable'")

    reps = saddle.period * (2 if mult < 0 else 1)
    p = np.array(saddle.location)
    vv = np.array(v, dtype=float)
    vv /= np.linalg.norm(vv)
    if direction is not None and float(np.dot(vv, np.asarray(direction, float))) < 0:
        vv = -vv

    def advance(x, y, levels):
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(levels * reps):
                x, y = base_map(params, x, y)
        return x, y

    x0 = p + branch * seed_eps * vv
    x1 = np.array(advance(x0[0], x0[1], 1))
    if np.linalg.norm(x1 - p) <= np.linalg.norm(x0 - p):
        raise ValueError("seed direction is not expanding under the chosen map")

    def eval_level(ts, level):
        px = x0[0] + ts * (x1[0] - x0[0])
        py = x0[1] + ts * (x1[1] - x0[1])
        px, py = advance(px, py, level)
        return np.column_stack([np.asarray(px, float), np.asarray(py, float)])

    pts: list[np.ndarray] = [x0.copy()]
    arc = [0.0]
    complete = True
    done = False
    ts = np.array([0.0, 1.0])
    cos_max = math.cos(angle_max)
    for level in range(max_levels):
        if done:
            break
        P = eval_level(ts, level)
        for _pass in range(80):
            seg = np.diff(P, axis=0)
            d = np.hypot(seg[:, 0], seg[:, 1])
            finite = np.isfinite(P).all(axis=1)
            need = d > h_max
            with np.errstate(invalid="ignore", divide="ignore"):
                cosang = np.sum(seg[:-1] * seg[1:], axis=1) / (d[:-1] * d[1:])
            bad = (cosang < cos_max) & (d[:-1] > h_min) & (d[1:] > h_min)
            need[:-1] |= bad
            need[1:] |= bad
            inside = (np.abs(P) <= clip).all(axis=1)
            need &= inside[:-1] | inside[1:]  # the escaping tail stays coarse
            need &= (np.diff(ts) > 1e-14) & (d > h_min) & finite[:-1] & finite[1:]
            if not need.any():
                break
            if len(ts) + int(need.sum()) + len(pts) > max_points:
                complete = False
                break
            tm = 0.5 * (ts[:-1] + ts[1:])[need]
            ts = np.concatenate([ts, tm])
            P = np.vstack([P, eval_level(tm, level)])
            order = np.argsort(ts)
            ts, P = ts[order], P[order]
        # append this level; index 0 duplicates the previous level's endpoint
        for q in P[1:]:
            if not np.isfinite(q).all() or np.max(np.abs(q)) > clip:
                complete = False
                done = True
                break
            arc.append(arc[-1] + float(math.hypot(q[0] - pts[-1][0], q[1] - pts[-1][1])))
            pts.append(q.copy())
            if arc[-1] >= target_arclength:
                done = True
                break
            if len(pts) > max_points:
                complete = False
                done = True
                break
    return ManifoldCurve(np.array(pts), kind, saddle, np.array(arc), complete=complete)


# ---------------------------------------------------------------------------
# Tangency detection along vertical fibers
# ---------------------------------------------------------------------------

class WindowRejected(ValueError):
    """A fiber crossed a curve zero or multiple times inside the window."""


def _fiber_ordinate(curve: ManifoldCurve, x: float, ylo: float, yhi: float) -> float:
    pts = curve.points
    xs, ys = pts[:, 0], pts[:, 1]
    hits = []
    sgn = np.sign(xs - x)
    for i in np.nonzero(sgn[:-1] * sgn[1:] <= 0)[0]:
        x0, y0 = pts[i]
        x1, y1 = pts[i + 1]
        if x0 == x1:
            y = 0.5 * (y0 + y1)
        else:
            y = y0 + (x - x0) * (y1 - y0) / (x1 - x0)
        if ylo <= y <= yhi:
            if not any(abs(y - h) < 1e-12 for h in hits):
                hits.append(float(y))
    if len(hits) != 1:
        raise WindowRejected(
            f"fiber x={x}: expected one crossing in y-range [{ylo},{yhi}], got {len(hits)}"
        )
    return hits[0]


def _quad_vertex(xs, gs):
    """Vertex of the parabola through three points; returns (x*, g*, curvature)."""
    c = np.polyfit(xs, gs, 2)
    a, b = c[0], c[1]
    if a == 0:
        return float(xs[1]), float(gs[1]), 0.0
    xv = -b / (2 * a)
    gv = np.polyval(c, xv)
    return float(xv), float(gv), float(2 * a)


@dataclass(frozen=True)
class TangencyCandidate:
    location: tuple  # (x, y) of the near-touch
    gap: float  # extremal (unstable - stable) ordinate difference
    penetration: float  # sign-normalized: > 0 iff transverse crossings exist
    kind: str  # "peak" | "valley"
    curvature_unstable: float
    curvature_stable: float
    fit_noise: float


def detect_tangencies(
    wu: ManifoldCurve,
    ws: ManifoldCurve,
    window,
    n_fibers: int = 81,
    fiber_margin: float = 0.0,
) -> list[TangencyCandidate]:
    """Near-tangencies of two curves inside a window, via vertical fibers.

    Each fiber must meet each curve exactly once inside the window (else
    `WindowRejected`).  Interior local minima of |gap| are refined by a
    quadratic fit; the candidate records the extremal gap, its
    sign-normalized penetration, and the discrete curvature of each curve.
    """
    (xlo, xhi), (ylo, yhi) = window
    xs = np.linspace(xlo + fiber_margin, xhi - fiber_margin, n_fibers)
    gu = np.array([_fiber_ordinate(wu, float(x), ylo, yhi) for x in xs])
    gs = np.array([_fiber_ordinate(ws, float(x), ylo, yhi) for x in xs])
    gap = gu - gs
    out = []
    for i in range(1, n_fibers - 1):
        if abs(gap[i]) <= abs(gap[i - 1]) and abs(gap[i]) <= abs(gap[i + 1]):
            # skip plateau duplicates
            if i >= 2 and abs(gap[i]) == abs(gap[i - 1]):
                continue
            xv, gv, curv = _quad_vertex(xs[i - 1 : i + 2], gap[i - 1 : i + 2])
            if not (xs[i - 1] <= xv <= xs[i + 1]):
                xv, gv = float(xs[i]), float(gap[i])
            kind = "peak" if curv < 0 else "valley"
            pen = gv if kind == "peak" else -gv
            ku = _local_curvature(xs, gu, i)
            ks = _local_curvature(xs, gs, i)
            noise = _fit_noise(xs, gap, i)
            yv = _fiber_ordinate(wu, xv, ylo, yhi) if xlo <= xv <= xhi else float(gu[i])
            out.append(
                TangencyCandidate(
                    location=(xv, float(yv)),
                    gap=gv,
                    penetration=pen,
                    kind=kind,
                    curvature_unstable=ku,
                    curvature_stable=ks,
                    fit_noise=noise,
                )
            )
    return out


def window_extremal_gap(
    wu: ManifoldCurve,
    ws: ManifoldCurve,
    window,
    mode: str,
    n_fibers: int = 81,
) -> TangencyCandidate:
    """Quadratically refined extremum of the fiber gap over a whole window.

    `mode` "peak" tracks the maximum of (unstable - stable), "valley" the
    minimum.  More robust than local-minimum detection when interpolation
    ripple sits near zero, so parameter scans bisect on this.
    """
    (xlo, xhi), (ylo, yhi) = window
    xs = np.linspace(xlo, xhi, n_fibers)
    gu = np.array([_fiber_ordinate(wu, float(x), ylo, yhi) for x in xs])
    gs = np.array([_fiber_ordinate(ws, float(x), ylo, yhi) for x in xs])
    gap = gu - gs
    i = int(np.argmax(gap) if mode == "peak" else np.argmin(gap))
    i = min(max(i, 1), n_fibers - 2)
    xv, gv, _curv = _quad_vertex(xs[i - 1 : i + 2], gap[i - 1 : i + 2])
    if not (xs[i - 1] <= xv <= xs[i + 1]):
        xv, gv = float(xs[i]), float(gap[i])
    pen = gv if mode == "peak" else -gv
    yv = _fiber_ordinate(wu, xv, ylo, yhi) if xlo <= xv <= xhi else float(gu[i])
    return TangencyCandidate(
        location=(xv, float(yv)),
        gap=gv,
        penetration=pen,
        kind=mode,
        curvature_unstable=_local_curvature(xs, gu, i),
        curvature_stable=_local_curvature(xs, gs, i),
        fit_noise=_fit_noise(xs, gap, i),
    )


def _local_curvature(xs, ys, i, half: int = 3):
    lo, hi = max(0, i - half), min(len(xs), i + half + 1)
    c = np.polyfit(xs[lo:hi], ys[lo:hi], 2)
    return float(2 * c[0])


def _fit_noise(xs, gap, i, half: int = 3):
    lo, hi = max(0, i - half), min(len(xs), i + half + 1)
    c = np.polyfit(xs[lo:hi], gap[lo:hi], 2)
    return float(np.max(np.abs(np.polyval(c, xs[lo:hi]) - gap[lo:hi])))


# ---------------------------------------------------------------------------
# Classification along a one-parameter scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangencyEvent:
    parameter: float
    location: tuple
    min_gap: float
    penetration: float
    gap_slope: float  # d(penetration)/dt, Richardson refined
    classification: str  # contact-making | contact-breaking | transverse | withheld
    kind: str
    richardson_consistent: bool
    curvature_gap: float
    detail: str = ""


def classify_tangency(
    probe: Callable[[float], TangencyCandidate],
    t0: float,
    dt: float,
    noise_floor: float = 1e-4,
) -> TangencyEvent:
    """Classify the event tracked by `probe` (t -> TangencyCandidate) at t0.

    The penetration slope is measured by central differences at dt and dt/2
    and Richardson-extrapolated; making = upward zero crossing of the
    penetration, breaking = downward.  A slope below the noise floor
    withholds classification; a penetration bounded away from zero across
    the probe interval reports transverse.
    """
    c0 = probe(t0)
    cp, cm = probe(t0 + dt), probe(t0 - dt)
    cp2, cm2 = probe(t0 + dt / 2), probe(t0 - dt / 2)
    s1 = (cp.penetration - cm.penetration) / (2 * dt)
    s2 = (cp2.penetration - cm2.penetration) / dt
    slope = (4 * s2 - s1) / 3
    consistent = abs(s1 - s2) <= 0.1 * max(abs(slope), noise_floor)
    pens = [cm.penetration, cm2.penetration, c0.penetration, cp2.penetration, cp.penetration]
    if min(abs(p) for p in pens) > 2 * abs(slope) * dt + 10 * noise_floor:
        cls = "transverse"
    elif abs(slope) < noise_floor:
        cls = "withheld"
    elif slope > 0:
        cls = "contact-making"
    else:
        cls = "contact-breaking"
    return TangencyEvent(
        parameter=t0,
        location=c0.location,
        min_gap=c0.gap,
        penetration=c0.penetration,
        gap_slope=slope,
        classification=cls,
        kind=c0.kind,
        richardson_consistent=consistent,
        curvature_gap=abs(c0.curvature_unstable - c0.curvature_stable),
        detail=f"slopes dt={s1:.6g} dt/2={s2:.6g}",
    )


@dataclass
class FiberGapProbe:
    """t -> TangencyCandidate for one tangency region of a parameter scan.

    `curve` maps the scan parameter t to family parameters.  Saddles are
    re-solved at every t (seeded from the previous solution), both manifolds
    regrown, and the window's extremal gap measured.  `mode` is "peak" for
    regions where the unstable curve crests into the stable one from below
    and "valley" for the mirrored geometry.
    """

    family: PlanarFamily
    curve: Callable
    unstable_seed: tuple
    stable_seed: tuple
    window: tuple
    mode: str
    period: int = 2
    unstable_direction: tuple = (1.0, 0.0)
    stable_direction: tuple = (1.0, 0.0)
    unstable_arclength: float = 11.0
    stable_arclength: float = 5.5
    h_max: float = 5e-3
    n_fibers: int = 81
    clip: float = 12.0
    freeze_unstable: bool = False

    def __post_init__(self):
        self._u_seed = tuple(self.unstable_seed)
        self._s_seed = tuple(self.stable_seed)
        self._frozen_wu = None

    def _unstable_curveline(self, params):
        su = find_saddle(self.family, params, period=self.period, seed=self._u_seed)
        self._u_seed = su.location
        return grow_manifold(
            self.family, params, su, "unstable",
            target_arclength=self.unstable_arclength, h_max=self.h_max,
            direction=self.unstable_direction, clip=self.clip,
        )

    def __call__(self, t: float) -> TangencyCandidate:
        params = self.curve(t)
        if self.freeze_unstable:
            if self._frozen_wu is None:
                self._frozen_wu = self._unstable_curveline(self.curve(0.0))
            wu = self._frozen_wu
        else:
            wu = self._unstable_curveline(params)
        ss = find_saddle(self.family, params, period=self.period, seed=self._s_seed)
        self._s_seed = ss.location
        ws = grow_manifold(
            self.family, params, ss, "stable",
            target_arclength=self.stable_arclength, h_max=self.h_max,
            direction=self.stable_direction, clip=self.clip,
        )
        return window_extremal_gap(wu, ws, self.window, self.mode, self.n_fibers)

    def penetration(self, t: float) -> float:
        return self(t).penetration

    def locate_zero(self, bracket: tuple, tol: float = 1e-8) -> float:
        lo, hi = bracket
        plo, phi = self.penetration(lo), self.penetration(hi)
        if plo == 0.0:
            return lo
        if phi == 0.0:
            return hi
        if plo * phi > 0:
            raise ValueError(f"no penetration sign change over {bracket}: {plo} vs {phi}")
        for _ in range(200):
            if hi - lo < tol:
                break
            mid = 0.5 * (lo + hi)
            pm = self.penetration(mid)
            if pm == 0.0:
                return mid
            if plo * pm < 0:
                hi, phi = mid, pm
            else:
                lo, plo = mid, pm
        return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Velocities of the limit family's reference objects
# ---------------------------------------------------------------------------

def periodic_ordinate(mu: float, nu: float, sign: int = +1, tol: float = 1e-13) -> float:
    """Ordinate of the period-2 reference point of the limit family near
    sign*2: the solution of F(F(y)) = y continued from (mu, nu) = (3, 0)."""
    f = Cubic1D(mu, nu)
    y = 2.0 * sign
    for _ in range(100):
        fy = f(y)
        g = f(fy) - y
        dg = f(fy, 1) * f(y, 1) - 1.0
        step = g / dg
        y -= step
        if abs(step) < tol:
            return y
    raise RuntimeError(f"period-2 ordinate solve failed at (mu={mu}, nu={nu})")


def velocity_table(step: float = 1e-5) -> dict:
    """Central-difference parameter velocities at (mu, nu) = (3, 0).

    Keys: ('y1', sign, 'mu'|'nu') for the period-2 ordinates and
    ('critical_value', sign, 'mu'|'nu') for the critical values of the
    one-dimensional cubic.
    """
    out = {}
    for sign in (+1, -1):
        out[("y1", sign, "mu")] = (
            periodic_ordinate(3 + step, 0, sign) - periodic_ordinate(3 - step, 0, sign)
        ) / (2 * step)
        out[("y1", sign, "nu")] = (
            periodic_ordinate(3, step, sign) - periodic_ordinate(3, -step, sign)
        ) / (2 * step)

        def crit_val(mu, nu):
            f = Cubic1D(mu, nu)
            c = f.critical_points()[1 if sign > 0 else 0]
            return f(c)

        out[("critical_value", sign, "mu")] = (crit_val(3 + step, 0) - crit_val(3 - step, 0)) / (2 * step)
        out[("critical_value", sign, "nu")] = (crit_val(3, step) - crit_val(3, -step)) / (2 * step)
    return out


def limit_upper_gap(mu: float, nu: float, freeze_unstable_at=None) -> float:
    """Peak-minus-line gap of the limit family at the upper near-touch:
    critical value of the cubic against the period-2 ordinate near +2.

    `freeze_unstable_at=(mu0, nu0)` evaluates the peak at frozen parameters,
    which removes the unstable side's parameter velocity (a diagnostic for
    which velocity terms drive the locus slope).
    """
    pmu, pnu = freeze_unstable_at if freeze_unstable_at else (mu, nu)
    f = Cubic1D(pmu, pnu)
    peak = f(f.critical_points()[1])
    return peak - periodic_ordinate(mu, nu, +1)


# ---------------------------------------------------------------------------
# Tangency locus in (mu, nu)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocusFit:
    slope: float
    intercept: float
    mu_values: tuple
    nu_values: tuple
    skipped: tuple
    strictly_decreasing: bool


def tangency_locus(
    gap_fn: Callable[[float, float], float],
    mu_values: Sequence[float],
    nu_bracket: tuple,
    tol: float = 1e-10,
) -> LocusFit:
    """For each mu, bisect gap_fn(mu, .) = 0 over the nu bracket; fit the locus.

    Grid points whose bracket shows no sign change are skipped and reported.
    """
    mus, nus, skipped = [], [], []
    for mu in mu_values:
        lo, hi = nu_bracket
        glo, ghi = gap_fn(mu, lo), gap_fn(mu, hi)
        if glo == 0.0:
            mus.append(mu); nus.append(lo); continue
        if ghi == 0.0:
            mus.append(mu); nus.append(hi); continue
        if glo * ghi > 0:
            skipped.append(mu)
            continue
        for _ in range(200):
            if hi - lo < tol:
                break
            mid = 0.5 * (lo + hi)
            gm = gap_fn(mu, mid)
            if gm == 0.0:
                lo = hi = mid
                break
            if glo * gm < 0:
                hi, ghi = mid, gm
            else:
                lo, glo = mid, gm
        mus.append(mu)
        nus.append(0.5 * (lo + hi))
    if len(mus) < 2:
        raise ValueError("locus lost on too many grid points to fit a slope")
    slope, intercept = np.polyfit(mus, nus, 1)
    decreasing = all(b < a for a, b in zip(nus, nus[1:]))
    return LocusFit(float(slope), float(intercept), tuple(mus), tuple(nus), tuple(skipped), decreasing)
