"""Cantor-set stages and thickness, in exact rational arithmetic.

A *stage* is a finite union of disjoint closed intervals: one generation of a
Cantor-set construction.  The three producers here are the slope-3 N-map
family (built around an m-periodic base orbit), general Markov branch
systems, and endpoint-wise images of a stage under a monotone map.  The
consumer side is gap/bridge thickness and the Gap-Lemma trichotomy.

All endpoint arithmetic is `fractions.Fraction` whenever the inputs are
rational, so every thickness identity can be checked with zero rounding
error.  Float stages (e.g. smooth images) go through the same code paths.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .maps1d import AffineBranch, n_map

__all__ = [
    "CantorStage",
    "ThicknessReport",
    "ThicknessUndefinedError",
    "ConstructionError",
    "thickness",
    "build_nmap_cantor",
    "nmap_cantor_report",
    "nominal_thickness_bound",
    "GapLemmaVerdict",
    "gap_lemma_check",
    "MarkovBranchSystem",
    "markov_cantor",
    "middle_thirds_system",
    "ImageResult",
    "image_cantor",
    "stage_to_csv",
    "stage_to_json",
]


HALF = Fraction(1, 2)


class ConstructionError(ValueError):
    """An interval assembly violated its required ordering."""


class ThicknessUndefinedError(ValueError):
    """Thickness needs at least two intervals."""


@dataclass(frozen=True)
class CantorStage:
    """One generation of a Cantor construction: ordered disjoint closed intervals."""

    ambient: tuple
    intervals: tuple
    generation: int
    source: str = "generic"

    def __post_init__(self):
        lo, hi = self.ambient
        prev_hi = None
        for (a, b) in self.intervals:
            if not (lo <= a <= b <= hi):
                raise ConstructionError(f"interval [{a},{b}] escapes ambient [{lo},{hi}]")
            if prev_hi is not None and not (a > prev_hi):
                raise ConstructionError(f"intervals out of order or overlapping near {a}")
            prev_hi = b

    @property
    def hull(self):
        return (self.intervals[0][0], self.intervals[-1][1])

    def gaps(self) -> list[tuple]:
        """Bounded complementary components between consecutive intervals."""
        out = []
        for (a0, b0), (a1, b1) in zip(self.intervals, self.intervals[1:]):
            out.append((b0, a1))
        return out

    def translate(self, offset, new_ambient=None) -> "CantorStage":
        amb = new_ambient or (self.ambient[0] + offset, self.ambient[1] + offset)
        return CantorStage(
            ambient=amb,
            intervals=tuple((a + offset, b + offset) for a, b in self.intervals),
            generation=self.generation,
            source=self.source,
        )

    def rescale(self, a, b) -> "CantorStage":
        """Affine image x -> a*x + b (a != 0), exact for rational a, b."""
        if a == 0:
            raise ValueError("degenerate affine map")
        pts = [(a * lo + b, a * hi + b) for lo, hi in self.intervals]
        ivals = tuple(sorted((min(p), max(p)) for p in pts))
        amb = sorted((a * self.ambient[0] + b, a * self.ambient[1] + b))
        return CantorStage(tuple(amb), ivals, self.generation, self.source)


@dataclass(frozen=True)
class ThicknessReport:
    """Minimum bridge/gap ratio over all gap endpoints, with its witnesses."""

    thickness: object
    witness_gap: tuple
    witness_bridge: tuple
    endpoint_ratios: tuple  # (gap, endpoint, bridge, ratio) per gap boundary point

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return {"num": x.numerator, "den": x.denominator, "float": float(x)}
            if isinstance(x, tuple):
                return [enc(v) for v in x]
            return float(x)

        return {
            "thickness": enc(self.thickness),
            "witness_gap": enc(self.witness_gap),
            "witness_bridge": enc(self.witness_bridge),
            "endpoint_ratios": [
                {"gap": enc(g), "endpoint": enc(p), "bridge": enc(b), "ratio": enc(r)}
                for g, p, b, r in self.endpoint_ratios
            ],
        }


def thickness(stage: CantorStage) -> ThicknessReport:
    """Gap/bridge thickness of a stage.

    For each gap endpoint the bridge is the maximal interval on the far side
    of the gap that avoids every gap of length >= the current one (ties
    block), bounded by the convex hull of the stage.  The thickness is the
    minimum ratio Length(bridge)/Length(gap); exact when endpoints are exact.
    """
    if len(stage.intervals) < 2:
        raise ThicknessUndefinedError("need at least two intervals")
    gaps = stage.gaps()
    hull_lo, hull_hi = stage.hull
    records = []
    for i, (glo, ghi) in enumerate(gaps):
        glen = ghi - glo
        # left endpoint: bridge extends leftward until a blocking gap or the hull
        left_bound = hull_lo
        for j in range(i - 1, -1, -1):
            jlo, jhi = gaps[j]
            if jhi - jlo >= glen:
                left_bound = jhi
                break
        records.append(((glo, ghi), glo, (left_bound, glo), (glo - left_bound) / glen))
        # right endpoint: symmetric
        right_bound = hull_hi
        for j in range(i + 1, len(gaps)):
            jlo, jhi = gaps[j]
            if jhi - jlo >= glen:
                right_bound = jlo
                break
        records.append(((glo, ghi), ghi, (ghi, right_bound), (right_bound - ghi) / glen))
    best = min(records, key=lambda r: r[3])
    return ThicknessReport(
        thickness=best[3],
        witness_gap=best[0],
        witness_bridge=best[2],
        endpoint_ratios=tuple(records),
    )


# ---------------------------------------------------------------------------
# N-map Cantor family
# ---------------------------------------------------------------------------

def _nmap_branch_chain(m: int) -> list[int]:
    # branch indices into n_map().branches: 0 = left, 1 = middle, 2 = right;
    # the base orbit's itinerary is middle, right, (left, right)*(m/2-2), left, middle
    return [1, 2] + [0, 2] * (m // 2 - 2) + [0, 1]


def _require_order(points: Sequence, names: Sequence[str]):
    for (a, na), (b, nb) in zip(zip(points, names), zip(points[1:], names[1:])):
        if not a < b:
            raise ConstructionError(f"ordering violated: expected {na} < {nb} but {a} >= {b}")


@dataclass(frozen=True)
class NmapCantorData:
    """Exact scaffolding of the m-interval first generation."""

    m: int
    q: tuple  # forward orbit q0..q_{m-1}
    q_tilde: dict  # backward points, keyed by index
    first_generation: tuple  # intervals I_0..I_{m-1} in construction order
    ambient: tuple


def _build_nmap_scaffold(m: int) -> NmapCantorData:
    if m < 6 or m % 2:
        raise ValueError("m must be an even integer >= 6")
    s = n_map()
    chain = _nmap_branch_chain(m)
    # fixed point of the m-fold affine composition, rightmost branch applied first
    slope, intercept = Fraction(1), Fraction(0)
    for k in chain:
        br = s.branches[k]
        slope, intercept = br.slope * slope, br.slope * intercept + br.intercept
    q0 = intercept / (1 - slope)
    x_m = (1 - Fraction(1, 3 ** (m - 2))) / 2
    if not (x_m < q0 < HALF):
        raise ConstructionError(f"base point {q0} escapes ({x_m}, 1/2)")
    q = [q0]
    for step, k in enumerate(chain):
        br = s.branches[k]
        if not br.contains(q[-1]):
            raise ConstructionError(f"orbit point {q[-1]} left branch {k} at step {step}")
        q.append(br(q[-1]))
    if q[m] != q0:
        raise ConstructionError("orbit did not close")
    q = q[:m]

    left, mid, right = s.branches
    qt: dict[int, Fraction] = {}
    qt[0] = right.inverse(q[1])
    qt[m - 1] = mid.inverse(qt[0])
    for j in range(0, m - 4):
        src = left if j % 2 == 0 else right
        qt[m - j - 2] = src.inverse(qt[m - j - 1])
        if not src.contains(qt[m - j - 2]):
            raise ConstructionError(f"backward point qt{m-j-2} escapes its branch")
    if not (right.contains(qt[0]) and mid.contains(qt[m - 1])):
        raise ConstructionError("backward anchor points escape their branches")

    ivals: list[tuple] = [None] * m
    ivals[0] = (qt[0], q[m - 3])
    for i in range(1, m // 2 - 1):
        ivals[2 * i - 1] = (qt[2 * i + 1], q[2 * i - 1])
        ivals[2 * i] = (q[2 * i], qt[2 * i + 2])
    ivals[m - 3] = (q[m - 2], left.inverse(q[2]))
    ivals[m - 2] = (mid.inverse(q[2]), q[m - 1])
    ivals[m - 1] = (qt[m - 1], q[0])

    # the ordering chain pins the whole assembly; violations abort by name
    pts, names = [Fraction(-3, 2)], ["-3/2"]
    pts.append(q[2]); names.append("q2")
    for i in range(4, m - 1, 2):
        pts.append(qt[i]); names.append(f"qt{i}")
        pts.append(q[i]); names.append(f"q{i}")
    pts.append(Fraction(0)); names.append("0")
    pts.append(q[m - 1]); names.append(f"q{m-1}")
    pts.append(qt[m - 1]); names.append(f"qt{m-1}")
    pts.append(q[0]); names.append("q0")
    pts.append(HALF); names.append("1/2")
    pts.append(qt[0]); names.append("qt0")
    for i in range(m - 3, 1, -2):
        pts.append(q[i]); names.append(f"q{i}")
        if i >= 3:
            pts.append(qt[i]); names.append(f"qt{i}")
    pts.append(Fraction(3, 2)); names.append("3/2")
    _require_order(pts, names)

    return NmapCantorData(
        m=m,
        q=tuple(q),
        q_tilde=qt,
        first_generation=tuple(ivals),
        ambient=(q[2], q[1]),
    )


def _refine_once(first_gen: Sequence[tuple], current: Sequence[tuple]) -> list[tuple]:
    """One Markov refinement step under the N-map: preimages of `current`
    inside the first-generation cover, all exact."""
    s = n_map()
    out = []
    for (lo, hi) in first_gen:
        br = s.branches[s.branch_index(lo)]
        if not (br.contains(lo) and br.contains(hi)):
            raise ConstructionError(f"first-generation interval [{lo},{hi}] straddles a kink")
        img_lo, img_hi = sorted((br(lo), br(hi)))
        for (jlo, jhi) in current:
            a, b = max(jlo, img_lo), min(jhi, img_hi)
            if a < b:
                if (a, b) != (jlo, jhi):
                    raise ConstructionError(
                        f"branch image of [{lo},{hi}] covers [{jlo},{jhi}] only partially"
                    )
                pre = sorted((br.inverse(a), br.inverse(b)))
                out.append((pre[0], pre[1]))
    out.sort()
    return out


def build_nmap_cantor(m: int, generation: int) -> CantorStage:
    """Generation-`generation` stage of the affine Cantor set anchored to the
    m-periodic base orbit of the N-map.  All endpoints exact rationals.
    """
    if generation < 1:
        raise ValueError("generation must be >= 1")
    data = _build_nmap_scaffold(m)
    current = sorted(data.first_generation)
    first = sorted(data.first_generation)
    for _ in range(generation - 1):
        current = _refine_once(first, current)
    stage = CantorStage(
        ambient=data.ambient,
        intervals=tuple(current),
        generation=generation,
        source=f"nmap-cantor-m{m}",
    )
    # the turning points +-1/2 must fall in gaps at every generation
    for t in (HALF, -HALF):
        if any(a <= t <= b for a, b in stage.intervals):
            raise ConstructionError(f"turning point {t} not in a gap")
    return stage


def nominal_thickness_bound(m: int) -> Fraction:
    """Nominal closed-form thickness bound (3^m - 45)/22 for the m-orbit family.

    The exact stages realize (3^m - 49)/24, which is strictly below this
    nominal value for every m; reports carry both numbers so the discrepancy
    is visible rather than silently resolved.
    """
    return Fraction(3**m - 45, 22)


def nmap_cantor_report(m: int, generation: int) -> dict:
    """Thickness report for the m-orbit family plus the bookkeeping that the
    verification suite compares against closed forms."""
    data = _build_nmap_scaffold(m)
    stage = build_nmap_cantor(m, generation)
    rep = thickness(stage)
    q0, qt0 = data.q[0], data.q_tilde[0]
    gap_upper = qt0 - q0  # the gap straddling +1/2
    s = n_map()
    left, mid, _ = s.branches
    gap_lower = mid.inverse(data.q[2]) - left.inverse(data.q[2])  # straddles -1/2
    bound = nominal_thickness_bound(m)
    return {
        "m": m,
        "generation": generation,
        "q0": q0,
        "orbit": data.q,
        "x_m": (1 - Fraction(1, 3 ** (m - 2))) / 2,
        "ambient": stage.ambient,
        "n_intervals": len(stage.intervals),
        "thickness": rep.thickness,
        "witness_gap": rep.witness_gap,
        "witness_bridge": rep.witness_bridge,
        "gap_at_half": gap_upper,
        "gap_at_minus_half": gap_lower,
        "gap_at_half_closed_form": Fraction(8, 3**m - 1),
        "nominal_delta": Fraction(22, 3**m - 1),
        "nominal_bound": bound,
        "bound_holds": rep.thickness >= bound,
        "realized_closed_form": Fraction(3**m - 49, 24),
        "stage": stage,
        "thickness_report": rep,
    }


# ---------------------------------------------------------------------------
# Gap Lemma trichotomy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapLemmaVerdict:
    verdict: str  # K1-in-gap-of-K2 | K2-in-gap-of-K1 | intervals-intersect | inconclusive-at-this-generation
    tau_product: float
    detail: str = ""


def _hull_in_gap(hull: tuple, other: CantorStage) -> bool:
    lo, hi = hull
    o_lo, o_hi = other.hull
    if hi < o_lo or lo > o_hi:  # an unbounded complementary component
        return True
    return any(glo < lo and hi < ghi for glo, ghi in other.gaps())


def gap_lemma_check(k1: CantorStage, k2: CantorStage) -> GapLemmaVerdict:
    """Trichotomy verdict for two stages on a common line.

    `intervals-intersect` means some closed intervals overlap at this
    generation: the checkable surrogate for nonempty Cantor intersection.
    Containment counts both bounded gaps and the unbounded components beyond
    the other stage's hull.
    """
    try:
        tau = float(thickness(k1).thickness) * float(thickness(k2).thickness)
    except ThicknessUndefinedError:
        tau = float("nan")
    i, j = 0, 0
    a, b = k1.intervals, k2.intervals
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo <= hi:
            return GapLemmaVerdict("intervals-intersect", tau, f"overlap at [{lo},{hi}]")
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    if _hull_in_gap(k1.hull, k2):
        return GapLemmaVerdict("K1-in-gap-of-K2", tau)
    if _hull_in_gap(k2.hull, k1):
        return GapLemmaVerdict("K2-in-gap-of-K1", tau)
    return GapLemmaVerdict("inconclusive-at-this-generation", tau)


# ---------------------------------------------------------------------------
# Markov branch systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarkovBranchSystem:
    """Expanding branches (domain interval, affine branch) over an ambient interval."""

    branches: tuple
    ambient: tuple

    def __post_init__(self):
        prev_hi = None
        for dom, br in self.branches:
            if abs(br.slope) <= 1:
                raise ValueError(f"branch on {dom} is not expanding (|slope|={br.slope})")
            if prev_hi is not None and not dom[0] >= prev_hi:
                raise ValueError("branch domains must be disjoint and ordered")
            prev_hi = dom[1]


def markov_cantor(system: MarkovBranchSystem, generation: int) -> CantorStage:
    """Generation-g surviving set of the branch system: points whose first
    g-1 images stay inside the branch domains."""
    if generation < 1:
        raise ValueError("generation must be >= 1")
    current = sorted(dom for dom, _ in system.branches)
    for _ in range(generation - 1):
        nxt = []
        for dom, br in system.branches:
            img = sorted((br(dom[0]), br(dom[1])))
            for (jlo, jhi) in current:
                a, b = max(jlo, img[0]), min(jhi, img[1])
                if a < b:
                    pre = sorted((br.inverse(a), br.inverse(b)))
                    nxt.append((pre[0], pre[1]))
        if not nxt:
            raise ValueError("branch preimages died out; system is not Markov over its cover")
        current = sorted(nxt)
    return CantorStage(system.ambient, tuple(current), generation, "markov")


def middle_thirds_system() -> MarkovBranchSystem:
    one3, two3 = Fraction(1, 3), Fraction(2, 3)
    return MarkovBranchSystem(
        branches=(
            ((Fraction(0), one3), AffineBranch(Fraction(3), Fraction(0), Fraction(0), one3)),
            ((two3, Fraction(1)), AffineBranch(Fraction(3), Fraction(-2), two3, Fraction(1))),
        ),
        ambient=(Fraction(0), Fraction(1)),
    )


def nmap_restriction_system(m: int) -> MarkovBranchSystem:
    """The N-map's branches restricted to the first-generation cover of the
    m-orbit family; refines to the same stages as `build_nmap_cantor`."""
    data = _build_nmap_scaffold(m)
    s = n_map()
    branches = []
    for lo, hi in sorted(data.first_generation):
        br = s.branches[s.branch_index(lo)]
        branches.append(((lo, hi), AffineBranch(br.slope, br.intercept, lo, hi)))
    return MarkovBranchSystem(tuple(branches), data.ambient)


# ---------------------------------------------------------------------------
# Images under monotone maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImageResult:
    stage: CantorStage
    distortion: float  # max h' / min h' over the trimmed hull
    thickness_in: object
    thickness_out: object
    bound: float
    bound_holds: bool


def image_cantor(
    stage: CantorStage,
    fn: Callable,
    dfn: Callable | None = None,
    delta=None,
    check_grid: int = 512,
) -> ImageResult:
    """Endpoint-wise image of a stage under a strictly monotone map, with the
    distortion-controlled thickness bound as a companion check.

    The bound compares thickness(out) against thickness(in)/max(c, 4) where
    c is the derivative ratio over the delta-trimmed hull (default trim:
    1/100 of the ambient length).  Rational affine maps keep exact endpoints.
    """
    lo, hi = stage.ambient
    if delta is None:
        delta = (hi - lo) / 100
    xs = [lo + (hi - lo) * Fraction(k, check_grid) for k in range(check_grid + 1)]
    vals = [fn(float(x)) for x in xs]
    inc = all(a < b for a, b in zip(vals, vals[1:]))
    dec = all(a > b for a, b in zip(vals, vals[1:]))
    if not (inc or dec):
        raise ValueError("map is not strictly monotone on the sampled ambient grid")

    pts = []
    for a, b in stage.intervals:
        ia, ib = fn(a), fn(b)
        pts.append((ia, ib) if ia <= ib else (ib, ia))
    ivals = tuple(sorted(pts))
    amb = sorted((fn(lo), fn(hi)))
    out = CantorStage(tuple(amb), ivals, stage.generation, "image")

    h = 1e-7
    if dfn is None:
        dfn = lambda x: (fn(x + h) - fn(x - h)) / (2 * h)
    tlo, thi = float(lo + delta), float(hi - delta)
    grid = [tlo + (thi - tlo) * k / check_grid for k in range(check_grid + 1)]
    ds = [abs(dfn(x)) for x in grid]
    c = max(ds) / min(ds)

    t_in = thickness(stage).thickness
    t_out = thickness(out).thickness
    bound = float(t_in) / max(c, 4.0)
    return ImageResult(out, c, t_in, t_out, bound, float(t_out) >= bound)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**15)


def stage_to_csv(stage: CantorStage, path, config_hash: str | None = None):
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_hash: {config_hash}\n")
        w = csv.writer(fh)
        w.writerow(["generation", "left_num", "left_den", "right_num", "right_den"])
        for a, b in stage.intervals:
            fa, fb = _as_fraction(a), _as_fraction(b)
            w.writerow([stage.generation, fa.numerator, fa.denominator, fb.numerator, fb.denominator])


def stage_to_json(stage: CantorStage) -> dict:
    def enc(x):
        if isinstance(x, Fraction):
            return {"num": x.numerator, "den": x.denominator, "float": float(x)}
        return float(x)

    return {
        "source": stage.source,
        "generation": stage.generation,
        "ambient": [enc(stage.ambient[0]), enc(stage.ambient[1])],
        "intervals": [[enc(a), enc(b)] for a, b in stage.intervals],
    }
