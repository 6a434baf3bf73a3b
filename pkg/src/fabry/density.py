"""Density estimators and the envelope-gap divergence classifier.

Four densities of an index family are estimated here, all normalized to
``[0, 1]``:

* ``window_density`` -- limsup over shrinking radii of the one-sided window
  count ratios (the sharpest classical window quantity).
* ``max_density`` -- Polya's maximum density of a plain index set.
* ``envelope_density`` -- the infimum slope bound ``a`` for which the
  integral of ``(n(r) - lower_env(n, a)(r)) / r^2`` diverges at zero for
  every truncation, taken over limit candidates ``n``; this is the quantity
  whose smallness forces a singularity on a short arc.
* ``log_average_density`` -- liminf of the two-sided logarithmic averages
  of the window counts.

Divergence of the envelope-gap integral is undecidable from finite data in
general, so the classifier splits its input:

* finite breakpoint functions get an exact local verdict at zero (the gap
  near zero is linear, so the integral diverges iff the gap is nonzero at
  the origin or grows linearly there);
* declared self-similar profiles get a band-sum verdict (per-scale
  contributions are summed; constant increments mean divergence, geometric
  decay means convergence);
* anything else can be fed to a growth-fit heuristic that may return
  ``inconclusive`` -- never a fabricated limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .envelope import (
    PwlError,
    PwlFunction,
    SelfSimilarSpec,
    _num,
    lower_regularization,
    pwl_sub,
    upper_regularization,
)
from .seqcore import IndexSet, WindowFamily, normalize_side, window_counts


class DensityError(ValueError):
    """Invalid input to a density estimator."""


DEFAULT_R_GRID = tuple(Fraction(1, 2**j) for j in range(1, 11))
DEFAULT_DELTA_GRID = tuple(Fraction(j, 10) for j in range(1, 10))
DEFAULT_A_TOL = Fraction(1, 64)
DEFAULT_HELLY_GRID = tuple(Fraction(j, 16) for j in range(17))


# ---------------------------------------------------------------------------
# exact segment integrals
# ---------------------------------------------------------------------------


def _segment_params(x0, y0, x1, y1):
    s = (y1 - y0) / (x1 - x0)
    return s, y0 - s * x0


def gap_integral(upper: PwlFunction, lower: PwlFunction, eps, delta) -> float:
    """Integral of ``(upper - lower)(r) / r^2`` over ``[eps, delta]``, exact
    per segment: a linear piece ``s r + b`` contributes
    ``s log(r2/r1) + b (1/r1 - 1/r2)``."""
    eps, delta = _num(eps), _num(delta)
    if not 0 < eps < delta:
        raise DensityError("need 0 < eps < delta")
    diff = pwl_sub(upper, lower).restrict(eps, delta)
    total = 0.0
    for x0, y0, x1, y1 in diff.segments():
        s, b = _segment_params(x0, y0, x1, y1)
        total += float(s) * math.log(float(x1) / float(x0))
        total += float(b) * (1.0 / float(x0) - 1.0 / float(x1))
    return total


def log_integral(f: PwlFunction, a, b) -> float:
    """Integral of ``f(t) / t`` over ``[a, b]``; tolerates jumps.

    With ``a == 0`` the leading pieces must vanish identically, otherwise
    the integral is infinite and a DensityError is raised.
    """
    a, b = _num(a), _num(b)
    total = 0.0
    for x0, y0, x1, y1 in f.segments():
        lo, hi = max(x0, a), min(x1, b)
        if lo >= hi:
            continue
        s, c = _segment_params(x0, y0, x1, y1)
        if lo == 0:
            if c != 0:
                raise DensityError("integrand does not vanish at 0; integral infinite")
            total += float(s) * float(hi - lo)
            continue
        total += float(s) * float(hi - lo) + float(c) * math.log(float(hi) / float(lo))
    return total


def truncated_integral(n: PwlFunction, slope_lo, delta, eps) -> float:
    """Envelope-gap integral of ``n`` against its lower envelope on [0, delta].

    The regularization interval equals the integration interval, and the
    result is the exact closed-form integral over ``[eps, delta]``.
    """
    delta, eps = _num(delta), _num(eps)
    if not 0 < eps < delta:
        raise DensityError("need 0 < eps < delta")
    base = n.restrict(0, delta) if n.domain != (0, delta) else n
    reg = lower_regularization(base, slope_lo)
    return gap_integral(base, reg, eps, delta)


# ---------------------------------------------------------------------------
# divergence classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceVerdict:
    verdict: str  # divergent | convergent | inconclusive
    evidence: dict = field(default_factory=dict)
    truncated_values: tuple = ()

    @property
    def divergent(self):
        return self.verdict == "divergent"


def _truncation_profile(upper, lower, delta, count=6):
    out = []
    eps = delta / 4
    for _ in range(count):
        out.append((float(eps), gap_integral(upper, lower, eps, delta)))
        eps = eps / 4
    return tuple(out)


def classify_gap(upper: PwlFunction, lower: PwlFunction, delta=None) -> DivergenceVerdict:
    """Exact verdict for ``integral (upper - lower)/r^2`` near zero.

    Both arguments are finite breakpoint functions on ``[0, d]`` with
    ``upper >= lower``.  The difference is linear on a first interval
    ``[0, x1]``; the integral diverges iff the difference is positive at 0
    (a ``1/eps`` pole) or has positive slope there (a logarithmic pole).
    """
    d = upper.x1 if delta is None else _num(delta)
    if upper.x0 != 0 or lower.x0 != 0:
        raise DensityError("classification requires domain starting at 0")
    u = upper if upper.x1 == d else upper.restrict(0, d)
    l = lower if lower.x1 == d else lower.restrict(0, d)
    diff = pwl_sub(u, l)
    g0 = diff.value(0)
    if g0 < 0:
        raise DensityError("upper function is not a majorant of lower")
    trunc = _truncation_profile(u, l, d)
    if g0 > 0:
        return DivergenceVerdict(
            "divergent", {"reason": "positive gap at 0", "c_pole": float(g0)}, trunc
        )
    segs = list(diff.segments())
    if segs:
        x0, y0, x1, y1 = segs[0]
        slope = (y1 - y0) / (x1 - x0)
        if slope > 0:
            return DivergenceVerdict(
                "divergent",
                {"reason": "linear gap growth at 0", "c_log": float(slope)},
                trunc,
            )
    return DivergenceVerdict("convergent", {"reason": "gap vanishes near 0"}, trunc)


def _classify_exact(n: PwlFunction, slope_lo, delta) -> DivergenceVerdict:
    base = n.restrict(0, delta) if n.domain != (0, _num(delta)) else n
    reg = lower_regularization(base, slope_lo)
    return classify_gap(base, reg, delta)


def _band_increments(spec: SelfSimilarSpec, slope_lo, delta):
    n = spec.realize()
    delta = _num(delta)
    if delta > 1:
        raise DensityError("delta must lie in (0, 1]")
    base = n if delta == 1 else n.restrict(0, delta)
    reg = lower_regularization(base, slope_lo)
    edges = [e for e in spec.band_edges() if e < delta]
    edges.append(delta)
    incs = []
    for lo, hi in zip(edges, edges[1:]):
        incs.append(gap_integral(base, reg, lo, hi))
    return incs  # innermost band first


def _classify_bands(spec: SelfSimilarSpec, slope_lo, delta) -> DivergenceVerdict:
    incs = _band_increments(spec, slope_lo, delta)
    # skip bands touched by the inner linear fill and the outer truncation
    middle = incs[2:-2]  # innermost first
    ev = {"band_increments": [float(v) for v in incs]}
    if len(middle) < 3:
        return DivergenceVerdict("inconclusive", {**ev, "reason": "too few bands"})
    tiny = 1e-12
    if all(v <= tiny for v in middle):
        return DivergenceVerdict("convergent", {**ev, "reason": "no band contribution"})
    # the integral diverges iff the inward tail of increments does not
    # vanish; under self-similarity the trend over middle bands extrapolates
    inward_ok = all(
        inner >= 0.6 * outer for inner, outer in zip(middle, middle[1:])
    )
    if min(middle) > tiny and inward_ok:
        return DivergenceVerdict(
            "divergent", {**ev, "reason": "non-vanishing inward band increments"}
        )
    decaying = all(
        inner <= 0.8 * outer + tiny for inner, outer in zip(middle, middle[1:])
    )
    if decaying:
        return DivergenceVerdict(
            "convergent", {**ev, "reason": "geometrically decaying band increments"}
        )
    return DivergenceVerdict("inconclusive", {**ev, "reason": "mixed band behavior"})


def _classify_growth_fit(n: PwlFunction, slope_lo, delta, points=10) -> DivergenceVerdict:
    delta = _num(delta)
    base = n.restrict(0, delta) if n.domain != (0, delta) else n
    reg = lower_regularization(base, slope_lo)
    eps_vals, i_vals = [], []
    eps = delta / 4
    for _ in range(points):
        eps_vals.append(float(eps))
        i_vals.append(gap_integral(base, reg, eps, delta))
        eps = eps / 2
    trunc = tuple(zip(eps_vals, i_vals))
    a = np.array([[1.0 / e, math.log(1.0 / e), 1.0] for e in eps_vals])
    coef, *_ = np.linalg.lstsq(a, np.array(i_vals), rcond=None)
    c_pole, c_log, _c0 = (float(v) for v in coef)
    scale = max(1.0, abs(i_vals[-1]))
    ev = {"c_pole": c_pole, "c_log": c_log}
    if c_pole > 1e-9 * scale * eps_vals[-1] and c_pole * (1.0 / eps_vals[-1]) > 0.1 * scale:
        return DivergenceVerdict("divergent", {**ev, "reason": "1/eps growth"}, trunc)
    if c_log > 1e-6 and c_log * math.log(1.0 / eps_vals[-1]) > 0.1 * scale:
        return DivergenceVerdict("divergent", {**ev, "reason": "log growth"}, trunc)
    if abs(i_vals[-1] - i_vals[-2]) <= 1e-9 * scale:
        return DivergenceVerdict("convergent", {**ev, "reason": "stabilized"}, trunc)
    return DivergenceVerdict("inconclusive", {**ev, "reason": "no clear fit"}, trunc)


def classify_divergence(
    candidate: Union[PwlFunction, SelfSimilarSpec],
    slope_lo,
    delta,
    method: str = "auto",
) -> DivergenceVerdict:
    """Verdict on divergence of the envelope-gap integral on ``[0, delta]``.

    ``method`` "auto" picks the exact rule for breakpoint functions and
    band sums for self-similar profiles; "growth_fit" forces the heuristic
    (breakpoint functions only).
    """
    if isinstance(candidate, SelfSimilarSpec):
        if method not in ("auto", "bands"):
            raise DensityError("self-similar profiles use the band method")
        return _classify_bands(candidate, slope_lo, delta)
    if method in ("auto", "exact"):
        return _classify_exact(candidate, slope_lo, delta)
    if method == "growth_fit":
        return _classify_growth_fit(candidate, slope_lo, delta)
    raise DensityError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowDensityEstimate:
    value: float
    side: str
    profile: tuple  # (r, best ratio, anchor used)
    clamped: bool
    k_min: int
    min_points: int

    def to_doc(self):
        return {
            "value": self.value,
            "side": self.side,
            "profile": [[float(r), v, m] for r, v, m in self.profile],
            "clamped": self.clamped,
            "k_min": self.k_min,
            "min_points": self.min_points,
        }


def window_density(
    fam: WindowFamily,
    side: str,
    r_grid: Sequence = DEFAULT_R_GRID,
    k_min: int = 0,
    min_points: int = 64,
) -> WindowDensityEstimate:
    """Limsup proxy for the window count ratios ``n_k(r) / r``.

    For each grid radius the inner limsup over windows is proxied by the
    maximum ratio over anchors with at least ``min_points`` indices inside
    the sliding part of the window (radii below that resolution are
    excluded: a single member would otherwise dominate the ratio).  The
    scalar is the maximum of the profile, clamped into [0, 1]; the raw
    profile is kept so convergence quality can be audited.
    """
    side = normalize_side(side)
    if not fam.windows:
        raise DensityError("empty window family")
    counts = [window_counts(fam, k, side) for k in range(len(fam.windows))]
    profile = []
    for r in r_grid:
        r = _num(r)
        best = None
        best_m = None
        for k in range(k_min, len(fam.windows)):
            m = fam.windows[k].m
            if r * m < min_points:
                continue
            ratio = float(counts[k].value(r) / r)
            if best is None or ratio > best:
                best, best_m = ratio, m
        if best is not None:
            profile.append((r, best, best_m))
    if not profile:
        raise DensityError(
            "no (r, window) pair meets the resolution guard; "
            "lower min_points or supply larger windows"
        )
    raw = max(v for _, v, _ in profile)
    return WindowDensityEstimate(
        value=min(1.0, max(0.0, raw)),
        side=side,
        profile=tuple(profile),
        clamped=raw > 1.0,
        k_min=k_min,
        min_points=min_points,
    )


@dataclass(frozen=True)
class MaxDensityEstimate:
    value: float
    profile: tuple  # (r, sup ratio)
    stable: bool
    stable_r: Optional[float]
    t_range: tuple
    note: str = ""

    def to_doc(self):
        return {
            "value": self.value,
            "profile": [[float(r), v] for r, v in self.profile],
            "stable": self.stable,
            "stable_r": self.stable_r,
            "t_range": list(self.t_range),
            "note": self.note,
        }


def max_density(
    lam: IndexSet,
    r_grid: Sequence = DEFAULT_R_GRID,
    t_min: Optional[int] = None,
    t_max: Optional[int] = None,
    stability_tol: float = 0.02,
) -> MaxDensityEstimate:
    """Polya maximum-density estimate of an index set.

    For each radius ``r`` the estimator takes the supremum over integer
    baselines ``t`` of ``(n((1+r) t) - n(t)) / (r t)``.  The outer limit is
    proxied by scanning the profile from the largest radius and keeping the
    value at the smallest radius still inside the stable prefix (successive
    differences below ``stability_tol``); on a finite prefix smaller radii
    degenerate because a single member dominates a short window.
    """
    if not lam.members:
        raise DensityError("maximum density of an empty set is undefined")
    members = np.asarray(lam.members, dtype=np.int64)
    top = int(members[-1])
    if t_max is None:
        t_max = top
    if t_min is None:
        t_min = max(32, t_max // 16)
    if t_min >= t_max:
        raise DensityError("t range is empty; prefix too short")
    profile = []
    for r in sorted((_num(r) for r in r_grid), reverse=True):
        hi_t = min(t_max, int(top / (1 + float(r))))
        if hi_t < t_min:
            continue
        ts = np.arange(t_min, hi_t + 1, dtype=np.int64)
        upper = np.floor((1 + float(r)) * ts).astype(np.int64)
        n_hi = np.searchsorted(members, upper, side="right")
        n_lo = np.searchsorted(members, ts, side="right")
        ratios = (n_hi - n_lo) / (float(r) * ts)
        profile.append((r, float(ratios.max())))
    if not profile:
        raise DensityError("t range exceeds the available prefix for every radius")
    stable_val, stable_r = profile[0][1], profile[0][0]
    stable = len(profile) > 1
    for (r_prev, v_prev), (r_cur, v_cur) in zip(profile, profile[1:]):
        if abs(v_cur - v_prev) <= stability_tol:
            stable_val, stable_r = v_cur, r_cur
        else:
            break
    return MaxDensityEstimate(
        value=stable_val,
        profile=tuple(profile),
        stable=stable,
        stable_r=float(stable_r),
        t_range=(int(t_min), int(t_max)),
    )


@dataclass(frozen=True)
class EnvelopeDensityEstimate:
    value: float
    bracket: tuple  # (lo, hi) Fractions
    side: Optional[str]
    per_delta: dict
    no_divergence: bool
    inconclusive: bool
    declared_profile: bool

    def to_doc(self):
        lo, hi = self.bracket
        return {
            "value": self.value,
            "bracket": [str(lo), str(hi)],
            "side": self.side,
            "per_delta": {str(k): v for k, v in self.per_delta.items()},
            "no_divergence": self.no_divergence,
            "inconclusive": self.inconclusive,
            "declared_profile": self.declared_profile,
        }


def envelope_density(
    candidate: Union[PwlFunction, SelfSimilarSpec],
    delta_grid: Sequence = DEFAULT_DELTA_GRID,
    a_tol=DEFAULT_A_TOL,
    side: Optional[str] = None,
) -> EnvelopeDensityEstimate:
    """Infimum slope bound with an everywhere-divergent envelope gap.

    Bisects ``a`` over [0, 1] on the predicate "divergent for every delta
    in the grid", which is monotone in ``a`` because raising the slope
    floor only lowers the envelope.  Returns the final bracket midpoint; if
    no slope bound in (0, 1] diverges the estimate is exactly 1.0.  For
    breakpoint candidates this is an upper estimate of the true infimum
    over all limit functions, since finite data yields only candidates.
    """
    a_tol = _num(a_tol)
    if isinstance(candidate, PwlFunction):
        dmax = candidate.x1
        grid = [d for d in (_num(d) for d in delta_grid) if d <= dmax]
    else:
        grid = [_num(d) for d in delta_grid]
    if not grid:
        raise DensityError("empty delta grid")
    inconclusive_seen = []

    def divergent_everywhere(a):
        per = {}
        for d in grid:
            v = classify_divergence(candidate, a, d)
            per[d] = v.verdict
            if v.verdict == "inconclusive":
                inconclusive_seen.append((a, d))
                return False, per
            if v.verdict != "divergent":
                return False, per
        return True, per

    hi = Fraction(1)
    ok_hi, per_hi = divergent_everywhere(hi)
    if not ok_hi:
        return EnvelopeDensityEstimate(
            value=1.0,
            bracket=(Fraction(1), Fraction(1)),
            side=side,
            per_delta=per_hi,
            no_divergence=True,
            inconclusive=bool(inconclusive_seen),
            declared_profile=isinstance(candidate, SelfSimilarSpec),
        )
    lo = Fraction(0)
    per_best = per_hi
    while hi - lo > a_tol:
        mid = (lo + hi) / 2
        ok, per = divergent_everywhere(mid)
        if ok:
            hi, per_best = mid, per
        else:
            lo = mid
    return EnvelopeDensityEstimate(
        value=float((lo + hi) / 2),
        bracket=(lo, hi),
        side=side,
        per_delta=per_best,
        no_divergence=False,
        inconclusive=bool(inconclusive_seen),
        declared_profile=isinstance(candidate, SelfSimilarSpec),
    )


@dataclass(frozen=True)
class LogAverageEstimate:
    value: float
    profile: tuple  # (r, min over windows, anchor)
    min_points: int

    def to_doc(self):
        return {
            "value": self.value,
            "profile": [[float(r), v, m] for r, v, m in self.profile],
            "min_points": self.min_points,
        }


def log_average_pair(n_plus: PwlFunction, n_minus: PwlFunction, r) -> float:
    """``(1 / 2r) * integral_0^r (n_plus + n_minus)(t) / t dt``."""
    r = _num(r)
    return (log_integral(n_plus, 0, r) + log_integral(n_minus, 0, r)) / (2 * float(r))


def _drop_origin_atom(f: PwlFunction) -> PwlFunction:
    c0 = f.value(f.x0)
    if c0 == 0:
        return f
    return PwlFunction(tuple((x, y - c0) for x, y in f.knots))


def log_average_density(
    fam: WindowFamily,
    r_grid: Sequence = DEFAULT_R_GRID,
    min_points: int = 64,
) -> LogAverageEstimate:
    """Liminf proxy for the two-sided logarithmic window averages.

    Window counts may be positive already at radius zero (the anchor itself
    can be a member); that atom would make the logarithmic integral
    infinite at every finite resolution although it vanishes in the limit,
    so it is subtracted before integrating.  The liminf over windows is
    proxied by the minimum over resolvable anchors and the outer liminf by
    the minimum of the profile.
    """
    if not fam.windows:
        raise DensityError("empty window family")
    pairs = []
    for k in range(len(fam.windows)):
        np_ = _drop_origin_atom(window_counts(fam, k, "plus"))
        nm_ = _drop_origin_atom(window_counts(fam, k, "minus"))
        pairs.append((fam.windows[k].m, np_, nm_))
    profile = []
    for r in r_grid:
        r = _num(r)
        best = None
        best_m = None
        for m, npl, nmi in pairs:
            if r * m < min_points:
                continue
            v = log_average_pair(npl, nmi, r)
            if best is None or v < best:
                best, best_m = v, m
        if best is not None:
            profile.append((r, best, best_m))
    if not profile:
        raise DensityError("no (r, window) pair meets the resolution guard")
    return LogAverageEstimate(
        value=min(v for _, v, _ in profile),
        profile=tuple(profile),
        min_points=min_points,
    )


# ---------------------------------------------------------------------------
# limit-function extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitCandidate:
    rep: PwlFunction
    anchors: tuple
    max_dev: float  # sup distance of raw members to representative
    projection_shift: float  # distance moved to restore exact invariants

    def to_doc(self):
        return {
            "breakpoints": [[str(x), str(y)] for x, y in self.rep.knots],
            "anchors": list(self.anchors),
            "max_dev": self.max_dev,
            "projection_shift": self.projection_shift,
        }


def _project_limit(grid, vals):
    """Smallest forward adjustment making grid values an increasing,
    1-Lipschitz profile vanishing at 0."""
    out = [Fraction(0)]
    for (g0, g1), v in zip(zip(grid, grid[1:]), vals[1:]):
        lo = out[-1]
        hi = out[-1] + (g1 - g0)
        out.append(min(max(v, lo), hi))
    return out


def helly_limits(
    fam: WindowFamily,
    side: str,
    grid: Sequence = DEFAULT_HELLY_GRID,
    cluster_tol: float = 0.1,
):
    """Cluster the window counts and return one limit candidate per cluster.

    Counts are evaluated on the grid, clustered greedily by sup distance to
    the running size-weighted centroid (largest windows first, so the best
    resolved profiles seed the clusters), and each cluster is represented
    by its weighted mean.  The mean of finite counts misses the limit-class
    invariants by O(1/m), so representatives are projected onto the exact
    class (increasing, 1-Lipschitz, zero at zero) and the adjustment size
    is reported.
    """
    side = normalize_side(side)
    if len(fam.windows) < 2:
        raise DensityError("limit extraction needs at least two windows")
    grid = [_num(g) for g in grid]
    if grid[0] != 0:
        raise DensityError("evaluation grid must start at 0")
    rows = []
    for k in range(len(fam.windows)):
        f = window_counts(fam, k, side)
        rows.append((fam.windows[k].m, [f.value(g) for g in grid]))
    rows.sort(key=lambda t: -t[0])
    clusters = []  # each: {"weight", "sums", "members"}
    for m, vals in rows:
        placed = False
        for cl in clusters:
            cen = [s / cl["weight"] for s in cl["sums"]]
            dist = max(abs(a - b) for a, b in zip(cen, vals))
            if dist <= cluster_tol:
                cl["weight"] += m
                cl["sums"] = [s + m * v for s, v in zip(cl["sums"], vals)]
                cl["members"].append((m, vals))
                placed = True
                break
        if not placed:
            clusters.append(
                {"weight": m, "sums": [m * v for v in vals], "members": [(m, vals)]}
            )
    out = []
    for cl in clusters:
        mean = [s / cl["weight"] for s in cl["sums"]]
        proj = _project_limit(grid, mean)
        rep = PwlFunction(tuple(zip(grid, proj)))
        if not (rep.is_increasing() and rep.is_one_lipschitz() and rep.value(0) == 0):
            raise DensityError("projection failed to restore limit invariants")
        max_dev = max(
            float(abs(a - b))
            for _, vals in cl["members"]
            for a, b in zip(mean, vals)
        )
        shift = max(float(abs(a - b)) for a, b in zip(mean, proj))
        out.append(
            LimitCandidate(
                rep=rep.canonical(),
                anchors=tuple(m for m, _ in cl["members"]),
                max_dev=max_dev,
                projection_shift=shift,
            )
        )
    out.sort(key=lambda c: -len(c.anchors))
    return out


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityReport:
    mode: str
    window: dict  # side -> WindowDensityEstimate
    maximum: MaxDensityEstimate
    envelope: dict  # side -> EnvelopeDensityEstimate (headline)
    envelope_empirical: dict  # side -> EnvelopeDensityEstimate or None
    log_average: LogAverageEstimate
    chain_ok: bool
    chain_tol: float
    predicted_delta: float
    predicted_half_angle: float
    cor3_delta: Optional[float]
    limits: dict  # side -> list of LimitCandidate
    anchors: tuple
    diagnostics: dict

    def to_doc(self):
        return {
            "mode": self.mode,
            "window_density": {s: e.to_doc() for s, e in self.window.items()},
            "max_density": self.maximum.to_doc(),
            "envelope_density": {s: e.to_doc() for s, e in self.envelope.items()},
            "envelope_density_empirical": {
                s: (e.to_doc() if e is not None else None)
                for s, e in self.envelope_empirical.items()
            },
            "log_average_density": self.log_average.to_doc(),
            "chain_ok": self.chain_ok,
            "chain_tol": self.chain_tol,
            "predicted": {
                "delta": self.predicted_delta,
                "half_angle": self.predicted_half_angle,
                "cor3_delta": self.cor3_delta,
            },
            "limit_candidates": {
                s: [c.to_doc() for c in cs] for s, cs in self.limits.items()
            },
            "anchors": list(self.anchors),
            "diagnostics": self.diagnostics,
        }


def density_report(
    fam: WindowFamily,
    truth=None,
    r_grid: Sequence = DEFAULT_R_GRID,
    delta_grid: Sequence = DEFAULT_DELTA_GRID,
    a_tol=DEFAULT_A_TOL,
    helly_grid: Sequence = DEFAULT_HELLY_GRID,
    cluster_tol: float = 0.1,
    chain_tol: float = 0.05,
    min_points: int = 64,
) -> DensityReport:
    """Assemble every density estimate for a window family.

    The predicted singular-arc half-angle is ``pi`` times the smaller of
    the two one-sided envelope densities; when the generator declared a
    self-similar limit profile the headline envelope density for that side
    uses it (band-sum classification) and the purely empirical estimate is
    kept alongside.  The chain flag checks ``envelope <= window + tol`` and
    ``window <= maximum + tol`` per side; it is computed, never assumed.
    """
    if not fam.windows:
        raise DensityError("empty window family")
    window = {}
    envelope = {}
    empirical = {}
    limits = {}
    diagnostics = {"sides": {}}
    declared = {
        "plus": getattr(truth, "limit_profile_plus", None),
        "minus": getattr(truth, "limit_profile_minus", None),
    }
    for side in ("plus", "minus"):
        window[side] = window_density(fam, side, r_grid, min_points=min_points)
        if len(fam.windows) >= 2:
            cands = helly_limits(fam, side, helly_grid, cluster_tol)
        else:
            cands = []
        limits[side] = cands
        emp = None
        if cands:
            # a limit function needs a persistent subsequence behind it: skip
            # single-window clusters unless they hold a best-resolved anchor
            top = sorted((w.m for w in fam.windows), reverse=True)[:2]
            used = [
                c
                for c in cands
                if len(c.anchors) >= 2 or any(m in top for m in c.anchors)
            ] or cands
            ests = [envelope_density(c.rep, delta_grid, a_tol, side) for c in used]
            emp = min(ests, key=lambda e: e.value)
        if declared[side] is not None:
            envelope[side] = envelope_density(declared[side], delta_grid, a_tol, side)
            empirical[side] = emp
        elif emp is not None:
            envelope[side] = emp
            empirical[side] = None
        else:
            raise DensityError(f"no envelope-density candidate on side {side}")
    union = fam.union_sets()
    if union.members:
        maximum = max_density(union, r_grid)
    else:
        maximum = MaxDensityEstimate(
            value=0.0,
            profile=(),
            stable=True,
            stable_r=None,
            t_range=(0, 0),
            note="no indices collected; density 0 by convention",
        )
    log_avg = log_average_density(fam, r_grid, min_points=min_points)
    chain_ok = True
    for side in ("plus", "minus"):
        d3 = envelope[side].value
        d1 = window[side].value
        if not (d3 <= d1 + chain_tol and d1 <= maximum.value + chain_tol):
            chain_ok = False
    # liminf-slope shortcut from the limit candidates (small-radius quarter)
    cor3 = None
    small = [r for r in sorted(_num(r) for r in r_grid)][: max(1, len(r_grid) // 4)]
    ratios = []
    for side in ("plus", "minus"):
        for c in limits[side]:
            for r in small:
                if c.rep.x0 <= r <= c.rep.x1 and r > 0:
                    ratios.append(float(c.rep.value(r) / r))
    if ratios:
        cor3 = min(ratios)
    delta = min(envelope["plus"].value, envelope["minus"].value)
    if cor3 is not None:
        delta = min(delta, cor3)
    return DensityReport(
        mode=fam.source,
        window=window,
        maximum=maximum,
        envelope=envelope,
        envelope_empirical=empirical,
        log_average=log_avg,
        chain_ok=chain_ok,
        chain_tol=chain_tol,
        predicted_delta=delta,
        predicted_half_angle=math.pi * delta,
        cor3_delta=cor3,
        limits=limits,
        anchors=tuple(fam.anchors()),
        diagnostics=diagnostics,
    )
