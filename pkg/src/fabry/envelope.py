"""Increasing piecewise-linear functions and slope-constrained envelopes.

The central object is :class:`PwlFunction`, a piecewise-linear function on a
closed interval given by its breakpoints.  A strictly increasing abscissa
list describes an ordinary continuous function; a repeated abscissa encodes
an upward jump, read right-continuously, which is how normalized index
counts of finite windows enter the library.

Two envelope operations act on continuous increasing inputs:

* ``lower_regularization(n, lo)`` -- the largest minorant of ``n`` whose
  slopes lie in ``[lo, 1]``.  Computed exactly on breakpoints as the
  infimal convolution of ``n`` with the kernel ``k(t) = t`` for ``t >= 0``
  and ``k(t) = lo * t`` for ``t < 0``.
* ``upper_regularization(n, hi)`` -- the smallest majorant of ``n`` whose
  slopes lie in ``[0, hi]``.  Computed as the supremal convolution with the
  mirrored kernel.

Both reduce to running-extremum sweeps over the breakpoints, so they are
exact in rational arithmetic.  Grid oracles in the test suite check them
independently against the convolution definitions.

A duality identity ties the two envelopes together on the 1-Lipschitz class:
the upper envelope of ``id - n`` at bound ``a`` equals ``id`` minus the
lower envelope of ``n`` at bound ``1 - a``.  ``duality_check`` evaluates
both sides so callers can assert it.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

Number = Union[Fraction, int, float]


class PwlError(ValueError):
    """Malformed or incompatible piecewise-linear input."""


def _num(v) -> Number:
    """Normalize a numeric input: rationals become Fraction, floats stay."""
    if isinstance(v, bool):
        raise PwlError("booleans are not valid coordinates")
    if isinstance(v, float):
        return v
    if isinstance(v, Rational):
        return Fraction(v)
    raise PwlError(f"unsupported numeric type {type(v).__name__}")


@dataclass(frozen=True)
class PwlFunction:
    """Piecewise-linear function given by breakpoints ``(x, y)``.

    Abscissas are non-decreasing; at most two consecutive breakpoints may
    share an abscissa, encoding a jump whose right value is the later one.
    Values are Fractions (exact mode) or floats; construction normalizes
    ints to Fraction but never mixes modes silently.
    """

    knots: tuple

    def __post_init__(self):
        kn = tuple((_num(x), _num(y)) for x, y in self.knots)
        if len(kn) < 2:
            raise PwlError("need at least two breakpoints")
        prev_x = None
        dup = False
        for x, _ in kn:
            if prev_x is not None:
                if x < prev_x:
                    raise PwlError("breakpoint abscissas must be non-decreasing")
                if x == prev_x:
                    if dup:
                        raise PwlError("more than two breakpoints share an abscissa")
                    dup = True
                else:
                    dup = False
            prev_x = x
        object.__setattr__(self, "knots", kn)
        object.__setattr__(self, "_xs", tuple(x for x, _ in kn))

    # -- basic queries ----------------------------------------------------

    @property
    def x0(self) -> Number:
        return self.knots[0][0]

    @property
    def x1(self) -> Number:
        return self.knots[-1][0]

    @property
    def domain(self):
        return (self.x0, self.x1)

    @property
    def is_exact(self) -> bool:
        return all(
            isinstance(x, Rational) and isinstance(y, Rational)
            for x, y in self.knots
        )

    def value(self, x):
        """Evaluate at ``x`` (right-continuous at jumps)."""
        x = _num(x)
        if x < self.x0 or x > self.x1:
            raise PwlError(f"{x} outside domain [{self.x0}, {self.x1}]")
        i = bisect_right(self._xs, x) - 1
        kx, ky = self.knots[i]
        if kx == x:
            return ky
        nx, ny = self.knots[i + 1]
        return ky + (x - kx) * (ny - ky) / (nx - kx)

    def left_value(self, x):
        """Limit from the left (equals value except at jump abscissas)."""
        x = _num(x)
        if x <= self.x0:
            return self.value(self.x0)
        i = bisect_right(self._xs, x) - 1
        kx, ky = self.knots[i]
        if kx == x and i > 0 and self.knots[i - 1][0] == x:
            return self.knots[i - 1][1]
        if kx == x:
            return ky
        nx, ny = self.knots[i + 1]
        return ky + (x - kx) * (ny - ky) / (nx - kx)

    def segments(self):
        """Yield (x0, y0, x1, y1) for every positive-width linear piece."""
        for (xa, ya), (xb, yb) in zip(self.knots, self.knots[1:]):
            if xb > xa:
                yield (xa, ya, xb, yb)

    def slopes(self):
        return [(yb - ya) / (xb - xa) for xa, ya, xb, yb in self.segments()]

    def jumps(self):
        """Jump points as (x, left_y, right_y) triples."""
        out = []
        for (xa, ya), (xb, yb) in zip(self.knots, self.knots[1:]):
            if xb == xa and yb != ya:
                out.append((xa, ya, yb))
        return out

    @property
    def is_continuous(self) -> bool:
        return not self.jumps()

    def is_increasing(self, tol=0) -> bool:
        return all(yb >= ya - tol for (_, ya), (_, yb) in zip(self.knots, self.knots[1:]))

    def is_one_lipschitz(self, tol=0) -> bool:
        """Slopes at most 1 between distinct abscissas (jumps excluded)."""
        return all(s <= 1 + tol for s in self.slopes())

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity(domain) -> "PwlFunction":
        a, b = domain
        return PwlFunction(((a, a), (b, b)))

    @staticmethod
    def constant(domain, c) -> "PwlFunction":
        a, b = domain
        return PwlFunction(((a, c), (b, c)))

    @staticmethod
    def from_samples(xs: Sequence, ys: Sequence) -> "PwlFunction":
        return PwlFunction(tuple(zip(xs, ys)))

    # -- structural operations ---------------------------------------------

    def canonical(self) -> "PwlFunction":
        """Drop zero-height jumps and merge collinear segments."""
        kn = [self.knots[0]]
        for x, y in self.knots[1:]:
            px, py = kn[-1]
            if x == px and y == py:
                continue
            if len(kn) >= 2:
                qx, qy = kn[-2]
                if qx != px and px != x:
                    s1 = (py - qy) / (px - qx)
                    s2 = (y - py) / (x - px)
                    if s1 == s2:
                        kn[-1] = (x, y)
                        continue
            kn.append((x, y))
        return PwlFunction(tuple(kn))

    def equals(self, other: "PwlFunction", tol=0) -> bool:
        a, b = self.canonical(), other.canonical()
        if tol == 0:
            return a.knots == b.knots
        if a.domain != b.domain:
            return False
        return sup_distance(a, b) <= tol

    def restrict(self, a, b) -> "PwlFunction":
        a, b = _num(a), _num(b)
        if not (self.x0 <= a < b <= self.x1):
            raise PwlError(f"[{a}, {b}] not inside [{self.x0}, {self.x1}]")
        kn = [(a, self.value(a))]
        for x, y in self.knots:
            if a < x < b:
                kn.append((x, y))
        lb, rb = self.left_value(b), self.value(b)
        if lb != rb:
            kn.append((b, lb))
        kn.append((b, rb))
        out = [kn[0]]
        for p in kn[1:]:
            if p != out[-1]:
                out.append(p)
        if len(out) == 1:
            out.append((b, rb))
        return PwlFunction(tuple(out)).canonical()

    def shift(self, dy) -> "PwlFunction":
        dy = _num(dy)
        return PwlFunction(tuple((x, y + dy) for x, y in self.knots))

    def scale(self, c) -> "PwlFunction":
        c = _num(c)
        return PwlFunction(tuple((x, c * y) for x, y in self.knots))

    def to_breakpoint_list(self):
        return [[x, y] for x, y in self.knots]


# ---------------------------------------------------------------------------
# combination helpers (continuous inputs)
# ---------------------------------------------------------------------------


def _require_continuous(*fs: PwlFunction):
    for f in fs:
        if not f.is_continuous:
            raise PwlError("operation requires a continuous piecewise-linear function")


def _common_domain(*fs: PwlFunction):
    d = fs[0].domain
    for f in fs[1:]:
        if f.domain != d:
            raise PwlError(f"domain mismatch: {f.domain} vs {d}")
    return d


def _merged_xs(fs: Iterable[PwlFunction]):
    xs = set()
    for f in fs:
        xs.update(x for x, _ in f.knots)
    return sorted(xs)


def pwl_linear(terms, id_coef=0, const=0) -> PwlFunction:
    """Exact linear combination ``sum(c * f) + id_coef * x + const``.

    All functions must be continuous and share a domain.
    """
    terms = [(_num(c), f) for c, f in terms]
    fs = [f for _, f in terms]
    if fs:
        _require_continuous(*fs)
        _common_domain(*fs)
        xs = _merged_xs(fs)
    else:
        raise PwlError("pwl_linear needs at least one function term")
    id_coef, const = _num(id_coef), _num(const)
    kn = []
    for x in xs:
        y = id_coef * x + const
        for c, f in terms:
            y = y + c * f.value(x)
        kn.append((x, y))
    return PwlFunction(tuple(kn)).canonical()


def pwl_sub(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    return pwl_linear([(1, f), (-1, g)])


def pwl_add(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    return pwl_linear([(1, f), (1, g)])


def id_minus(f: PwlFunction) -> PwlFunction:
    return pwl_linear([(-1, f)], id_coef=1)


def _pwl_extreme(f: PwlFunction, g: PwlFunction, want_min: bool) -> PwlFunction:
    _require_continuous(f, g)
    _common_domain(f, g)
    xs = _merged_xs([f, g])
    pick = min if want_min else max
    kn = []
    for xa, xb in zip(xs, xs[1:]):
        fa, ga = f.value(xa), g.value(xa)
        fb, gb = f.value(xb), g.value(xb)
        da, db = fa - ga, fb - gb
        kn.append((xa, pick(fa, ga)))
        if (da > 0 > db) or (da < 0 < db):
            t = da / (da - db)
            xc = xa + t * (xb - xa)
            kn.append((xc, f.value(xc)))
    xe = xs[-1]
    kn.append((xe, pick(f.value(xe), g.value(xe))))
    return PwlFunction(tuple(kn)).canonical()


def pwl_min(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    return _pwl_extreme(f, g, True)


def pwl_max(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    return _pwl_extreme(f, g, False)


def sup_distance(f: PwlFunction, g: PwlFunction, extra_points=()) -> float:
    """Sup-norm distance over merged breakpoints plus optional points."""
    _common_domain(f, g)
    best = 0
    pts = list(_merged_xs([f, g])) + [_num(p) for p in extra_points]
    for x in pts:
        d = abs(f.value(x) - g.value(x))
        if d > best:
            best = d
    return best


def evaluate_on_grid(f: PwlFunction, xs):
    return [f.value(x) for x in xs]


# ---------------------------------------------------------------------------
# running extrema sweeps
# ---------------------------------------------------------------------------


def _running_min_from_right(f: PwlFunction) -> PwlFunction:
    """Exact breakpoint form of ``x -> min of f over [x, x1]``."""
    _require_continuous(f)
    kn = list(f.knots)
    out = [kn[-1]]
    cur = kn[-1][1]
    for i in range(len(kn) - 2, -1, -1):
        x0, y0 = kn[i]
        x1, y1 = kn[i + 1]
        if x1 == x0:
            continue
        if y0 <= y1:
            # f increasing on the piece: M(x) = min(f(x), cur)
            if y0 >= cur:
                out.append((x0, cur))
            elif y1 <= cur:
                out.append((x0, y0))
                cur = y0
            else:
                t = (cur - y0) / (y1 - y0)
                xc = x0 + t * (x1 - x0)
                out.append((xc, cur))
                out.append((x0, y0))
                cur = y0
        else:
            # f decreasing: the piece minimum sits at its right end
            out.append((x0, cur))
    out.reverse()
    return PwlFunction(tuple(out)).canonical()


def _running_max_from_right(f: PwlFunction) -> PwlFunction:
    neg = PwlFunction(tuple((x, -y) for x, y in f.knots))
    m = _running_min_from_right(neg)
    return PwlFunction(tuple((x, -y) for x, y in m.knots))


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


def _check_slope_bound(v, name="slope bound"):
    v = _num(v)
    if not (0 <= v <= 1):
        raise PwlError(f"{name} must lie in [0, 1], got {v}")
    return v


def _prepared(n: PwlFunction, interval, lipschitz: bool) -> PwlFunction:
    _require_continuous(n)
    if interval is not None:
        a, b = interval
        n = n.restrict(a, b)
    if not n.is_increasing():
        raise PwlError("input must be increasing")
    if lipschitz and not n.is_one_lipschitz():
        raise PwlError("input must be 1-Lipschitz")
    return n


def lower_regularization(n: PwlFunction, lo, interval=None) -> PwlFunction:
    """Largest minorant of ``n`` on the interval with slopes in ``[lo, 1]``.

    ``n`` must be continuous, increasing and 1-Lipschitz on the interval.
    With ``lo == 0`` the result is ``n`` itself; raising ``lo`` lowers the
    result pointwise.  The value at the left endpoint may be negative: the
    slope floor anchored at the right endpoint can force the minorant below
    zero and no clamping is applied.
    """
    lo = _check_slope_bound(lo)
    n = _prepared(n, interval, lipschitz=True)
    if lo == 0:
        return n.canonical()
    h = pwl_linear([(1, n)], id_coef=-lo)
    m1 = _running_min_from_right(h)
    psi = pwl_linear([(1, m1)], id_coef=lo)
    return pwl_min(n, psi)


def upper_regularization(n: PwlFunction, hi, interval=None) -> PwlFunction:
    """Smallest majorant of ``n`` on the interval with slopes in ``[0, hi]``.

    ``n`` must be continuous and increasing.  A majorant always exists on a
    compact interval (constants are feasible), so the operation is total;
    when the total rise of ``n`` exceeds ``hi`` times the interval length
    the majorant simply detaches from ``n`` at the left end.
    """
    hi = _check_slope_bound(hi)
    n = _prepared(n, interval, lipschitz=False)
    h = pwl_linear([(1, n)], id_coef=-hi)
    m = _running_max_from_right(h)
    return pwl_linear([(1, m)], id_coef=hi)


def duality_check(n: PwlFunction, a, interval=None):
    """Both sides of the envelope duality on the 1-Lipschitz class.

    Returns ``(lhs, rhs)`` where ``lhs`` is the upper envelope of
    ``id - n`` at bound ``a`` and ``rhs`` is ``id`` minus the lower
    envelope of ``n`` at bound ``1 - a``.  They agree exactly in exact
    arithmetic; callers compare with ``equals``.
    """
    a = _check_slope_bound(a)
    n = _prepared(n, interval, lipschitz=True)
    if n.value(n.x0) != 0 or n.x0 != 0:
        raise PwlError("duality requires domain [0, d] with n(0) = 0")
    lhs = upper_regularization(id_minus(n), a)
    rhs = id_minus(lower_regularization(n, 1 - a))
    return lhs, rhs


def succ(n1: PwlFunction, n2: PwlFunction, tol=0) -> bool:
    """True iff ``n1 - n2`` is non-decreasing on the common domain."""
    _common_domain(n1, n2)
    diff = pwl_sub(n1, n2)
    return diff.is_increasing(tol=tol)


def linear_gap_witness(n: PwlFunction, a, interval=None) -> PwlFunction:
    """Witness ``w = a*id - upper_env(n, a) + n`` for the gap-transfer fact.

    For increasing ``n`` with ``n(0) = 0`` on ``[0, d]``, the witness
    satisfies ``w`` is increasing with ``w - n`` increasing, ``w <= a*id``,
    and the integral of ``(a*r - w(r)) / r^2`` converges exactly when the
    integral of ``(upper_env(n,a)(r) - n(r)) / r^2`` does.
    """
    a = _check_slope_bound(a)
    n = _prepared(n, interval, lipschitz=False)
    if n.x0 != 0 or n.value(0) != 0:
        raise PwlError("witness construction requires domain [0, d] with n(0) = 0")
    up = upper_regularization(n, a)
    return pwl_linear([(-1, up), (1, n)], id_coef=a)


# ---------------------------------------------------------------------------
# self-similar limit profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelfSimilarSpec:
    """Limit profile repeating multiplicatively with ratio ``rho``.

    ``pattern`` gives the profile's breakpoints on ``[rho, 1]``; the full
    function on ``(0, 1]`` is ``n(rho * x) = rho * n(x)``, which forces the
    consistency condition ``pattern(rho) == rho * pattern(1)``.  ``bands``
    is the number of scales realized when a finite breakpoint form is
    needed; below the last band the continuation is linear with the
    profile's top ratio, an error of at most ``rho ** bands``.
    """

    pattern: tuple
    rho: Fraction
    bands: int = 12

    def __post_init__(self):
        pat = tuple((_num(x), _num(y)) for x, y in self.pattern)
        rho = _num(self.rho)
        if not (0 < rho < 1):
            raise PwlError("rho must lie in (0, 1)")
        if len(pat) < 2 or pat[0][0] != rho or pat[-1][0] != 1:
            raise PwlError("pattern must span [rho, 1]")
        f = PwlFunction(pat)
        if not f.is_continuous or not f.is_increasing() or not f.is_one_lipschitz():
            raise PwlError("pattern must be continuous, increasing, 1-Lipschitz")
        if pat[0][1] != rho * pat[-1][1]:
            raise PwlError("pattern(rho) must equal rho * pattern(1)")
        if pat[-1][1] > 1:
            raise PwlError("pattern top value cannot exceed 1")
        if self.bands < 2:
            raise PwlError("need at least two bands")
        object.__setattr__(self, "pattern", pat)
        object.__setattr__(self, "rho", rho)

    @property
    def top_ratio(self):
        return self.pattern[-1][1]

    def realize(self, bands=None) -> PwlFunction:
        """Finite breakpoint form on [0, 1] with the given number of bands."""
        k = self.bands if bands is None else bands
        kn = [(Fraction(0), Fraction(0) if isinstance(self.rho, Rational) else 0.0)]
        scale = self.rho ** (k - 1)
        kn.append((scale * self.rho, scale * self.pattern[0][1]))
        for j in range(k - 1, -1, -1):
            scale = self.rho ** j
            for x, y in self.pattern[1:]:
                kn.append((scale * x, scale * y))
        return PwlFunction(tuple(kn)).canonical()

    def band_edges(self, bands=None):
        k = self.bands if bands is None else bands
        return [self.rho ** j for j in range(k, -1, -1)]

    def ratio_range(self):
        """(min, max) of ``n(x)/x`` over one period of the profile."""
        ratios = [y / x for x, y in self.pattern]
        return min(ratios), max(ratios)

    def zones(self, kind="flat"):
        """Sub-intervals of [rho, 1] where the profile is flat or climbing."""
        out = []
        f = PwlFunction(self.pattern)
        for xa, ya, xb, yb in f.segments():
            s = (yb - ya) / (xb - xa)
            if (kind == "flat" and s == 0) or (kind == "climb" and s > 0):
                out.append((xa, xb))
        return out
