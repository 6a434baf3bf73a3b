"""Zero-count bounds, bounded-multiplicity interval covers, and the
coefficient-interpolating contour integral.

``min_zero_bound`` turns sign-change counts into a lower bound on the zeros
of any real-analytic interpolant of ``(-1)^n a_n``; ``verify_zero_bound``
checks that bound against dense samples of a concrete interpolant, counting
strict sign crossings (which miss even-order zeros, so a slack term is
reported rather than asserting the multiplicity-inclusive count).

``select_cover`` reduces a finite set of open intervals to a subset with
the same union in which no point is covered more than twice: intervals are
inspected in decreasing length (ties: left endpoint, then input order),
kept unless already inside the union of earlier keeps, and a second pass
removes any survivor contained in the union of the others.

``contour_interpolant`` evaluates ``(1/2 pi i) * integral f(-e^z) e^{-sz} dz``
over either the straight vertical segment through ``-eps`` or the deformed
rectangle path; at non-negative integers ``s`` it reproduces ``(-1)^s a_s``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .envelope import _num
from .seqcore import sign_changes


class AnalysisError(ValueError):
    pass


class QuadratureError(AnalysisError):
    """Adaptive quadrature failed to reach the requested tolerance."""


# ---------------------------------------------------------------------------
# zero-count bound
# ---------------------------------------------------------------------------


def min_zero_bound(seq) -> int:
    """Length-minus-one of the sequence minus its sign-change count.

    Any real-analytic function on ``[0, N]`` taking the values
    ``(-1)^n a_n`` at the integers has at least this many zeros there,
    counting multiplicities.
    """
    vals = list(seq)
    if not vals:
        return 0
    return len(vals) - 1 - len(sign_changes(vals))


@dataclass(frozen=True)
class ZeroBoundCheck:
    bound: int
    crossings: int
    slack: int
    ok: bool

    def to_doc(self):
        return {
            "bound": self.bound,
            "crossings": self.crossings,
            "multiplicity_slack": self.slack,
            "ok": self.ok,
        }


def count_sign_crossings(values) -> int:
    """Strict sign alternations in a sample vector, zeros skipped."""
    cnt = 0
    last = 0
    for v in values:
        if v == 0:
            continue
        s = 1 if v > 0 else -1
        if last and s != last:
            cnt += 1
        last = s
    return cnt


def verify_zero_bound(
    seq, xs, fs, interp_tol=1e-8, multiplicity_slack=0
) -> ZeroBoundCheck:
    """Check dense interpolant samples against the zero-count bound.

    ``xs, fs`` sample a smooth function with ``f(n) = (-1)^n a_n``; the
    interpolation condition is verified at every integer within tolerance
    (samples need not hit integers exactly; the nearest sample is used and
    the local increment absorbed into the tolerance).  Crossing counts miss
    zeros of even order, so the check asserts
    ``crossings >= bound - multiplicity_slack``; generic perturbed
    interpolants need no slack.
    """
    vals = list(seq)
    xs = np.asarray(xs, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if xs.shape != fs.shape or xs.ndim != 1 or len(xs) < 2:
        raise AnalysisError("need matching 1-d sample arrays")
    step = float(np.max(np.diff(xs)))
    for n, a in enumerate(vals):
        i = int(np.argmin(np.abs(xs - n)))
        if abs(xs[i] - n) > step:
            raise AnalysisError(f"no sample near integer {n}")
        target = (-1) ** n * float(a)
        scale = 1.0 + abs(target)
        if abs(fs[i] - target) > interp_tol * scale + 4.0 * step * scale:
            raise AnalysisError(
                f"samples violate the interpolation condition at n={n}: "
                f"{fs[i]} vs {target}"
            )
    bound = min_zero_bound(vals)
    crossings = count_sign_crossings(fs)
    return ZeroBoundCheck(
        bound=bound,
        crossings=crossings,
        slack=multiplicity_slack,
        ok=crossings >= bound - multiplicity_slack,
    )


# ---------------------------------------------------------------------------
# interval covers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalSet:
    """Finite list of open intervals with positive length."""

    intervals: tuple

    def __post_init__(self):
        iv = tuple((_num(a), _num(b)) for a, b in self.intervals)
        for a, b in iv:
            if not a < b:
                raise AnalysisError(f"empty or inverted interval ({a}, {b})")
        object.__setattr__(self, "intervals", iv)

    def __len__(self):
        return len(self.intervals)

    def merged_components(self):
        """Disjoint open components of the union, endpoints exact.

        Touching intervals stay separate: open sets (a, c) and (c, b) do
        not cover the point c.
        """
        if not self.intervals:
            return []
        ivs = sorted(self.intervals)
        out = [list(ivs[0])]
        for a, b in ivs[1:]:
            if a < out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return [(a, b) for a, b in out]

    def covers_interval(self, a, b) -> bool:
        """Whether the open interval (a, b) lies inside the union."""
        for ca, cb in self.merged_components():
            if ca <= a and b <= cb:
                return True
        return False

    def multiplicity(self, x) -> int:
        return sum(1 for a, b in self.intervals if a < x < b)

    def to_doc(self):
        return {"intervals": [[str(a), str(b)] for a, b in self.intervals]}


def select_cover(es: IntervalSet) -> IntervalSet:
    """Subset with the same union covering no point more than twice.

    Pass 1 walks the intervals in decreasing length (ties broken by left
    endpoint, then input order) and keeps each interval not contained in
    the union of earlier keeps.  Pass 2 repeatedly drops a kept interval
    contained in the union of the other keeps, shortest candidates first,
    until none qualifies.  The result has the same union; a triple
    intersection would force one member inside the union of two others,
    so multiplicity is at most two.
    """
    order = sorted(
        range(len(es.intervals)),
        key=lambda i: (-(es.intervals[i][1] - es.intervals[i][0]), es.intervals[i][0], i),
    )
    selected = []
    for i in order:
        a, b = es.intervals[i]
        if not selected or not IntervalSet(tuple(selected)).covers_interval(a, b):
            selected.append((a, b))
    # pass 2: remove redundant members, shortest first, one at a time
    changed = True
    while changed:
        changed = False
        by_len = sorted(range(len(selected)), key=lambda i: (selected[i][1] - selected[i][0], i))
        for i in by_len:
            others = [iv for j, iv in enumerate(selected) if j != i]
            if others and IntervalSet(tuple(others)).covers_interval(*selected[i]):
                del selected[i]
                changed = True
                break
    return IntervalSet(tuple(selected))


def multiplicity_audit(es: IntervalSet, points) -> int:
    """Maximum cover multiplicity over the probe points."""
    return max((es.multiplicity(_num(p)) for p in points), default=0)


# ---------------------------------------------------------------------------
# contour interpolation
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _gauss_segment(g, a: complex, b: complex):
    mid = (a + b) / 2
    half = (b - a) / 2
    acc = 0j
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        acc += w * g(mid + half * t)
    return acc * half


def adaptive_contour_segment(g, a: complex, b: complex, tol=1e-9, max_depth=28):
    """Adaptive composite Gauss rule for ``integral g`` along segment [a, b].

    Subdivides until the whole-vs-halves comparison is below tolerance;
    the comparison doubles as a convergence check for the returned value.
    """

    def rec(a, b, tol, depth):
        whole = _gauss_segment(g, a, b)
        mid = (a + b) / 2
        split = _gauss_segment(g, a, mid) + _gauss_segment(g, mid, b)
        if abs(split - whole) <= tol:
            return split
        if depth >= max_depth:
            raise QuadratureError(
                f"no convergence on segment {a} .. {b}: residual {abs(split - whole):.3e}"
            )
        return rec(a, mid, tol / 2, depth + 1) + rec(mid, b, tol / 2, depth + 1)

    return rec(a, b, tol, 0)


@dataclass(frozen=True)
class ContourSpec:
    """Integration path parameters.

    ``shape`` "vertical" is the single segment from ``-i pi - eps`` to
    ``i pi - eps``.  ``shape`` "rectangle" deforms the middle part to the
    right: vertical through ``-eps`` between ``-+ i pi b``, horizontals out
    to ``Re = eps1``, and verticals on ``Re = eps1`` up to ``-+ i pi``.
    The rectangle's two outer verticals end a period apart, so it computes
    the same values at integer points whenever the integrand extends across
    ``|Im z| in [pi b, pi]``.
    """

    epsilon: float = 0.1
    epsilon1: float = 0.2
    b: float = 0.5
    shape: str = "vertical"

    def __post_init__(self):
        if self.epsilon <= 0 or self.epsilon1 <= 0:
            raise AnalysisError("epsilon and epsilon1 must be positive")
        if not 0 < self.b < 1:
            raise AnalysisError("b must lie in (0, 1)")
        if self.shape not in ("vertical", "rectangle"):
            raise AnalysisError(f"unknown path shape {self.shape!r}")

    def segments(self):
        e, e1, b = self.epsilon, self.epsilon1, self.b
        if self.shape == "vertical":
            return [(-1j * math.pi - e, 1j * math.pi - e)]
        return [
            (-1j * math.pi + e1, -1j * math.pi * b + e1),
            (-1j * math.pi * b + e1, -1j * math.pi * b - e),
            (-1j * math.pi * b - e, 1j * math.pi * b - e),
            (1j * math.pi * b - e, 1j * math.pi * b + e1),
            (1j * math.pi * b + e1, 1j * math.pi + e1),
        ]

    def sup_growth(self, theta: float) -> float:
        """Exponential growth rate ``sup(-Re(z e^{i theta}))`` of the path."""
        best = -math.inf
        for a, b_ in self.segments():
            for t in np.linspace(0.0, 1.0, 33):
                z = a + (b_ - a) * t
                best = max(best, -(z * cmath.exp(1j * theta)).real)
        return best


def contour_interpolant(f, z: complex, spec: ContourSpec = ContourSpec(), tol=1e-9):
    """Evaluate the interpolating transform of ``f`` at ``z``.

    ``f`` maps the series variable; the integrand is ``f(-e^w) e^{-z w}``.
    The vertical path requires ``f`` analytic on ``|w| <= e^{-eps}`` (true
    for any series with radius 1); the rectangle additionally requires an
    extension across the outer arcs and reproduces the same integer values.
    At non-negative integers ``m`` the result is ``(-1)^m a_m`` up to
    quadrature error.
    """
    z = complex(z)

    def g(w):
        return f(-cmath.exp(w)) * cmath.exp(-z * w)

    total = 0j
    for a, b in spec.segments():
        total += adaptive_contour_segment(g, a, b, tol=tol)
    return total / (2j * math.pi)
