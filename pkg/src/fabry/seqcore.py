"""Coefficient sequences, sign-change sets, window families, and generators.

A power-series prefix is held as exact (re, im) rational pairs; decimal
input strings convert to Fractions losslessly, so "exact" covers every
value the file formats can express.  Sign data is extracted by rotating
coefficients onto a line through the origin and recording where the real
parts change sign; windows anchored at indices with near-maximal
``|a_m| ** (1/m)`` collect those sign changes one-sidedly, above and below
the anchor.

Everything here is a pure function of its inputs; sequences, index sets and
window families are immutable and safe to share between threads.  Generator
randomness is confined to a ``random.Random(seed)`` local to one call.
"""

from __future__ import annotations

import cmath
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence

from .envelope import Number, PwlFunction, PwlError, SelfSimilarSpec, _num

TWO_PI = 2 * math.pi


class SequenceError(ValueError):
    """Invalid coefficient data or generator request."""


def _cx(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cinv(a):
    d = a[0] * a[0] + a[1] * a[1]
    if d == 0:
        raise SequenceError("division by zero in exact complex arithmetic")
    return (a[0] / d, -a[1] / d)


# ---------------------------------------------------------------------------
# index sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexSet:
    """Strictly increasing tuple of non-negative integers."""

    members: tuple

    def __post_init__(self):
        ms = tuple(int(m) for m in self.members)
        prev = -1
        for m in ms:
            if m < 0:
                raise SequenceError("index sets hold non-negative integers")
            if m <= prev:
                raise SequenceError("index set members must be strictly increasing")
            prev = m
        object.__setattr__(self, "members", ms)

    @staticmethod
    def from_iterable(it) -> "IndexSet":
        return IndexSet(tuple(sorted(set(int(m) for m in it))))

    def counting(self, r) -> int:
        """Number of members not exceeding ``r``."""
        if r < 0:
            return 0
        return bisect_right(self.members, r)

    def clipped(self, lo: int, hi: int) -> "IndexSet":
        return IndexSet(tuple(m for m in self.members if lo <= m <= hi))

    def union(self, other: "IndexSet") -> "IndexSet":
        return IndexSet.from_iterable(self.members + other.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, m):
        i = bisect_right(self.members, m)
        return i > 0 and self.members[i - 1] == m


def counting(lam: IndexSet, r) -> int:
    """Counting function: members of ``lam`` not exceeding ``r`` (r >= 0)."""
    if r < 0:
        raise SequenceError("counting is defined for r >= 0")
    return lam.counting(r)


# ---------------------------------------------------------------------------
# sign changes
# ---------------------------------------------------------------------------


def sign_changes(values: Sequence, zero_eps=None) -> IndexSet:
    """Indices where the real sequence changes sign.

    A sign change sits at index ``m`` when ``values[m] * values[k] < 0`` for
    the nearest preceding index ``k`` with a nonzero entry; zeros in between
    are skipped and are never sign-change locations themselves.  Entries
    with magnitude at most ``zero_eps`` count as zero; the default is exact
    zero for rational input and 1e-300 for floats, which suppresses sign
    noise from underflowed rounding residue.
    """
    vals = list(values)
    if zero_eps is None:
        exact = all(isinstance(v, Rational) for v in vals)
        zero_eps = 0 if exact else 1e-300
    out = []
    last_sign = 0
    for m, v in enumerate(vals):
        if abs(v) <= zero_eps:
            continue
        s = 1 if v > 0 else -1
        if last_sign and s != last_sign:
            out.append(m)
        last_sign = s
    return IndexSet(tuple(out))


# ---------------------------------------------------------------------------
# coefficient sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    """Generator-declared facts about a sequence, carried for diagnostics."""

    family: str
    params: dict
    seed: Optional[int] = None
    expected: Optional[dict] = None
    limit_profile_plus: Optional[SelfSimilarSpec] = None
    limit_profile_minus: Optional[SelfSimilarSpec] = None


@dataclass(frozen=True)
class CoefficientSequence:
    """Finite power-series prefix ``a_0 .. a_N`` as (re, im) pairs."""

    coeffs: tuple
    truth: Optional[GroundTruth] = None
    normalization_checked: bool = False

    def __post_init__(self):
        cs = tuple((_num(re), _num(im)) for re, im in self.coeffs)
        if not cs:
            raise SequenceError("empty coefficient sequence")
        object.__setattr__(self, "coeffs", cs)

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return all(
            isinstance(re, Rational) and isinstance(im, Rational)
            for re, im in self.coeffs
        )

    def as_complex(self):
        return [_cx(c) for c in self.coeffs]

    def abs_root(self, m: int) -> float:
        """``|a_m| ** (1/m)`` as a float, 0.0 at m = 0 by convention."""
        re, im = self.coeffs[m]
        a = math.hypot(float(re), float(im))
        if m == 0:
            return 0.0
        if a == 0.0:
            return 0.0
        return a ** (1.0 / m)

    def rotated_reals(self, beta: float):
        """``Re(e^{-i beta} a_j)`` for all j; exact for beta multiple of pi/2."""
        q = round(2 * beta / math.pi)
        if math.isclose(beta, q * math.pi / 2, rel_tol=0, abs_tol=1e-12):
            q %= 4
            if q == 0:
                return [re for re, _ in self.coeffs]
            if q == 1:
                return [im for _, im in self.coeffs]
            if q == 2:
                return [-re for re, _ in self.coeffs]
            return [-im for _, im in self.coeffs]
        rot = cmath.exp(-1j * beta)
        return [(rot * _cx(c)).real for c in self.coeffs]

    def support(self) -> IndexSet:
        return IndexSet(
            tuple(m for m, (re, im) in enumerate(self.coeffs) if re != 0 or im != 0)
        )

    def check_normalization(self, tol=0.05, tail_fraction=0.5):
        """Finite surrogate of radius-of-convergence-1 normalization.

        True limiting behavior cannot be read off a prefix; this checks that
        the peak of ``|a_m|**(1/m)`` over the trailing part of the prefix
        lies in ``[1 - tol, 1 + tol]`` and returns a flagged copy.
        """
        n = self.n_max
        start = max(1, int(n * (1 - tail_fraction)))
        peak = max(self.abs_root(m) for m in range(start, n + 1))
        ok = (1 - tol) <= peak <= (1 + tol)
        if not ok:
            raise SequenceError(
                f"normalization surrogate failed: tail peak |a_m|^(1/m) = {peak:.4f}"
            )
        return CoefficientSequence(self.coeffs, self.truth, True)


# ---------------------------------------------------------------------------
# window families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Window:
    """Anchor index ``m`` with rotation angle and one-sided sign-change sets."""

    m: int
    beta: float
    above: IndexSet  # inside [m, 2m]
    below: IndexSet  # inside [0, m]

    def __post_init__(self):
        if self.m <= 0:
            raise SequenceError("window anchor must be positive")
        if self.above.members and not all(
            self.m <= j <= 2 * self.m for j in self.above.members
        ):
            raise SequenceError("above-set must lie in [m, 2m]")
        if self.below.members and not all(0 <= j <= self.m for j in self.below.members):
            raise SequenceError("below-set must lie in [0, m]")


@dataclass(frozen=True)
class WindowFamily:
    windows: tuple
    source: str = "sign"  # "sign" or "support"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        prev = 0
        for w in self.windows:
            if w.m <= prev:
                raise SequenceError("window anchors must be strictly increasing")
            prev = w.m

    def __len__(self):
        return len(self.windows)

    def union_sets(self, side=None) -> IndexSet:
        out = IndexSet(())
        for w in self.windows:
            if side in (None, "plus"):
                out = out.union(w.above)
            if side in (None, "minus"):
                out = out.union(w.below)
        return out

    def anchors(self):
        return [w.m for w in self.windows]


_SIDE_ALIASES = {"plus": "plus", "+": "plus", "minus": "minus", "-": "minus"}


def normalize_side(side: str) -> str:
    try:
        return _SIDE_ALIASES[side]
    except KeyError:
        raise SequenceError(f"side must be one of +, -, plus, minus; got {side!r}")


def window_counts(fam: WindowFamily, k: int, side: str) -> PwlFunction:
    """Normalized one-sided count of window ``k`` as a step function on [0, 1].

    For the plus side the value at ``r`` is ``card(above & [m, (1+r) m]) / m``
    and for the minus side ``card(below & [(1-r) m, m]) / m``; both are
    right-continuous, jump by ``1/m`` as the sliding endpoint crosses a
    member, and satisfy the unit Lipschitz bound at every grid pair
    ``(i/m, j/m)``.
    """
    side = normalize_side(side)
    if not 0 <= k < len(fam.windows):
        raise SequenceError(f"window index {k} out of range")
    w = fam.windows[k]
    m = w.m
    lam = w.above if side == "plus" else w.below
    if side == "plus":
        radii = [Fraction(j - m, m) for j in lam.members]
    else:
        radii = sorted(Fraction(m - j, m) for j in lam.members)
    c = Fraction(0)
    kn = []
    if radii and radii[0] == 0:
        c = Fraction(1, m)
        radii = radii[1:]
    kn.append((Fraction(0), c))
    for r in radii:
        kn.append((r, c))
        c += Fraction(1, m)
        kn.append((r, c))
    if kn[-1][0] != 1:
        kn.append((Fraction(1), c))
    return PwlFunction(tuple(kn))


@dataclass(frozen=True)
class WindowPolicy:
    """How anchors are placed and sign data extracted.

    ``beta`` is one of "arg" (rotate each anchor coefficient onto the
    positive axis), "zero", "half_pi", or "best" (whichever of the latter
    two passes the size test at more anchors).  ``source`` selects between
    sign-change sets and plain support sets (the gap form).  ``disjoint_r``
    activates anchor thinning so the two-sided windows at that radius are
    pairwise disjoint.
    """

    m_min: int = 16
    beta: str = "arg"
    surrogate_tol: float = 0.05
    source: str = "sign"
    disjoint_r: Optional[float] = None
    zero_eps: Optional[float] = None


def _dyadic_anchor_candidates(seq: CoefficientSequence, m_min: int):
    n = seq.n_max
    out = []
    b = max(0, m_min.bit_length() - 1)
    while (1 << b) <= n // 2:
        lo = 1 << b
        hi = min((1 << (b + 1)) - 1, n // 2)
        if lo >= m_min:
            best_m, best_v = None, -1.0
            for m in range(lo, hi + 1):
                v = seq.abs_root(m)
                if v > best_v:
                    best_m, best_v = m, v
            if best_m is not None and best_v > 0:
                out.append(best_m)
        b += 1
    return out


def extract_windows(seq: CoefficientSequence, policy: WindowPolicy = WindowPolicy()) -> WindowFamily:
    """Build the window family of a sequence under the given policy.

    Anchors are the per-dyadic-block maxima of ``|a_m|**(1/m)`` (first index
    on ties) that pass the finite size surrogate
    ``|Re(e^{-i beta} a_m)|**(1/m) >= 1 - tol``.  Sign changes are computed
    once per rotation over the whole sequence and intersected with
    ``[m, 2m]`` and ``[0, m]``, so a change whose preceding nonzero partner
    lies outside the window still counts.
    """
    if policy.source not in ("sign", "support"):
        raise SequenceError(f"unknown window source {policy.source!r}")
    candidates = _dyadic_anchor_candidates(seq, policy.m_min)
    skipped = []
    windows = []
    support = seq.support() if policy.source == "support" else None

    def betas_for(m):
        if policy.beta == "arg":
            re, im = seq.coeffs[m]
            return [math.atan2(float(im), float(re))]
        if policy.beta == "zero":
            return [0.0]
        if policy.beta == "half_pi":
            return [math.pi / 2]
        if policy.beta == "best":
            return [0.0, math.pi / 2]
        raise SequenceError(f"unknown beta policy {policy.beta!r}")

    rotation_cache = {}
    for m in candidates:
        placed = False
        for beta in betas_for(m):
            key = round(beta, 12)
            if key not in rotation_cache:
                rotation_cache[key] = seq.rotated_reals(beta)
            reals = rotation_cache[key]
            mag = abs(float(reals[m]))
            if mag == 0.0 or mag ** (1.0 / m) < 1 - policy.surrogate_tol:
                continue
            if policy.source == "sign":
                sc = sign_changes(reals, policy.zero_eps)
            else:
                sc = support
            windows.append(
                Window(
                    m=m,
                    beta=beta,
                    above=sc.clipped(m, 2 * m),
                    below=sc.clipped(0, m),
                )
            )
            placed = True
            break
        if not placed:
            skipped.append(m)

    if policy.disjoint_r is not None:
        r = policy.disjoint_r
        if not 0 < r < 1:
            raise SequenceError("disjoint policy needs r in (0, 1)")
        thinned = []
        last_hi = -1.0
        for w in windows:
            lo, hi = (1 - r) * w.m, (1 + r) * w.m
            if lo > last_hi:
                thinned.append(w)
                last_hi = hi
        windows = thinned

    diag = {
        "candidates": candidates,
        "skipped": skipped,
        "beta_policy": policy.beta,
        "source": policy.source,
    }
    if not windows:
        diag["reason"] = "no anchor passed the size surrogate"
    return WindowFamily(tuple(windows), source=policy.source, diagnostics=diag)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    n_max: int = 256


def _parse_component(v) -> Number:
    if isinstance(v, str):
        if "/" in v:
            return Fraction(v)
        return Fraction(v)
    return _num(v)


def _parse_complex(params, key, default=(1, 0)):
    v = params.get(key, default)
    if isinstance(v, (list, tuple)):
        return (_parse_component(v[0]), _parse_component(v[1]))
    return (_parse_component(v), Fraction(0))


def _gen_geometric(spec: GeneratorSpec):
    c = _parse_complex(spec.params, "c", default=("1", "0"))
    n = spec.n_max
    coeffs = []
    cur = (Fraction(1), Fraction(0))
    for _ in range(n + 1):
        coeffs.append(cur)
        cur = _cmul(cur, c)
    mag2 = c[0] * c[0] + c[1] * c[1]
    expected = None
    if mag2 != 0:
        p = _cinv(c)
        expected = {"kind": "poles", "poles": [[float(p[0]), float(p[1])]]}
    return coeffs, expected, None, None


def _gen_rational(spec: GeneratorSpec):
    """Coefficients of a sum of simple-pole terms res / (1 - z / pole)."""
    import mpmath as mp

    poles = spec.params.get("poles")
    if not poles:
        raise SequenceError("rational family needs a nonempty poles list")
    n = spec.n_max
    terms = []
    truth_poles = []
    for entry in poles:
        if "angle_pi" in entry:
            # pole exp(i pi q) * radius, materialized at 50 digits
            q = Fraction(str(entry["angle_pi"]))
            radius = Fraction(str(entry.get("radius", "1")))
            with mp.workdps(50):
                ang = mp.pi * mp.mpf(q.numerator) / mp.mpf(q.denominator)
                zre = Fraction(str(mp.cos(ang) * radius))
                zim = Fraction(str(mp.sin(ang) * radius))
            pole = (zre, zim)
        else:
            pole = _parse_complex(entry, "z")
        res = _parse_complex(entry, "residue", default=("1", "0"))
        inv = _cinv(pole)
        terms.append((res, inv))
        truth_poles.append([float(pole[0]), float(pole[1])])
    coeffs = []
    powers = [(Fraction(1), Fraction(0)) for _ in terms]
    for m in range(n + 1):
        acc = (Fraction(0), Fraction(0))
        for (res, inv), pw in zip(terms, powers):
            t = _cmul(res, pw)
            acc = (acc[0] + t[0], acc[1] + t[1])
        coeffs.append(acc)
        powers = [_cmul(pw, inv) for (_, inv), pw in zip(terms, powers)]
    return coeffs, {"kind": "poles", "poles": truth_poles}, None, None


def _gen_hadamard_gap(spec: GeneratorSpec):
    n = spec.n_max
    coeffs = [(Fraction(0), Fraction(0))] * (n + 1)
    j = 1
    while j <= n:
        coeffs[j] = (Fraction(1), Fraction(0))
        j *= 2
    return coeffs, {"kind": "natural_boundary"}, None, None


def _beatty_support(n: int, density: Fraction):
    return [
        j
        for j in range(1, n + 1)
        if math.floor((j + 1) * density) > math.floor(j * density)
    ]


def _gen_density_gap(spec: GeneratorSpec):
    density = Fraction(str(spec.params.get("density", "1/2")))
    if not 0 < density <= 1:
        raise SequenceError("density must lie in (0, 1]")
    n = spec.n_max
    signs = spec.params.get("signs", "plus")
    rng = random.Random(spec.seed)
    coeffs = [(Fraction(0), Fraction(0))] * (n + 1)
    for j in _beatty_support(n, density):
        s = 1 if signs != "random" else rng.choice((1, -1))
        coeffs[j] = (Fraction(s), Fraction(0))
    return coeffs, None, None, None


def _gen_random_signs(spec: GeneratorSpec):
    n = spec.n_max
    rng = random.Random(spec.seed)
    support = spec.params.get("support", "all")
    if support == "all":
        members = range(1, n + 1)
    elif isinstance(support, dict) and "density" in support:
        members = _beatty_support(n, Fraction(str(support["density"])))
    else:
        members = [int(j) for j in support]
    coeffs = [(Fraction(0), Fraction(0))] * (n + 1)
    for j in members:
        if j > n:
            raise SequenceError(f"support index {j} exceeds N={n}")
        coeffs[j] = (Fraction(rng.choice((1, -1))), Fraction(0))
    return coeffs, None, None, None


def oscillating_profile(rho=Fraction(1, 4), top_ratio=Fraction(15, 16)) -> SelfSimilarSpec:
    """Self-similar flat-then-climb profile with the given scale and peak.

    On ``[rho, 1]`` the profile is flat at ``rho * top_ratio`` and then
    climbs with slope one to ``top_ratio``; repeated at every scale this
    yields slope liminf 0 (the flats persist at all scales) while the
    ratio ``n(r)/r`` returns to ``top_ratio`` at every power of ``rho``.
    """
    rho = Fraction(str(rho)) if not isinstance(rho, (Fraction, int)) else Fraction(rho)
    v = (
        Fraction(str(top_ratio))
        if not isinstance(top_ratio, (Fraction, int))
        else Fraction(top_ratio)
    )
    if not 0 < v < 1:
        raise SequenceError("top_ratio must lie in (0, 1)")
    flat_end = 1 - v * (1 - rho)
    if not rho < flat_end < 1:
        raise SequenceError("infeasible oscillating profile parameters")
    pattern = ((rho, rho * v), (flat_end, rho * v), (1, v))
    return SelfSimilarSpec(pattern=pattern, rho=rho, bands=12)


def _climb_zones_for_block(profile: SelfSimilarSpec, m: int, min_run=4):
    """Climb zones of the profile realized at block resolution m."""
    rho = profile.rho
    zones = []
    bands = 0
    while (rho ** (bands + 1)) * m >= min_run:
        bands += 1
    climbs = profile.zones("climb")
    for b in range(bands):
        scale = rho ** b
        for xa, xb in climbs:
            zones.append((scale * xa, scale * xb))
    fill_top = rho**bands
    zones.append((Fraction(0), fill_top))
    return zones


def _gen_oscillating(spec: GeneratorSpec):
    rho = Fraction(str(spec.params.get("rho", "1/4")))
    v = Fraction(str(spec.params.get("top_ratio", "15/16")))
    profile = oscillating_profile(rho, v)
    n = spec.n_max
    if n < 64:
        raise SequenceError("oscillating family needs N >= 64")
    coeffs = [(Fraction(0), Fraction(0))] * (n + 1)
    sign = 1
    b = 0
    while (1 << b) <= n:
        m = 1 << b
        top = min((1 << (b + 1)) - 1, n)
        zones = _climb_zones_for_block(profile, m)
        for j in range(m, top + 1):
            x = Fraction(j - m, m)
            in_climb = any(xa <= x < xb for xa, xb in zones)
            if in_climb:
                coeffs[j] = (Fraction(sign), Fraction(0))
                sign = -sign
        b += 1
    expected = {"kind": "natural_boundary", "includes_point_one": True}
    return coeffs, expected, profile, None


_FAMILIES = {
    "geometric": _gen_geometric,
    "rational": _gen_rational,
    "hadamard_gap": _gen_hadamard_gap,
    "density_gap": _gen_density_gap,
    "random_signs": _gen_random_signs,
    "oscillating": _gen_oscillating,
}


def generate(spec: GeneratorSpec) -> CoefficientSequence:
    """Produce a named coefficient family, annotated with its ground truth."""
    try:
        fn = _FAMILIES[spec.family]
    except KeyError:
        raise SequenceError(
            f"unknown family {spec.family!r}; known: {sorted(_FAMILIES)}"
        )
    if spec.n_max < 1:
        raise SequenceError("N must be at least 1")
    coeffs, expected, prof_plus, prof_minus = fn(spec)
    truth = GroundTruth(
        family=spec.family,
        params=dict(spec.params),
        seed=spec.seed,
        expected=expected,
        limit_profile_plus=prof_plus,
        limit_profile_minus=prof_minus,
    )
    return CoefficientSequence(tuple(coeffs), truth=truth)
