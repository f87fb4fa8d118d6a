"""
Explicit foliations of M by standard segments and the induced disintegration
of Lebesgue measure.

Nine regions cover M up to the lines y = x, y = x - t, y = x + 1 - t,
y = 2x, y = (2-t)x, y = 2x - 1 and y = (2-t)x - 1.  Seven of them (A..G)
carry long leaves; the two shrinking triangles R and B (whose union with D
is the hole of F_t) carry slope-1 leaves whose length vanishes with t.

Two leaf geometries are used:

* fan: rays from an apex O at angle th; conditional density r / int r dr,
  factor measure (r2^2 - r1^2)/2 dth (polar coordinates);
* parallel: lines y = x + c; conditional density 1/|W|, factor measure
  |W| dc / sqrt 2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .cat_family import ParameterOutOfRange, T_MAX
from .geometry import ConvexPolygon, Point2, Segment, is_exact, unit_square
from .standard_pairs import StandardSegment, gauss_legendre01


class QuadratureNonconvergence(RuntimeError):
    pass


def _halfplanes(name: str, t):
    """Open inequalities a x + b y + c < 0 defining each region."""
    c = 2 - t
    one = 1
    table = {
        "A": [(-1, 0, 0), (0, 1, -one), (-1, 1, t - 1), (2, -1, 0)],
        "B": [(0, 1, -one), (-2, 1, 0), (c, -1, 0)],
        "C": [(0, 1, -one), (-c, 1, 0), (1, -1, 0)],
        "D": [(0, -1, 0), (-1, 1, 0), (1, -1, -t), (2, -1, -one)],
        "E": [(0, -1, 0), (-1, 1, t), (2, -1, -one)],
        "F": [(0, -1, 0), (-2, 1, one), (-1, 1, t), (c, -1, -one)],
        "G": [(0, -1, 0), (1, 0, -one), (-c, 1, one)],
        "R": [(-1, 0, 0), (1, -1, 1 - t), (0, 1, -one)],
        "Bt": [(1, 0, -one), (1, -1, -t), (-2, 1, one)],
    }
    return table[name]


LONG_REGIONS = ("A", "B", "C", "D", "E", "F", "G")
SHORT_REGIONS = ("R", "Bt")
ALL_REGIONS = LONG_REGIONS + SHORT_REGIONS


def region_polygon(name: str, t) -> ConvexPolygon:
    poly = unit_square(exact=is_exact(t))
    for a, b, c in _halfplanes(name, t):
        poly = poly.clip(a, b, c)
    return poly


def _fan_spec(name: str, t: float):
    """(apex, th_lo, th_hi) of each fan-foliated region."""
    c = 2 - t
    at2, atc = math.atan(2.0), math.atan(c)
    return {
        "A": ((0.0, 0.0), at2, math.pi / 2),
        "B": ((0.0, 0.0), atc, at2),
        "C": ((0.0, 0.0), math.pi / 4, atc),
        "E": ((1 - t, 1 - 2 * t), math.pi + math.pi / 4, math.pi + at2),
        "F": ((0.0, -1.0), atc, at2),
        "G": ((1.0, 1 - t), -math.pi + atc, -math.pi / 2),
    }[name]


def _parallel_spec(name: str, t: float):
    """Intercept range (c_lo, c_hi) of the slope-1 leaves y = x + c."""
    return {"D": (-t, 0.0), "R": (1 - t, 1.0), "Bt": (-t, 0.0)}[name]


@dataclass(frozen=True)
class Leaf:
    region: str
    param: float
    segment: StandardSegment
    density: Callable  # arclength position -> conditional density
    factor: float  # factor-measure density d m_F / d param


@dataclass
class FoliatedRegion:
    name: str
    t: float
    polygon: ConvexPolygon
    kind: str
    apex: tuple | None
    lo: float
    hi: float

    @property
    def area(self) -> float:
        return float(self.polygon.area)

    def _V(self):
        return self.polygon.as_array()

    def leaf_range(self, param: float) -> tuple[np.ndarray, np.ndarray, float, float]:
        """(origin, unit direction, s1, s2): the leaf is origin + s*u for s in [s1, s2]."""
        if self.kind == "fan":
            o = np.array(self.apex)
            u = np.array([math.cos(param), math.sin(param)])
        else:
            o = np.array([0.0, param])
            u = np.array([1.0, 1.0]) / math.sqrt(2)
        s1, s2 = _clip_line(self._V(), o, u)
        if self.kind == "fan":
            s1 = max(s1, 0.0)
        return o, u, s1, s2

    def leaf(self, param: float) -> Leaf:
        o, u, s1, s2 = self.leaf_range(param)
        a, b = o + s1 * u, o + s2 * u
        seg = StandardSegment.from_coords(*a, *b)
        if self.kind == "fan":
            norm = (s2 * s2 - s1 * s1) / 2
            # position l along the leaf corresponds to radius s1 + l
            dens = lambda l, s1=s1, norm=norm: (s1 + l) / norm
            fac = norm
        else:
            L = s2 - s1
            dens = lambda l, L=L: 1.0 / L + 0 * l
            fac = L / math.sqrt(2)
        return Leaf(self.name, param, seg, dens, fac)

    def breakpoints(self) -> np.ndarray:
        """Parameter values where the leaf endpoints switch polygon edges."""
        V = self._V()
        if self.kind == "fan":
            o = np.array(self.apex)
            cand = []
            for v in V:
                d = v - o
                if np.hypot(*d) < 1e-14:
                    continue
                th = math.atan2(d[1], d[0])
                for shift in (-2 * math.pi, 0.0, 2 * math.pi):
                    cand.append(th + shift)
        else:
            cand = list(V[:, 1] - V[:, 0])
        cand = [c for c in cand if self.lo < c < self.hi]
        return np.unique(np.concatenate([[self.lo, self.hi], cand]))

    def leaves(self, order: int = 64) -> Iterator[tuple[Leaf, float]]:
        """Leaves at Gauss-Legendre parameters with their factor weights (summing to the area)."""
        x, w = gauss_legendre01(order)
        bp = self.breakpoints()
        for p0, p1 in zip(bp[:-1], bp[1:]):
            for xi, wi in zip(x, w):
                lf = self.leaf(p0 + xi * (p1 - p0))
                yield lf, lf.factor * wi * (p1 - p0)


def _clip_line(V: np.ndarray, o: np.ndarray, u: np.ndarray) -> tuple[float, float]:
    lo, hi = -math.inf, math.inf
    n = len(V)
    for i in range(n):
        a, b = V[i], V[(i + 1) % n]
        # inside (ccw polygon): cross(b - a, p - a) >= 0 with p = o + s u
        c0 = (b[0] - a[0]) * (o[1] - a[1]) - (b[1] - a[1]) * (o[0] - a[0])
        c1 = (b[0] - a[0]) * u[1] - (b[1] - a[1]) * u[0]
        if abs(c1) < 1e-15:
            if c0 < -1e-15:
                return 0.0, 0.0
            continue
        r = -c0 / c1
        if c1 > 0:
            lo = max(lo, r)
        else:
            hi = min(hi, r)
    return lo, max(hi, lo)


def _region(name: str, t: float) -> FoliatedRegion:
    poly = region_polygon(name, t)
    if name in ("D", "R", "Bt"):
        lo, hi = _parallel_spec(name, t)
        return FoliatedRegion(name, t, poly, "parallel", None, lo, hi)
    apex, lo, hi = _fan_spec(name, t)
    return FoliatedRegion(name, t, poly, "fan", apex, lo, hi)


def _check_t(t):
    if not 0 < t <= T_MAX:
        raise ParameterOutOfRange(f"t={t} outside (0, 1/8]")


def build_f2(t) -> tuple[FoliatedRegion, FoliatedRegion]:
    """The shrinking triangles R_t = {x>0, x+1-t<y<1} and B_t = {x<1, x-t<y<2x-1}."""
    _check_t(t)
    t = float(t)
    return _region("R", t), _region("Bt", t)


def build_f1(t) -> list[FoliatedRegion]:
    """Regions A(t)..G(t) with their long-leaf foliations; every leaf length >= 1/2 is checked."""
    _check_t(t)
    t = float(t)
    regs = [_region(n, t) for n in LONG_REGIONS]
    for r in regs:
        m = min_leaf_length(r)
        if m < 0.5:
            raise AssertionError(f"region {r.name} has a leaf of length {m} < 1/2")
    return regs


def min_leaf_length(r: FoliatedRegion, samples: int = 257) -> float:
    eps = 1e-9 * (r.hi - r.lo)
    ps = np.linspace(r.lo + eps, r.hi - eps, samples)
    return float(min(r.leaf_range(p)[3] - r.leaf_range(p)[2] for p in ps))


def density_c1_norm(r: FoliatedRegion, samples: int = 257) -> float:
    """sup over leaves of sup|p_W| + Lip(p_W) along the leaf."""
    eps = 1e-9 * (r.hi - r.lo)
    best = 0.0
    for p in np.linspace(r.lo + eps, r.hi - eps, samples):
        _, _, s1, s2 = r.leaf_range(p)
        if r.kind == "fan":
            norm = (s2 * s2 - s1 * s1) / 2
            best = max(best, s2 / norm + 1 / norm)
        else:
            best = max(best, 1 / (s2 - s1))
    return best


def polygon_quadrature(poly: ConvexPolygon, g: Callable, order: int = 24) -> float:
    """2D Gauss rule on a convex polygon: fan triangulation with collapsed (Duffy) square rules."""
    V = poly.as_array()
    x, w = gauss_legendre01(order)
    U, Wv = np.meshgrid(x, x, indexing="ij")
    WU, WW = np.meshgrid(w, w, indexing="ij")
    a, b = U.ravel(), (Wv * (1 - U)).ravel()
    wt = (WU * WW * (1 - U)).ravel()
    tot = 0.0
    for i in range(1, len(V) - 1):
        p0, p1, p2 = V[0], V[i], V[i + 1]
        jac = abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
        X = p0[0] + a * (p1[0] - p0[0]) + b * (p2[0] - p0[0])
        Y = p0[1] + a * (p1[1] - p0[1]) + b * (p2[1] - p0[1])
        tot += jac * float(np.sum(wt * g(X, Y)))
    return tot


def leafwise_integral(r: FoliatedRegion, g: Callable, order: int = 64, leaf_order: int = 32) -> float:
    """int_F (int_W g p_W) dm_F(W) by nested Gauss-Legendre."""
    s, w = gauss_legendre01(leaf_order)
    tot = 0.0
    for lf, fw in r.leaves(order):
        seg = lf.segment.segment
        L = lf.segment.length
        ax, ay, bx, by = float(seg.a.x), float(seg.a.y), float(seg.b.x), float(seg.b.y)
        X, Y = ax + s * (bx - ax), ay + s * (by - ay)
        dens = lf.density(s * L)
        tot += fw * L * float(np.sum(w * g(X, Y) * dens))
    return tot


def disintegration_check(r: FoliatedRegion, g: Callable, tol: float = 1e-6) -> float:
    """|leafwise nested quadrature - direct 2D quadrature|; raises if above tol."""
    res = abs(leafwise_integral(r, g) - polygon_quadrature(r.polygon, g))
    if res > tol:
        raise QuadratureNonconvergence(f"region {r.name}: residual {res:.3e} > {tol:.1e}")
    return res


def region_areas(t) -> dict:
    """Areas of the nine regions (exact Fractions for rational t)."""
    return {n: region_polygon(n, t).area for n in ALL_REGIONS}


def dump_leaves(regions: list[FoliatedRegion], path, order: int = 16) -> int:
    """Write region, param, ax, ay, bx, by, factor_weight rows; factor weights sum to each area."""
    n = 0
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["region", "param", "ax", "ay", "bx", "by", "factor_weight"])
        for r in regions:
            for lf, fw in r.leaves(order):
                s = lf.segment.segment
                wr.writerow([r.name, f"{lf.param:.17g}", *(f"{float(v):.17g}" for v in (s.a.x, s.a.y, s.b.x, s.b.y)), f"{fw:.17g}"])
                n += 1
    return n


__all__ = [
    "ALL_REGIONS",
    "FoliatedRegion",
    "Leaf",
    "LONG_REGIONS",
    "QuadratureNonconvergence",
    "build_f1",
    "build_f2",
    "density_c1_norm",
    "disintegration_check",
    "dump_leaves",
    "leafwise_integral",
    "min_leaf_length",
    "polygon_quadrature",
    "region_areas",
    "region_polygon",
]
