"""
Planar primitives on the unit square M = (0,1)^2.

Coordinates may be Python floats or ``fractions.Fraction``.  Every routine
here uses only +, -, *, / and comparisons, so the same code runs exactly on
rationals and approximately on floats.  Float comparisons snap at ``SNAP``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

SNAP = 1e-12


class GeometryError(ValueError):
    pass


class CollinearOverlap(GeometryError):
    """Query segment overlaps an arrangement segment along a common line."""


def is_exact(*vals) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in vals)


def _eps(*vals) -> float:
    return 0.0 if is_exact(*vals) else SNAP


def to_exact(v) -> Fraction:
    """Exact rational for ints, Fractions, dyadic floats and "p/q" strings."""
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v)


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(float(self.x)) and math.isfinite(float(self.y))):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    @classmethod
    def in_square(cls, x, y) -> "Point2":
        """Constructor restricted to the closed unit square."""
        if not (0 <= x <= 1 and 0 <= y <= 1):
            raise GeometryError(f"point ({x}, {y}) outside [0,1]^2")
        return cls(x, y)

    def __iter__(self):
        yield self.x
        yield self.y

    def __add__(self, o: "Point2") -> "Point2":
        return Point2(self.x + o.x, self.y + o.y)

    def __sub__(self, o: "Point2") -> "Point2":
        return Point2(self.x - o.x, self.y - o.y)

    def scale(self, s) -> "Point2":
        return Point2(self.x * s, self.y * s)

    def to_float(self) -> "Point2":
        return Point2(float(self.x), float(self.y))

    @property
    def exact(self) -> bool:
        return is_exact(self.x, self.y)


def cross(o: Point2, a: Point2, b: Point2):
    """z-component of (a - o) x (b - o)."""
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    @property
    def length(self) -> float:
        return math.hypot(float(self.b.x - self.a.x), float(self.b.y - self.a.y))

    @property
    def direction(self) -> tuple[float, float]:
        """Unit direction with the sign fixed so that xi > 0, or xi == 0 and eta > 0."""
        dx, dy = float(self.b.x - self.a.x), float(self.b.y - self.a.y)
        n = math.hypot(dx, dy)
        if n == 0:
            raise GeometryError("degenerate segment has no direction")
        if dx < 0 or (dx == 0 and dy < 0):
            dx, dy = -dx, -dy
        return dx / n, dy / n

    def point(self, s) -> Point2:
        return Point2(self.a.x + s * (self.b.x - self.a.x), self.a.y + s * (self.b.y - self.a.y))

    def midpoint(self) -> Point2:
        return self.point(Fraction(1, 2) if self.a.exact and self.b.exact else 0.5)

    def clip_to_square(self) -> "Segment | None":
        """Liang-Barsky clip to the closed unit square; None if nothing of positive length remains."""
        dx, dy = self.b.x - self.a.x, self.b.y - self.a.y
        lo, hi = 0, 1
        for p, q in ((-dx, self.a.x), (dx, 1 - self.a.x), (-dy, self.a.y), (dy, 1 - self.a.y)):
            if p == 0:
                if q < 0:
                    return None
                continue
            r = q / p
            if p < 0:
                lo = max(lo, r)
            else:
                hi = min(hi, r)
        if hi - lo <= _eps(lo, hi):
            return None
        return Segment(self.point(lo), self.point(hi))


class ConvexPolygon:
    """Convex polygon with counterclockwise vertices, duplicates and collinear points removed."""

    __slots__ = ("vertices",)

    def __init__(self, vertices: Iterable):
        pts = [v if isinstance(v, Point2) else Point2(*v) for v in vertices]
        self.vertices = tuple(_normalize(pts))

    def __repr__(self):
        return f"ConvexPolygon({[(v.x, v.y) for v in self.vertices]})"

    def __len__(self):
        return len(self.vertices)

    @property
    def empty(self) -> bool:
        return len(self.vertices) < 3

    @property
    def area(self):
        return polygon_area(self)

    @property
    def edges(self) -> list[Segment]:
        v = self.vertices
        return [Segment(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def centroid(self) -> Point2:
        v = self.vertices
        n = len(v)
        return Point2(sum(p.x for p in v) / n, sum(p.y for p in v) / n)

    def as_array(self) -> np.ndarray:
        return np.array([[float(p.x), float(p.y)] for p in self.vertices])

    def contains(self, p: Point2, strict: bool = True) -> bool:
        if self.empty:
            return False
        eps = _eps(p.x, p.y, *(c for q in self.vertices for c in q))
        v = self.vertices
        for i in range(len(v)):
            c = cross(v[i], v[(i + 1) % len(v)], p)
            if strict and c <= eps:
                return False
            if not strict and c < -eps:
                return False
        return True

    def on_boundary(self, p: Point2) -> bool:
        return self.contains(p, strict=False) and not self.contains(p, strict=True)

    def clip(self, a, b, c) -> "ConvexPolygon":
        """Part of the polygon where a*x + b*y + c <= 0."""
        v = self.vertices
        if not v:
            return self
        g = [a * p.x + b * p.y + c for p in v]
        out = []
        for i in range(len(v)):
            j = (i + 1) % len(v)
            if g[i] <= 0:
                out.append(v[i])
            if (g[i] < 0 < g[j]) or (g[j] < 0 < g[i]):
                s = g[i] / (g[i] - g[j])
                out.append(Point2(v[i].x + s * (v[j].x - v[i].x), v[i].y + s * (v[j].y - v[i].y)))
        return ConvexPolygon(out)

    def map_affine(self, m, v) -> "ConvexPolygon":
        """Image under p -> m p - v; orientation is restored if m reverses it."""
        return ConvexPolygon(
            Point2(m[0][0] * p.x + m[0][1] * p.y - v[0], m[1][0] * p.x + m[1][1] * p.y - v[1])
            for p in self.vertices
        )


def _normalize(pts: list[Point2]) -> list[Point2]:
    if len(pts) < 3:
        return []
    eps = _eps(*(c for p in pts for c in p))
    out = []
    for p in pts:
        if out and abs(p.x - out[-1].x) <= eps and abs(p.y - out[-1].y) <= eps:
            continue
        out.append(p)
    while len(out) > 1 and abs(out[0].x - out[-1].x) <= eps and abs(out[0].y - out[-1].y) <= eps:
        out.pop()
    if len(out) < 3:
        return []
    if _signed_area(out) < 0:
        out.reverse()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        for i in range(len(out)):
            a, b, c = out[i - 1], out[i], out[(i + 1) % len(out)]
            if abs(cross(a, b, c)) <= eps:
                del out[i]
                changed = True
                break
    return out if len(out) >= 3 else []


def _signed_area(v: Sequence[Point2]):
    s = 0
    for i in range(len(v)):
        p, q = v[i], v[(i + 1) % len(v)]
        s += p.x * q.y - q.x * p.y
    return s / 2


def polygon_area(p: ConvexPolygon):
    """Shoelace area; exact for rational vertices, 0 for a degenerate polygon."""
    if p.empty:
        return 0
    return abs(_signed_area(p.vertices))


def polygon_intersect(p: ConvexPolygon, q: ConvexPolygon) -> list[ConvexPolygon]:
    """Convex intersection, returned as a list with zero or one polygon."""
    r = p
    for e in q.edges:
        # interior of a ccw polygon is left of each edge: cross(a, b, x) >= 0
        a, b = e.a, e.b
        r = r.clip(b.y - a.y, a.x - b.x, a.y * b.x - a.x * b.y)
        if r.empty:
            return []
    return [r]


def polygon_difference(p: ConvexPolygon, q: ConvexPolygon) -> list[ConvexPolygon]:
    """Disjoint convex pieces covering p minus q."""
    pieces = []
    rest = p
    for e in q.edges:
        a, b = e.a, e.b
        coef = (b.y - a.y, a.x - b.x, a.y * b.x - a.x * b.y)
        out = rest.clip(-coef[0], -coef[1], -coef[2])
        if not out.empty:
            pieces.append(out)
        rest = rest.clip(*coef)
        if rest.empty:
            break
    return pieces


def symmetric_difference_area(p: ConvexPolygon, q: ConvexPolygon):
    inter = polygon_intersect(p, q)
    ai = inter[0].area if inter else 0
    return p.area + q.area - 2 * ai


def unit_square(exact: bool = False) -> ConvexPolygon:
    o, l = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    return ConvexPolygon([(o, o), (l, o), (l, l), (o, l)])


@dataclass(frozen=True)
class SegmentArrangement:
    """Finite union of segments in the closed square, tagged with its generation k."""

    segments: tuple
    generation: int = 1
    kind: str = "forward"

    def __post_init__(self):
        for s in self.segments:
            for p in (s.a, s.b):
                if not (-SNAP <= p.x <= 1 + SNAP and -SNAP <= p.y <= 1 + SNAP):
                    raise GeometryError(f"arrangement segment leaves the square: {s}")

    def __len__(self):
        return len(self.segments)

    def as_array(self) -> np.ndarray:
        """(N, 4) float array of ax, ay, bx, by."""
        if not self.segments:
            return np.zeros((0, 4))
        return np.array([[float(s.a.x), float(s.a.y), float(s.b.x), float(s.b.y)] for s in self.segments])

    def check_cone(self, cone: "Cone") -> bool:
        return all(cone.contains(s.direction) for s in self.segments)

    def total_length(self) -> float:
        return sum(s.length for s in self.segments)


def segment_intersections(w: Segment, arr: SegmentArrangement) -> list[tuple[Point2, int]]:
    """Points where w meets arrangement segments (closed segments), sorted along w."""
    dx, dy = w.b.x - w.a.x, w.b.y - w.a.y
    if dx == 0 and dy == 0:
        raise GeometryError("degenerate query segment")
    hits = []
    for i, s in enumerate(arr.segments):
        ex, ey = s.b.x - s.a.x, s.b.y - s.a.y
        den = dx * ey - dy * ex
        rx, ry = s.a.x - w.a.x, s.a.y - w.a.y
        eps = _eps(dx, dy, ex, ey, rx, ry)
        if abs(den) <= eps:
            if abs(rx * dy - ry * dx) <= eps:
                # collinear: overlap if projections intersect
                d2 = dx * dx + dy * dy
                u0 = (rx * dx + ry * dy) / d2
                u1 = ((s.b.x - w.a.x) * dx + (s.b.y - w.a.y) * dy) / d2
                if min(u0, u1) <= 1 + eps and max(u0, u1) >= -eps:
                    raise CollinearOverlap(f"query overlaps arrangement segment {i}")
            continue
        u = (rx * ey - ry * ex) / den
        v = (rx * dy - ry * dx) / den
        if -eps <= u <= 1 + eps and -eps <= v <= 1 + eps:
            hits.append((u, w.point(u), i))
    hits.sort(key=lambda h: h[0])
    return [(p, i) for _, p, i in hits]


class Estimate(NamedTuple):
    value: float
    stderr: float


def point_segment_distance(pts: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distance from each of N points to the nearest of S segments, (N,)."""
    best = np.full(len(pts), np.inf)
    for i in range(0, len(segs), 64):
        s = segs[i:i + 64]
        a, d = s[:, :2], s[:, 2:] - s[:, :2]
        dd = np.maximum((d * d).sum(1), 1e-300)
        rel = pts[:, None, :] - a[None]
        u = np.clip((rel * d[None]).sum(2) / dd, 0, 1)
        dist = np.hypot(rel[..., 0] - u * d[None, :, 0], rel[..., 1] - u * d[None, :, 1])
        best = np.minimum(best, dist.min(1))
    return best


def neighborhood_area_mc(arr: SegmentArrangement, s: float, samples: int, seed: int) -> Estimate:
    """Monte-Carlo estimate of m([arr]_s), the s-neighbourhood of the arrangement inside M."""
    if s <= 0 or samples < 10_000:
        raise GeometryError("need s > 0 and at least 1e4 samples")
    rng = np.random.default_rng(seed)
    segs = arr.as_array()
    hit = 0
    left = samples
    while left:
        m = min(left, 200_000)
        pts = rng.random((m, 2))
        hit += int((point_segment_distance(pts, segs) < s).sum())
        left -= m
    p = hit / samples
    return Estimate(p, math.sqrt(max(p * (1 - p), 0.0) / samples))


def _fold_angle(v) -> float:
    """Angle of a direction taken modulo pi, in (-pi/2, pi/2]."""
    a = math.atan2(float(v[1]), float(v[0]))
    if a > math.pi / 2:
        a -= math.pi
    elif a <= -math.pi / 2:
        a += math.pi
    return a


@dataclass(frozen=True)
class Cone:
    """Unstable cone {xi*eta >= 0} or stable sector -pi/2 + r0 <= arctan(eta/xi) <= -r0."""

    kind: str
    r0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("unstable", "stable"):
            raise GeometryError(f"unknown cone kind {self.kind!r}")
        if self.kind == "stable":
            if not 0 < self.r0 < math.pi / 4:
                raise GeometryError("stable-cone margin must lie in (0, pi/4)")
            for ang in forward_line_angles():
                if not (-math.pi / 2 + self.r0 < ang < -self.r0):
                    raise GeometryError(f"r0={self.r0} excludes a forward singularity direction")

    def contains(self, v, strict: bool = False) -> bool:
        if self.kind == "unstable":
            p = v[0] * v[1]
            return p > 0 if strict else p >= 0
        a = _fold_angle(v)
        lo, hi = -math.pi / 2 + self.r0, -self.r0
        tol = 0.0 if strict else 1e-13
        if strict:
            return lo < a < hi
        return lo - tol <= a <= hi + tol


def forward_line_angles(ts: Sequence[float] = (0.0, 1 / 8)) -> list[float]:
    """Angles of the first-generation forward singularity lines at the extreme parameters.

    The slopes are -1 and -1/(2-t), monotone in t, so the extremes suffice."""
    out = [-math.pi / 4]
    for t in ts:
        out.append(math.atan(-1 / (2 - t)))
    return out


def default_r0() -> float:
    """Half of the largest margin keeping every forward singularity direction inside the stable sector."""
    angs = forward_line_angles()
    rmax = min(min(-a for a in angs), min(a + math.pi / 2 for a in angs))
    return rmax / 2


UNSTABLE = Cone("unstable")
STABLE = Cone("stable", default_r0())
