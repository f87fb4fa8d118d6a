"""
The perturbed cat map F_t(x, y) = ({x + y}, {x + (2-t) y}) on M = (0,1)^2.

F_t is affine on four convex branch domains, F_j(p) = A_t p - v_j with
A_t = [[1, 1], [1, 2-t]].  The images of the branches are disjoint and
leave uncovered a hole H_t of area t, so the transfer operator L_t maps
1 to 1/(1-t) off the hole and to 0 on it.

A family built from a Fraction (or with mode="rational") keeps every
coordinate exact; otherwise floats are used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .geometry import (
    SNAP,
    STABLE,
    UNSTABLE,
    ConvexPolygon,
    Point2,
    Segment,
    SegmentArrangement,
    is_exact,
    point_segment_distance,
    polygon_difference,
    to_exact,
)

T_MAX = Fraction(1, 8)
TRANSLATIONS = ((0, 0), (0, 1), (1, 1), (1, 2))


class ParameterOutOfRange(ValueError):
    pass


class OnSingularity(ValueError):
    """Point lies on a singular line (or its image lies on the boundary of M)."""

    def __init__(self, msg: str, step: int | None = None):
        super().__init__(msg if step is None else f"{msg} (step {step})")
        self.step = step


@dataclass(frozen=True)
class AffineBranch:
    index: int
    matrix: tuple
    translation: tuple
    domain: ConvexPolygon
    image: ConvexPolygon

    def forward(self, p: Point2) -> Point2:
        m, v = self.matrix, self.translation
        return Point2(m[0][0] * p.x + m[0][1] * p.y - v[0], m[1][0] * p.x + m[1][1] * p.y - v[1])

    def inverse(self, p: Point2) -> Point2:
        (a, b), (c, d) = self.matrix
        det = a * d - b * c
        x, y = p.x + self.translation[0], p.y + self.translation[1]
        return Point2((d * x - b * y) / det, (a * y - c * x) / det)


class CatFamily:
    """Branches, images and eigendata of F_t for one parameter value."""

    def __init__(self, t, exact: bool):
        self.t = t
        self.exact = exact
        one = Fraction(1) if exact else 1.0
        zero = one * 0
        c = 2 - t
        self.matrix = ((one, one), (one, c))
        self.det = c - 1
        v = [(zero + a, zero + b) for a, b in TRANSLATIONS]
        doms = [
            [(zero, zero), (one, zero), (zero, one / c)],
            [(zero, one / c), (one, zero), (zero, one)],
            [(zero, one), (one, zero), (one, one / c), (t + zero, one)],
            [(t + zero, one), (one, one / c), (one, one)],
        ]
        branches = []
        for j, (dv, tr) in enumerate(zip(doms, v)):
            dom = ConvexPolygon(dv)
            branches.append(AffineBranch(j + 1, self.matrix, tr, dom, dom.map_affine(self.matrix, tr)))
        self.branches = tuple(branches)
        tf = float(t)
        tr_, det = 3 - tf, 1 - tf
        disc = math.sqrt(tr_ * tr_ - 4 * det)
        self.mu_u = (tr_ + disc) / 2
        self.mu_s = (tr_ - disc) / 2
        self.E_u = _unit((1.0, self.mu_u - 1))
        self.E_s = _unit((1.0, self.mu_s - 1))
        self.lam, self.lam_bar = cone_expansion(tf)

    def __repr__(self):
        return f"CatFamily(t={self.t}, exact={self.exact})"

    @property
    def tf(self) -> float:
        return float(self.t)

    def to_json(self) -> str:
        return json.dumps(family_to_dict(self), indent=1)


def _unit(v):
    n = math.hypot(*v)
    return (v[0] / n, v[1] / n)


def cone_expansion(t: float, step_deg: float = 1.0) -> tuple[float, float]:
    """(lambda, lambda_bar): min and max of |A_t v|/|v| over the unstable cone.

    The minimum is taken over the two boundary directions plus an angular scan;
    between scan points |A_t v|^2 = a + b cos 2th + c sin 2th, so a derivative
    sign check at consecutive scan points certifies there is no hidden dip."""
    a11, a12, a22 = 1.0, 1.0, 2.0 - t
    g11, g12, g22 = a11 * a11 + a12 * a12, a11 * a12 + a12 * a22, a12 * a12 + a22 * a22

    def q(th):
        c, s = math.cos(th), math.sin(th)
        return g11 * c * c + 2 * g12 * c * s + g22 * s * s

    def dq(th):
        return (g22 - g11) * math.sin(2 * th) + 2 * g12 * math.cos(2 * th)

    ths = np.linspace(0, math.pi / 2, int(round(90 / step_deg)) + 1)
    vals = [q(th) for th in ths]
    lo = min(vals)
    for th0, th1 in zip(ths[:-1], ths[1:]):
        # an interior minimum needs dq to go from negative to positive
        if dq(th0) < 0 < dq(th1):
            lo = min(lo, _golden_min(q, th0, th1))
    # A_t is symmetric positive definite and its unstable eigenvector lies in
    # the cone, so the largest stretch is the top eigenvalue
    mu_u = ((3 - t) + math.sqrt((3 - t) ** 2 - 4 * (1 - t))) / 2
    return math.sqrt(lo), max(math.sqrt(max(vals)), mu_u)


def _golden_min(f, a, b, it=80):
    g = (math.sqrt(5) - 1) / 2
    for _ in range(it):
        c, d = b - g * (b - a), a + g * (b - a)
        if f(c) < f(d):
            b = d
        else:
            a = c
    return f((a + b) / 2)


def _check_t(t):
    if not 0 <= t <= T_MAX:
        raise ParameterOutOfRange(f"t={t} outside [0, 1/8]")


def make_family(t, mode: str | None = None) -> CatFamily:
    """Build F_t.  mode: "rational", "float", or None (rational iff t is exact)."""
    if mode not in (None, "rational", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode is None:
        mode = "rational" if is_exact(t) or isinstance(t, str) else "float"
    if mode == "rational":
        t = to_exact(t)
    else:
        t = float(Fraction(t)) if isinstance(t, str) else float(t)
    _check_t(t)
    return _cached_family(t, mode == "rational")


@lru_cache(maxsize=64)
def _cached_family(t, exact):
    return CatFamily(t, exact)


def _frac(a):
    return a - math.floor(a)


def branch_of(fam: CatFamily, p: Point2) -> int:
    """Index 1..4 of the branch domain containing p; raises on S_t^+."""
    c = 2 - fam.t
    u, v = p.x + c * p.y, p.x + p.y
    eps = 0 if (fam.exact and p.exact) else SNAP
    for val, tgt in ((u, 1), (u, 2), (v, 1)):
        if abs(val - tgt) <= eps:
            raise OnSingularity(f"point ({p.x}, {p.y}) on a forward singular line")
    if u < 1:
        return 1
    if v < 1:
        return 2
    if u < 2:
        return 3
    return 4


def apply(fam: CatFamily, p: Point2) -> tuple[Point2, int]:
    """F_t(p) and its branch; the fractional-part and branch-affine formulas are cross-checked."""
    j = branch_of(fam, p)
    q = fam.branches[j - 1].forward(p)
    c = 2 - fam.t
    fx, fy = _frac(p.x + p.y), _frac(p.x + c * p.y)
    exact = fam.exact and p.exact
    eps = 0 if exact else SNAP
    if not exact and (abs(q.x - fx) > 1e-12 or abs(q.y - fy) > 1e-12):
        raise AssertionError(f"branch formula disagrees with fractional part at {p}")
    if exact and (q.x != fx or q.y != fy):
        raise AssertionError(f"branch formula disagrees with fractional part at {p}")
    for val in (q.x, q.y):
        if val <= eps or val >= 1 - eps:
            raise OnSingularity(f"image of ({p.x}, {p.y}) lands on the boundary")
    return q, j


def iterate(fam: CatFamily, p: Point2, n: int) -> tuple[Point2, list[int]]:
    itin = []
    for m in range(n):
        try:
            p, j = apply(fam, p)
        except OnSingularity as e:
            raise OnSingularity(str(e), step=m) from None
        itin.append(j)
    return p, itin


def branch_array(t: float, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Vectorised branch index (1..4) for float coordinate arrays."""
    u = X + (2 - t) * Y
    v = X + Y
    return np.where(u < 1, 1, np.where(v < 1, 2, np.where(u < 2, 3, 4)))


_VX = np.array([0.0, 0.0, 0.0, 1.0, 1.0])
_VY = np.array([0.0, 0.0, 1.0, 1.0, 2.0])


def apply_array(t: float, X: np.ndarray, Y: np.ndarray):
    """Vectorised F_t; returns (X', Y', branch)."""
    j = branch_array(t, X, Y)
    return X + Y - _VX[j], X + (2 - t) * Y - _VY[j], j


def iterate_array(t: float, X: np.ndarray, Y: np.ndarray, n: int):
    """n steps of F_t on arrays; returns (X, Y, itinerary code) with branches packed base 4."""
    code = np.zeros(X.shape, dtype=np.int64)
    for _ in range(n):
        X, Y, j = apply_array(t, X, Y)
        code = code * 4 + (j - 1)
    return X, Y, code


def preimage_tags(fam0: CatFamily, famt: CatFamily, p: Point2) -> tuple[frozenset, frozenset]:
    """(n_0(p), n_t(p)): branches whose open image polygon contains p."""
    out = []
    for fam in (fam0, famt):
        tags = set()
        for br in fam.branches:
            if br.image.contains(p, strict=True):
                tags.add(br.index)
            elif br.image.contains(p, strict=False):
                raise OnSingularity(f"({p.x}, {p.y}) lies on a backward singular line")
        out.append(frozenset(tags))
    return out[0], out[1]


def tags_t(fam: CatFamily, p: Point2) -> frozenset:
    tags = set()
    for br in fam.branches:
        if br.image.contains(p, strict=True):
            tags.add(br.index)
        elif br.image.contains(p, strict=False):
            raise OnSingularity(f"({p.x}, {p.y}) lies on a backward singular line")
    return frozenset(tags)


def transfer(famt: CatFamily, g: Callable, p: Point2):
    """(L_t g)(p) = sum over preimages of g(F_j^{-1} p) / |det A_t|."""
    tot = 0
    for j in sorted(tags_t(famt, p)):
        q = famt.branches[j - 1].inverse(p)
        tot = tot + g(q.x, q.y)
    return tot / abs(famt.det)


def _one(x, y):
    return 1


def response_density(famt: CatFamily, p: Point2, fam0: CatFamily | None = None):
    """(D_t(p), tag) with D_t = (L_t 1 - 1)/t and tag "bad" iff the preimage structure changed."""
    if famt.t == 0:
        raise ParameterOutOfRange("response density needs t > 0")
    if fam0 is None:
        fam0 = make_family(0 * famt.t, "rational" if famt.exact else "float")
    n0, nt = preimage_tags(fam0, famt, p)
    val = (transfer(famt, _one, p) - 1) / famt.t
    return val, ("bad" if n0 != nt else "good")


def image_membership(fam: CatFamily, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """(N, 4) bool: strict membership of float points in each image polygon."""
    out = np.zeros((len(X), 4), dtype=bool)
    for k, br in enumerate(fam.branches):
        V = br.image.as_array()
        inside = np.ones(len(X), dtype=bool)
        for i in range(len(V)):
            a, b = V[i], V[(i + 1) % len(V)]
            cr = (b[0] - a[0]) * (Y - a[1]) - (b[1] - a[1]) * (X - a[0])
            inside &= cr > 0
        out[:, k] = inside
    return out


def transfer_array(t: float, g: Callable, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Vectorised L_t g on float points (points on S_t^- are counted on neither side)."""
    fam = make_family(t, "float")
    mem = image_membership(fam, X, Y)
    c = 2 - t
    det = 1 - t
    out = np.zeros(len(X))
    for k, (vx, vy) in enumerate(TRANSLATIONS):
        sel = mem[:, k]
        x, y = X[sel] + vx, Y[sel] + vy
        out[sel] += g((c * x - y) / det, (y - x) / det)
    return out / det


def hole_polygons(t) -> list[ConvexPolygon]:
    """The uncovered hole H_t: the strip x - t < y < x and the corner triangle y > x + 1 - t."""
    one = Fraction(1) if is_exact(t) else 1.0
    zero = 0 * one
    strip = ConvexPolygon([(zero, zero), (t + zero, zero), (one, one - t), (one, one)])
    corner = ConvexPolygon([(zero, one - t), (t + zero, one), (zero, one)])
    return [p for p in (strip, corner) if not p.empty]


def in_hole(t, x, y) -> bool:
    """Closed-form indicator of the open hole H_t."""
    return (x - t < y < x) or (y > x + 1 - t)


def forward_lines(t) -> list[Segment]:
    """S_t^{+,1}: the three interior lines x+(2-t)y = 1, x+(2-t)y = 2 and x+y = 1, clipped to M."""
    one = Fraction(1) if is_exact(t) else 1.0
    zero = 0 * one
    c = 2 - t
    return [
        Segment(Point2(one, zero), Point2(zero, one / c)),
        Segment(Point2(t + zero, one), Point2(one, one / c)),
        Segment(Point2(one, zero), Point2(zero, one)),
    ]


def _dedupe(segs, eps):
    out = []
    for s in segs:
        key = None
        for o in out:
            if (_close(s.a, o.a, eps) and _close(s.b, o.b, eps)) or (_close(s.a, o.b, eps) and _close(s.b, o.a, eps)):
                key = o
                break
        if key is None:
            out.append(s)
    return out


def _close(p, q, eps):
    return abs(p.x - q.x) <= eps and abs(p.y - q.y) <= eps


def _on_boundary_line(s: Segment, eps) -> bool:
    for a, b in ((s.a.x, s.b.x), (s.a.y, s.b.y)):
        for edge in (0, 1):
            if abs(a - edge) <= eps and abs(b - edge) <= eps:
                return True
    return False


def backward_lines(fam: CatFamily) -> SegmentArrangement:
    """S_t^-: interior edges of the image polygons, deduplicated."""
    eps = 0 if fam.exact else SNAP
    segs = []
    for br in fam.branches:
        for e in br.image.edges:
            if not _on_boundary_line(e, eps):
                segs.append(e)
    segs = _dedupe(segs, eps)
    segs = _merge_collinear(segs, eps)
    return SegmentArrangement(tuple(segs), generation=1, kind="backward")


def _merge_collinear(segs, eps):
    """Join touching collinear edges (e.g. two images sharing a line) into one segment."""
    segs = list(segs)
    merged = True
    while merged:
        merged = False
        for i in range(len(segs)):
            for j in range(i + 1, len(segs)):
                m = _try_merge(segs[i], segs[j], eps)
                if m is not None:
                    segs[i] = m
                    del segs[j]
                    merged = True
                    break
            if merged:
                break
    return segs


def _try_merge(s, o, eps):
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    for p in (o.a, o.b):
        if abs(dx * (p.y - s.a.y) - dy * (p.x - s.a.x)) > eps:
            return None
    d2 = dx * dx + dy * dy
    us = [0, 1, ((o.a.x - s.a.x) * dx + (o.a.y - s.a.y) * dy) / d2, ((o.b.x - s.a.x) * dx + (o.b.y - s.a.y) * dy) / d2]
    if min(us[2], us[3]) > 1 + eps or max(us[2], us[3]) < -eps:
        return None
    return Segment(s.point(min(us)), s.point(max(us)))


def clip_segment_to_polygon(s: Segment, poly: ConvexPolygon, eps) -> Segment | None:
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    lo, hi = 0, 1
    v = poly.vertices
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        # inside: cross(a, b, p) >= 0, with p = s.a + u d
        c0 = (b.x - a.x) * (s.a.y - a.y) - (b.y - a.y) * (s.a.x - a.x)
        c1 = (b.x - a.x) * dy - (b.y - a.y) * dx
        if c1 == 0 or (eps and abs(c1) <= eps):
            if c0 < -eps:
                return None
            continue
        r = -c0 / c1
        if c1 > 0:
            lo = max(lo, r)
        else:
            hi = min(hi, r)
    if hi - lo <= eps:
        return None
    return Segment(s.point(lo), s.point(hi))


def singularity_forward(famt: CatFamily, k: int, k_max: int = 8) -> SegmentArrangement:
    """S_t^{+,k} = S_t^{+,1} united with F_t^{-1}(S_t^{+,k-1}), minus the boundary of M."""
    if not 1 <= k <= k_max:
        raise ValueError(f"k={k} outside [1, {k_max}]")
    return _forward_cached(famt.t, famt.exact, k)


@lru_cache(maxsize=64)
def _forward_cached(t, exact, k) -> SegmentArrangement:
    fam = make_family(t, "rational" if exact else "float")
    eps = 0 if exact else 1e-13
    first = forward_lines(t)
    if k == 1:
        return SegmentArrangement(tuple(first), generation=1, kind="forward")
    prev = _forward_cached(t, exact, k - 1).segments
    pulled = []
    for s in prev:
        for br in fam.branches:
            piece = clip_segment_to_polygon(s, br.image, eps)
            if piece is None:
                continue
            q = Segment(br.inverse(piece.a), br.inverse(piece.b))
            if _on_boundary_line(q, eps) or q.length <= 1e-15:
                continue
            pulled.append(q)
    segs = list(first) + _dedupe_fast(pulled, first, exact)
    return SegmentArrangement(tuple(segs), generation=k, kind="forward")


def _dedupe_fast(segs, existing, exact):
    seen = set()
    for s in existing:
        seen.add(_skey(s, exact))
    out = []
    for s in segs:
        key = _skey(s, exact)
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    return out


def _skey(s, exact):
    if exact:
        a, b = (s.a.x, s.a.y), (s.b.x, s.b.y)
    else:
        a = (round(float(s.a.x), 10), round(float(s.a.y), 10))
        b = (round(float(s.b.x), 10), round(float(s.b.y), 10))
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class GoodBadPartition:
    t: object
    bad: tuple
    singular: SegmentArrangement

    @property
    def area(self):
        return sum((p.area for p in self.bad), 0 * self.t)

    def contains(self, p: Point2) -> bool:
        return any(q.contains(p, strict=True) for q in self.bad)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """Uniform samples from the bad set (fan triangulation of each piece)."""
        rng = np.random.default_rng(seed)
        tris, w = [], []
        for poly in self.bad:
            V = poly.as_array()
            for i in range(1, len(V) - 1):
                tri = np.array([V[0], V[i], V[i + 1]])
                u, v = tri[1] - tri[0], tri[2] - tri[0]
                a = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
                tris.append(tri)
                w.append(a)
        w = np.array(w) / np.sum(w)
        idx = rng.choice(len(tris), size=n, p=w)
        r1, r2 = rng.random(n), rng.random(n)
        flip = r1 + r2 > 1
        r1[flip], r2[flip] = 1 - r1[flip], 1 - r2[flip]
        T = np.array(tris)[idx]
        return T[:, 0] + r1[:, None] * (T[:, 1] - T[:, 0]) + r2[:, None] * (T[:, 2] - T[:, 0])


def bad_set(fam0: CatFamily, famt: CatFamily) -> GoodBadPartition:
    """B_t as disjoint convex pieces M_{j,0}^- minus M_{j,t}^-.

    The t = 0 images tile M, so these pieces already cover the union of the
    symmetric differences: a point of M_{j,t}^- outside M_{j,0}^- sits in some
    M_{i,0}^- with i != j, hence outside M_{i,t}^- (the t-images are disjoint)."""
    if famt.t <= 0:
        raise ParameterOutOfRange("bad set needs t > 0")
    pieces = []
    for b0, bt in zip(fam0.branches, famt.branches):
        pieces.extend(polygon_difference(b0.image, bt.image))
    sing = SegmentArrangement(
        backward_lines(fam0).segments + backward_lines(famt).segments, generation=1, kind="backward"
    )
    return GoodBadPartition(famt.t, tuple(pieces), sing)


def bad_set_distance(part: GoodBadPartition, fam0: CatFamily, n: int = 20000, seed: int = 0) -> float:
    """Largest distance from sampled points of B_t to S_0^- (boundary of M included), over t."""
    pts = part.sample(n, seed)
    d = point_segment_distance(pts, backward_lines(fam0).as_array())
    d = np.minimum(d, np.minimum(pts, 1 - pts).min(1))
    return float(d.max() / float(part.t))


def complexity(famt: CatFamily, k: int, tol: float = 1e-9) -> int:
    """K_k: the largest number of faces of M minus S_t^{+,k} meeting at one point.

    Candidate vertices are segment endpoints, plus pairwise crossings while the
    arrangement is small (a transversal crossing of two segments gives 4)."""
    arr = singularity_forward(famt, k, k_max=max(k, 8))
    S = arr.as_array()
    a, d = S[:, :2], S[:, 2:] - S[:, :2]
    cand = [a, S[:, 2:]]
    if len(S) <= 2000:
        for i in range(len(S)):
            den = d[i, 0] * d[:, 1] - d[i, 1] * d[:, 0]
            r = a - a[i]
            ok = np.abs(den) > 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                u = (r[:, 0] * d[:, 1] - r[:, 1] * d[:, 0]) / den
                v = (r[:, 0] * d[i, 1] - r[:, 1] * d[i, 0]) / den
            ok &= (u > -tol) & (u < 1 + tol) & (v > -tol) & (v < 1 + tol)
            if ok.any():
                cand.append(a[i] + u[ok, None] * d[i])
    P = np.unique(np.round(np.concatenate(cand), 9), axis=0)
    G = 64
    # bucket segments by the grid cells they visit
    seg_ids, cells = [], []
    for i in range(len(S)):
        m = int(np.hypot(*d[i]) * 4 * G) + 2
        u = np.linspace(0, 1, m)
        pts = a[i] + u[:, None] * d[i]
        c = np.clip((pts * G).astype(int), 0, G - 1)
        cc = np.unique(c[:, 0] * G + c[:, 1])
        seg_ids.append(np.full(len(cc), i))
        cells.append(cc)
    seg_ids, cells = np.concatenate(seg_ids), np.concatenate(cells)
    order = np.argsort(cells, kind="stable")
    seg_ids, cells = seg_ids[order], cells[order]
    starts = np.searchsorted(cells, np.arange(G * G))
    ends = np.searchsorted(cells, np.arange(G * G), side="right")
    pc = np.clip((P * G).astype(int), 0, G - 1)
    best = 1
    for qi in range(len(P)):
        q = P[qi]
        ids = set()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cx, cy = pc[qi, 0] + dx, pc[qi, 1] + dy
                if 0 <= cx < G and 0 <= cy < G:
                    c = cx * G + cy
                    ids.update(seg_ids[starts[c]:ends[c]].tolist())
        if len(ids) < 2:
            continue
        idx = np.fromiter(ids, dtype=int)
        rel = q - a[idx]
        dd = (d[idx] ** 2).sum(1)
        u = (rel * d[idx]).sum(1) / dd
        perp = np.abs(rel[:, 0] * d[idx, 1] - rel[:, 1] * d[idx, 0]) / np.sqrt(dd)
        on = idx[(perp < tol) & (u > -tol) & (u < 1 + tol)]
        angs = set()
        for j in on:
            for end, sign in ((S[j, :2], -1), (S[j, 2:], 1)):
                if np.hypot(*(end - q)) > tol:
                    angs.add(round(math.atan2(sign * d[j, 1], sign * d[j, 0]), 7))
        boundary = min(q[0], q[1], 1 - q[0], 1 - q[1]) < tol
        best = max(best, len(angs) + (1 if boundary else 0))
    return best


def find_N0(famt: CatFamily, k_max: int = 10) -> tuple[int | None, list[int]]:
    """Smallest N with (K_N + 1)/lambda^N < 1, and the K_k sequence examined."""
    ks = []
    for k in range(1, k_max + 1):
        ks.append(complexity(famt, k))
        if (ks[-1] + 1) / famt.lam ** k < 1:
            return k, ks
    return None, ks


def intersection_constants(famt: CatFamily, k: int, samples: int = 200, seed: int = 0) -> tuple[int, float]:
    """(K_k, P_k) with #(W meets S_t^{+,k}) <= K_k + P_k |W| on random standard segments."""
    K = complexity(famt, k)
    S = singularity_forward(famt, k, k_max=max(k, 8)).as_array()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        a = rng.random(2)
        th = rng.uniform(0, math.pi / 2)
        L = rng.uniform(0.05, 1.0)
        b = a + L * np.array([math.cos(th), math.sin(th)])
        b = np.minimum(b, 1.0)
        w = b - a
        den = w[0] * (S[:, 3] - S[:, 1]) - w[1] * (S[:, 2] - S[:, 0])
        r = S[:, :2] - a
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (r[:, 0] * (S[:, 3] - S[:, 1]) - r[:, 1] * (S[:, 2] - S[:, 0])) / den
            v = (r[:, 0] * w[1] - r[:, 1] * w[0]) / den
        cnt = int(((u >= 0) & (u <= 1) & (v >= 0) & (v <= 1)).sum())
        worst = max(worst, (cnt - K) / np.hypot(*w))
    return K, max(worst, 0.0)


def iterate_closeness(t: float, k: int, samples: int = 20000, seed: int = 0) -> tuple[float, float]:
    """sup |F_t^k - F_0^k| / t over samples whose two orbits share an itinerary.

    Returns (C_k estimate, fraction of samples discarded near singular lines)."""
    rng = np.random.default_rng(seed)
    X, Y = rng.random(samples), rng.random(samples)
    X0, Y0, c0 = iterate_array(0.0, X, Y, k)
    Xt, Yt, ct = iterate_array(t, X, Y, k)
    same = c0 == ct
    dev = np.hypot(X0 - Xt, Y0 - Yt)[same]
    if dev.size == 0:
        return math.inf, 1.0
    return float(dev.max() / t), float(1 - same.mean())


def family_to_dict(fam: CatFamily) -> dict:
    def enc(v):
        return f"{v.numerator}/{v.denominator}" if isinstance(v, Fraction) else float(v)

    return {
        "t": enc(fam.t),
        "mode": "rational" if fam.exact else "float",
        "branches": [
            {
                "index": br.index,
                "matrix": [[enc(v) for v in row] for row in br.matrix],
                "translation": [enc(v) for v in br.translation],
                "domain": [[enc(p.x), enc(p.y)] for p in br.domain.vertices],
            }
            for br in fam.branches
        ],
    }


def family_from_dict(d: dict) -> CatFamily:
    """Rebuild a family and check the stored branches against the closed-form construction."""
    mode = d.get("mode", "rational" if isinstance(d["t"], str) else "float")
    fam = make_family(d["t"], mode)
    for stored, br in zip(d["branches"], fam.branches):
        dom = ConvexPolygon([tuple(to_exact(c) if mode == "rational" else float(c) for c in v) for v in stored["domain"]])
        if len(dom) != len(br.domain) or abs(float(dom.area) - float(br.domain.area)) > 1e-12:
            raise ValueError(f"branch {br.index} domain does not match t={d['t']}")
    return fam


__all__ = [
    "AffineBranch",
    "CatFamily",
    "GoodBadPartition",
    "OnSingularity",
    "ParameterOutOfRange",
    "STABLE",
    "UNSTABLE",
    "apply",
    "apply_array",
    "backward_lines",
    "bad_set",
    "bad_set_distance",
    "branch_of",
    "complexity",
    "find_N0",
    "forward_lines",
    "hole_polygons",
    "in_hole",
    "intersection_constants",
    "iterate_closeness",
    "iterate",
    "iterate_array",
    "make_family",
    "preimage_tags",
    "response_density",
    "singularity_forward",
    "transfer",
    "transfer_array",
]
