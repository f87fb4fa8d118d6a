"""
Standard segments and weighted standard families.

A family is stored as endpoint arrays a, b of shape (N, 2) and weights p of
shape (N,).  Evolution cuts every segment at the forward singular lines,
maps each piece with its branch and gives it the length fraction of its
parent's weight.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cat_family import CatFamily, apply_array, branch_array, make_family
from .geometry import Segment, UNSTABLE

DUST = 1e-14


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class StandardSegment:
    segment: Segment

    def __post_init__(self):
        L = self.segment.length
        if not 0 < L <= math.sqrt(2) + 1e-12:
            raise DegenerateInput(f"standard segment length {L} outside (0, sqrt 2]")
        if not UNSTABLE.contains(self.segment.direction):
            raise DegenerateInput("segment direction is not in the unstable cone")

    @classmethod
    def from_coords(cls, ax, ay, bx, by) -> "StandardSegment":
        from .geometry import Point2

        return cls(Segment(Point2(ax, ay), Point2(bx, by)))

    @property
    def length(self) -> float:
        return self.segment.length

    def as_array(self) -> np.ndarray:
        s = self.segment
        return np.array([float(s.a.x), float(s.a.y), float(s.b.x), float(s.b.y)])


def gauss_legendre01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


def _freeze(*arrs):
    for a in arrs:
        a.setflags(write=False)


@dataclass(frozen=True)
class StandardFamily:
    """Weighted collection {(W_j, p_j)} of unstable-cone segments with total weight 1."""

    a: np.ndarray
    b: np.ndarray
    p: np.ndarray
    dropped: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a, b, p = (np.asarray(x, dtype=float) for x in (self.a, self.b, self.p))
        d = b - a
        # orient every segment with a nonnegative first component
        flip = (d[:, 0] < 0) | ((d[:, 0] == 0) & (d[:, 1] < 0))
        a2, b2 = np.where(flip[:, None], b, a), np.where(flip[:, None], a, b)
        object.__setattr__(self, "a", a2)
        object.__setattr__(self, "b", b2)
        object.__setattr__(self, "p", p)
        _freeze(a2, b2, p)
        if len(p) and abs(p.sum() - 1) > 1e-10:
            raise DegenerateInput(f"weights sum to {p.sum()}, not 1")
        if (p <= 0).any():
            raise DegenerateInput("weights must be positive")

    @classmethod
    def single(cls, ax, ay, bx, by) -> "StandardFamily":
        StandardSegment.from_coords(ax, ay, bx, by)
        return cls(np.array([[ax, ay]]), np.array([[bx, by]]), np.array([1.0]))

    @classmethod
    def from_segments(cls, segs, weights=None) -> "StandardFamily":
        arr = np.array([s.as_array() if isinstance(s, StandardSegment) else np.asarray(s, float) for s in segs])
        w = np.ones(len(arr)) / len(arr) if weights is None else np.asarray(weights, float)
        return cls(arr[:, :2], arr[:, 2:], w / w.sum())

    def __len__(self):
        return len(self.p)

    @property
    def lengths(self) -> np.ndarray:
        return np.hypot(*(self.b - self.a).T)

    def total_length(self) -> float:
        return float(self.lengths.sum())

    def in_cone(self) -> bool:
        d = self.b - self.a
        return bool((d[:, 0] * d[:, 1] >= 0).all())

    def to_json(self) -> str:
        return json.dumps(
            [{"a": a.tolist(), "b": b.tolist(), "p": float(p)} for a, b, p in zip(self.a, self.b, self.p)]
        )

    @classmethod
    def from_json(cls, text: str) -> "StandardFamily":
        rows = json.loads(text)
        return cls(
            np.array([r["a"] for r in rows], float),
            np.array([r["b"] for r in rows], float),
            np.array([r["p"] for r in rows], float),
        )


def family_measure(g: StandardFamily, phi: Callable, order: int = 16) -> float:
    """mu_G(phi) = sum_j p_j * (average of phi along W_j), Gauss-Legendre per segment."""
    s, w = gauss_legendre01(order)
    tot = 0.0
    for i in range(0, len(g), 200_000):
        a, b, p = g.a[i:i + 200_000], g.b[i:i + 200_000], g.p[i:i + 200_000]
        X = a[:, 0:1] + s * (b[:, 0:1] - a[:, 0:1])
        Y = a[:, 1:2] + s * (b[:, 1:2] - a[:, 1:2])
        tot += float(p @ (phi(X, Y) @ w))
    return tot


def regularity(g: StandardFamily) -> float:
    """Z(G) = sum_j p_j / |W_j|."""
    return float((g.p / g.lengths).sum())


def _line_coefs(t: float):
    c = 2 - t
    return ((1.0, c, -1.0), (1.0, c, -2.0), (1.0, 1.0, -1.0))


def split_arrays(t: float, A: np.ndarray, B: np.ndarray):
    """Cut segments at the forward singular lines.

    Returns (A', B', parent, fraction) with fraction the relative length of each piece."""
    n = len(A)
    cuts = np.full((n, 3), 2.0)
    for k, (a, b, c) in enumerate(_line_coefs(t)):
        ga = a * A[:, 0] + b * A[:, 1] + c
        gb = a * B[:, 0] + b * B[:, 1] + c
        cr = ga * gb < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = ga / (ga - gb)
        cuts[cr, k] = s[cr]
    cuts.sort(axis=1)
    lo = np.concatenate([np.zeros((n, 1)), np.minimum(cuts, 1.0)], 1)
    hi = np.concatenate([np.minimum(cuts, 1.0), np.ones((n, 1))], 1)
    keep = hi - lo > 0
    parent = np.broadcast_to(np.arange(n)[:, None], lo.shape)[keep]
    lo, hi = lo[keep], hi[keep]
    d = B[parent] - A[parent]
    return A[parent] + lo[:, None] * d, A[parent] + hi[:, None] * d, parent, hi - lo


def map_pieces(t: float, A: np.ndarray, B: np.ndarray):
    """Map pieces lying in single branch domains; the branch is read at the midpoint."""
    M = (A + B) / 2
    j = branch_array(t, M[:, 0], M[:, 1])
    vx = np.array([0.0, 0.0, 0.0, 1.0, 1.0])[j]
    vy = np.array([0.0, 0.0, 1.0, 1.0, 2.0])[j]
    c = 2 - t

    def f(P):
        X = P[:, 0] + P[:, 1] - vx
        Y = P[:, 0] + c * P[:, 1] - vy
        return np.clip(np.stack([X, Y], 1), 0.0, 1.0)

    return f(A), f(B)


def step_arrays(t: float, A, B, p):
    """One fragment-then-map step on raw arrays; returns (A, B, p, parent, dropped weight)."""
    A2, B2, parent, frac = split_arrays(t, A, B)
    p2 = p[parent] * frac
    L = np.hypot(*(B2 - A2).T)
    ok = L > DUST
    dropped = float(p2[~ok].sum())
    A2, B2, p2, parent = A2[ok], B2[ok], p2[ok], parent[ok]
    A3, B3 = map_pieces(t, A2, B2)
    return A3, B3, p2, parent, dropped


def fragment(famt: CatFamily, w: StandardSegment) -> list[tuple[StandardSegment, float]]:
    """Maximal subsegments of w off S_t^{+,1}, with relative weights (length fractions)."""
    arr = w.as_array()[None]
    A, B, _, frac = split_arrays(famt.tf, arr[:, :2], arr[:, 2:])
    keep = np.hypot(*(B - A).T) > DUST
    if not keep.any():
        raise DegenerateInput("segment lies inside the singular set")
    frac = frac[keep] / frac[keep].sum()
    return [(StandardSegment.from_coords(*a, *b), float(f)) for a, b, f in zip(A[keep], B[keep], frac)]


def evolve(famt: CatFamily, g: StandardFamily, n: int, budget: int | None = None, seed: int = 0) -> StandardFamily:
    """F_t^n G by repeated fragment-then-map.

    Fragmentation dust (pieces shorter than 1e-14) is dropped and the weight is
    renormalised; the lost mass is accumulated in ``dropped``.  If ``budget`` is
    given and the family outgrows it, segments are resampled with probability
    proportional to weight (systematic resampling, equal new weights), which keeps
    mu_G and Z unbiased."""
    t = famt.tf
    A, B, p = g.a, g.b, g.p
    dropped = g.dropped
    rng = np.random.default_rng(seed)
    for _ in range(n):
        A, B, p, _, dr = step_arrays(t, A, B, p)
        dropped += dr
        p = p / p.sum()
        if budget is not None and len(p) > budget:
            idx = systematic_resample(p, budget, rng)
            A, B, p = A[idx], B[idx], np.full(budget, 1.0 / budget)
    return StandardFamily(A, B, p, dropped)


def systematic_resample(p: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    u = (rng.random() + np.arange(m)) / m
    return np.minimum(np.searchsorted(np.cumsum(p), u), len(p) - 1)


def mass_below(g: StandardFamily, delta: float) -> float:
    """Total weight on segments shorter than delta (bounded by delta * Z)."""
    return float(g.p[g.lengths <= delta].sum())


def refine(g: StandardFamily, parts: int) -> StandardFamily:
    """Split every segment into equal sub-segments with proportional sub-weights."""
    s = np.linspace(0, 1, parts + 1)
    d = g.b - g.a
    A = (g.a[:, None, :] + s[None, :-1, None] * d[:, None, :]).reshape(-1, 2)
    B = (g.a[:, None, :] + s[None, 1:, None] * d[:, None, :]).reshape(-1, 2)
    return StandardFamily(A, B, np.repeat(g.p / parts, parts), g.dropped)


@dataclass
class GrowthReport:
    t: float
    Z: list
    N0: int
    rate: float
    z: float
    Z_plateau: float
    Z_bound: float
    hit_time: int
    Z_star2: float
    Z_star: float
    delta_star: float
    envelope_ok: bool


def growth_constants(K: int, P: float, lam: float, N0: int, z: float, Zc: float) -> tuple[float, float, float]:
    """(Z_**, Z_*, delta_*) from the complexity and fitted growth constants."""
    Z2 = ((K + 1 + math.sqrt(2) * P) / lam + 1) ** N0
    Zs = 2 * Zc * Z2 / (1 - z) if z < 1 else math.inf
    return Z2, Zs, 1 / (100 * Zs)


def growth_stats(
    famt: CatFamily,
    g0: StandardFamily,
    steps: int,
    N0: int,
    K: int = 0,
    P: float = 0.0,
    budget: int = 50000,
    seed: int = 0,
) -> GrowthReport:
    """Z(F_t^m G) for m = 0..steps with a fitted envelope Z(F^{kN0} G) <= z^k Z(G) + Z_bound.

    The per-step rate is a least-squares fit of log Z over the transient (Z above
    four times the plateau); z = rate^N0.  The plateau is the mean of Z over the
    second half of the run and Z_bound its maximum there."""
    Zs = [regularity(g0)]
    g = g0
    for m in range(steps):
        g = evolve(famt, g, 1, budget=budget, seed=seed + m)
        Zs.append(regularity(g))
    Zarr = np.array(Zs)
    tail = Zarr[len(Zarr) // 2:]
    plateau, Zc = float(tail.mean()), float(tail.max())
    trans = np.nonzero(Zarr > 4 * plateau)[0]
    trans = trans[trans == np.arange(len(trans))]
    if len(trans) >= 2:
        rate = float(np.exp(np.polyfit(trans, np.log(Zarr[trans]), 1)[0]))
    else:
        rate = 0.0
    z = rate ** N0
    Z0 = Zarr[0]
    ok = z < 1 and all(Zarr[k * N0] <= z ** k * Z0 + Zc * (1 + 1e-12) for k in range(steps // N0 + 1))
    below = np.nonzero(Zarr <= 2 * plateau)[0]
    hit = int(below[0]) if len(below) else -1
    Z2, Zst, dst = growth_constants(K, P, famt.lam, N0, z, Zc)
    return GrowthReport(famt.tf, Zs, N0, rate, z, plateau, Zc, hit, Z2, Zst, dst, ok)


__all__ = [
    "DegenerateInput",
    "GrowthReport",
    "StandardFamily",
    "StandardSegment",
    "evolve",
    "family_measure",
    "fragment",
    "gauss_legendre01",
    "growth_stats",
    "mass_below",
    "refine",
    "regularity",
    "split_arrays",
    "step_arrays",
]
