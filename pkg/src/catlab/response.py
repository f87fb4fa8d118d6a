"""
First-order response quantities: nu_t, its limit nu~, the response series built from
the evolved diagonal, finite-difference quotients of mu_t, and the closed form of D_t.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cat_family import (
    CatFamily,
    OnSingularity,
    in_hole,
    make_family,
    response_density,
    transfer_array,
)
from .foliation import polygon_quadrature
from .geometry import Point2, point_segment_distance, unit_square
from .measures import MeasureEstimate, mu_t_many, segment_integrals
from .standard_pairs import gauss_legendre01

SCHEMA_VERSION = 1


class SeriesDivergenceSuspected(RuntimeError):
    pass


def lebesgue_mean(phi: Callable, order: int = 32) -> float:
    x, w = gauss_legendre01(order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return float(w @ phi(X, Y) @ w)


def diagonal_mean(phi: Callable, order: int = 32) -> float:
    x, w = gauss_legendre01(order)
    return float(w @ phi(x, x))


def nu_tilde(phi: Callable, order: int = 32) -> float:
    """m(phi) minus the diagonal average of phi."""
    return lebesgue_mean(phi, order) - diagonal_mean(phi, order)


def nu_t(famt: CatFamily, phi: Callable, order: int = 24) -> float:
    """int (phi o F_t - phi) dm, integrating phi o F_t branch by branch (it jumps across S_t^+)."""
    tot = 0.0
    for br in famt.branches:
        m = np.array(br.matrix, dtype=float)
        v = np.array(br.translation, dtype=float)
        dom = br.domain

        def g(X, Y, m=m, v=v):
            return phi(m[0, 0] * X + m[0, 1] * Y - v[0], m[1, 0] * X + m[1, 1] * Y - v[1])

        tot += polygon_quadrature(dom, g, order)
    return tot - polygon_quadrature(unit_square(), phi, order)


def integral_D(famt: CatFamily, order: int = 8) -> float:
    """int_M D_t dm, integrating L_t 1 over the image polygons (where it is smooth)."""
    if famt.tf == 0:
        return 0.0
    tot = 0.0
    for br in famt.branches:
        tot += polygon_quadrature(br.image, lambda X, Y: np.ones_like(X) / (1 - famt.tf), order)
    return (tot - 1.0) / famt.tf


# ---------------------------------------------------------------- closed form


def closed_form_D(t, x, y):
    """1/(1-t) off the hole, -1/t on it."""
    return -1 / t if in_hole(t, x, y) else 1 / (1 - t)


def _near_hole_edge(t: float, x: float, y: float, eps: float) -> bool:
    return min(abs(y - x), abs(y - x + t), abs(y - x - 1 + t)) < eps


def closed_form_residual(famt: CatFamily, samples: int = 100_000, seed: int = 0, margin: float = 1e-9) -> float:
    """Max |D_t(x) - closed form(x)| over seeded points kept off the hole boundary.

    In rational mode the points are dyadic rationals and the comparison is exact, so
    the result is 0 (as a Fraction) when the identity holds."""
    t = famt.t
    if famt.tf == 0:
        raise ValueError("closed form needs t > 0")
    rng = np.random.default_rng(seed)
    if not famt.exact:
        out = 0.0
        left = samples
        while left:
            X, Y = rng.random(left), rng.random(left)
            keep = np.minimum(np.minimum(np.abs(Y - X), np.abs(Y - X + t)), np.abs(Y - X - 1 + t)) >= margin
            X, Y = X[keep], Y[keep]
            D = (transfer_array(famt.tf, lambda a, b: np.ones_like(a), X, Y) - 1) / t
            hole = ((X - t < Y) & (Y < X)) | (Y > X + 1 - t)
            ref = np.where(hole, -1 / t, 1 / (1 - t))
            # points on backward singular lines have no strict preimage; they are measure zero
            ok = ~_on_backward_lines(famt, X, Y, margin)
            out = max(out, float(np.abs(D - ref)[ok].max(initial=0.0)))
            left -= len(X)
        return out
    ix = rng.integers(1, EXACT_DEN, size=samples)
    iy = rng.integers(1, EXACT_DEN, size=samples)
    D, ref, ok = exact_density_batch(famt, ix, iy, margin)
    return max((abs(D[i] - ref[i]) for i in np.nonzero(ok)[0].tolist()), default=Fraction(0))


EXACT_DEN = 1 << 30


def _edge_rows(poly, scale):
    """Integer (a, b, c) with a*x + b*y + c > 0 strictly inside a CCW polygon of Fractions."""
    V = poly.vertices
    rows = []
    for i in range(len(V)):
        p, q = V[i], V[(i + 1) % len(V)]
        a, b = -(q.y - p.y), q.x - p.x
        c = -(a * p.x + b * p.y)
        row = tuple(v * scale for v in (a, b, c))
        assert all(Fraction(v).denominator == 1 for v in row)
        rows.append(tuple(int(v) for v in row))
    return rows


def exact_density_batch(famt: CatFamily, ix: np.ndarray, iy: np.ndarray, margin: float = 1e-9):
    """D_t and its closed form, exactly, at the dyadic points (ix, iy)/EXACT_DEN.

    Membership in the image polygons and in the hole is decided by integer sign
    tests, so no rounding is involved. Returns (D, closed form, usable mask) where
    D and the closed form are lists of Fractions and unusable points lie on a
    backward singular line or within margin of the hole boundary."""
    if not famt.exact:
        raise ValueError("exact evaluation needs a rational family")
    t = Fraction(famt.t)
    scale = 1
    for br in famt.branches:
        for v in br.image.vertices:
            scale = math.lcm(scale, Fraction(v.x).denominator, Fraction(v.y).denominator)
    scale = scale * scale  # edge offsets are products of two coordinates
    X, Y = ix.astype(object), iy.astype(object)
    count = np.zeros(len(ix), dtype=int)
    on_edge = np.zeros(len(ix), dtype=bool)
    for br in famt.branches:
        inside = np.ones(len(ix), dtype=bool)
        for a, b, c in _edge_rows(br.image, scale):
            g = a * X + b * Y + c * EXACT_DEN
            inside &= g > 0
            on_edge |= g == 0
        count += inside
    # hole: x - t < y < x or y > x + 1 - t, with t = p/q
    p, q = t.numerator, t.denominator
    d = (Y - X) * q
    hole = ((d > -p * EXACT_DEN) & (d < 0)) | (d > (q - p) * EXACT_DEN)
    near = np.minimum(np.minimum(np.abs(iy - ix), np.abs(iy - ix + float(t) * EXACT_DEN)),
                      np.abs(iy - ix - (1 - float(t)) * EXACT_DEN)) < margin * EXACT_DEN
    det = 1 - t
    vals = {k: (Fraction(k) / det - 1) / t for k in range(5)}
    D = [vals[int(k)] for k in count]
    ref = [-1 / t if h else 1 / det for h in hole]
    return D, ref, ~on_edge & ~near


def _on_backward_lines(famt: CatFamily, X, Y, eps):
    """Points within eps of an image-polygon edge (where the preimage count is ambiguous)."""
    segs = []
    for br in famt.branches:
        V = br.image.as_array()
        segs += [np.r_[V[i], V[(i + 1) % len(V)]] for i in range(len(V))]
    return point_segment_distance(np.stack([X, Y], 1), np.array(segs)) < eps


# ---------------------------------------------------------------- series


@dataclass
class SeriesResult:
    terms: list
    partial_sums: list
    K: int
    computed: int
    ratio: float
    tail: float
    value: float


def series_terms(phi: Callable, k_max: int, nodes: int = 8, mean: float | None = None) -> np.ndarray:
    """term_k = m(phi) - int_0^1 phi(F_0^k(s, s)) ds for k = 0..k_max.

    The diagonal is evolved as one standard segment under F_0 (which has no hole),
    and each term integrates phi piecewise in the original parameter s."""
    m = lebesgue_mean(phi) if mean is None else mean
    A = np.array([[0.0, 0.0]])
    B = np.array([[1.0, 1.0]])
    out = []
    for k in range(k_max + 1):
        v = segment_integrals(0.0, A, B, k, phi, nodes=nodes)[0]
        out.append(m - v)
    return np.array(out)


def response_series(fam0: CatFamily, phi: Callable, K: int = 30, computed: int = 13, nodes: int = 8,
                    mean: float | None = None, zero_tol: float = 1e-13) -> SeriesResult:
    """Partial sums s_0..s_K of the response series and a geometric tail bound.

    Terms up to ``computed`` are evaluated; later ones are extrapolated with the
    ratio fitted on the last computed terms. ``tail`` bounds everything after the
    last computed term by |term| r/(1-r)."""
    if fam0.tf != 0:
        raise ValueError("the series is built from the unperturbed map")
    computed = min(computed, K)
    terms = series_terms(phi, computed, nodes, mean)
    mag = np.abs(terms)
    if mag.max() < zero_tol:
        r = 0.0
        full = np.zeros(K + 1)
        full[: computed + 1] = terms
        ps = np.cumsum(full)
        return SeriesResult(full.tolist(), ps.tolist(), K, computed, r, float(mag[-1]), float(ps[-1]))
    ks = np.arange(computed + 1)
    lo = max(1, computed - 9)
    sel = (ks >= lo) & (mag > zero_tol)
    if sel.sum() < 3:
        raise SeriesDivergenceSuspected("too few resolvable terms to fit a decay rate")
    slope = np.polyfit(ks[sel], np.log(mag[sel]), 1)[0]
    r = math.exp(slope)
    if r >= 1:
        raise SeriesDivergenceSuspected(f"terms not decaying over the last indices (ratio {r:.3f})")
    full = np.zeros(K + 1)
    full[: computed + 1] = terms
    last = terms[-1]
    for k in range(computed + 1, K + 1):
        last = last * r
        full[k] = last
    ps = np.cumsum(full)
    tail = float(mag[-1] * r / (1 - r))
    return SeriesResult(full.tolist(), ps.tolist(), K, computed, r, tail, float(ps[-1]))


def fibonacci_xy_term(k: int) -> Fraction:
    """Closed form of the k-th xy term: -1/(12 a_k b_k), (a_k, b_k) consecutive Fibonacci numbers."""
    a, b = 1, 1
    for _ in range(k):
        a, b = a + b, a + 2 * b
    return Fraction(-1, 12 * a * b)


# ---------------------------------------------------------------- quotients


def diff_quotient(phi: Callable, t: float, tol: float = 1e-3, n_max: int = 13, mean: float | None = None,
                  q: int = 8) -> tuple[float, MeasureEstimate]:
    """(mu_t(phi) - m(phi))/t with the estimate used.

    tol applies to the quotient, so mu_t is iterated to tol * t."""
    if t <= 0:
        raise ValueError("t must be positive")
    est = mu_t_many(make_family(t, "float"), [phi], tol * t, n_max, q=q)[0]
    m = lebesgue_mean(phi) if mean is None else mean
    return (est.value - m) / t, est


def lipschitz_constant(rows: Sequence[tuple[float, float, float, float]]) -> float:
    """max |mu_t - m| / (t ||phi||_C1) over rows (t, mu_t, m, c1)."""
    return max(abs(mu - m) / (t * c1) for t, mu, m, c1 in rows)


# ---------------------------------------------------------------- report


@dataclass
class ResponseReport:
    observable: str
    t_grid: list
    quotients: list
    series: float
    K: int
    tail: float
    deltas: list = field(default_factory=list)
    deviations: list = field(default_factory=list)
    max_rel_err: float = 0.0
    n_used: list = field(default_factory=list)

    def __post_init__(self):
        if list(self.t_grid) != sorted(self.t_grid, reverse=True):
            raise ValueError("t grid must be sorted descending")
        vals = list(self.quotients) + [self.series, self.tail]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite entry in report")
        self.deviations = [abs(qv - self.series) for qv in self.quotients]
        scale = max(abs(self.series), 1e-12)
        self.max_rel_err = max(self.deviations, default=0.0) / scale

    def to_dict(self, meta: dict | None = None) -> dict:
        d = {"schema_version": SCHEMA_VERSION}
        d.update(asdict(self))
        if meta:
            d.update(meta)
        return d

    def to_json(self, meta: dict | None = None) -> str:
        return json.dumps(self.to_dict(meta), indent=2, sort_keys=True)

    def csv_rows(self, meta: dict | None = None) -> list[dict]:
        rows = []
        for i, t in enumerate(self.t_grid):
            row = {
                "observable": self.observable,
                "t": repr(float(t)),
                "quotient": repr(float(self.quotients[i])),
                "delta": repr(float(self.deltas[i])) if self.deltas else "",
                "series": repr(float(self.series)),
                "K": self.K,
                "tail": repr(float(self.tail)),
                "deviation": repr(float(self.deviations[i])),
            }
            if meta:
                row.update(meta)
            rows.append(row)
        return rows


def reports_to_csv(reports: Sequence[ResponseReport], meta: dict | None = None) -> str:
    rows = [r for rep in reports for r in rep.csv_rows(meta)]
    buf = io.StringIO()
    fields = list(rows[0]) if rows else ["observable", "t", "quotient", "delta", "series", "K", "tail", "deviation"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def build_report(name: str, phi: Callable, mean: float, t_grid: Sequence[float], K: int = 30,
                 tol: float = 1e-3, n_max: int = 13, computed: int = 13) -> ResponseReport:
    ts = sorted((float(t) for t in t_grid), reverse=True)
    series = response_series(make_family(0.0, "float"), phi, K, computed, mean=mean)
    qs, ds, ns = [], [], []
    for t in ts:
        qv, est = diff_quotient(phi, t, tol, n_max, mean)
        qs.append(qv)
        ds.append(est.delta)
        ns.append(est.n)
    return ResponseReport(name, ts, qs, series.value, K, series.tail, ds, n_used=ns)


__all__ = [
    "ResponseReport",
    "SeriesDivergenceSuspected",
    "SeriesResult",
    "build_report",
    "closed_form_D",
    "closed_form_residual",
    "diagonal_mean",
    "diff_quotient",
    "EXACT_DEN",
    "exact_density_batch",
    "fibonacci_xy_term",
    "integral_D",
    "lebesgue_mean",
    "lipschitz_constant",
    "nu_t",
    "nu_tilde",
    "reports_to_csv",
    "response_series",
    "series_terms",
]
