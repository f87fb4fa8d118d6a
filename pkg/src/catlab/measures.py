"""
Estimating mu_t(phi) = lim m(phi o F_t^n) and related functionals.

Three independent ways of computing m(phi o F_t^n) are provided:

* ``pushforward_lebesgue``: vertical lines x = const are evolved as segment
  families, cut exactly at the singular lines, and integrated piecewise by
  Gauss-Legendre; an outer midpoint rule averages over x;
* ``pushforward_cells``: the square itself is pushed forward as a set of
  convex cells; since F_t^n has constant Jacobian (1-t)^n,
  m(phi o F_t^n) = (1-t)^{-n} sum over cells of int phi;
* ``pushforward_mc``: plain Monte-Carlo on seeded uniform points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cat_family import CatFamily, iterate_array
from .geometry import Estimate
from .standard_pairs import DUST, StandardSegment, gauss_legendre01, map_pieces, split_arrays


class SingularityBudgetExceeded(RuntimeError):
    pass


class NoConvergence(RuntimeError):
    pass


@dataclass
class MeasureEstimate:
    t: float
    observable: str
    n: int
    lines: int
    nodes: int
    value: float
    delta: float
    method: str = "cells"
    history: list = field(default_factory=list, repr=False)


# ---------------------------------------------------------------- segments


def tracked_steps(t: float, A: np.ndarray, B: np.ndarray, n: int, budget: int | None = None):
    """Yield (k, A, B, parent, s0, s1) for k = 0..n while evolving segments.

    The piece A + u (B - A), u in [0, 1], is the image of the parent's parameter
    interval [s0, s1] (affinely)."""
    parent = np.arange(len(A))
    s0, s1 = np.zeros(len(A)), np.ones(len(A))
    yield 0, A, B, parent, s0, s1
    for k in range(1, n + 1):
        A2, B2, par, _ = split_arrays(t, A, B)
        # parameter bounds of the pieces, read back from positions along the old segment
        d = B[par] - A[par]
        dd = np.maximum((d * d).sum(1), 1e-300)
        u0 = ((A2 - A[par]) * d).sum(1) / dd
        u1 = ((B2 - A[par]) * d).sum(1) / dd
        ns0 = s0[par] + u0 * (s1[par] - s0[par])
        ns1 = s0[par] + u1 * (s1[par] - s0[par])
        keep = np.hypot(*(B2 - A2).T) > DUST
        A2, B2, ns0, ns1, par = A2[keep], B2[keep], ns0[keep], ns1[keep], par[keep]
        A, B = map_pieces(t, A2, B2)
        parent, s0, s1 = parent[par], ns0, ns1
        if budget is not None and len(A) > budget:
            raise SingularityBudgetExceeded(f"{len(A)} fragments exceed the budget {budget}")
        yield k, A, B, parent, s0, s1


def evolve_tracked(t: float, A: np.ndarray, B: np.ndarray, n: int, budget: int | None = None):
    """Evolve segments n steps; returns (A, B, parent, s0, s1) as in tracked_steps."""
    for _, *state in tracked_steps(t, A, B, n, budget):
        pass
    return tuple(state)


def _integrate_pieces(n_out, EA, EB, par, s0, s1, phi, rho, nodes):
    out = np.zeros(n_out)
    x, w = gauss_legendre01(nodes)
    for i in range(0, len(EA), 100_000):
        sl = slice(i, i + 100_000)
        a, b = EA[sl], EB[sl]
        X = a[:, :1] + x * (b[:, :1] - a[:, :1])
        Y = a[:, 1:] + x * (b[:, 1:] - a[:, 1:])
        vals = phi(X, Y)
        ds = s1[sl] - s0[sl]
        if rho is not None:
            vals = vals * rho(s0[sl, None] + x * ds[:, None])
        np.add.at(out, par[sl], ds * (vals @ w))
    return out


def segment_integrals(t: float, A: np.ndarray, B: np.ndarray, n: int, phi: Callable,
                      rho: Callable | None = None, nodes: int = 8, budget: int | None = None) -> np.ndarray:
    """For each input segment W: int_0^1 phi(F_t^n(W(s))) rho(s) ds (parameter measure)."""
    EA, EB, par, s0, s1 = evolve_tracked(t, A, B, n, budget)
    return _integrate_pieces(len(A), EA, EB, par, s0, s1, phi, rho, nodes)


def pushforward_lebesgue(famt: CatFamily, phi: Callable, n: int, lines: int = 2048, nodes: int = 8,
                         budget_per_line: int = 1_000_000) -> float:
    """m(phi o F_t^n) over vertical lines x_i = (i + 1/2)/lines, each cut exactly at singular lines."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    t = famt.tf
    tot = 0.0
    chunk = max(1, 400_000 // max(1, int(2.7 ** n)))
    for i0 in range(0, lines, chunk):
        xs = (np.arange(i0, min(lines, i0 + chunk)) + 0.5) / lines
        A = np.stack([xs, np.zeros_like(xs)], 1)
        B = np.stack([xs, np.ones_like(xs)], 1)
        vals = segment_integrals(t, A, B, n, phi, nodes=nodes, budget=budget_per_line * len(xs))
        tot += float(vals.sum())
    return tot / lines


def pushforward_lebesgue_estimate(famt: CatFamily, phi: Callable, n: int, lines: int = 2048,
                                  nodes: int = 8, name: str = "") -> MeasureEstimate:
    """pushforward_lebesgue with a Richardson-style delta from halving the line count."""
    v = pushforward_lebesgue(famt, phi, n, lines, nodes)
    v2 = pushforward_lebesgue(famt, phi, n, lines // 2, nodes)
    return MeasureEstimate(famt.tf, name, n, lines, nodes, v, abs(v - v2), "lines")


def pushforward_mc(t: float, phi: Callable, n: int, samples: int, seed: int) -> Estimate:
    """Monte-Carlo m(phi o F_t^n) from seeded uniform points."""
    rng = np.random.default_rng(seed)
    s, s2, left = 0.0, 0.0, samples
    while left:
        m = min(left, 1_000_000)
        X, Y = rng.random(m), rng.random(m)
        X, Y, _ = iterate_array(t, X, Y, n)
        v = phi(X, Y)
        s += float(v.sum())
        s2 += float((v * v).sum())
        left -= m
    mean = s / samples
    var = max(s2 / samples - mean * mean, 0.0)
    return Estimate(mean, math.sqrt(var / samples))


# ---------------------------------------------------------------- cells


def _clip_side(P, n, g):
    """Keep the part g <= 0 of padded convex polygons P (N, V, 2) with counts n."""
    N, V, _ = P.shape
    idx = np.arange(V)
    valid = idx[None, :] < n[:, None]
    nxt = np.where(idx[None, :] + 1 < n[:, None], idx[None, :] + 1, 0)
    Pn = np.take_along_axis(P, nxt[:, :, None], 1)
    gn = np.take_along_axis(g, nxt, 1)
    inside = (g <= 0) & valid
    cross = valid & (((g < 0) & (gn > 0)) | ((g > 0) & (gn < 0)))
    den = np.where(cross, g - gn, 1.0)
    s = np.where(cross, g / den, 0.0)
    X = P + s[:, :, None] * (Pn - P)
    out = np.stack([P, X], 2).reshape(N, 2 * V, 2)
    m = np.stack([inside, cross], 2).reshape(N, 2 * V)
    order = np.argsort(~m, axis=1, kind="stable")
    out = np.take_along_axis(out, order[:, :, None], 1)
    cnt = m.sum(1)
    out = np.where((np.arange(2 * V)[None, :] < cnt[:, None])[:, :, None], out, 0.0)
    return out, cnt


def _areas(P, n):
    V = P.shape[1]
    idx = np.arange(V)
    nxt = np.where(idx[None, :] + 1 < n[:, None], idx[None, :] + 1, 0)
    Pn = np.take_along_axis(P, nxt[:, :, None], 1)
    cr = P[:, :, 0] * Pn[:, :, 1] - Pn[:, :, 0] * P[:, :, 1]
    return 0.5 * np.where(idx[None, :] < n[:, None], cr, 0.0).sum(1)


def _pad(X, w):
    if X.shape[1] >= w:
        return X[:, :w]
    return np.concatenate([X, np.zeros((X.shape[0], w - X.shape[1], 2))], 1)


def _split(P, n, coef):
    a, b, c = coef
    valid = np.arange(P.shape[1])[None, :] < n[:, None]
    g = np.where(valid, a * P[:, :, 0] + b * P[:, :, 1] + c, 0.0)
    mixed = ((g > 0) & valid).any(1) & ((g < 0) & valid).any(1)
    A, na = _clip_side(P[mixed], n[mixed], g[mixed])
    B, nb = _clip_side(P[mixed], n[mixed], -g[mixed])
    w = max(int(na.max(initial=0)), int(nb.max(initial=0)), int(n.max(initial=0)), 3)
    Q = np.concatenate([_pad(P[~mixed], w), _pad(A, w), _pad(B, w)])
    nq = np.concatenate([n[~mixed], na, nb])
    keep = (nq >= 3) & (_areas(Q, nq) > 1e-22)
    return Q[keep], nq[keep]


def cell_step(P: np.ndarray, n: np.ndarray, t: float, eps: float = 1e-13):
    """Cut padded convex cells at the forward singular lines and map each piece by its branch.

    The branch is read from the vertex farthest from each line, so slivers hugging a
    line are classified by their bulk; cells thinner than eps across a line are
    dropped (their mass is below eps times their length)."""
    c = 2 - t
    coefs = ((1.0, c, -1.0), (1.0, c, -2.0), (1.0, 1.0, -1.0))
    for coef in coefs:
        P, n = _split(P, n, coef)
    valid = np.arange(P.shape[1])[None, :] < n[:, None]
    rows = np.arange(len(n))
    ok = np.ones(len(n), dtype=bool)
    side = []
    for a, b, cc in coefs:
        g = np.where(valid, a * P[:, :, 0] + b * P[:, :, 1] + cc, 0.0)
        gm = g[rows, np.argmax(np.abs(g), 1)]
        ok &= np.abs(gm) > eps
        side.append(gm > 0)
    P, n = P[ok], n[ok]
    s1, s2, s3 = (s[ok] for s in side)
    vx = np.where(~s1, 0.0, np.where(~s3, 0.0, 1.0))
    vy = np.where(~s1, 0.0, np.where(~s3, 1.0, np.where(~s2, 1.0, 2.0)))
    X = P[:, :, 0] + P[:, :, 1] - vx[:, None]
    Y = P[:, :, 0] + c * P[:, :, 1] - vy[:, None]
    Q = np.clip(np.stack([X, Y], 2), 0.0, 1.0)
    valid = np.arange(Q.shape[1])[None, :] < n[:, None]
    return np.where(valid[:, :, None], Q, 0.0), n


def _duffy(q):
    x, w = gauss_legendre01(q)
    U, V = np.meshgrid(x, x, indexing="ij")
    WU, WV = np.meshgrid(w, w, indexing="ij")
    return U.ravel(), (V * (1 - U)).ravel(), (WU * WV * (1 - U)).ravel()


def cell_integrals(P: np.ndarray, n: np.ndarray, phis: Sequence[Callable], q: int = 8) -> np.ndarray:
    """Integral of each phi over the union of cells (fan triangulation, collapsed Gauss rule)."""
    a, b, w = _duffy(q)
    tot = np.zeros(len(phis))
    V = P.shape[1]
    for i in range(1, V - 1):
        sel = np.nonzero(n > i + 1)[0]
        for j0 in range(0, len(sel), 50_000):
            s = sel[j0:j0 + 50_000]
            T0, T1, T2 = P[s, 0], P[s, i], P[s, i + 1]
            jac = np.abs((T1[:, 0] - T0[:, 0]) * (T2[:, 1] - T0[:, 1]) - (T2[:, 0] - T0[:, 0]) * (T1[:, 1] - T0[:, 1]))
            X = T0[:, None, 0] + a * (T1 - T0)[:, None, 0] + b * (T2 - T0)[:, None, 0]
            Y = T0[:, None, 1] + a * (T1 - T0)[:, None, 1] + b * (T2 - T0)[:, None, 1]
            for k, phi in enumerate(phis):
                tot[k] += float(jac @ (phi(X, Y) @ w))
    return tot


def unit_cells():
    return np.array([[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]]), np.array([4])


def pushforward_cells(t: float, phis: Sequence[Callable], n: int, q: int = 8, every: bool = False):
    """m(phi o F_t^k) for each phi, at k = n (or at every k <= n if ``every``).

    Returns an array of shape (len(phis),) or (n + 1, len(phis)), plus the final cell count."""
    P, cnt = unit_cells()
    rows = [cell_integrals(P, cnt, phis, q)] if every else []
    for k in range(1, n + 1):
        P, cnt = cell_step(P, cnt, t)
        if every or k == n:
            rows.append(cell_integrals(P, cnt, phis, q) / (1 - t) ** k)
    if n == 0 and not every:
        rows = [cell_integrals(P, cnt, phis, q)]
    out = np.array(rows)
    return (out if every else out[0]), len(cnt)


def mu_t(famt: CatFamily, phi: Callable, tol: float = 1e-6, n_max: int = 13, n_min: int = 2,
         q: int = 8, name: str = "") -> MeasureEstimate:
    """Iterate the cell pushforward until successive values differ by less than tol."""
    return mu_t_many(famt, [phi], tol, n_max, n_min, q, [name])[0]


def mu_t_many(famt: CatFamily, phis: Sequence[Callable], tol: float = 1e-6, n_max: int = 13,
              n_min: int = 2, q: int = 8, names: Sequence[str] | None = None) -> list[MeasureEstimate]:
    """mu_t for several observables sharing one cell evolution.

    Convergence needs two consecutive differences below tol for every observable."""
    t = famt.tf
    names = list(names) if names is not None else [""] * len(phis)
    P, cnt = unit_cells()
    hist = [cell_integrals(P, cnt, phis, q)]
    if t == 0:
        # Lebesgue measure is invariant: the n = 0 value is already the limit
        return [MeasureEstimate(t, nm, 0, 0, q, float(hist[0][k]), 0.0, "cells", [float(hist[0][k])])
                for k, nm in enumerate(names)]
    for k in range(1, n_max + 1):
        P, cnt = cell_step(P, cnt, t)
        hist.append(cell_integrals(P, cnt, phis, q) / (1 - t) ** k)
        if k >= max(n_min, 2):
            d1 = np.abs(hist[-1] - hist[-2])
            d2 = np.abs(hist[-2] - hist[-3])
            if (np.maximum(d1, d2) < tol).all():
                break
    else:
        d = np.abs(hist[-1] - hist[-2])
        raise NoConvergence(f"t={t}: successive differences {d.max():.2e} >= {tol:.1e} at n={n_max}")
    H = np.array(hist)
    dlt = np.maximum(np.abs(H[-1] - H[-2]), np.abs(H[-2] - H[-3]))
    return [MeasureEstimate(t, nm, len(H) - 1, len(cnt), q, float(H[-1, k]), float(dlt[k]), "cells",
                            H[:, k].tolist()) for k, nm in enumerate(names)]


# ---------------------------------------------------------------- correlations


def cov(famt: CatFamily, phi: Callable, n: int, w: StandardSegment, rho: Callable | None, mu_val: float,
        nodes: int = 8) -> float:
    """|int_W (phi o F_t^n) rho - mu_t(phi) int_W rho| with arclength measure on W.

    rho is a function of the arclength fraction s in [0, 1] along W (None means 1)."""
    arr = w.as_array()[None]
    L = w.length
    I = segment_integrals(famt.tf, arr[:, :2], arr[:, 2:], n, phi, rho, nodes)[0] * L
    x, wt = gauss_legendre01(32)
    R = L * float(wt @ (rho(x) if rho is not None else np.ones_like(x)))
    return abs(I - mu_val * R)


def cov_sequence(famt: CatFamily, phis: Sequence[Callable], ns: Sequence[int], w: StandardSegment,
                 rho: Callable | None, mu_vals: Sequence[float], nodes: int = 8) -> np.ndarray:
    """cov for several observables at each n in ns, from a single evolution of w.

    Returns an array of shape (len(ns), len(phis))."""
    arr = w.as_array()[None]
    L = w.length
    xr, wr = gauss_legendre01(32)
    R = L * float(wr @ (rho(xr) if rho is not None else np.ones_like(xr)))
    want = sorted(set(int(n) for n in ns))
    rows = {}
    for k, EA, EB, par, s0, s1 in tracked_steps(famt.tf, arr[:, :2], arr[:, 2:], want[-1]):
        if k in want:
            rows[k] = [abs(_integrate_pieces(1, EA, EB, par, s0, s1, phi, rho, nodes)[0] * L - mu * R)
                       for phi, mu in zip(phis, mu_vals)]
    return np.array([rows[int(n)] for n in ns])


@dataclass
class DecayFit:
    slope: float
    intercept: float
    r2: float
    gamma: float
    ns: list
    covs: list


def fit_decay(ns: Sequence[int], covs: Sequence[float]) -> DecayFit:
    """Least-squares fit of log cov against n."""
    ns_a, c = np.asarray(ns, float), np.asarray(covs, float)
    y = np.log(c)
    slope, icpt = np.polyfit(ns_a, y, 1)
    resid = y - (slope * ns_a + icpt)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1 - float((resid ** 2).sum()) / sst if sst > 0 else 1.0
    return DecayFit(float(slope), float(icpt), r2, float(math.exp(slope)), list(ns), list(map(float, covs)))


def upper_envelope(covs: Sequence[float]) -> np.ndarray:
    """Smallest nonincreasing majorant: E_n = max over m >= n of cov_m."""
    c = np.asarray(covs, float)
    return np.maximum.accumulate(c[::-1])[::-1]


def fit_envelope(ns: Sequence[int], covs: Sequence[float]) -> DecayFit:
    """fit_decay applied to the upper envelope (the bound C gamma^n is a majorant)."""
    return fit_decay(ns, upper_envelope(covs))


# ---------------------------------------------------------------- equidistribution


@dataclass
class SquareGrid:
    eta: float
    e_u: tuple
    e_s: tuple
    cells: np.ndarray  # (N, 2) integer (i, j) of every square meeting M
    interior: np.ndarray  # bool mask of squares at least 2 eta from the boundary

    @property
    def n_all(self) -> int:
        return len(self.cells)

    @property
    def n_interior(self) -> int:
        return int(self.interior.sum())


def square_grid(fam0: CatFamily, eta: float) -> SquareGrid:
    """Squares of side eta with sides along E_u, E_s, indexed by (floor(u/eta), floor(v/eta))."""
    eu, es = np.array(fam0.E_u), np.array(fam0.E_s)
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    U, V = corners @ eu, corners @ es
    i0, i1 = int(math.floor(U.min() / eta)) - 1, int(math.ceil(U.max() / eta)) + 1
    j0, j1 = int(math.floor(V.min() / eta)) - 1, int(math.ceil(V.max() / eta)) + 1
    I, J = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1), indexing="ij")
    I, J = I.ravel(), J.ravel()
    # square corners in xy
    cu = np.stack([I, I + 1, I + 1, I], 1) * eta
    cv = np.stack([J, J, J + 1, J + 1], 1) * eta
    cx = cu * eu[0] + cv * es[0]
    cy = cu * eu[1] + cv * es[1]
    meets = _square_meets_unit(cx, cy)
    inner = (np.minimum(np.minimum(cx, cy), np.minimum(1 - cx, 1 - cy)) >= 2 * eta).all(1)
    keep = meets
    return SquareGrid(eta, tuple(eu), tuple(es), np.stack([I[keep], J[keep]], 1), inner[keep])


def _square_meets_unit(cx, cy):
    """Positive-area overlap of each (convex) square with the unit square, via separating axes."""
    ok = (cx.max(1) > 0) & (cx.min(1) < 1) & (cy.max(1) > 0) & (cy.min(1) < 1)
    # also test the square's own edge normals against the unit-square corners
    ux, uy = np.array([0, 1, 1, 0.0]), np.array([0, 0, 1, 1.0])
    for e in range(2):
        nx = -(cy[:, e + 1] - cy[:, e])
        ny = cx[:, e + 1] - cx[:, e]
        proj_sq = cx * nx[:, None] + cy * ny[:, None]
        proj_u = ux[None] * nx[:, None] + uy[None] * ny[:, None]
        ok &= (proj_sq.max(1) > proj_u.min(1) + 1e-15) & (proj_sq.min(1) < proj_u.max(1) - 1e-15)
    return ok


def _lengths_in_squares(A: np.ndarray, B: np.ndarray, grid: SquareGrid) -> tuple[dict, float]:
    eta = grid.eta
    eu, es = np.array(grid.e_u), np.array(grid.e_s)
    total = float(np.hypot(*(B - A).T).sum())
    acc: dict = {}
    for i0 in range(0, len(A), 200_000):
        a, b = A[i0:i0 + 200_000], B[i0:i0 + 200_000]
        ua, ub = a @ eu / eta, b @ eu / eta
        va, vb = a @ es / eta, b @ es / eta
        L = np.hypot(*(b - a).T)
        cuts = [np.zeros(len(a)), np.ones(len(a))]
        params = [np.zeros(len(a)), np.ones(len(a))]
        seg_idx = [np.arange(len(a)), np.arange(len(a))]
        for p0, p1 in ((ua, ub), (va, vb)):
            lo, hi = np.minimum(p0, p1), np.maximum(p0, p1)
            k0, k1 = np.floor(lo) + 1, np.ceil(hi) - 1
            cnt = np.maximum(k1 - k0 + 1, 0).astype(int)
            rep = np.repeat(np.arange(len(a)), cnt)
            offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            lvl = k0[rep] + offs
            with np.errstate(divide="ignore", invalid="ignore"):
                s = (lvl - p0[rep]) / (p1[rep] - p0[rep])
            params.append(s)
            seg_idx.append(rep)
        s_all = np.concatenate(params)
        i_all = np.concatenate(seg_idx)
        order = np.lexsort((s_all, i_all))
        s_all, i_all = s_all[order], i_all[order]
        same = i_all[1:] == i_all[:-1]
        lo_s, hi_s, idx = s_all[:-1][same], s_all[1:][same], i_all[:-1][same]
        pos = hi_s > lo_s
        lo_s, hi_s, idx = lo_s[pos], hi_s[pos], idx[pos]
        mid = (lo_s + hi_s) / 2
        um = ua[idx] + mid * (ub[idx] - ua[idx])
        vm = va[idx] + mid * (vb[idx] - va[idx])
        ci, cj = np.floor(um).astype(np.int64), np.floor(vm).astype(np.int64)
        key = ci * 1_000_003 + cj
        lens = (hi_s - lo_s) * L[idx]
        uk, inv = np.unique(key, return_inverse=True)
        sums = np.bincount(inv, weights=lens)
        for kk, vv in zip(uk.tolist(), sums.tolist()):
            acc[kk] = acc.get(kk, 0.0) + vv
    return acc, total


@dataclass
class Equidistribution:
    k: int
    defect: float  # literal: sum over interior squares of |1/#Q^ - |Q cap F^k W| / |F^k W||
    defect_interior: float  # same, normalised by the length inside interior squares
    equi_part: float  # sum over interior squares of |eta^2 - |Q cap F^k W| / |F^k W||
    n_interior: int
    n_all: int
    length: float


def equidistribution_defect(fam0: CatFamily, w: StandardSegment, eta: float, k: int,
                            grid: SquareGrid | None = None) -> Equidistribution:
    """Defect of F_0^k(W) against the uniform distribution on the interior squares."""
    grid = grid or square_grid(fam0, eta)
    arr = w.as_array()[None]
    A, B, *_ = evolve_tracked(fam0.tf, arr[:, :2], arr[:, 2:], k)
    acc, total = _lengths_in_squares(A, B, grid)
    keys = grid.cells[:, 0].astype(np.int64) * 1_000_003 + grid.cells[:, 1]
    inner = keys[grid.interior]
    lens = np.array([acc.get(int(kk), 0.0) for kk in inner])
    nq = len(inner)
    frac = lens / total
    inner_tot = lens.sum()
    d = float(np.abs(1 / nq - frac).sum())
    di = float(np.abs(1 / nq - lens / inner_tot).sum()) if inner_tot > 0 else 2.0
    de = float(np.abs(eta * eta - frac).sum())
    return Equidistribution(k, d, di, de, nq, grid.n_all, total)


__all__ = [
    "DecayFit",
    "Equidistribution",
    "MeasureEstimate",
    "NoConvergence",
    "SingularityBudgetExceeded",
    "SquareGrid",
    "cell_integrals",
    "unit_cells",
    "cell_step",
    "cov",
    "cov_sequence",
    "equidistribution_defect",
    "evolve_tracked",
    "fit_decay",
    "fit_envelope",
    "tracked_steps",
    "upper_envelope",
    "mu_t",
    "mu_t_many",
    "pushforward_cells",
    "pushforward_lebesgue",
    "pushforward_lebesgue_estimate",
    "pushforward_mc",
    "segment_integrals",
    "square_grid",
]
