"""
Coupling machinery: pairing standard segments along the stable direction, the
mass lost when stable connectors meet singularities, and the linear bookkeeping
scheme on (coupled, uncoupled) mass sequences with its weighted norm.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .cat_family import CatFamily, apply_array
from .standard_pairs import StandardFamily, StandardSegment, evolve


class InvalidParams(ValueError):
    pass


class ParamsNotContractive(ValueError):
    pass


class Incompatible(ValueError):
    def __init__(self, reason: str, msg: str = ""):
        super().__init__(f"{reason}: {msg}" if msg else reason)
        self.reason = reason


# ---------------------------------------------------------------- scheme


@dataclass(frozen=True)
class SchemeParams:
    rho: float
    p_c: float
    beta1: int
    beta2: int
    psi_minus: float
    psi_plus: float
    L: float = 1.0
    eta0: float = 0.5
    check_tau: bool = True

    def __post_init__(self):
        problems = admissibility_problems(self)
        if problems:
            raise InvalidParams("; ".join(problems))
        if self.check_tau:
            tau(self)

    @property
    def psi_plus_max(self) -> float:
        return psi_plus_bound(self.rho, self.psi_minus, self.beta1, self.beta2)

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in ("rho", "p_c", "beta1", "beta2", "psi_minus", "psi_plus")}


def psi_plus_bound(rho: float, psi_minus: float, beta1: int, beta2: int) -> float:
    return min((psi_minus / rho) ** (1 / beta1), (2 * (1 - psi_minus)) ** (1 / (beta2 + 1)))


def admissibility_problems(p) -> list[str]:
    out = []
    if not 0 < p.rho < 0.5:
        out.append("rho must lie in (0, 1/2)")
    if not 0 < p.p_c <= 1:
        out.append("p_c must lie in (0, 1]")
    if int(p.beta1) != p.beta1 or int(p.beta2) != p.beta2 or p.beta1 < 1 or p.beta2 < 1:
        out.append("beta1, beta2 must be positive integers")
    if not p.rho < p.psi_minus < 0.5:
        out.append("psi_minus must lie in (rho, 1/2)")
    if out:
        return out
    if not 1 < p.psi_plus < psi_plus_bound(p.rho, p.psi_minus, p.beta1, p.beta2):
        out.append("psi_plus must lie in (1, min{(psi_-/rho)^(1/beta1), (2(1-psi_-))^(1/(beta2+1))})")
    if p.L <= 0 or not 0 < p.eta0 <= 1 / (2 * p.L):
        out.append("need L > 0 and eta0 in (0, 1/(2L)]")
    return out


@dataclass(frozen=True)
class CouplingState:
    c: np.ndarray
    u: np.ndarray
    n: int = 0

    def __post_init__(self):
        for a in (self.c, self.u):
            a.setflags(write=False)
            if (a < 0).any():
                raise ValueError("mass sequences must be nonnegative")

    @classmethod
    def initial(cls, r0: int) -> "CouplingState":
        u = np.zeros(r0 + 1)
        u[r0] = 1.0
        return cls(np.zeros(1), u, 0)

    @property
    def mass(self) -> float:
        return float(self.c.sum() + self.u.sum())

    @property
    def coupled(self) -> float:
        return float(self.c.sum())


def scheme_step(s: CouplingState, p: SchemeParams) -> CouplingState:
    """One step of the recursion on (c_r, u_r)."""
    c, u = s.c, s.u
    rho, b1, b2 = p.rho, int(p.beta1), int(p.beta2)
    nc = len(c) + 1
    top = max(len(u) - 1, (len(c) - 1) * b1 + b2)
    c2 = np.zeros(nc)
    u2 = np.zeros(top + 1)
    r = np.arange(1, nc)
    c2[1:] = (1 - 0.5 * rho ** (r - 1)) * c
    c2[0] = p.p_c * u[0]
    u2[0] = (u[1] if len(u) > 1 else 0.0) + (1 - p.p_c) * u[0]
    if len(u) > 2:
        u2[1:len(u) - 1] = u[2:]
    # mass leaving the coupled class j lands in the uncoupled class j*beta1 + beta2
    j = np.arange(len(c))
    np.add.at(u2, j * b1 + b2, 0.5 * rho ** j * c)
    return CouplingState(c2, _trim(u2), s.n + 1)


def _trim(a):
    nz = np.nonzero(a)[0]
    return a[: nz[-1] + 1] if len(nz) else a[:1]


def star_norm(s: CouplingState, p: SchemeParams) -> float:
    rc = np.arange(len(s.c))
    ru = np.arange(len(s.u))
    return float((p.psi_minus ** rc * s.c).sum() + (p.psi_plus ** (ru + 1) * s.u).sum())


def tau_branches(p) -> tuple[float, float, int]:
    """(first branch, sup of the second branch, argmax r)."""
    first = p.p_c / p.psi_plus + (1 - p.p_c)
    g = p.rho * p.psi_plus ** p.beta1 / p.psi_minus
    if g >= 1:
        return first, math.inf, -1
    best, arg, peak, r = -math.inf, 0, 0.0, 0
    while True:
        # rho^r/2 (psi_+^beta1/psi_-)^r = g^r/2, written so it cannot overflow
        val = p.psi_minus * (1 - p.rho ** r / 2) + g ** r / 2 * p.psi_plus ** (p.beta2 + 1)
        if val > best:
            best, arg = val, r
        peak = max(peak, g ** r)
        if g ** r < 1e-6 * peak or r > 10_000:
            break
        r += 1
    return first, best, arg


def tau(p) -> float:
    first, second, _ = tau_branches(p)
    t = max(first, second)
    if t >= 1:
        raise ParamsNotContractive(f"tau = {t:.6f} >= 1")
    return t


def random_params(rng: np.random.Generator) -> SchemeParams:
    """A random admissible parameter tuple."""
    while True:
        rho = rng.uniform(0.02, 0.45)
        psi_m = rng.uniform(rho, 0.5)
        b1 = int(rng.integers(1, 5))
        b2 = int(rng.integers(1, 6))
        hi = psi_plus_bound(rho, psi_m, b1, b2)
        if hi <= 1 + 1e-9 or psi_m <= rho:
            continue
        psi_p = rng.uniform(1, hi)
        pc = rng.uniform(0.01, 1.0)
        try:
            return SchemeParams(rho, pc, b1, b2, psi_m, psi_p)
        except (InvalidParams, ParamsNotContractive):
            continue


def random_state(rng: np.random.Generator, size: int = 30) -> CouplingState:
    c = rng.random(int(rng.integers(1, size))) * (rng.random() < 0.8)
    u = rng.random(int(rng.integers(1, size)))
    # sparse supports exercise the routing rows
    c *= rng.random(len(c)) < 0.6
    u *= rng.random(len(u)) < 0.6
    tot = c.sum() + u.sum()
    if tot == 0:
        u[0] = 1.0
        tot = 1.0
    return CouplingState(c / tot, u / tot)


def empirical_ratio_max(p: SchemeParams, states: int, rng: np.random.Generator) -> float:
    worst = 0.0
    for _ in range(states):
        s = random_state(rng)
        worst = max(worst, star_norm(scheme_step(s, p), p) / star_norm(s, p))
    return worst


SWEEP_FIELDS = ["rho", "p_c", "beta1", "beta2", "psi_minus", "psi_plus", "tau", "empirical_ratio_max", "status"]


def sweep_rows(params: list, states: int, seed: int) -> list[dict]:
    """Rows of the sweep table; rejected tuples are flagged instead of raising."""
    rng = np.random.default_rng(seed)
    rows = []
    for q in params:
        row = dict(q) if isinstance(q, dict) else q.as_row()
        try:
            sp = SchemeParams(**{k: row[k] for k in ("rho", "p_c", "beta1", "beta2", "psi_minus", "psi_plus")})
            row["tau"] = tau(sp)
            row["empirical_ratio_max"] = empirical_ratio_max(sp, states, rng)
            row["status"] = "ok"
        except (InvalidParams, ParamsNotContractive) as e:
            row["tau"] = ""
            row["empirical_ratio_max"] = ""
            row["status"] = f"rejected: {e}"
        rows.append(row)
    return rows


def sweep_csv(rows: list[dict], meta: dict | None = None) -> str:
    buf = io.StringIO()
    fields = SWEEP_FIELDS + (list(meta) if meta else [])
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        out = {k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()}
        if meta:
            out.update(meta)
        w.writerow(out)
    return buf.getvalue()


# ---------------------------------------------------------------- geometric coupling


@dataclass(frozen=True)
class Square:
    """Square with sides along e_u and e_s."""

    center: tuple
    side: float
    e_u: tuple
    e_s: tuple

    def uv(self, p) -> tuple[float, float]:
        return _uv(np.asarray(p, float), self.e_u, self.e_s)

    def contains_uv(self, u, v) -> bool:
        cu, cv = self.uv(self.center)
        h = self.side / 2
        return abs(u - cu) <= h and abs(v - cv) <= h


def _uv(p, e_u, e_s):
    """Coordinates of p in the (non-orthogonal) basis e_u, e_s."""
    m = np.array([e_u, e_s], float).T
    u, v = np.linalg.solve(m, p)
    return float(u), float(v)


@dataclass
class CoupledPair:
    w1: StandardSegment
    w2: StandardSegment
    eta: float  # 3 rho + zeta sin(2 alpha*)
    distance: float  # largest stable-direction gap actually realised
    alpha: float
    zeta: float


def _angle_to(d, e):
    d = np.asarray(d, float)
    c = abs(float(d @ np.asarray(e, float))) / float(np.hypot(*d))
    return math.acos(min(1.0, c))


def _clip_hits(a, b, q: Square) -> bool:
    """Does the part of ab farther than |ab|/100 from its endpoints meet q? (slab clipping)"""
    ua, va = q.uv(a)
    ub, vb = q.uv(b)
    cu, cv = q.uv(q.center)
    h = q.side / 2
    lo, hi = 0.01, 0.99
    for p0, p1, c in ((ua, ub, cu), (va, vb, cv)):
        d = p1 - p0
        if abs(d) < 1e-300:
            if abs(p0 - c) > h:
                return False
            continue
        s0, s1 = sorted(((c - h - p0) / d, (c + h - p0) / d))
        lo, hi = max(lo, s0), min(hi, s1)
    return lo <= hi


def couple_segments(w1: StandardSegment, w2: StandardSegment, q: Square, rho_side: float | None = None) -> CoupledPair:
    """Subsegments of w1, w2 over a common E_u-interval just right of the tripled square.

    Raises Incompatible naming the failed precondition."""
    rho = q.side if rho_side is None else rho_side
    zeta = min(w1.length, w2.length)
    if rho > zeta / 1000:
        raise Incompatible("rho", f"square side {rho:.3g} exceeds zeta/1000 = {zeta / 1000:.3g}")
    arrs = [w.as_array() for w in (w1, w2)]
    angles = [_angle_to(a[2:] - a[:2], q.e_u) for a in arrs]
    alpha = max(angles)
    if alpha > math.pi / 8:
        raise Incompatible("angle", f"angle to E_u {alpha:.4f} > pi/8")
    for k, w in enumerate((w1, w2)):
        if not _clip_hits(arrs[k][:2], arrs[k][2:], q):
            raise Incompatible("center", f"the center of segment {k + 1} misses the square")
    cu, _ = q.uv(q.center)
    u_start = cu + 1.5 * rho
    lines = []
    for a in arrs:
        (ua, va), (ub, vb) = q.uv(a[:2]), q.uv(a[2:])
        if ua > ub:
            ua, va, ub, vb = ub, vb, ua, va
        lines.append((ua, va, ub, vb))
    u_end = min(l[2] for l in lines)
    ell = [np.hypot(*(a[2:] - a[:2])) / abs(l[2] - l[0]) for a, l in zip(arrs, lines)]  # arclength per unit u
    u_end = min(u_end, u_start + zeta / max(ell))
    if u_end <= u_start:
        raise Incompatible("center", "segments do not extend past the tripled square")
    e_u, e_s = np.array(q.e_u), np.array(q.e_s)
    out, gaps = [], []
    for ua, va, ub, vb in lines:
        def v_at(u):
            return va + (u - ua) * (vb - va) / (ub - ua)
        P0 = u_start * e_u + v_at(u_start) * e_s
        P1 = u_end * e_u + v_at(u_end) * e_s
        out.append(StandardSegment.from_coords(*P0, *P1))
        gaps.append((v_at(u_start), v_at(u_end)))
    es_len = float(np.hypot(*e_s))
    dist = max(abs(gaps[0][0] - gaps[1][0]), abs(gaps[0][1] - gaps[1][1])) * es_len
    return CoupledPair(out[0], out[1], 3 * rho + zeta * math.sin(2 * alpha), dist, alpha, zeta)


def stable_partners(w1: StandardSegment, w2: StandardSegment, e_u, e_s, points: int) -> tuple[np.ndarray, np.ndarray]:
    """Points on w1 and their partners on w2 along E_s (same E_u coordinate).

    Both v-coordinates go through the same formula, so identical segments give
    identical partners."""
    m = np.array([e_u, e_s], float).T
    ends = [np.linalg.solve(m, np.stack([a[:2], a[2:]], 1)) for a in (w1.as_array(), w2.as_array())]
    (u1a, u1b), (v1a, v1b) = ends[0]
    (u2a, u2b), (v2a, v2b) = ends[1]
    s = (np.arange(points) + 0.5) / points
    u = u1a + s * (u1b - u1a)
    v1 = v1a + (u - u1a) * (v1b - v1a) / (u1b - u1a)
    v2 = v2a + (u - u2a) * (v2b - v2a) / (u2b - u2a)
    P1 = np.stack([u, v1], 1) @ m.T
    P2 = P1 + (v2 - v1)[:, None] * np.asarray(e_s, float)
    return P1, P2


@dataclass
class DecouplingReport:
    block_losses: list
    cumulative: float
    L_fit: float
    contraction: list = field(default_factory=list)


def decoupled_fraction(famt: CatFamily, P1: np.ndarray, P2: np.ndarray, n_steps: int, N0: int) -> DecouplingReport:
    """Evolve matched pairs joined by stable connectors; a pair decouples when its two
    ends fall in different branch domains (the connector then crosses S_t^+).

    Only P1 is iterated. The connector P2 - P1 lies along E_s and is carried as
    mu_s^k times the initial one, since iterating both ends separately lets
    round-off grow along E_u. The one-step contraction |F(P2) - F(P1)|/|P2 - P1| is
    still measured numerically at every step.

    Reports the lost mass per N0-block, the cumulative loss, the loss per unit
    initial gap (a fitted L), and the median one-step contraction over gaps above 1e-6."""
    t = famt.tf
    X, Y = P1[:, 0].copy(), P1[:, 1].copy()
    d = P2 - P1
    alive = np.ones(len(X), dtype=bool)
    eta = float(np.hypot(*d.T).max()) if len(d) else 0.0
    losses, ratios = [], []
    block = 0.0
    for k in range(1, n_steps + 1):
        X2, Y2 = X + d[:, 0], Y + d[:, 1]
        nX, nY, j1 = apply_array(t, X, Y)
        mX, mY, j2 = apply_array(t, X2, Y2)
        broke = alive & (j1 != j2)
        block += broke.sum() / len(alive)
        alive &= ~broke
        before = np.hypot(*d.T)
        # the measured ratio is only meaningful while the gap is far above round-off
        ok = alive & (before > 1e-6)
        if ok.any():
            ratios.append(float(np.median(np.hypot(mX - nX, mY - nY)[ok] / before[ok])))
        X, Y = nX, nY
        d = d * famt.mu_s
        if k % N0 == 0:
            losses.append(float(block))
            block = 0.0
    if n_steps % N0:
        losses.append(float(block))
    cum = float(sum(losses))
    return DecouplingReport(losses, cum, cum / eta if eta > 0 else 0.0, ratios)


@dataclass
class FirstCoupling:
    k: int | None
    mass: float
    reference: float  # delta_* / (400 lam_bar^k)


def first_coupling(famt: CatFamily, g1: StandardFamily, g2: StandardFamily, eta: float, delta: float,
                   k_max: int, delta_star: float, budget: int = 200_000, seed: int = 0) -> FirstCoupling:
    """First k at which components longer than delta of both evolved families cross a common square.

    The coupleable mass is sum over shared squares of min(m1(Q), m2(Q)) / 200, the
    guaranteed length fraction of a coupled pair."""
    for k in range(k_max + 1):
        e1 = evolve(famt, g1, k, budget, seed)
        e2 = evolve(famt, g2, k, budget, seed + 1)
        m1, m2 = _square_mass(e1, eta, delta, famt), _square_mass(e2, eta, delta, famt)
        shared = set(m1) & set(m2)
        if shared:
            mass = sum(min(m1[s], m2[s]) for s in shared) / 200
            return FirstCoupling(k, mass, delta_star / (400 * famt.lam_bar ** k))
    return FirstCoupling(None, 0.0, delta_star / (400 * famt.lam_bar ** k_max))


def _square_mass(g: StandardFamily, eta: float, delta: float, famt: CatFamily) -> dict:
    L = g.lengths
    long = L >= delta
    mid = (np.asarray(g.a) + np.asarray(g.b))[long] / 2
    m = np.array([famt.E_u, famt.E_s], float).T
    uv = np.linalg.solve(m, mid.T).T if len(mid) else np.zeros((0, 2))
    keys = np.floor(uv / eta).astype(np.int64)
    out: dict = {}
    for key, p in zip(map(tuple, keys.tolist()), np.asarray(g.p)[long].tolist()):
        out[key] = out.get(key, 0.0) + p
    return out


__all__ = [
    "CoupledPair",
    "CouplingState",
    "DecouplingReport",
    "FirstCoupling",
    "Incompatible",
    "InvalidParams",
    "ParamsNotContractive",
    "SWEEP_FIELDS",
    "SchemeParams",
    "Square",
    "admissibility_problems",
    "couple_segments",
    "decoupled_fraction",
    "empirical_ratio_max",
    "first_coupling",
    "psi_plus_bound",
    "random_params",
    "random_state",
    "scheme_step",
    "stable_partners",
    "star_norm",
    "sweep_csv",
    "sweep_rows",
    "tau",
    "tau_branches",
]
