"""Balanced points of finite grid sets: exact tests and exact/heuristic search.

A point ``q`` in ``[0, n]^k`` (integer, not necessarily even) is *balanced*
for a finite set ``T`` when for every full sign vector ``s`` in ``{-1, +1}^k``
the pyramid union ``U_i P_i(q, s_i)`` contains at least half of ``T``.  The
workhorse identity, for full sign vectors,

    x in U_i P_i(q, s_i)   <=>   max(s * (x - q)) + min(s * (x - q)) >= 0,

turns membership counting into two running extrema over coordinates, so
coverage counts are exact integer computations over (short) int columns.
Thresholds compare ``2 * count >= |T|`` in integers; no rationals, no floats.

Three search routines:

* ``find_balanced_point``: the exact lexicographic minimum.  Closed form via
  weak-median intervals for k <= 2 (coverage for full signs depends only on
  the diagonal projections ``x_1 + x_2`` and ``x_1 - x_2``); depth-first
  branch-and-bound with sound corner bounds for k >= 3.  Exponential worst
  case in higher dimension — fine at calibration scale, not for solver loops.
* ``select_query_point``: what the solver calls.  Deterministic multi-start
  descent on the integer coverage deficit, with exact verification of the
  result and a fall back to the exact search if every start stalls.  Any
  verified balanced point preserves every downstream guarantee (halving,
  containment, query bound); determinism keeps runs reproducible.
* ``is_balanced``: the exact test, usable on its own.
"""

from __future__ import annotations

from itertools import product
from typing import Sequence

import numpy as np

from .errors import InternalInvariantError
from .geometry import GridPoint

_DESCENT_BUDGET = 10_000


def all_sign_vectors(k: int) -> np.ndarray:
    """All ``2**k`` full sign vectors as an array, in lexicographic order (-1 first)."""
    return np.array(list(product((-1, 1), repeat=k)), dtype=np.int64)


def _as_points(T, k: int | None = None) -> np.ndarray:
    pts = getattr(T, "points", T)
    pts = np.asarray(pts, dtype=np.int64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if k is not None and pts.shape[1] != k:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {k}")
    return pts


def _columns(points: np.ndarray, n: int) -> list[np.ndarray]:
    """Contiguous per-coordinate columns in the narrowest safe integer dtype."""
    dt = np.int16 if n <= 30_000 else np.int32
    return [np.ascontiguousarray(points[:, i].astype(dt)) for i in range(points.shape[1])]


def coverage_counts(cols: Sequence[np.ndarray], q: Sequence[int], signs: np.ndarray) -> np.ndarray:
    """For each sign vector, how many column points its pyramid union at ``q`` covers.

    Exact integer arithmetic: per sign ``s`` accumulates the running max and
    min of ``s_i * (x_i - q_i)`` across coordinates and counts rows with
    ``max + min >= 0``.
    """
    k = len(cols)
    out = np.empty(len(signs), dtype=np.int64)
    for si, s in enumerate(signs):
        mx = cols[0] * int(s[0]) - int(s[0]) * int(q[0])
        mn = mx.copy()
        for i in range(1, k):
            b = cols[i] * int(s[i]) - int(s[i]) * int(q[i])
            np.maximum(mx, b, out=mx)
            np.minimum(mn, b, out=mn)
        out[si] = int(np.count_nonzero(mx >= -mn))
    return out


def coverage_deficit(cols: Sequence[np.ndarray], q: Sequence[int], signs: np.ndarray,
                     m: int) -> tuple[int, np.ndarray]:
    """Total shortfall ``sum_s max(0, m - 2 * coverage_s)``; zero iff balanced."""
    cov = coverage_counts(cols, q, signs)
    return int(np.maximum(0, m - 2 * cov).sum()), cov


def is_balanced(q: Sequence[int], T, n: int | None = None) -> bool:
    """Exact balancedness test of ``q`` against ``T`` (a CandidateSet or point array).

    An empty ``T`` makes every point vacuously balanced.  Examples on the
    k = 1 set {0, 2, 4, 6, 8}: q = 4 is balanced, q = 0 is not (only one of
    five points lies in the downward pyramid); a singleton's own point is
    balanced.
    """
    pts = _as_points(T)
    m = len(pts)
    if m == 0:
        return True
    k = pts.shape[1]
    if len(q) != k:
        raise ValueError(f"query point has dimension {len(q)}, expected {k}")
    bound = int(n) if n is not None else int(max(pts.max(), max(abs(int(v)) for v in q)))
    cols = _columns(pts, bound)
    cov = coverage_counts(cols, q, all_sign_vectors(k))
    return bool(np.all(2 * cov >= m))


def _validate_even_subset(pts: np.ndarray, n: int) -> None:
    if len(pts) == 0:
        raise ValueError("cannot search an empty candidate set")
    if pts.min() < 0 or pts.max() > n:
        raise ValueError(f"candidate points must lie in [0, {n}]^k")
    if np.any(pts % 2 != 0):
        raise ValueError("candidate points must have all-even coordinates")


def _median_interval(vals: np.ndarray) -> tuple[int, int]:
    """Closed integer interval of weak medians: counts on both sides >= half."""
    v = np.sort(vals)
    m = len(v)
    c = (m + 1) // 2
    return int(v[c - 1]), int(v[m - c])


def _find_balanced_k1(pts: np.ndarray, n: int) -> GridPoint:
    lo, _hi = _median_interval(pts[:, 0])
    return (max(0, min(lo, n)),)


def _find_balanced_k2(pts: np.ndarray, n: int) -> GridPoint | None:
    u_lo, u_hi = _median_interval(pts[:, 0] + pts[:, 1])
    v_lo, v_hi = _median_interval(pts[:, 0] - pts[:, 1])
    for q1 in range(n + 1):
        a = max(u_lo - q1, q1 - v_hi, 0)
        b = min(u_hi - q1, q1 - v_lo, n)
        if a <= b:
            return (q1, a)
    return None


class _BranchBound:
    """Exact lexicographic-minimum search by corner-bounded box splitting.

    Coverage for sign ``s`` over a box ``[lo, hi]`` is maximised at the corner
    taking ``lo_i`` where ``s_i > 0`` and ``hi_i`` otherwise (moving ``q``
    against ``s`` only grows every accumulated term), so a box where some
    sign's best corner still covers less than half of ``T`` contains no
    balanced point.  Splitting the first unresolved coordinate, lower half
    first, visits surviving leaves in lexicographic order.
    """

    def __init__(self, pts: np.ndarray, n: int, k: int):
        self.m = len(pts)
        self.k = k
        self.signs = all_sign_vectors(k)
        self.cols = _columns(pts, n)
        self.n = n

    def _coverage(self, si: int, q: np.ndarray) -> int:
        return int(coverage_counts(self.cols, q, self.signs[si:si + 1])[0])

    def _box_feasible(self, lo: np.ndarray, hi: np.ndarray) -> bool:
        for si, s in enumerate(self.signs):
            corner = np.where(s > 0, lo, hi)
            if 2 * self._coverage(si, corner) < self.m:
                return False
        return True

    def search(self) -> GridPoint | None:
        lo = np.zeros(self.k, dtype=np.int64)
        hi = np.full(self.k, self.n, dtype=np.int64)
        stack = [(lo, hi)]
        while stack:
            lo, hi = stack.pop()
            if not self._box_feasible(lo, hi):
                continue
            split = next((i for i in range(self.k) if lo[i] < hi[i]), -1)
            if split < 0:
                return tuple(int(v) for v in lo)
            mid = (int(lo[split]) + int(hi[split])) // 2
            hi1 = hi.copy(); hi1[split] = mid
            lo2 = lo.copy(); lo2[split] = mid + 1
            stack.append((lo2, hi))
            stack.append((lo, hi1))
        return None


def find_balanced_point(T, n: int, k: int) -> GridPoint:
    """Lexicographically smallest balanced point of ``T`` in ``[0, n]^k``.

    ``T`` must be a non-empty subset of the all-even grid.  A balanced point
    always exists for such sets; if the search comes up empty that guarantee
    is broken and :class:`InternalInvariantError` is raised.
    """
    pts = _as_points(T, k)
    _validate_even_subset(pts, n)
    if k == 1:
        q = _find_balanced_k1(pts, n)
    elif k == 2:
        q = _find_balanced_k2(pts, n)
    else:
        q = _BranchBound(pts, n, k).search()
    if q is None:
        raise InternalInvariantError(
            f"no balanced point exists for a {len(pts)}-point even set in [0, {n}]^{k}")
    return q


def _unit_directions(k: int) -> list[np.ndarray]:
    if k <= 6:
        return [np.array(d, dtype=np.int64) for d in product((-1, 0, 1), repeat=k) if any(d)]
    dirs = []
    for i in range(k):
        for v in (-1, 1):
            d = np.zeros(k, dtype=np.int64)
            d[i] = v
            dirs.append(d)
    return dirs


def _descend(cols, q: np.ndarray, n: int, signs: np.ndarray, m: int,
             dirs: list[np.ndarray], budget: int) -> np.ndarray | None:
    """First-improvement descent on the coverage deficit from one start.

    Step sizes sweep a halving schedule from ~n/2 down to 1; candidate moves
    are the aggregate direction of the failing signs, each failing sign
    reversed, then all unit directions — a fixed order, so the walk is a pure
    function of the inputs.  Returns a balanced point or None on a stall.
    """
    deficit, cov = coverage_deficit(cols, q, signs, m)
    evals = 1
    if deficit == 0:
        return q
    step = 1 << max(0, int(n).bit_length() - 2)
    while step >= 1:
        improved = True
        while improved and evals < budget:
            improved = False
            failing = 2 * cov < m
            agg = -(signs[failing].sum(axis=0))
            moves: list[np.ndarray] = []
            if np.any(agg != 0):
                moves.append(np.sign(agg).astype(np.int64))
            moves.extend(-s for s in signs[failing])
            moves.extend(dirs)
            seen = set()
            for dvec in moves:
                key = tuple(int(v) for v in dvec)
                if key in seen:
                    continue
                seen.add(key)
                q2 = np.clip(q + step * dvec, 0, n)
                if np.array_equal(q2, q):
                    continue
                d2, cov2 = coverage_deficit(cols, q2, signs, m)
                evals += 1
                if d2 < deficit:
                    q, deficit, cov = q2, d2, cov2
                    improved = True
                    if deficit == 0:
                        return q
                    break
        step //= 2
    return None


def select_query_point(T, n: int, k: int) -> GridPoint:
    """A balanced point of ``T``, chosen deterministically and verified exactly.

    k <= 2 uses the closed-form lexicographic minimum.  k >= 3 runs the
    deficit descent from five deterministic starts (low/high weak medians,
    bounding-box middle, grid centre, median midpoint) and falls back to the
    exact branch-and-bound if all stall.  The result is always exactly
    balanced; only which balanced point gets returned varies by path.
    """
    pts = _as_points(T, k)
    _validate_even_subset(pts, n)
    if k <= 2:
        return find_balanced_point(pts, n, k)
    m = len(pts)
    signs = all_sign_vectors(k)
    dirs = _unit_directions(k)
    cols = _columns(pts, n)
    c = (m + 1) // 2
    lo_med = np.array([np.sort(pts[:, i])[c - 1] for i in range(k)])
    hi_med = np.array([np.sort(pts[:, i])[m - c] for i in range(k)])
    mid = (pts.min(axis=0) + pts.max(axis=0)) // 2
    centre = np.full(k, n // 2, dtype=np.int64)
    starts = [lo_med, hi_med, mid, centre, (lo_med + hi_med) // 2]
    for start in starts:
        q0 = np.clip(start.astype(np.int64), 0, n)
        q = _descend(cols, q0, n, signs, m, dirs, _DESCENT_BUDGET)
        if q is not None:
            return tuple(int(v) for v in q)
    return find_balanced_point(pts, n, k)
