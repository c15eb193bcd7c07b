"""The elimination solver: polynomially many queries to an eps-fixed point.

Driving loop on the blown-up grid ``[0, n]^k``: keep a candidate set ``Cand``
of all-even points, query a balanced point ``a`` of ``Cand``, and either stop
(residual at most ``16 / gamma``) or eliminate using the answer's sign vector
``s``: survivors are the candidates in the pyramid union with apex ``a + 2s``.
Balancedness makes every elimination remove at least half of the candidates
(the sign vector's union and its complementary union each cover at least half,
and the kept side is the complement of an escaped pyramid), so the loop makes
at most ``ceil(log2 |EVEN(n, k)|) + 1`` queries.  Two invariants are enforced
on every round of every run:

* halving: ``2 * |Cand_t| <= |Cand_{t-1}|``;
* (in tests, via ``on_round``) containment: the even points around the true
  fixed point stay in ``Cand``.

A genuine contraction can never empty the candidate set before the residual
test fires; if that happens anyway, the promise was broken and the result
carries a ``violation-found`` outcome with the evidence — it is not an error.

``solve_unit_cube`` is the user-facing entry: it routes a weakly-contracting
or merely non-expansive oracle through the ``(1 - eps/2)`` reduction exactly
when ``gamma < eps / 2``, rescales the unit cube to the grid, runs ``solve``,
and scales the answer back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .balanced import find_balanced_point, is_balanced, select_query_point
from .errors import InstanceTooLargeError, InternalInvariantError
from .geometry import GridPoint, RealPoint, SignVector, even_count, even_grid, linf_dist, sign_vector
from .oracles import ContractionOracle, reduce_nonexpansive, rescale_to_grid, strong_to_weak

__all__ = [
    "DEFAULT_CANDIDATE_CAP", "CandidateSet", "RoundRecord", "SolveResult",
    "query_bound", "eliminate", "solve", "solve_unit_cube", "solve_strong",
    "picard_baseline", "is_balanced", "find_balanced_point", "select_query_point",
    "InstanceTooLargeError", "InternalInvariantError",
]

DEFAULT_CANDIDATE_CAP = 10_000_000

OUTCOME_FIXED_POINT = "fixed-point-found"
OUTCOME_VIOLATION = "violation-found"
OUTCOME_FAILURE = "failure"


@dataclass
class CandidateSet:
    """All-even candidate points, kept as lexicographically sorted rows."""

    points: np.ndarray
    n: int
    t: int = 0

    @classmethod
    def initial(cls, n: int, k: int, cap: int = DEFAULT_CANDIDATE_CAP) -> "CandidateSet":
        count = even_count(n, k)
        if count > cap:
            raise InstanceTooLargeError(count, cap)
        return cls(points=even_grid(n, k), n=n, t=0)

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def contains_points(self, pts: Sequence[Sequence[int]]) -> np.ndarray:
        """Boolean membership mask for an ``(m, k)`` integer array of points."""
        pts = np.asarray(pts, dtype=np.int64).reshape(-1, self.k)
        if (self.n + 1) ** self.k < 2 ** 62:
            dims = (self.n + 1,) * self.k
            own = np.ravel_multi_index(self.points.T, dims)
            inside = np.all((pts >= 0) & (pts <= self.n), axis=1)
            keys = np.zeros(len(pts), dtype=np.int64)
            keys[inside] = np.ravel_multi_index(pts[inside].T, dims)
            return inside & np.isin(keys, own)
        own_set = {tuple(int(v) for v in row) for row in self.points}
        return np.array([tuple(int(v) for v in row) in own_set for row in pts], dtype=bool)


@dataclass
class RoundRecord:
    """One solver round: query point, its sign vector, and the shrink."""

    t: int
    a: GridPoint
    s: SignVector
    residual: float
    cand_size: int
    queries_so_far: int

    def to_json_obj(self) -> dict:
        return {"t": self.t, "a_t": list(self.a), "s": list(self.s),
                "residual": self.residual, "cand_size": self.cand_size,
                "queries_so_far": self.queries_so_far}


@dataclass
class SolveResult:
    """Outcome of a solve run.

    ``outcome`` is one of ``fixed-point-found``, ``violation-found`` or
    ``failure``.  On a grid run ``answer`` is the returned grid point; on a
    unit-cube run it is the point in ``[0, 1]^k`` and the grid-scale values
    move to ``answer_grid`` / ``residual_grid``.  ``rounds[i].cand_size`` is
    the candidate count after that round's elimination; the terminal round
    records the size of the set whose balanced point was queried.
    """

    outcome: str
    answer: tuple | None
    residual: float | None
    queries: int
    rounds: list[RoundRecord]
    n: int
    k: int
    gamma: float
    query_bound: int
    eps: float | None = None
    routed: bool = False
    answer_grid: GridPoint | None = None
    residual_grid: float | None = None
    violation: dict | None = None

    def round_log_lines(self) -> list[dict]:
        return [r.to_json_obj() for r in self.rounds]

    def to_json_obj(self) -> dict:
        return {
            "outcome": self.outcome,
            "answer": None if self.answer is None else list(self.answer),
            "residual": self.residual,
            "queries": self.queries,
            "rounds": self.round_log_lines(),
            "n": self.n,
            "k": self.k,
            "gamma": self.gamma,
            "eps": self.eps,
            "query_bound": self.query_bound,
            "routed": self.routed,
            "answer_grid": None if self.answer_grid is None else list(self.answer_grid),
            "residual_grid": self.residual_grid,
            "violation": self.violation,
        }


def query_bound(n: int, k: int) -> int:
    """``ceil(log2 |EVEN(n, k)|) + 1``, computed exactly in integers."""
    m = (n // 2 + 1) ** k
    return (m - 1).bit_length() + 1


def eliminate(T: CandidateSet, a: GridPoint, s: SignVector) -> CandidateSet:
    """Candidates surviving the answer-sign elimination at query point ``a``.

    Keeps the points of ``T`` lying in the pyramid union with apex
    ``b = a + 2s`` (which may stick out of the cube) over the coordinates
    where ``s`` is nonzero.  Example: on EVEN(8, 1) with a = 4, s = (+1,),
    the survivors are {6, 8}.  An all-zero ``s`` eliminates nothing and is a
    usage error.
    """
    s_arr = np.asarray(s, dtype=np.int64)
    if s_arr.shape != (T.k,):
        raise ValueError(f"sign vector has shape {s_arr.shape}, expected ({T.k},)")
    if not np.any(s_arr):
        raise ValueError("cannot eliminate with the all-zero sign vector")
    if not np.all(np.isin(s_arr, (-1, 0, 1))):
        raise ValueError(f"sign vector entries must be -1, 0 or +1, got {s}")
    b = np.asarray(a, dtype=np.int64) + 2 * s_arr
    d = T.points - b
    md = np.abs(d).max(axis=1)
    keep = np.zeros(len(T.points), dtype=bool)
    for i in range(T.k):
        si = int(s_arr[i])
        if si != 0:
            keep |= si * d[:, i] == md
    return CandidateSet(points=T.points[keep], n=T.n, t=T.t + 1)


def _oracle_grid_side(g: ContractionOracle) -> int:
    n = getattr(g, "n", None)
    if n is not None:
        return int(n)
    n = round(g.side)
    if abs(g.side - n) > 1e-9:
        raise ValueError(f"grid solve needs an integer side, got {g.side}")
    return int(n)


def solve(g: ContractionOracle, gamma: float, *, cap: int = DEFAULT_CANDIDATE_CAP,
          eliminate_fn: Callable[[CandidateSet, GridPoint, SignVector], CandidateSet] = eliminate,
          on_round: Callable[[RoundRecord, CandidateSet, CandidateSet | None], None] | None = None,
          sign_tolerance: float = 0.0) -> SolveResult:
    """Run the elimination loop on a grid oracle ``g: [0, n]^k -> [0, n]^k``.

    Stops at the first query with residual at most ``16 / gamma``.  The
    halving invariant is asserted on every round; ``on_round(record, before,
    after)`` exposes each round to callers (``after`` is None on the terminal
    round).  ``eliminate_fn`` is an injection seam for the mutation mode of
    the property suites; production callers leave it alone.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"solve needs a declared gamma in (0, 1], got {gamma}")
    n = _oracle_grid_side(g)
    k = g.k
    bound = query_bound(n, k)
    threshold = 16.0 / gamma
    cand = CandidateSet.initial(n, k, cap)
    rounds: list[RoundRecord] = []
    t = 0
    while True:
        t += 1
        if t > bound:
            raise InternalInvariantError(
                f"query bound {bound} exceeded at round {t}: halving should have "
                f"emptied the candidate set")
        a = select_query_point(cand, n, k)
        ga = g(tuple(float(v) for v in a))
        residual = linf_dist(ga, a)
        if residual <= threshold:
            rec = RoundRecord(t, a, (0,) * k, residual, len(cand), t)
            rounds.append(rec)
            if on_round is not None:
                on_round(rec, cand, None)
            return SolveResult(OUTCOME_FIXED_POINT, a, residual, t, rounds, n, k,
                               gamma, bound)
        s = sign_vector(a, ga, sign_tolerance)
        if not any(s):
            rec = RoundRecord(t, a, s, residual, len(cand), t)
            rounds.append(rec)
            if on_round is not None:
                on_round(rec, cand, None)
            return SolveResult(
                OUTCOME_VIOLATION, None, residual, t, rounds, n, k, gamma, bound,
                violation={"reason": "zero-sign-with-large-residual", "round": t,
                           "a": list(a), "g_a": list(ga), "residual": residual})
        nxt = eliminate_fn(cand, a, s)
        if 2 * len(nxt) > len(cand):
            raise InternalInvariantError(
                f"halving failed at round {t}: {len(cand)} -> {len(nxt)} candidates "
                f"(query {a}, sign {s})")
        rec = RoundRecord(t, a, s, residual, len(nxt), t)
        rounds.append(rec)
        if on_round is not None:
            on_round(rec, cand, nxt)
        if len(nxt) == 0:
            return SolveResult(
                OUTCOME_VIOLATION, None, residual, t, rounds, n, k, gamma, bound,
                violation={"reason": "empty-candidate-set", "round": t,
                           "a": list(a), "g_a": list(ga), "residual": residual,
                           "sign": list(s)})
        cand = nxt


def solve_unit_cube(f: ContractionOracle, eps: float, gamma: float, *,
                    cap: int = DEFAULT_CANDIDATE_CAP,
                    on_round=None) -> SolveResult:
    """Find an eps-fixed point of ``f`` on the unit cube, or violation evidence.

    Routes through the non-expansive reduction exactly when ``gamma < eps/2``
    (in particular whenever the oracle is only promised non-expansive), then
    rescales to ``n = ceil(16 / (gamma' eps'))`` and runs :func:`solve`.  Query
    counts on ``f`` and on the grid oracle agree one-for-one.
    """
    if f.side != 1.0:
        raise ValueError("solve_unit_cube expects an oracle on the unit cube")
    if not 0 < eps <= 1:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    if gamma > 1:
        raise ValueError(f"gamma must be at most 1, got {gamma}")
    queries_before = f.queries
    routed = gamma < eps / 2.0
    if routed:
        inner = reduce_nonexpansive(f, eps)
        eff_eps = eff_gamma = eps / 2.0
    else:
        inner = f
        eff_eps, eff_gamma = eps, gamma
    g, n = rescale_to_grid(inner, eff_gamma, eff_eps)
    res = solve(g, eff_gamma, cap=cap, on_round=on_round)
    spent = f.queries - queries_before
    if spent != res.queries:
        raise InternalInvariantError(
            f"query accounting mismatch: {spent} base queries vs {res.queries} grid queries")
    res.routed = routed
    res.eps = eps
    res.gamma = gamma
    if res.outcome == OUTCOME_FIXED_POINT:
        x = tuple(v / n for v in res.answer)
        last_q, last_ans = f.transcript[len(f.transcript) - 1]
        if linf_dist(last_q, x) > 1e-12:
            raise InternalInvariantError("final answer is not the final query")
        res.answer_grid = res.answer
        res.residual_grid = res.residual
        res.answer = x
        res.residual = linf_dist(last_ans, last_q)
    return res


def solve_strong(f: ContractionOracle, eps: float, gamma: float, **kwargs) -> SolveResult:
    """Point within ``eps`` of the true fixed point, via the weak solver.

    Runs the weak solver at ``(eps * gamma, gamma)``: a residual of
    ``eps * gamma`` under a ``(1 - gamma)``-contraction pins the fixed point
    within ``eps``.
    """
    weak_eps, weak_gamma = strong_to_weak(eps, gamma)
    return solve_unit_cube(f, weak_eps, weak_gamma, **kwargs)


def picard_baseline(f: ContractionOracle, eps: float, start: Sequence[float] | None = None,
                    max_queries: int | None = None) -> SolveResult:
    """Plain fixed-point iteration ``x <- f(x)`` until the residual is small.

    The comparison baseline: query count grows like ``(1/gamma) log(1/eps)``
    on genuine contractions and is unbounded on non-expansive maps.  Starts
    at the origin corner by default.  A constant map costs exactly two
    queries: one to see the constant, one to confirm it is fixed.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = tuple(0.0 for _ in range(f.k)) if start is None else tuple(float(v) for v in start)
    if max_queries is None:
        if f.gamma > 0:
            max_queries = 64 + math.ceil((4.0 / f.gamma) * math.log(4.0 * f.side / eps))
        else:
            max_queries = 100_000
    queries = 0
    residual = math.inf
    for _ in range(max_queries):
        y = f(x)
        queries += 1
        residual = linf_dist(y, x)
        if residual <= eps:
            return SolveResult(OUTCOME_FIXED_POINT, x, residual, queries, [],
                               n=0, k=f.k, gamma=f.gamma, query_bound=0, eps=eps)
        x = y
    return SolveResult(OUTCOME_FAILURE, x, residual, queries, [],
                       n=0, k=f.k, gamma=f.gamma, query_bound=0, eps=eps)
