"""Grid geometry: the even grid, l-infinity pyramids, and sign vectors.

Everything here is exact.  Scalar predicates use plain Python arithmetic so
integer inputs never pass through floating point; the array helpers produce
integer numpy arrays for the vectorised kernels in :mod:`cubefix.balanced`.

Conventions: points are tuples (or 1-d arrays) of length ``k``; coordinates
are indexed from 0; a pyramid ``PyramidSpec(apex, coord, sign)`` is the set

    { y : sign * (y[coord] - apex[coord]) == linf_dist(y, apex) },

i.e. the points whose largest coordinate-wise deviation from the apex is
attained at ``coord`` with direction ``sign``.  The apex itself lies in every
pyramid.
"""

from __future__ import annotations

from itertools import product
from typing import Iterator, NamedTuple, Sequence

import numpy as np

GridPoint = tuple[int, ...]
RealPoint = tuple[float, ...]
SignVector = tuple[int, ...]


class PyramidSpec(NamedTuple):
    """One axis-aligned l-infinity pyramid."""

    apex: Sequence[float]
    coord: int
    sign: int


def linf_dist(x: Sequence[float], y: Sequence[float]) -> float:
    """l-infinity distance; exact on integer inputs."""
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return max(abs(a - b) for a, b in zip(x, y))


def in_pyramid(y: Sequence[float], p: PyramidSpec) -> bool:
    """Whether ``y`` lies in the pyramid ``p``.

    Uses exact comparison: the deviation at ``p.coord`` must equal the
    maximum deviation and point in direction ``p.sign``.
    """
    if p.sign not in (-1, 1):
        raise ValueError(f"pyramid sign must be +1 or -1, got {p.sign}")
    if not 0 <= p.coord < len(p.apex):
        raise ValueError(f"pyramid coordinate {p.coord} out of range")
    diffs = [yi - ai for yi, ai in zip(y, p.apex)]
    return p.sign * diffs[p.coord] == max(abs(d) for d in diffs)


def in_pyramid_union(y: Sequence[float], apex: Sequence[float], s: Sequence[int]) -> bool:
    """Whether ``y`` lies in the union of pyramids P_i(apex, s_i) over i with s_i != 0.

    Equivalent to checking each pyramid separately; uses the identity that the
    union membership holds iff ``max_i(s_i * d_i) + max_i(-|d_i|) >= 0`` where
    ``d = y - apex`` restricted to nonzero signs is compared against the full
    max deviation.  Implemented directly from the definition for clarity; the
    fast kernels live in :mod:`cubefix.balanced`.
    """
    diffs = [yi - ai for yi, ai in zip(y, apex)]
    m = max(abs(d) for d in diffs)
    return any(si * d == m for si, d in zip(s, diffs) if si != 0)


def even_count(n: int, k: int) -> int:
    """Number of points in EVEN(n, k), i.e. ``(n // 2 + 1) ** k``."""
    _check_nk(n, k)
    return (n // 2 + 1) ** k


def enumerate_even(n: int, k: int) -> Iterator[GridPoint]:
    """Stream the all-even grid points of ``{0, 2, ..., n}**k`` in lexicographic order."""
    _check_nk(n, k)
    return product(range(0, n + 1, 2), repeat=k)


def even_grid(n: int, k: int) -> np.ndarray:
    """All of EVEN(n, k) as an ``(m, k)`` int64 array in lexicographic row order.

    Callers are responsible for size checks; the solver's candidate cap lives
    in :class:`cubefix.solver.CandidateSet`.
    """
    _check_nk(n, k)
    vals = np.arange(0, n + 1, 2, dtype=np.int64)
    grids = np.meshgrid(*([vals] * k), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def around_contains(center: Sequence[float], y: Sequence[float], n: int | None = None) -> bool:
    """Whether ``y`` lies in Around(center): the closed unit l-infinity ball.

    When ``n`` is given, additionally requires ``y`` to lie in the cube
    ``[0, n]**k`` (the Around neighbourhood is always taken inside the cube).
    """
    if linf_dist(center, y) > 1:
        return False
    if n is not None and not all(0 <= yi <= n for yi in y):
        return False
    return True


def even_points_near(center: Sequence[float], n: int, k: int) -> np.ndarray:
    """All points of ``Around(center) ∩ EVEN(n, k)`` as an ``(m, k)`` int64 array.

    Enumerates the at-most-2-per-axis even values within distance 1 of each
    coordinate, so the cost is O(2**k), independent of ``n``.
    """
    _check_nk(n, k)
    if len(center) != k:
        raise ValueError(f"center has dimension {len(center)}, expected {k}")
    axes = []
    for ci in center:
        lo = int(np.ceil(ci - 1.0))
        hi = int(np.floor(ci + 1.0))
        vals = [v for v in range(lo, hi + 1) if v % 2 == 0 and 0 <= v <= n]
        axes.append(vals)
    pts = [p for p in product(*axes)]
    return np.array(pts, dtype=np.int64).reshape(len(pts), k)


def sign_vector(a: Sequence[float], ga: Sequence[float], tolerance: float = 0.0) -> SignVector:
    """Coordinate-wise sign of ``ga - a``, with ties within ``tolerance`` mapped to 0.

    ``tolerance=0.0`` gives the exact mathematical sign.  A positive tolerance
    treats differences of magnitude at most ``tolerance`` as zero, e.g.
    ``sign_vector((0, 0), (1e-12, -2), tolerance=1e-9) == (0, -1)``.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    if len(a) != len(ga):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(ga)}")
    out = []
    for ai, gi in zip(a, ga):
        d = gi - ai
        if abs(d) <= tolerance:
            out.append(0)
        elif d > 0:
            out.append(1)
        else:
            out.append(-1)
    return tuple(out)


def _check_nk(n: int, k: int) -> None:
    if n < 0:
        raise ValueError(f"grid side must be nonnegative, got {n}")
    if k < 1:
        raise ValueError(f"dimension must be at least 1, got {k}")
