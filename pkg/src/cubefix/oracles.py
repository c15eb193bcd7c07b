"""Contraction oracles over the cube, instance families, and reductions.

A :class:`ContractionOracle` wraps an arbitrary map ``f: [0, side]^k ->
[0, side]^k`` declared to satisfy ``|f(x) - f(y)| <= (1 - gamma) * |x - y|``
in the l-infinity norm (``gamma = 0`` means only non-expansive is promised).
Every query is domain-checked and recorded; the query counter is the
transcript length by construction.

The reductions are the parameter plumbing used by the solver:

* ``reduce_nonexpansive``: replace a non-expansive ``f`` by ``(1 - eps/2) f``,
  a genuine ``eps/2``-contraction whose eps/2-fixed points are eps-fixed
  points of ``f``.
* ``rescale_to_grid``: blow ``[0, 1]^k`` up to ``[0, n]^k`` with
  ``n = ceil(16 / (gamma * eps))`` so a ``16/gamma``-fixed point of the
  rescaled map scales back to an eps-fixed point.
* ``strong_to_weak``: a weak ``(eps * gamma)``-fixed point of a
  ``(1 - gamma)``-contraction is within ``eps`` of the true fixed point.

Affine instances ``x -> (1 - gamma) * M x + c`` keep their closed-form fixed
point through both reductions, which is what the containment checks in the
test-suite rely on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .geometry import RealPoint, linf_dist


class QueryTranscript:
    """Ordered record of (query, answer) pairs, both tuples of floats."""

    def __init__(self) -> None:
        self.entries: list[tuple[RealPoint, RealPoint]] = []

    def append(self, query: RealPoint, answer: RealPoint) -> None:
        self.entries.append((query, answer))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> tuple[RealPoint, RealPoint]:
        return self.entries[i]

    def to_json_obj(self) -> list[dict]:
        return [{"query": list(q), "answer": list(a)} for q, a in self.entries]

    @classmethod
    def from_json_obj(cls, obj: list[dict]) -> "QueryTranscript":
        t = cls()
        for e in obj:
            t.append(tuple(float(v) for v in e["query"]), tuple(float(v) for v in e["answer"]))
        return t


class ContractionOracle:
    """Query-counted black box for a map of ``[0, side]^k`` into itself.

    ``gamma`` is the declared contraction margin: the map promises factor
    ``1 - gamma``.  ``gamma <= 0`` declares a map that is only promised
    non-expansive.  ``fixed_point`` carries a closed-form fixed point when one
    is known (used by invariant checks, never by the solver).
    """

    def __init__(
        self,
        fn: Callable[[RealPoint], Sequence[float]],
        k: int,
        gamma: float,
        side: float = 1.0,
        fixed_point: RealPoint | None = None,
        name: str = "oracle",
        probe_fn: Callable[[RealPoint], Sequence[float]] | None = None,
    ) -> None:
        if k < 1:
            raise ValueError(f"dimension must be at least 1, got {k}")
        if side <= 0:
            raise ValueError(f"side must be positive, got {side}")
        if gamma > 1:
            raise ValueError(f"contraction margin gamma must be at most 1, got {gamma}")
        self._fn = fn
        self._probe_fn = fn if probe_fn is None else probe_fn
        self.k = k
        self.gamma = float(gamma)
        self.side = float(side)
        self.fixed_point = None if fixed_point is None else tuple(float(v) for v in fixed_point)
        self.name = name
        self.transcript = QueryTranscript()
        self.affine_form: tuple[np.ndarray, np.ndarray] | None = None
        self._tol = 1e-9 * (1.0 + self.side)

    @property
    def queries(self) -> int:
        """Number of queries made so far (== transcript length)."""
        return len(self.transcript)

    def _check_point(self, x: Sequence[float], what: str) -> RealPoint:
        xs = tuple(float(v) for v in x)
        if len(xs) != self.k:
            raise ValueError(f"{what} has dimension {len(xs)}, oracle expects {self.k}")
        for v in xs:
            if not (-self._tol <= v <= self.side + self._tol):
                raise ValueError(f"{what} {xs} outside [0, {self.side}]^{self.k}")
        return xs

    def __call__(self, x: Sequence[float]) -> RealPoint:
        xs = self._check_point(x, "query")
        ans = self._check_point(self._fn(xs), "answer")
        self.transcript.append(xs, ans)
        return ans

    def probe(self, x: Sequence[float]) -> RealPoint:
        """Evaluate without recording.  For instance validation and tests only;
        the solver never calls this (query counts would be meaningless).
        Wrapping oracles chain probes to the base oracle's probe, so nothing
        is recorded anywhere along the chain."""
        xs = self._check_point(x, "query")
        return self._check_point(self._probe_fn(xs), "answer")


def _affine_fixed_point(A: np.ndarray, b: np.ndarray, side: float) -> RealPoint | None:
    """Exact fixed point of ``x -> A x + b`` when ``A`` strictly contracts.

    Row sums of ``|A|`` strictly below 1 make ``I - A`` nonsingular; the
    solution of ``(I - A) x = b`` is the unique fixed point and must lie in
    the cube for a self-map.  Returns None when ``A`` is not a strict
    contraction (fixed points then need not be unique).
    """
    if np.abs(A).sum(axis=1).max() >= 1.0 - 1e-12:
        return None
    k = len(b)
    x = np.linalg.solve(np.eye(k) - A, b)
    if np.any(x < -1e-6) or np.any(x > side + 1e-6):
        return None
    return tuple(float(v) for v in x)


class AffineOracle(ContractionOracle):
    """Map ``x -> (1 - gamma) * (M x) + c`` with ``|M| row sums <= 1``.

    The fixed point solves ``(I - (1 - gamma) M) x = c`` and is computed
    exactly at construction when ``gamma > 0`` (the system is then strictly
    diagonally dominated in the induced norm, hence nonsingular).
    """

    def __init__(self, M: Sequence[Sequence[float]], c: Sequence[float], gamma: float,
                 side: float = 1.0, name: str = "affine") -> None:
        M = np.asarray(M, dtype=float)
        c = np.asarray(c, dtype=float)
        k = c.shape[0]
        if M.shape != (k, k):
            raise ValueError(f"M must be {k}x{k}, got {M.shape}")
        row_sums = np.abs(M).sum(axis=1)
        if np.any(row_sums > 1.0 + 1e-12):
            raise ValueError(f"matrix rows must have absolute sum <= 1, got max {row_sums.max()}")
        factor = 1.0 - gamma
        lo = factor * side * np.minimum(M, 0.0).sum(axis=1) + c
        hi = factor * side * np.maximum(M, 0.0).sum(axis=1) + c
        if np.any(lo < -1e-12) or np.any(hi > side + 1e-12):
            raise ValueError("affine map does not send the cube into itself")
        self.M = M
        self.c = c
        A = factor * M
        super().__init__(self._eval, k, gamma, side=side,
                         fixed_point=_affine_fixed_point(A, c, side), name=name)
        self.affine_form = (A, c)

    def _eval(self, x: RealPoint) -> np.ndarray:
        return (1.0 - self.gamma) * (self.M @ np.asarray(x)) + self.c


def make_affine(M: Sequence[Sequence[float]], c: Sequence[float], gamma: float,
                side: float = 1.0) -> AffineOracle:
    """Validated affine instance with its exact fixed point attached."""
    return AffineOracle(M, c, gamma, side=side)


def strong_to_weak(eps: float, gamma: float) -> tuple[float, float]:
    """Parameters whose weak solution is a strong one.

    If ``|f(x) - x| <= eps * gamma`` then ``|x - Fix(f)| <= eps``: the
    fixed-point distance is at most the residual divided by gamma.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"strong variant needs a genuine contraction, got gamma={gamma}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return eps * gamma, gamma


def reduce_nonexpansive(f: ContractionOracle, eps: float) -> ContractionOracle:
    """Turn a non-expansive oracle into the ``eps/2``-contraction ``(1 - eps/2) f``.

    An ``eps/2``-fixed point of the result is an eps-fixed point of ``f``
    (shrinking moves any point by at most ``eps/2 * side``; side is 1 here).
    Each query passes straight through to ``f``, so query counts agree; an
    affine form is carried along so the reduced map keeps an exact fixed
    point when ``f`` has one.  Example: the identity with eps = 0.5 reduces
    to ``x -> 0.75 x``.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    if f.side != 1.0:
        raise ValueError("non-expansive reduction is defined on the unit cube")
    scale = 1.0 - eps / 2.0

    def fn(x: RealPoint) -> tuple[float, ...]:
        return tuple(scale * v for v in f(x))

    def probe_fn(x: RealPoint) -> tuple[float, ...]:
        return tuple(scale * v for v in f.probe(x))

    g = ContractionOracle(fn, f.k, eps / 2.0, side=1.0, name=f.name + "-reduced",
                          probe_fn=probe_fn)
    if f.affine_form is not None:
        A, b = f.affine_form
        g.affine_form = (scale * A, scale * b)
        g.fixed_point = _affine_fixed_point(*g.affine_form, side=1.0)
    return g


def grid_side(gamma: float, eps: float) -> int:
    """``n = ceil(16 / (gamma * eps))``, computed exactly from the binary floats."""
    if not 0 < gamma <= 1 or not 0 < eps:
        raise ValueError(f"need 0 < gamma <= 1 and eps > 0, got gamma={gamma}, eps={eps}")
    return math.ceil(Fraction(16) / (Fraction(gamma) * Fraction(eps)))


def rescale_to_grid(f: ContractionOracle, gamma: float, eps: float) -> tuple[ContractionOracle, int]:
    """Conjugate ``f`` on the unit cube onto ``[0, n]^k`` with ``n = ceil(16/(gamma eps))``.

    The rescaled map is ``g(x) = n * f(x / n)``; a point with
    ``|g(a) - a| <= 16 / gamma`` scales back to the eps-fixed point ``a / n``
    of ``f``.  Examples: gamma = eps = 1/2 gives n = 64; gamma = eps = 1
    gives n = 16.
    """
    if f.side != 1.0:
        raise ValueError("rescaling starts from the unit cube")
    n = grid_side(gamma, eps)

    def fn(x: RealPoint) -> tuple[float, ...]:
        return tuple(n * v for v in f(tuple(v / n for v in x)))

    def probe_fn(x: RealPoint) -> tuple[float, ...]:
        return tuple(n * v for v in f.probe(tuple(v / n for v in x)))

    fix = None if f.fixed_point is None else tuple(n * v for v in f.fixed_point)
    g = ContractionOracle(fn, f.k, f.gamma, side=float(n), fixed_point=fix,
                          name=f.name + f"-x{n}", probe_fn=probe_fn)
    if f.affine_form is not None:
        A, b = f.affine_form
        g.affine_form = (A, float(n) * b)
    g.n = n
    return g, n


def sampled_contraction_check(f: ContractionOracle, pairs: int = 10_000,
                              rng: np.random.Generator | None = None,
                              tol: float = 1e-12) -> dict:
    """Spot-check the declared contraction factor on random pairs.

    Draws ``pairs`` uniform pairs from the cube and verifies
    ``|f(x) - f(y)| <= (1 - gamma) |x - y| + tol`` via unrecorded probes.
    Returns a report dict with the worst excess and up to ten witnesses.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    factor = 1.0 - max(f.gamma, 0.0)
    worst = 0.0
    witnesses = []
    for _ in range(pairs):
        x = tuple(rng.uniform(0.0, f.side, size=f.k))
        y = tuple(rng.uniform(0.0, f.side, size=f.k))
        excess = linf_dist(f.probe(x), f.probe(y)) - factor * linf_dist(x, y)
        if excess > worst:
            worst = excess
        if excess > tol and len(witnesses) < 10:
            witnesses.append({"x": list(x), "y": list(y), "excess": excess})
    return {"pairs": pairs, "worst_excess": worst, "violations": witnesses,
            "passed": not witnesses}


# ---------------------------------------------------------------------------
# Instance families


@dataclass
class InstanceSpec:
    """Serializable description of a unit-cube test instance."""

    family: str
    k: int
    gamma: float
    epsilon: float
    seed: int
    params: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {"family": self.family, "k": self.k, "gamma": self.gamma,
                "epsilon": self.epsilon, "seed": self.seed, "params": self.params}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "InstanceSpec":
        return cls(family=obj["family"], k=int(obj["k"]), gamma=float(obj["gamma"]),
                   epsilon=float(obj["epsilon"]), seed=int(obj["seed"]),
                   params=dict(obj.get("params", {})))

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "InstanceSpec":
        return cls.from_json_obj(json.loads(text))


def _random_affine_params(k: int, gamma: float, rng: np.random.Generator) -> dict:
    """Random row-normalised matrix (signed entries) and a feasible offset."""
    M = rng.normal(size=(k, k))
    scale = rng.uniform(0.3, 1.0, size=k)
    M = M * (scale / np.abs(M).sum(axis=1))[:, None]
    factor = 1.0 - gamma
    lo = factor * np.minimum(M, 0.0).sum(axis=1)
    hi = factor * np.maximum(M, 0.0).sum(axis=1)
    c = rng.uniform(-lo, 1.0 - hi)
    return {"M": M.tolist(), "c": c.tolist()}


def build_instance(spec: InstanceSpec) -> ContractionOracle:
    """Construct the oracle an :class:`InstanceSpec` describes.

    Families: ``affine`` (random signed matrix), ``constant``, ``reflection``
    (the slow-Picard showcase ``x -> (1-gamma)(-x) + c`` with fixed point at
    the cube centre), ``identity`` (non-expansive, no contraction margin) and
    ``diamond`` (the rotated-square adversary map extended to the unit square;
    only non-expansive, k = 2).  Parameters missing from ``spec.params`` are
    drawn deterministically from ``spec.seed`` and written back into
    ``spec.params`` so serialised instances round-trip exactly.
    """
    rng = np.random.default_rng(spec.seed)
    fam, k, gamma = spec.family, spec.k, spec.gamma
    if fam == "affine":
        if not spec.params:
            spec.params = _random_affine_params(k, gamma, rng)
        return AffineOracle(spec.params["M"], spec.params["c"], gamma, name="affine")
    if fam == "constant":
        if not spec.params:
            spec.params = {"c": rng.uniform(0.0, 1.0, size=k).tolist()}
        c = spec.params["c"]
        return AffineOracle(np.zeros((k, k)), c, gamma, name="constant")
    if fam == "reflection":
        if gamma <= 0:
            raise ValueError("reflection family needs gamma > 0")
        if not spec.params:
            spec.params = {"c": [1.0 - gamma / 2.0] * k}
        return AffineOracle(-np.eye(k), spec.params["c"], gamma, name="reflection")
    if fam == "identity":
        return AffineOracle(np.eye(k), np.zeros(k), 0.0, name="identity")
    if fam == "diamond":
        from .adversary import DiamondMap, extend_to_square

        if k != 2:
            raise ValueError("diamond family is two-dimensional")
        if gamma > 0:
            raise ValueError("diamond family is only non-expansive; use gamma = 0")
        if not spec.params:
            delta = float(rng.uniform(0.03, 0.25))
            side_flag = str(rng.choice(["sw", "ne"]))
            arc_len = 1.0 / math.sqrt(2.0)
            arc = float(rng.uniform(delta, arc_len - delta))
            spec.params = {"delta": delta, "side": side_flag, "arc": arc}
        m = DiamondMap(spec.params["delta"], spec.params["side"], spec.params["arc"])
        return extend_to_square(m)
    raise ValueError(f"unknown instance family {fam!r}")


def make_instance(family: str, k: int, gamma: float, eps: float, seed: int) -> tuple[InstanceSpec, ContractionOracle]:
    """Seeded instance: returns the filled-in spec and its oracle."""
    spec = InstanceSpec(family=family, k=k, gamma=gamma, epsilon=eps, seed=seed)
    oracle = build_instance(spec)
    return spec, oracle
