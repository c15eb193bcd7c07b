"""Tests for oracle instances, query accounting, and the parameter reductions."""

import json

import numpy as np
import pytest

from cubefix.geometry import linf_dist
from cubefix.oracles import (
    ContractionOracle,
    InstanceSpec,
    QueryTranscript,
    build_instance,
    grid_side,
    make_affine,
    make_instance,
    reduce_nonexpansive,
    rescale_to_grid,
    sampled_contraction_check,
    strong_to_weak,
)


def test_affine_identity_matrix_fixed_point_origin():
    f = make_affine(np.eye(2), [0.0, 0.0], 0.5)
    assert f.fixed_point == (0.0, 0.0)
    assert f((0.5, 0.5)) == (0.25, 0.25)


def test_affine_constant_map_fixed_point_is_offset():
    f = make_affine(np.zeros((2, 2)), [0.3, 0.7], 0.5)
    assert f.fixed_point == (0.3, 0.7)
    assert f((1.0, 0.0)) == (0.3, 0.7)


def test_affine_swap_matrix_fixed_point_matches_hand_solve():
    # x1 = 0.5 x2 + 0.1 and x2 = 0.5 x1 + 0.3 solve to (1/3, 7/15).
    f = make_affine([[0, 1], [1, 0]], [0.1, 0.3], 0.5)
    assert f.fixed_point == pytest.approx((1 / 3, 7 / 15), abs=1e-12)
    fx = f.probe(f.fixed_point)
    assert linf_dist(fx, f.fixed_point) <= 1e-9


def test_affine_rejects_row_sum_above_one():
    with pytest.raises(ValueError):
        make_affine([[0.7, 0.7], [0.0, 1.0]], [0.0, 0.0], 0.5)


def test_affine_rejects_escape_from_cube():
    with pytest.raises(ValueError):
        make_affine(np.eye(2), [0.9, 0.9], 0.1)


def test_query_counter_tracks_transcript():
    f = make_affine(np.zeros((1, 1)), [0.5], 0.5)
    assert f.queries == 0
    f((0.0,))
    f((1.0,))
    assert f.queries == 2
    assert len(f.transcript) == 2
    assert f.transcript[1] == ((1.0,), (0.5,))
    # probe is unrecorded
    f.probe((0.25,))
    assert f.queries == 2


def test_oracle_rejects_out_of_domain_query():
    f = make_affine(np.zeros((2, 2)), [0.5, 0.5], 0.5)
    with pytest.raises(ValueError):
        f((1.5, 0.0))
    with pytest.raises(ValueError):
        f((0.0,))


def test_transcript_json_round_trip():
    t = QueryTranscript()
    t.append((0.0, 1.0), (0.5, 0.5))
    obj = t.to_json_obj()
    assert obj == [{"query": [0.0, 1.0], "answer": [0.5, 0.5]}]
    back = QueryTranscript.from_json_obj(json.loads(json.dumps(obj)))
    assert back.entries == t.entries


def test_grid_side_values():
    assert grid_side(0.5, 0.5) == 64
    assert grid_side(1.0, 1.0) == 16
    assert grid_side(0.25, 0.25) == 256
    # ceil is exact on the binary-float quotient
    assert grid_side(2 ** -8, 2 ** -4) == 16 * 256 * 16


def test_rescale_to_grid_constant_map():
    f = make_affine(np.zeros((2, 2)), [0.3, 0.7], 0.5)
    g, n = rescale_to_grid(f, 0.5, 0.5)
    assert n == 64
    assert g.side == 64.0
    assert g((0.0, 0.0)) == pytest.approx((0.3 * 64, 0.7 * 64), abs=1e-12)
    assert g.fixed_point == pytest.approx((19.2, 44.8), abs=1e-12)
    # queries pass through to the base oracle
    assert f.queries == 1


def test_rescale_preserves_contraction_factor():
    rng = np.random.default_rng(3)
    spec, f = make_instance("affine", 2, 0.5, 0.5, seed=11)
    g, n = rescale_to_grid(f, 0.5, 0.5)
    report = sampled_contraction_check(g, pairs=2000, rng=rng)
    assert report["passed"], report["violations"][:1]


def test_reduce_nonexpansive_identity():
    f = make_affine(np.eye(1), [0.0], 0.0)
    g = reduce_nonexpansive(f, 0.5)
    assert g.gamma == 0.25
    assert g((1.0,)) == (0.75,)
    assert g.fixed_point == (0.0,)


def test_reduce_nonexpansive_constant():
    f = make_affine(np.zeros((2, 2)), [0.4, 0.8], 0.0)
    g = reduce_nonexpansive(f, 0.5)
    assert g((0.0, 0.0)) == pytest.approx((0.3, 0.6), abs=1e-15)


def test_reduce_nonexpansive_residual_implication():
    # Any point with small residual under the reduced map has residual <= eps
    # under the original map.
    eps = 0.5
    rng = np.random.default_rng(5)
    spec, f = make_instance("affine", 2, 0.0, eps, seed=2)
    g = reduce_nonexpansive(f, eps)
    checked = 0
    for _ in range(500):
        x = tuple(rng.uniform(0.0, 1.0, size=2))
        if linf_dist(g.probe(x), x) <= eps / 2:
            assert linf_dist(f.probe(x), x) <= eps + 1e-12
            checked += 1
    assert checked > 0


def test_strong_to_weak_values():
    assert strong_to_weak(0.1, 0.5) == (0.05, 0.5)
    assert strong_to_weak(1.0, 0.25) == (0.25, 0.25)
    with pytest.raises(ValueError):
        strong_to_weak(0.1, 0.0)


def test_sampled_contraction_check_flags_expansion():
    # A clamped doubling map is expansive on most pairs but declares gamma=0.5.
    f = ContractionOracle(lambda x: (min(1.0, 2.0 * x[0]),), 1, 0.5)
    report = sampled_contraction_check(f, pairs=200, rng=np.random.default_rng(0))
    assert not report["passed"]
    assert report["worst_excess"] > 0


def test_instance_spec_json_round_trip():
    spec, _ = make_instance("affine", 2, 0.5, 0.25, seed=7)
    text = spec.dumps()
    obj = json.loads(text)
    assert set(obj) == {"family", "k", "gamma", "epsilon", "seed", "params"}
    back = InstanceSpec.loads(text)
    assert back == spec
    # rebuilding from the round-tripped spec gives the same map
    f1 = build_instance(spec)
    f2 = build_instance(back)
    x = (0.33, 0.77)
    assert f1.probe(x) == f2.probe(x)


@pytest.mark.parametrize("family,k,gamma", [
    ("affine", 1, 0.5), ("affine", 2, 0.25), ("affine", 3, 0.5),
    ("constant", 2, 0.5), ("reflection", 1, 2 ** -8),
    ("identity", 2, 0.0), ("diamond", 2, 0.0),
])
def test_every_family_passes_contraction_check(family, k, gamma):
    spec, f = make_instance(family, k, gamma, 0.25, seed=4)
    report = sampled_contraction_check(f, pairs=1500, rng=np.random.default_rng(9))
    assert report["passed"], report["violations"][:1]


def test_affine_fixed_point_is_fixed_for_random_instances():
    for seed in range(10):
        spec, f = make_instance("affine", 3, 0.5, 0.25, seed=seed)
        assert f.fixed_point is not None
        assert linf_dist(f.probe(f.fixed_point), f.fixed_point) <= 1e-9


def test_reflection_family_fixed_point_at_centre():
    spec, f = make_instance("reflection", 1, 2 ** -8, 2 ** -4, seed=0)
    assert f.fixed_point == pytest.approx((0.5,), abs=1e-12)


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        make_instance("moebius", 2, 0.5, 0.5, seed=0)
