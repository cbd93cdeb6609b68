import csv
import io
import json
import math

import mpmath
import numpy as np
import pytest

from snowfold.covers import build_greedy_colored_cover, build_hierarchy
from snowfold.embedding import (
    bump,
    build_folding_map,
    certified_lip_bound,
    color_capture_sweep,
    full_bump_failures,
    map_from_dict,
    member_bumps,
    phi,
    phi_table,
    scale_ratio_sides,
    select_scale_ratio,
)
from snowfold.metric import FiniteMetricSpace, ParameterError, dist_to_set
from snowfold.spaces import grid2d, heisenberg_ball, interval, random_cloud, star_tree


def mp_separated(r, eps, c):
    mpmath.mp.dps = 50
    r, eps = mpmath.mpf(r), mpmath.mpf(eps)
    lhs = 2 / (r**eps - 1) + 4 * c / (r ** (1 - eps) - 1)
    return lhs < 1 - 2 ** (-eps)


def mp_scan(eps, c):
    r = 2
    while not mp_separated(r, eps, c):
        r += 1
    return r


def test_scale_ratio_c1_is_462():
    assert mp_scan(0.5, 1) == 462
    assert not mp_separated(461, 0.5, 1)
    assert select_scale_ratio(0.5, 1) == 462
    lhs, rhs = scale_ratio_sides(462, 0.5, 1)
    assert lhs < rhs
    lhs, rhs = scale_ratio_sides(461, 0.5, 1)
    assert lhs >= rhs


@pytest.mark.parametrize("eps,c", [(0.5, 4), (0.5, 5), (0.3, 1), (0.7, 2), (0.5, 2.5)])
def test_scale_ratio_matches_scan(eps, c):
    assert select_scale_ratio(eps, c) == mp_scan(eps, c)


def test_scale_ratio_pinned_values():
    # pinned from the integer scan above
    assert select_scale_ratio(0.5, 4) == 3901
    assert select_scale_ratio(0.5, 5) == 5794


@pytest.mark.parametrize("eps,c", [(1.0, 4), (0.0, 4), (1.2, 1), (0.5, 0.5)])
def test_scale_ratio_rejects(eps, c):
    with pytest.raises(ParameterError):
        select_scale_ratio(eps, c)


def test_certified_bound_formula():
    K, r, e = 2, 462.0, 0.5
    expected = K / (1 - 1 / math.sqrt(r)) + 2 * K * math.sqrt(r) / (1 - 1 / math.sqrt(r))
    assert certified_lip_bound(K, r, e) == pytest.approx(expected, rel=1e-14)


def test_bump_examples():
    m = interval(5)
    assert bump(1, [0, 1, 2], m, 462, 0) == 1.0
    assert bump(2, [0, 1, 2], m, 462, 0) == 1.0
    assert bump(3, [0, 1, 2], m, 462, 0) == 0.0
    assert bump(4, range(5), m, 462, 0) == 1.0
    # at j=1 the scale is 462, so the bump is a distance ratio
    assert bump(1, [0, 1, 2], m, 462, 1) == pytest.approx(2 / 462)


def test_member_bumps_agree_with_bump():
    m = random_cloud(25, 3)
    member = np.array([0, 3, 4, 9, 17])
    for j in (-1, 0, 1):
        vals = member_bumps(m, member, 5.0, j)
        for x, v in zip(member, vals):
            assert v == bump(int(x), member, m, 5.0, j)


def test_bump_is_positive_exactly_on_member_and_lipschitz():
    m = random_cloud(30, 5)
    r = 4.0
    member = [1, 2, 5, 8, 13, 21]
    for j in (-2, -1, 0):
        vals = np.array([bump(x, member, m, r, j) for x in range(m.n)])
        assert set(np.flatnonzero(vals > 0)) == set(member)
        dv = np.abs(vals[:, None] - vals[None, :])
        assert np.all(dv <= r ** (-j) * np.asarray(m.dist) + 1e-12)


def five_point_hierarchy():
    m = interval(5)
    h = build_hierarchy(m, 462, 0.5, 1e-3)
    return m, h


def test_phi_example_from_line_cover():
    m = interval(5)
    c = build_greedy_colored_cover(m, 1.0)
    # color-1 member {1,2,3,4} at s=1: psi(3) = min(1, dist(3, {0})) = 1
    ones = [bump(3, mem, m, 462, 0) for mem, k in zip(c.members, c.colors) if k == 1]
    assert ones == [1.0]
    assert dist_to_set(m, 3, [0]) == 3.0


def test_phi_table_above_window_is_zero():
    m, h = five_point_hierarchy()
    assert np.all(phi_table(h, h.j_hi + 3) == 0)
    with pytest.raises(ParameterError):
        phi_table(h, h.j_lo - 1)
    assert phi(0, h.j_lo, h).shape == (h.global_K - 1,)


SPACES = [interval(40, 1.0), grid2d(6), heisenberg_ball(2), star_tree(3, 4), random_cloud(50, 2)]


@pytest.mark.parametrize("m", SPACES, ids=lambda m: m.label)
def test_phi_bounds_and_per_scale_lipschitz(m):
    r = select_scale_ratio(0.5, 4)
    h = build_hierarchy(m, r, 0.5, 1e-3, "greedy", 4)
    K = h.global_K
    D = np.asarray(m.dist)
    for j in h.window:
        P = phi_table(h, j)
        if P.size:
            assert P.min() >= 0 and P.max() <= 1 + 1e-12
        assert np.all(np.linalg.norm(P, axis=1) <= K)
        diff = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
        assert np.all(diff <= 2 * K * r ** (-j) * D + 1e-9)
    assert full_bump_failures(h) == []


@pytest.mark.parametrize("m", SPACES, ids=lambda m: m.label)
def test_folding_map_invariants(m):
    r = select_scale_ratio(0.5, 4)
    h = build_hierarchy(m, r, 0.5, 1e-3, "greedy", 4)
    f = build_folding_map(h)
    assert f.target_dim == h.global_K - 1
    assert np.all(f.values[0] == 0)
    assert np.all(np.isfinite(f.values))
    assert f.tail_bound < f.tail_tol * m.min_positive_distance**0.5
    g = build_folding_map(h, base_point=m.n - 1)
    assert np.all(g.values[m.n - 1] == 0)
    shift = f.values - g.values
    assert np.allclose(shift, shift[0], atol=1e-9)
    rep = color_capture_sweep(f)
    assert rep.ok


def test_folding_map_by_hand_on_five_points():
    # the window runs j = -2..0 for r = 462 and the interval has K = 2 only at j = 0
    m = interval(5, 4.0)
    h = build_hierarchy(m, 462, 0.5, 1e-3)
    f = build_folding_map(h)
    expected = np.zeros((5, h.global_K - 1))
    for j in h.window:
        P = np.zeros_like(expected)
        for mem, k in zip(h.covers[j].members, h.covers[j].colors):
            for x in mem:
                if k:
                    P[x, k - 1] += bump(int(x), mem, m, 462, j)
        expected += 462 ** (0.5 * j) * (P - P[0])
    assert np.allclose(f.values, expected, rtol=1e-14, atol=0)


def test_single_point_map():
    h = build_hierarchy(FiniteMetricSpace([[0.0]], 1.0), 462)
    f = build_folding_map(h)
    assert f.values.shape == (1, 0)
    assert f.target_dim == 0


def test_base_point_checked():
    m, h = five_point_hierarchy()
    with pytest.raises(ParameterError):
        build_folding_map(h, base_point=9)


def test_interval_target_is_one_dimensional():
    m = interval(256, 1.0)
    r = select_scale_ratio(0.5, 5)
    f = build_folding_map(build_hierarchy(m, r, 0.5, 1e-3, "interval", 5))
    assert f.target_dim == 1


def test_map_serialisation():
    m = grid2d(4)
    f = build_folding_map(build_hierarchy(m, 3901, 0.5, 1e-3, "greedy", 4))
    doc = json.loads(json.dumps(f.to_dict()))
    back = map_from_dict(doc)
    assert np.array_equal(back.values, f.values)
    assert back.meta["certified_lip_bound"] == f.certified_lip_bound
    text = f.to_csv()
    assert text.endswith("\r\n") and "\r\n" in text
    rows = list(csv.reader(io.StringIO(text, newline="")))
    assert rows[0] == ["point"] + [f"f{k}" for k in range(f.target_dim)]
    assert np.array_equal(np.array(rows[1:], dtype=float)[:, 1:], f.values)
    with pytest.raises(ParameterError):
        map_from_dict({"format": "other"})


def test_capture_sweep_counts_hypotheses():
    m = interval(64, 1.0)
    f = build_folding_map(build_hierarchy(m, select_scale_ratio(0.5, 5), 0.5, 1e-3, "interval", 5))
    rep = color_capture_sweep(f)
    assert rep.hypotheses_met > 0 and rep.ok
