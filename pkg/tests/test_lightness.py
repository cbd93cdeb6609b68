import math

import numpy as np
import pytest
from types import SimpleNamespace

from snowfold.covers import build_hierarchy
from snowfold.embedding import build_folding_map, select_scale_ratio
from snowfold.lightness import (
    SURROGATE_FACTOR,
    all_connected_sets,
    diameter_preservation_profile,
    lightness_ceiling_from_profile,
    lightness_constant,
    lipschitz_constant,
    lipschitz_light_report,
    probe_radii,
    sample_connected_sets,
)
from snowfold.metric import FiniteMetricSpace, ParameterError, is_connected, r_components, snowflake
from snowfold.spaces import bounded_turning_constant, grid2d, interval, random_cloud, star_tree


def line(*pos):
    p = np.asarray(pos, dtype=float)
    return FiniteMetricSpace(np.abs(p[:, None] - p[None]), float(np.diff(p).max()), coords=p)


def test_lipschitz_examples():
    m = line(0, 1, 2)
    assert lipschitz_constant(m.coords, snowflake(m, 1.0))[0] == pytest.approx(1.0)
    m = line(0, 1, 4)
    val, pair = lipschitz_constant(m.coords, snowflake(m, 0.5))
    assert val == pytest.approx(2.0) and pair == (0, 2)
    assert lipschitz_constant(np.zeros(3), snowflake(m, 0.5))[0] == 0.0
    with pytest.raises(ParameterError):
        lipschitz_constant(np.zeros(1), FiniteMetricSpace([[0.0]], 1.0))


def lightness_oracle(values, domain, radii):
    """Direct evaluation with r_components from the metric module; no pruning."""
    img = np.sqrt(((values[:, None] - values[None]) ** 2).sum(-1))
    best = 0.0
    for r in radii:
        for p in range(domain.n):
            W = np.flatnonzero(img[p] <= r)
            for comp in r_components(domain, W, r):
                d = domain.dist[np.ix_(comp, comp)].max()
                best = max(best, d / r)
    return best


CASES = [
    (grid2d(4), lambda m: m.coords[:, :1]),
    (grid2d(4), lambda m: m.coords),
    (random_cloud(20, 4), lambda m: np.sin(7 * m.coords[:, :1])),
    (star_tree(3, 3), lambda m: np.asarray(m.dist)[:, :1]),
]


@pytest.mark.parametrize("case", range(len(CASES)))
@pytest.mark.parametrize("eps", [0.5, 1.0])
def test_lightness_matches_oracle(case, eps):
    m, make = CASES[case]
    values = np.asarray(make(m), dtype=float)
    sv = snowflake(m, eps)
    radii = probe_radii(sv)
    w = lightness_constant(values, sv)
    assert w.constant == pytest.approx(lightness_oracle(values, sv, radii), rel=1e-12)
    # the witness attains the constant
    comp = w.component
    assert sv.dist[np.ix_(comp, comp)].max() / w.radius == pytest.approx(w.constant)


def test_identity_is_at_most_two():
    for m in (grid2d(5), random_cloud(30, 1), line(0, 1, 3, 4, 9)):
        coords = m.coords if m.coords.ndim == 2 else m.coords[:, None]
        assert lightness_constant(coords, snowflake(m, 1.0)).constant <= SURROGATE_FACTOR + 1e-12


@pytest.mark.parametrize("N", [4, 8, 12])
def test_projection_column_lower_bound(N):
    m = grid2d(N)
    sv = snowflake(m, 0.5)
    col = np.flatnonzero(m.coords[:, 0] == 0)
    assert sv.dist[np.ix_(col, col)].max() == pytest.approx(math.sqrt(N - 1))
    assert lightness_constant(m.coords[:, :1], sv, radii=[1.0]).constant >= math.sqrt(N - 1) - 1e-12
    assert lightness_constant(m.coords[:, :1], sv).constant >= math.sqrt(N - 1) - 1e-12


def test_single_point_is_zero():
    w = lightness_constant(np.zeros((1, 1)), FiniteMetricSpace([[0.0]], 1.0))
    assert w.constant == 0.0


def test_restriction_never_increases():
    m = random_cloud(24, 9)
    sv = snowflake(m, 0.5)
    values = np.cos(5 * m.coords)
    radii = probe_radii(sv)
    full = lightness_constant(values, sv, radii).constant
    rng = np.random.default_rng(0)
    for _ in range(10):
        keep = np.sort(rng.choice(m.n, size=12, replace=False))
        sub = SimpleNamespace(n=keep.size, dist=sv.dist[np.ix_(keep, keep)])
        assert lightness_constant(values[keep], sub, radii).constant <= full + 1e-12


def test_witness_is_deterministic():
    m = grid2d(6)
    sv = snowflake(m, 0.5)
    a = lightness_constant(m.coords[:, :1], sv)
    b = lightness_constant(m.coords[:, :1], sv)
    assert (a.constant, a.radius, a.center, a.component) == (b.constant, b.radius, b.center, b.component)


def test_pruning_does_not_change_result():
    m = random_cloud(30, 2)
    sv = snowflake(m, 0.5)
    v = np.sin(9 * m.coords[:, :1])
    w = lightness_constant(v, sv)
    assert w.radii_scanned <= w.radii_total
    assert w.constant == pytest.approx(lightness_oracle(v, sv, probe_radii(sv)), rel=1e-12)
    lo, hi = w.true_bounds
    assert lo == w.constant / 2 and hi == w.constant


def test_report_ceiling():
    m = grid2d(4)
    sv = snowflake(m, 0.5)
    rep = lipschitz_light_report(m.coords[:, :1], sv)
    assert rep.passed and rep.ceiling is None
    assert not lipschitz_light_report(m.coords[:, :1], sv, ceiling=0.5).passed
    doc = rep.to_dict()
    assert doc["surrogate_factor"] == 2.0 and len(doc["light_bounds"]) == 2


def test_folding_map_report_on_interval_256():
    m = interval(256, 1.0)
    f = build_folding_map(build_hierarchy(m, select_scale_ratio(0.5, 5), 0.5, 1e-3, "interval", 5))
    rep = lipschitz_light_report(f, snowflake(m, 0.5))
    assert math.isfinite(rep.lip_constant) and math.isfinite(rep.light_constant)
    assert rep.lip_constant <= f.certified_lip_bound


def test_connected_set_enumeration_counts():
    # a path on n vertices has n(n-1)/2 connected sets with >= 2 points
    m = interval(6)
    assert len(all_connected_sets(m)) == 15
    # the 2x2 grid is a 4-cycle at mesh 1: 4 edges, 4 triples, 1 whole
    assert len(all_connected_sets(grid2d(2))) == 9


def test_sampled_sets_are_connected():
    m = random_cloud(40, 3)
    for K in sample_connected_sets(m, 100, seed=1):
        sub = FiniteMetricSpace(np.asarray(m.dist)[np.ix_(K, K)], m.mesh)
        assert is_connected(sub)


def test_profile_identity_and_constant():
    m = grid2d(4)
    p = diameter_preservation_profile(m.coords, snowflake(m, 1.0))
    assert p.min_ratio == pytest.approx(1.0) and p.max_ratio == pytest.approx(1.0)
    q = diameter_preservation_profile(np.zeros((m.n, 1)), snowflake(m, 1.0))
    assert q.degenerate and q.max_ratio == 0.0


@pytest.mark.parametrize("m,eps", [(grid2d(5), 1.0), (interval(30, 1.0), 0.5), (star_tree(3, 3), 1.0)])
def test_consistency_bound(m, eps):
    sv = snowflake(m, eps)
    values = m.coords if m.coords is not None else np.asarray(m.dist)[:, :1]
    values = np.asarray(values, dtype=float).reshape(m.n, -1)
    prof = diameter_preservation_profile(values, sv, samples=400, seed=0)
    a = max(prof.max_ratio, 1 / prof.min_ratio)
    turning = bounded_turning_constant(m).constant
    light = lightness_constant(values, sv).constant
    assert light <= lightness_ceiling_from_profile(a, turning, eps) + 1e-9
