import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snowfold.metric import (
    ConfigurationError,
    DisjointSets,
    FiniteMetricSpace,
    ParameterError,
    StructuralError,
    diameter,
    dist_to_set,
    is_connected,
    load_space,
    r_components,
    save_space,
    snowflake,
    space_from_dict,
    space_to_dict,
    validate_metric,
)
from snowfold.spaces import grid2d, interval


def line(*pos, mesh=None):
    p = np.asarray(pos, dtype=float)
    D = np.abs(p[:, None] - p[None, :])
    return FiniteMetricSpace(D, mesh if mesh is not None else float(np.diff(np.sort(p)).max()))


def test_rejects_asymmetric():
    with pytest.raises(StructuralError):
        FiniteMetricSpace([[0, 1], [2, 0]], 2.0)


def test_rejects_nonzero_diagonal_and_duplicates():
    with pytest.raises(StructuralError):
        FiniteMetricSpace([[1, 1], [1, 0]], 1.0)
    with pytest.raises(StructuralError):
        FiniteMetricSpace([[0, 0], [0, 0]], 1.0)


def test_rejects_non_square_and_negative():
    with pytest.raises(StructuralError):
        FiniteMetricSpace([[0, 1, 2], [1, 0, 1]], 1.0)
    with pytest.raises(StructuralError):
        FiniteMetricSpace([[0, -1], [-1, 0]], 1.0)


def test_rejects_bad_mesh_and_disconnection():
    with pytest.raises((StructuralError, ParameterError)):
        line(0, 1, mesh=0.0)
    with pytest.raises(StructuralError):
        line(0, 1, 5, mesh=1.0)


def test_matrix_is_read_only():
    m = line(0, 1, 2)
    with pytest.raises(ValueError):
        m.dist[0, 1] = 7.0


def test_basic_properties():
    m = line(0, 1, 4)
    assert m.n == 3
    assert list(m.points) == [0, 1, 2]
    assert m.diam == 4.0
    assert m.min_positive_distance == 1.0
    assert m.epsilon == 1.0
    assert m.base is m


def test_validate_metric_finds_violation():
    D = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    rep = validate_metric(D)
    assert not rep.valid
    assert (0, 1, 2) in rep.violations and (2, 1, 0) in rep.violations
    assert validate_metric(line(0, 1, 2)).valid


def test_snowflake_values():
    sv = snowflake(line(0, 1, 4), 0.5)
    assert sv.dist[0, 2] == pytest.approx(2.0)
    assert sv.mesh == pytest.approx(math.sqrt(3))
    assert sv.diam == pytest.approx(2.0)
    assert sv.base.n == 3


@pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
def test_snowflake_rejects_epsilon(eps):
    with pytest.raises(ParameterError):
        snowflake(line(0, 1), eps)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000), st.floats(0.05, 1.0))
def test_snowflake_is_a_metric(n, seed, eps):
    xy = np.random.default_rng(seed).random((n, 3)) + np.arange(n)[:, None] * 1e-3
    D = np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(-1))
    m = FiniteMetricSpace(D, float(D.max()))
    assert validate_metric(snowflake(m, eps)).valid


def test_r_components_example():
    m = line(0, 1, 2, 10, 11, mesh=8.0)
    assert r_components(m, range(5), 1.0) == [[0, 1, 2], [3, 4]]
    assert r_components(m, range(5), 8.0) == [[0, 1, 2, 3, 4]]
    assert r_components(m, [3, 0], 0.5) == [[0], [3]]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 15), st.integers(0, 10_000), st.floats(0.01, 0.5), st.floats(0.0, 0.5))
def test_r_components_refine_as_r_shrinks(n, seed, r1, extra):
    pos = np.sort(np.random.default_rng(seed).random(n)) + np.arange(n) * 1e-6
    m = line(*pos)
    fine = r_components(m, range(n), r1)
    coarse = r_components(m, range(n), r1 + extra)
    assert len(coarse) <= len(fine)
    for comp in fine:
        assert any(set(comp) <= set(big) for big in coarse)


def test_dsu_smaller_root():
    d = DisjointSets(4)
    d.union(3, 1)
    d.union(2, 3)
    assert d.find(2) == 1 and d.find(3) == 1 and d.find(0) == 0


def test_helpers():
    m = line(0, 1, 4)
    assert diameter(m, [0, 1]) == 1.0
    assert dist_to_set(m, 0, [1, 2]) == 1.0
    assert dist_to_set(m, 0, []) == math.inf
    assert is_connected(m)
    assert not is_connected(m, 1.0)
    with pytest.raises(StructuralError):
        diameter(m, [5])


def test_json_round_trip(tmp_path):
    m = grid2d(3)
    path = tmp_path / "g.json"
    save_space(m, path)
    back = load_space(path)
    assert np.array_equal(back.dist, m.dist)
    assert back.mesh == m.mesh and back.label == m.label
    assert np.array_equal(back.coords, m.coords)
    doc = json.loads(path.read_text())
    assert doc["format"] == "snowfold.space"
    with pytest.raises(StructuralError):
        space_from_dict({"format": "other"})
    assert space_to_dict(interval(3))["dist"][0] == [0.0, 1.0, 2.0]


def test_configuration_error_is_runtime():
    assert issubclass(ConfigurationError, RuntimeError)
