"""Finite metric spaces, snowflake views and r-path connectivity.

Every other module consumes a *metric view*: any object with an ``n``
attribute, a square ``dist`` array and a ``mesh``.  Both
:class:`FiniteMetricSpace` and :class:`SnowflakeView` qualify.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

FORMAT_TAG = "snowfold.space"
FORMAT_VERSION = 1


class StructuralError(ValueError):
    """Malformed input: wrong shape, negative entries, unknown ids, disconnection."""


class ParameterError(ValueError):
    """A numeric parameter lies outside its admissible range."""


class ConfigurationError(RuntimeError):
    """A run configuration cannot be honoured (window too long, tail too large)."""


def _as_dist(dist) -> np.ndarray:
    D = np.array(dist, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise StructuralError(f"distance matrix must be square, got shape {D.shape}")
    if D.size and (np.any(D < 0) or not np.all(np.isfinite(D))):
        raise StructuralError("distance matrix has negative or non-finite entries")
    return D


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite point set ``0..N-1`` with a full distance matrix.

    ``mesh`` is the connectivity resolution h: the space is treated as
    connected at scale h, and h-connected subsets stand in for continua.
    """

    dist: np.ndarray
    mesh: float
    label: str = ""
    coords: np.ndarray | None = None
    recipe: dict | None = None

    def __post_init__(self):
        D = _as_dist(self.dist)
        n = D.shape[0]
        if not np.array_equal(D, D.T):
            raise StructuralError("distance matrix is not symmetric")
        if np.any(np.diag(D) != 0):
            raise StructuralError("distance matrix has a non-zero diagonal")
        if n > 1 and np.any(D[~np.eye(n, dtype=bool)] <= 0):
            raise StructuralError("distinct points at distance zero")
        if not self.mesh > 0:
            raise ParameterError(f"mesh must be positive, got {self.mesh}")
        D.setflags(write=False)
        object.__setattr__(self, "dist", D)
        object.__setattr__(self, "mesh", float(self.mesh))
        if not is_connected(self):
            raise StructuralError(f"space is not connected at mesh {self.mesh}")
        if self.coords is not None:
            C = np.array(self.coords, dtype=np.float64)
            if C.ndim == 1:
                C = C[:, None]
            if C.shape[0] != n:
                raise StructuralError("coords must have one row per point")
            C.setflags(write=False)
            object.__setattr__(self, "coords", C)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def points(self) -> range:
        return range(self.n)

    @property
    def base(self) -> "FiniteMetricSpace":
        return self

    @property
    def epsilon(self) -> float:
        return 1.0

    @cached_property
    def diam(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    @cached_property
    def min_positive_distance(self) -> float:
        if self.n < 2:
            return 0.0
        return float(self.dist[np.triu_indices(self.n, 1)].min())


@dataclass(frozen=True, eq=False)
class SnowflakeView:
    """The space ``(X, d**epsilon)``; distances are computed once and cached."""

    base: FiniteMetricSpace
    epsilon: float

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def points(self) -> range:
        return self.base.points

    @property
    def mesh(self) -> float:
        return self.base.mesh ** self.epsilon

    @cached_property
    def dist(self) -> np.ndarray:
        D = self.base.dist ** self.epsilon
        D.setflags(write=False)
        return D

    @cached_property
    def diam(self) -> float:
        return self.base.diam ** self.epsilon

    @cached_property
    def min_positive_distance(self) -> float:
        return self.base.min_positive_distance ** self.epsilon


def snowflake(m: FiniteMetricSpace, epsilon: float) -> SnowflakeView:
    if not 0 < epsilon <= 1:
        raise ParameterError(f"epsilon must lie in (0, 1], got {epsilon}")
    if isinstance(m, SnowflakeView):
        # (d^a)^b = d^(ab)
        return SnowflakeView(m.base, m.epsilon * epsilon)
    return SnowflakeView(m, float(epsilon))


@dataclass
class MetricReport:
    violations: list[tuple[int, int, int]] = field(default_factory=list)
    tolerance: float = 0.0

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def validate_metric(m, rel_tol: float = 1e-9, limit: int | None = None) -> MetricReport:
    """Return every triple ``(i, j, k)`` with ``d(i,k) > d(i,j) + d(j,k) + tol``.

    ``tol = rel_tol * diam``.  ``m`` may be a metric view or a bare matrix.
    """
    D = _as_dist(m.dist if hasattr(m, "dist") else m)
    n = D.shape[0]
    tol = rel_tol * (float(D.max()) if n else 0.0)
    report = MetricReport(tolerance=tol)
    for j in range(n):
        bad = D > D[:, j][:, None] + D[j, :][None, :] + tol
        if bad.any():
            for i, k in zip(*np.nonzero(bad)):
                report.violations.append((int(i), j, int(k)))
                if limit is not None and len(report.violations) >= limit:
                    break
        if limit is not None and len(report.violations) >= limit:
            break
    report.violations.sort()
    return report


def _check_ids(m, subset) -> np.ndarray:
    ids = np.unique(np.asarray(list(subset), dtype=np.int64))
    if ids.size and (ids[0] < 0 or ids[-1] >= m.n):
        raise StructuralError(f"point ids outside 0..{m.n - 1}")
    return ids


class DisjointSets:
    """Union-find with path halving; the smaller root index becomes the representative."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def r_components(m, subset, r: float) -> list[list[int]]:
    """Partition ``subset`` into its r-components.

    Components are sorted lists ordered by their smallest member.
    """
    if r < 0:
        raise ParameterError("r must be non-negative")
    ids = _check_ids(m, subset)
    if ids.size == 0:
        raise ParameterError("subset must be non-empty")
    sub = m.dist[np.ix_(ids, ids)]
    dsu = DisjointSets(len(ids))
    for a, b in zip(*np.nonzero(np.triu(sub <= r, 1))):
        dsu.union(int(a), int(b))
    groups: dict[int, list[int]] = {}
    for a in range(len(ids)):
        groups.setdefault(dsu.find(a), []).append(int(ids[a]))
    return sorted(groups.values(), key=lambda g: g[0])


def is_connected(m, r: float | None = None) -> bool:
    """True when the whole space is a single r-component (default r = mesh)."""
    if m.n <= 1:
        return True
    adj = csr_matrix(m.dist <= (m.mesh if r is None else r))
    return connected_components(adj, directed=False, return_labels=False) == 1


def diameter(m, subset) -> float:
    ids = _check_ids(m, subset)
    if ids.size == 0:
        raise ParameterError("diameter of an empty set is undefined")
    return float(m.dist[np.ix_(ids, ids)].max())


def dist_to_set(m, x: int, subset) -> float:
    """Distance from a point to a set; +inf for the empty set."""
    ids = np.asarray(list(subset), dtype=np.int64)
    if ids.size == 0:
        return float("inf")
    return float(m.dist[x, ids].min())


def space_to_dict(m: FiniteMetricSpace) -> dict:
    doc = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "label": m.label,
        "mesh": m.mesh,
        "dist": m.dist.tolist(),
    }
    if m.coords is not None:
        doc["coords"] = m.coords.tolist()
    if m.recipe is not None:
        doc["recipe"] = m.recipe
    return doc


def space_from_dict(doc: dict) -> FiniteMetricSpace:
    if doc.get("format") != FORMAT_TAG:
        raise StructuralError(f"not a {FORMAT_TAG} document")
    return FiniteMetricSpace(
        dist=doc["dist"],
        mesh=doc["mesh"],
        label=doc.get("label", ""),
        coords=doc.get("coords"),
        recipe=doc.get("recipe"),
    )


def dumps(doc) -> str:
    """Stable JSON: sorted keys, shortest round-trip float repr."""
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def save_space(m: FiniteMetricSpace, path) -> None:
    Path(path).write_text(dumps(space_to_dict(m)), encoding="utf-8")


def load_space(path) -> FiniteMetricSpace:
    return space_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
