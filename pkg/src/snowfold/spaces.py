"""Benchmark spaces with known behaviour: lines, grids, Cantor sets, trees,
Heisenberg word-metric balls and random clouds."""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import minimum_spanning_tree, shortest_path

from .metric import FiniteMetricSpace, ParameterError, StructuralError, is_connected

KINDS = ("interval", "grid2d", "cantor", "star_tree", "heisenberg_ball", "random_cloud")
MAX_POINTS = 5000


@dataclass(frozen=True)
class SpaceRecipe:
    """Parameters for :func:`generate`.  Only the fields relevant to ``kind`` are read.

    ``length=None`` gives an interval with unit spacing; a float rescales it so
    the whole interval has that length.
    """

    kind: str
    points: int = 0
    side: int = 0
    level: int = 0
    arms: int = 0
    depth: int = 0
    radius: int = 0
    seed: int = 0
    length: float | None = None
    expected_colors_hint: int | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, doc: dict) -> "SpaceRecipe":
        return cls(**doc)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterError(msg)


def _line_metric(pos: np.ndarray) -> np.ndarray:
    return np.abs(pos[:, None] - pos[None, :])


def interval(points: int, length: float | None = None) -> FiniteMetricSpace:
    _require(1 <= points <= MAX_POINTS, f"interval needs 1..{MAX_POINTS} points")
    if length is None or points == 1:
        pos = np.arange(points, dtype=np.float64)
        mesh = 1.0
    else:
        _require(length > 0, "interval length must be positive")
        pos = np.arange(points, dtype=np.float64) * length / (points - 1)
        # rounding can make one gap a hair wider than length/(points-1)
        mesh = float(np.diff(pos).max())
    return FiniteMetricSpace(_line_metric(pos), mesh, label=f"interval-{points}", coords=pos)


def grid2d(side: int, spacing: float = 1.0) -> FiniteMetricSpace:
    _require(1 <= side and side * side <= MAX_POINTS, "grid side out of range")
    ii, jj = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    xy = np.column_stack([ii.ravel(), jj.ravel()]).astype(np.float64) * spacing
    D = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    return FiniteMetricSpace(D, spacing, label=f"grid2d-{side}", coords=xy)


def cantor(level: int) -> FiniteMetricSpace:
    """Endpoints of the level-``level`` middle-thirds construction, in [0, 1]."""
    _require(0 <= level and 2 ** (level + 1) <= MAX_POINTS, "cantor level out of range")
    scale = 3**level
    intervals = [(0, scale)]
    for _ in range(level):
        step = []
        for a, b in intervals:
            third = (b - a) // 3
            step += [(a, a + third), (b - third, b)]
        intervals = step
    ends = np.array(sorted({e for ab in intervals for e in ab}), dtype=np.int64)
    pos = ends / scale
    D = np.abs(ends[:, None] - ends[None, :]) / scale
    # the widest gap (the first removed third) sets the connectivity scale
    mesh = float(np.diff(ends).max() / scale)
    return FiniteMetricSpace(D, mesh, label=f"cantor-{level}", coords=pos)


def graph_space(n: int, edges, label: str = "graph") -> FiniteMetricSpace:
    """Shortest-path metric of a connected unweighted graph; mesh 1."""
    A = np.zeros((n, n))
    for u, v in edges:
        A[u, v] = A[v, u] = 1.0
    D = shortest_path(csr_matrix(A), method="D", unweighted=True, directed=False)
    if not np.all(np.isfinite(D)):
        raise StructuralError("graph is disconnected")
    return FiniteMetricSpace(D, 1.0, label=label)


def star_tree(arms: int, depth: int) -> FiniteMetricSpace:
    """Centre 0 with ``arms`` paths of ``depth`` unit edges; arm a, step k has id 1 + a*depth + k-1."""
    _require(arms >= 1 and depth >= 1, "star_tree needs arms >= 1 and depth >= 1")
    _require(1 + arms * depth <= MAX_POINTS, "star_tree too large")
    edges = []
    for a in range(arms):
        prev = 0
        for k in range(depth):
            v = 1 + a * depth + k
            edges.append((prev, v))
            prev = v
    return graph_space(1 + arms * depth, edges, label=f"star_tree-{arms}x{depth}")


def random_connected_graph(n: int, seed: int, extra_edge_prob: float = 0.3) -> FiniteMetricSpace:
    """Random spanning tree (each vertex attaches to an earlier one) plus random chords."""
    rng = np.random.default_rng(seed)
    edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_edge_prob:
                edges.add((u, v))
    return graph_space(n, sorted(edges), label=f"graph-{n}-s{seed}")


# integer Heisenberg group: (a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b')
def heis_mul(g, h):
    return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1])


def heis_inv(g):
    return (-g[0], -g[1], g[0] * g[1] - g[2])


HEIS_GENERATORS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))


def heisenberg_word_lengths(radius: int) -> dict:
    """BFS on the Cayley graph: element -> word length, for lengths <= radius.

    Insertion order is BFS order with generators tried as a, a^-1, b, b^-1.
    """
    e = (0, 0, 0)
    seen = {e: 0}
    queue = deque([e])
    while queue:
        g = queue.popleft()
        if seen[g] == radius:
            continue
        for s in HEIS_GENERATORS:
            h = heis_mul(g, s)
            if h not in seen:
                seen[h] = seen[g] + 1
                queue.append(h)
    return seen


def heisenberg_ball(radius: int) -> FiniteMetricSpace:
    _require(radius >= 0, "radius must be non-negative")
    _require(radius <= 8, "heisenberg radius above desk-scale cap")
    ball = list(heisenberg_word_lengths(radius))
    _require(len(ball) <= MAX_POINTS, "heisenberg ball exceeds point cap")
    # d(g, h) = |g^-1 h| <= 2 * radius, so one BFS to 2 * radius covers every pair
    lengths = heisenberg_word_lengths(2 * radius)
    n = len(ball)
    D = np.zeros((n, n))
    for i, g in enumerate(ball):
        gi = heis_inv(g)
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = lengths[heis_mul(gi, ball[j])]
    return FiniteMetricSpace(D, 1.0, label=f"heisenberg_ball-{radius}", coords=np.array(ball, dtype=np.float64))


def random_cloud(points: int, seed: int) -> FiniteMetricSpace:
    """Uniform points in the unit square; mesh is the longest minimum-spanning-tree edge."""
    _require(1 <= points <= MAX_POINTS, f"random_cloud needs 1..{MAX_POINTS} points")
    xy = np.random.default_rng(seed).random((points, 2))
    D = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    mesh = float(minimum_spanning_tree(csr_matrix(D)).max()) if points > 1 else 1.0
    return FiniteMetricSpace(D, mesh, label=f"random_cloud-{points}-s{seed}", coords=xy)


def generate(recipe: SpaceRecipe) -> FiniteMetricSpace:
    k = recipe.kind
    if k == "interval":
        m = interval(recipe.points, recipe.length)
    elif k == "grid2d":
        m = grid2d(recipe.side)
    elif k == "cantor":
        m = cantor(recipe.level)
    elif k == "star_tree":
        m = star_tree(recipe.arms, recipe.depth)
    elif k == "heisenberg_ball":
        m = heisenberg_ball(recipe.radius)
    elif k == "random_cloud":
        m = random_cloud(recipe.points, recipe.seed)
    else:
        raise ParameterError(f"unknown space kind {k!r}; valid kinds: {', '.join(KINDS)}")
    return FiniteMetricSpace(m.dist, m.mesh, label=m.label, coords=m.coords, recipe=recipe.to_dict())


@dataclass
class BoundedTurning:
    constant: float
    witness_pair: tuple[int, int] | None
    witness_path: list[int]
    upper_bound: bool = True


def bounded_turning_constant(m) -> BoundedTurning:
    """Upper bound on the bounded-turning constant at mesh h.

    Each pair is joined by a shortest path in the graph of h-steps (weighted
    by distance); the constant is the worst ratio of path diameter to
    distance.  Ties keep the lexicographically first pair.
    """
    n = m.n
    if n < 2:
        return BoundedTurning(1.0, None, [0] if n else [])
    if not is_connected(m):
        raise StructuralError("space is not h-connected")
    D = np.asarray(m.dist)
    W = np.where(D <= m.mesh, D, 0.0)
    sp, pred = shortest_path(csr_matrix(W), method="D", directed=False, return_predecessors=True)
    best, best_pair, best_path = 1.0, None, []
    for s in range(n):
        paths = {s: [s]}
        pdiam = np.zeros(n)
        for t in np.argsort(sp[s], kind="stable"):
            t = int(t)
            if t == s:
                continue
            p = int(pred[s, t])
            path = paths[p] + [t]
            paths[t] = path
            pdiam[t] = max(pdiam[p], float(D[t, path[:-1]].max()))
            if t > s:
                ratio = pdiam[t] / D[s, t]
                if ratio > best or best_pair is None:
                    best, best_pair, best_path = ratio, (s, t), path
    return BoundedTurning(float(best), best_pair, best_path)
