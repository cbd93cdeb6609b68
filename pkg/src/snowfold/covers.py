"""Coloured multiscale covers.

At every scale ``s = r**j`` a cover is a list of members, each carrying a
colour.  The builders guarantee, and :func:`verify_cover` re-checks:

* every point lies in some member;
* members of one colour are more than ``s/2`` apart;
* every closed ball ``B(x, s)`` sits inside some member;
* every member has diameter at most ``achieved_c * s``.

Openness of members is automatic on a finite space.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .metric import ConfigurationError, ParameterError

MAX_WINDOW = 64
# the interval cover uses windows of length 5s every 3s
INTERVAL_PERIOD = 3.0
INTERVAL_LENGTH = 5.0


@dataclass(frozen=True, eq=False)
class ColoredCover:
    scale_index: int
    scale: float
    members: tuple[np.ndarray, ...]
    colors: np.ndarray
    achieved_c: float
    color_count: int
    kind: str = "greedy"

    def membership(self, n: int) -> np.ndarray:
        """Boolean matrix, one row per member."""
        M = np.zeros((len(self.members), n), dtype=bool)
        for a, ids in enumerate(self.members):
            M[a, ids] = True
        return M

    def to_dict(self) -> dict:
        return {
            "scale_index": self.scale_index,
            "scale": self.scale,
            "members": [ids.tolist() for ids in self.members],
            "colors": self.colors.tolist(),
            "achieved_c": self.achieved_c,
            "color_count": self.color_count,
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ColoredCover":
        return cls(
            scale_index=int(doc["scale_index"]),
            scale=float(doc["scale"]),
            members=tuple(np.asarray(ids, dtype=np.int64) for ids in doc["members"]),
            colors=np.asarray(doc["colors"], dtype=np.int64),
            achieved_c=float(doc["achieved_c"]),
            color_count=int(doc["color_count"]),
            kind=doc.get("kind", "greedy"),
        )


def _achieved_c(D: np.ndarray, members, s: float) -> float:
    return max(float(D[np.ix_(ids, ids)].max()) for ids in members) / s


def greedy_net(D: np.ndarray, s: float) -> list[int]:
    """Maximal s-separated net: scan points in index order, keep any point farther than s from the net."""
    n = D.shape[0]
    gap = np.full(n, np.inf)
    net = []
    for i in range(n):
        if gap[i] > s:
            net.append(i)
            gap = np.minimum(gap, D[i])
    return net


def greedy_coloring(conflicts: list[set[int]]) -> np.ndarray:
    colors = np.full(len(conflicts), -1, dtype=np.int64)
    for a, nbrs in enumerate(conflicts):
        used = {int(colors[b]) for b in nbrs if colors[b] >= 0}
        k = 0
        while k in used:
            k += 1
        colors[a] = k
    return colors


def _member_gaps(D: np.ndarray, members) -> np.ndarray:
    """Pairwise set distances between members."""
    to_member = np.stack([D[:, ids].min(axis=1) for ids in members])
    return np.stack([to_member[:, ids].min(axis=1) for ids in members], axis=1)


def build_greedy_colored_cover(m, s: float, scale_index: int = 0) -> ColoredCover:
    """Net, Voronoi cells, s-inflation, then greedy colouring of the s/2-conflict graph.

    Cells are assigned to the nearest net point, ties to the earlier net
    point; colours are handed out in net order, lowest free colour first.
    Member diameters are at most 4s.
    """
    if not s > 0:
        raise ParameterError("scale must be positive")
    D = np.asarray(m.dist)
    n = D.shape[0]
    if n == 0:
        return ColoredCover(scale_index, s, (), np.zeros(0, np.int64), 0.0, 0)
    net = greedy_net(D, s)
    owner = np.argmin(D[:, net], axis=1)
    members = []
    for a in range(len(net)):
        cell = np.flatnonzero(owner == a)
        members.append(np.flatnonzero(D[:, cell].min(axis=1) <= s))
    gaps = _member_gaps(D, members)
    conflicts = [set(np.flatnonzero(gaps[a] <= s / 2).tolist()) - {a} for a in range(len(members))]
    colors = greedy_coloring(conflicts)
    return ColoredCover(
        scale_index, s, tuple(members), colors,
        _achieved_c(D, members, s), int(colors.max()) + 1, "greedy",
    )


def build_interval_cover(m, s: float, scale_index: int = 0, positions=None) -> ColoredCover:
    """Two-colour cover of a subset of the line.

    Windows ``[3ms, 3ms + 5s]`` (offset from the leftmost point) alternate
    colours by the parity of m.  Same-colour windows are s apart and every
    point in ``[3ms + s, 3ms + 4s]`` has its s-ball inside window m.
    """
    if not s > 0:
        raise ParameterError("scale must be positive")
    if positions is None:
        if m.coords is None or m.coords.shape[1] != 1:
            raise ParameterError("interval cover needs one-dimensional coordinates")
        positions = m.coords[:, 0]
    t = np.asarray(positions, dtype=np.float64)
    # exact rationals: at deep scales the window index passes 2**53
    t0 = Fraction(float(t.min()))
    period, length = Fraction(INTERVAL_PERIOD) * Fraction(s), Fraction(INTERVAL_LENGTH) * Fraction(s)
    span = Fraction(float(t.max())) - t0
    last = max(0, math.ceil((span - length) / period))
    windows: dict[int, list[int]] = {}
    for i, x in enumerate(t.tolist()):
        x = Fraction(x) - t0
        # window w holds x iff w p <= x <= w p + L
        for w in range(max(0, math.ceil((x - length) / period)), min(last, math.floor(x / period)) + 1):
            windows.setdefault(w, []).append(i)
    members, colors = [], []
    for w in sorted(windows):
        members.append(np.asarray(windows[w], dtype=np.int64))
        colors.append(w % 2)
    colors = np.asarray(colors, dtype=np.int64)
    D = np.asarray(m.dist)
    return ColoredCover(
        scale_index, s, tuple(members), colors,
        _achieved_c(D, members, s), int(colors.max()) + 1, "interval",
    )


@dataclass
class CoverVerification:
    violations: list[tuple] = field(default_factory=list)
    achieved_c: float = 0.0
    openness: str = "vacuous on finite spaces"

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_cover(cover: ColoredCover, m) -> CoverVerification:
    """Re-check every cover property; each violation carries its witnesses.

    Kinds: ``("empty", member)``, ``("uncovered", x)``,
    ``("separation", a, b, gap)``, ``("ball", x)``, ``("bounded", member, diam)``.
    """
    D = np.asarray(m.dist)
    n = D.shape[0]
    s = cover.scale
    out = CoverVerification()
    members = list(cover.members)
    for a, ids in enumerate(members):
        if len(ids) == 0:
            out.violations.append(("empty", a))
    members_ok = [ids for ids in members if len(ids)]
    if n == 0:
        return out
    M = cover.membership(n)
    for x in np.flatnonzero(~M.any(axis=0)):
        out.violations.append(("uncovered", int(x)))
    if members_ok:
        out.achieved_c = _achieved_c(D, members_ok, s)
    for a, ids in enumerate(members):
        if len(ids):
            d = float(D[np.ix_(ids, ids)].max())
            if d > cover.achieved_c * s * (1 + 1e-12):
                out.violations.append(("bounded", a, d))
    colors = np.asarray(cover.colors)
    live = [a for a, ids in enumerate(members) if len(ids)]
    if live:
        gaps = _member_gaps(D, [members[a] for a in live])
        live_colors = colors[live]
        close = (gaps <= s / 2) & (live_colors[:, None] == live_colors[None, :])
        for i, k in zip(*np.nonzero(np.triu(close, 1))):
            out.violations.append(("separation", live[i], live[k], float(gaps[i, k])))
    # ball(x) is inside member a iff no ball point lies outside a
    balls = (D <= s).astype(np.float64)
    outside = balls @ (~M).T.astype(np.float64)
    for x in np.flatnonzero(~(outside == 0).any(axis=1)):
        out.violations.append(("ball", int(x)))
    return out


def same_color_absorbs(cover: ColoredCover, m) -> bool:
    """Every s/2-component of a colour class lies inside a single member."""
    from .metric import r_components

    n = m.n
    M = cover.membership(n)
    colors = np.asarray(cover.colors)
    for k in np.unique(colors):
        rows = M[colors == k]
        union = np.flatnonzero(rows.any(axis=0))
        for comp in r_components(m, union, cover.scale / 2):
            if not rows[:, comp].all(axis=1).any():
                return False
    return True


@dataclass(frozen=True, eq=False)
class CoverHierarchy:
    """Covers for scale indices ``j_lo..j_hi``; scales above ``j_hi`` are the single member X."""

    space: object
    r: float
    epsilon: float
    tail_tol: float
    j_lo: int
    j_hi: int
    covers: dict
    cover_kind: str = "greedy"
    design_c: float | None = None

    @property
    def window(self) -> range:
        return range(self.j_lo, self.j_hi + 1)

    @property
    def global_c(self) -> float:
        return max((c.achieved_c for c in self.covers.values()), default=0.0)

    @property
    def global_K(self) -> int:
        return max((c.color_count for c in self.covers.values()), default=1)

    @property
    def tail_bound(self) -> float:
        if not self.covers:
            return 0.0
        return tail_bound(self.global_K, self.r, self.epsilon, self.j_lo)

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "epsilon": self.epsilon,
            "tail_tol": self.tail_tol,
            "window": [self.j_lo, self.j_hi],
            "cover_kind": self.cover_kind,
            "design_c": self.design_c,
            "global_c": self.global_c,
            "global_K": self.global_K,
            "tail_bound": self.tail_bound,
            "covers": [self.covers[j].to_dict() for j in self.window],
        }

    @classmethod
    def from_dict(cls, doc: dict, space) -> "CoverHierarchy":
        covers = {c["scale_index"]: ColoredCover.from_dict(c) for c in doc["covers"]}
        j_lo, j_hi = doc["window"]
        return cls(space, float(doc["r"]), float(doc["epsilon"]), float(doc["tail_tol"]),
                   int(j_lo), int(j_hi), covers, doc.get("cover_kind", "greedy"), doc.get("design_c"))


def tail_bound(K: int, r: float, epsilon: float, j: int) -> float:
    """Bound on the omitted terms below scale index j: 2K r^(j eps) / (1 - r^-eps)."""
    return 2 * K * math.exp(j * epsilon * math.log(r)) / (1 - r ** (-epsilon))


def top_scale_index(diam: float, r: float) -> int:
    """Smallest j with r**j >= diam."""
    j = math.ceil(math.log(diam) / math.log(r))
    while r ** (j - 1) >= diam:
        j -= 1
    while r**j < diam:
        j += 1
    return j


def build_hierarchy(m, r: float, epsilon: float = 0.5, tail_tol: float = 1e-3,
                    cover: str = "greedy", design_c: float | None = None) -> CoverHierarchy:
    """Build covers from the top scale down until the geometric tail drops
    below ``tail_tol`` times the smallest positive snowflaked distance."""
    if not r >= 2:
        raise ParameterError(f"scale ratio must be >= 2, got {r}")
    if not tail_tol > 0:
        raise ParameterError("tail_tol must be positive")
    if not 0 < epsilon <= 1:
        raise ParameterError("epsilon must lie in (0, 1]")
    builders = {"greedy": build_greedy_colored_cover, "interval": build_interval_cover}
    if cover not in builders:
        raise ParameterError(f"unknown cover kind {cover!r}")
    build = builders[cover]
    if m.n <= 1:
        return CoverHierarchy(m, r, epsilon, tail_tol, 1, 0, {}, cover, design_c)
    j_hi = top_scale_index(m.diam, r)
    target = tail_tol * m.min_positive_distance**epsilon
    covers = {}
    K = 1
    j = j_hi
    while True:
        if len(covers) >= MAX_WINDOW:
            raise ConfigurationError(
                f"scale window exceeds {MAX_WINDOW} scales; increase r or tail_tol"
            )
        c = build(m, r**j, scale_index=j)
        covers[j] = c
        K = max(K, c.color_count)
        if tail_bound(K, r, epsilon, j) < target:
            break
        j -= 1
    return CoverHierarchy(m, r, epsilon, tail_tol, j, j_hi, covers, cover, design_c)
