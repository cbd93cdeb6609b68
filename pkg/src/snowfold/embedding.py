"""The folding map.

For each scale index j the cover's members give bump functions
``psi_B(x) = min(1, r**-j * dist(x, X \\ B))``.  Summing the bumps of colour
k gives coordinate k-1 of ``phi_j(x)`` (colour 0 contributes nothing), and

    f(x) = sum_j r**(j*eps) * (phi_j(x) - phi_j(x0))

maps ``(X, d**eps)`` into R^(K-1), K being the number of colours used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covers import CoverHierarchy, tail_bound
from .metric import ConfigurationError, ParameterError

SCALE_RATIO_MARGIN = 1e-12


def scale_ratio_sides(r: float, epsilon: float, c: float) -> tuple[float, float]:
    """Left and right sides of the scale-separation condition."""
    lhs = 2 / (r**epsilon - 1) + 4 * c / (r ** (1 - epsilon) - 1)
    rhs = 1 - 2 ** (-epsilon)
    return lhs, rhs


def _separated(r: int, epsilon: float, c: float) -> bool:
    lhs, rhs = scale_ratio_sides(float(r), epsilon, c)
    return lhs < rhs - SCALE_RATIO_MARGIN


def select_scale_ratio(epsilon: float, c: float) -> int:
    """Smallest integer r >= 2 with 2/(r^e - 1) + 4c/(r^(1-e) - 1) < 1 - 2^-e.

    The left side decreases in r, so a doubling search followed by
    bisection finds the same r as a linear scan.
    """
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not c >= 1:
        raise ParameterError(f"cover constant must be >= 1, got {c}")
    if _separated(2, epsilon, c):
        return 2
    lo, hi = 2, 4
    while not _separated(hi, epsilon, c):
        lo, hi = hi, hi * 2
        if hi > 2**62:
            raise ParameterError("no representable scale ratio for this epsilon")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _separated(mid, epsilon, c):
            hi = mid
        else:
            lo = mid
    return hi


def certified_lip_bound(K: int, r: float, epsilon: float) -> float:
    return K / (1 - r ** (-epsilon)) + 2 * K * r**epsilon / (1 - r ** (epsilon - 1))


def bump(x: int, member, m, r: float, j: int) -> float:
    """``min(1, r**-j * dist(x, complement of member))``; 1 when the member is all of X."""
    inside = np.zeros(m.n, dtype=bool)
    inside[np.asarray(member, dtype=np.int64)] = True
    if not inside[x]:
        return 0.0
    outside = ~inside
    if not outside.any():
        return 1.0
    return min(1.0, r ** (-j) * float(m.dist[x, outside].min()))


def member_bumps(m, member: np.ndarray, r: float, j: int) -> np.ndarray:
    """Bump values on the member's own points (zero elsewhere)."""
    inside = np.zeros(m.n, dtype=bool)
    inside[member] = True
    outside = np.flatnonzero(~inside)
    if outside.size == 0:
        return np.ones(len(member))
    gap = np.asarray(m.dist)[np.ix_(member, outside)].min(axis=1)
    return np.minimum(1.0, r ** (-j) * gap)


def phi_table(hierarchy: CoverHierarchy, j: int, dim: int | None = None) -> np.ndarray:
    """``phi_j`` at every point, shape ``(N, K-1)``.

    Scales above the window are the single member X (colour 0) and give 0.
    """
    m = hierarchy.space
    dim = hierarchy.global_K - 1 if dim is None else dim
    out = np.zeros((m.n, dim))
    cover = hierarchy.covers.get(j)
    if cover is None:
        if j > hierarchy.j_hi:
            return out
        raise ParameterError(f"scale index {j} lies below the window")
    for member, k in zip(cover.members, cover.colors):
        if k == 0:
            continue
        out[member, k - 1] += member_bumps(m, member, hierarchy.r, j)
    return out


def phi(x: int, j: int, hierarchy: CoverHierarchy) -> np.ndarray:
    return phi_table(hierarchy, j)[x]


@dataclass(frozen=True, eq=False)
class FoldingMap:
    hierarchy: CoverHierarchy
    epsilon: float
    r: float
    base_point: int
    values: np.ndarray
    tail_tol: float
    tail_bound: float
    certified_lip_bound: float

    @property
    def target_dim(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_dict(self) -> dict:
        h = self.hierarchy
        return {
            "format": "snowfold.map",
            "version": 1,
            "epsilon": self.epsilon,
            "r": self.r,
            "base_point": self.base_point,
            "target_dim": self.target_dim,
            "window": [h.j_lo, h.j_hi],
            "cover_kind": h.cover_kind,
            "achieved_c": h.global_c,
            "color_count": h.global_K,
            "tail_tol": self.tail_tol,
            "tail_bound": self.tail_bound,
            "certified_lip_bound": self.certified_lip_bound,
            "values": self.values.tolist(),
        }

    def to_csv(self) -> str:
        head = ["point"] + [f"f{k}" for k in range(self.target_dim)]
        rows = [",".join(head)]
        for i, row in enumerate(self.values):
            rows.append(",".join([str(i)] + [repr(float(v)) for v in row]))
        return "\r\n".join(rows) + "\r\n"


def build_folding_map(hierarchy: CoverHierarchy, epsilon: float | None = None,
                      base_point: int = 0, tail_tol: float | None = None) -> FoldingMap:
    """Sum the per-scale fields over the hierarchy window, ascending in j."""
    m = hierarchy.space
    epsilon = hierarchy.epsilon if epsilon is None else epsilon
    tail_tol = hierarchy.tail_tol if tail_tol is None else tail_tol
    if not 0 < epsilon <= 1:
        raise ParameterError("epsilon must lie in (0, 1]")
    if m.n and not 0 <= base_point < m.n:
        raise ParameterError(f"base point {base_point} outside the space")
    r = hierarchy.r
    K = hierarchy.global_K
    dim = K - 1
    values = np.zeros((m.n, dim))
    tail = 0.0
    if hierarchy.covers:
        tail = tail_bound(K, r, epsilon, hierarchy.j_lo)
        if not tail < tail_tol * m.min_positive_distance**epsilon:
            raise ConfigurationError(
                f"truncation tail {tail:.3g} exceeds tolerance; widen the scale window"
            )
        log_r = math.log(r)
        for j in hierarchy.window:
            weight = math.exp(j * epsilon * log_r)
            P = phi_table(hierarchy, j, dim)
            values += weight * (P - P[base_point])
    values.setflags(write=False)
    return FoldingMap(hierarchy, epsilon, r, base_point, values, tail_tol, tail,
                      certified_lip_bound(K, r, epsilon))


@dataclass
class CaptureReport:
    tuples_checked: int
    hypotheses_met: int
    violations: list[tuple[int, int, int, int]]

    @property
    def ok(self) -> bool:
        return not self.violations


def color_capture_sweep(fmap: FoldingMap, c: float | None = None) -> CaptureReport:
    """Exhaustive check of the colour-capture property.

    For every (x, y, j0, k) with k >= 1 such that ``d(x,y) <= 2c r^j0``,
    ``r^(j0 eps) > 2^eps |f(x)-f(y)|`` and the colour-k bumps at x sum to 1,
    y must lie in a colour-k member at scale j0.  ``c`` defaults to the
    constant the scale ratio was chosen for, else the achieved one.
    """
    h = fmap.hierarchy
    m = h.space
    c = c if c is not None else (h.design_c or h.global_c)
    D = np.asarray(m.dist)
    F = fmap.values
    img = np.sqrt(((F[:, None, :] - F[None, :, :]) ** 2).sum(axis=-1))
    eps, r = fmap.epsilon, fmap.r
    checked = met = 0
    violations = []
    for j0 in h.window:
        cover = h.covers[j0]
        P = phi_table(h, j0)
        near = (D <= 2 * c * r**j0) & (math.exp(j0 * eps * math.log(r)) > 2**eps * img)
        M = cover.membership(m.n)
        for k in range(1, h.global_K):
            checked += m.n * m.n
            full = P[:, k - 1] == 1.0
            hyp = near & full[:, None]
            covered = M[cover.colors == k].any(axis=0)
            met += int(hyp.sum())
            for x, y in zip(*np.nonzero(hyp & ~covered[None, :])):
                violations.append((int(x), int(y), j0, k))
    return CaptureReport(checked, met, violations)


def full_bump_failures(hierarchy: CoverHierarchy) -> list[tuple[int, int]]:
    """(j, x) pairs where no member at scale j has a bump equal to 1 at x."""
    m = hierarchy.space
    fails = []
    for j in hierarchy.window:
        cover = hierarchy.covers[j]
        best = np.zeros(m.n)
        for member in cover.members:
            best[member] = np.maximum(best[member], member_bumps(m, member, hierarchy.r, j))
        fails += [(j, int(x)) for x in np.flatnonzero(best < 1.0)]
    return fails


@dataclass(frozen=True, eq=False)
class LoadedMap:
    """Point values read back from a map file, with the parameters that produced them."""

    values: np.ndarray
    meta: dict

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def target_dim(self) -> int:
        return self.values.shape[1]


def map_from_dict(doc: dict) -> LoadedMap:
    if doc.get("format") != "snowfold.map":
        raise ParameterError("not a snowfold.map document")
    n = len(doc["values"])
    values = np.asarray(doc["values"], dtype=np.float64).reshape(n, doc["target_dim"])
    return LoadedMap(values, {k: v for k, v in doc.items() if k != "values"})
