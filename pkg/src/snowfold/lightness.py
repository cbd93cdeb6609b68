"""Empirical Lipschitz and lightness constants of a map on a finite space.

Lightness is probed with the sets ``W = B(p, r) ∩ f(X)`` for image points p
instead of all sets of diameter at most r.  Any W of diameter <= r that
meets the image sits inside one probe set and every probe set has diameter
<= 2r, so the true constant lies in ``[probe / 2, probe]``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import cdist

from . import kernels
from .metric import ParameterError, StructuralError, is_connected

SURROGATE_FACTOR = 2.0


def as_values(f) -> np.ndarray:
    """Point values of a map given as a FoldingMap, LoadedMap or array."""
    values = f.values if hasattr(f, "values") else f
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    return values


def image_dist(f) -> np.ndarray:
    values = as_values(f)
    if values.shape[1] == 0:
        return np.zeros((values.shape[0], values.shape[0]))
    return cdist(values, values)


def lipschitz_constant(f, domain) -> tuple[float, tuple[int, int]]:
    """Exact max of |f(x) - f(y)| / d(x, y) over pairs; the first maximal pair is the witness."""
    n = domain.n
    if n < 2:
        raise ParameterError("Lipschitz constant needs at least two points")
    img = image_dist(f)
    iu = np.triu_indices(n, 1)
    ratios = img[iu] / np.asarray(domain.dist)[iu]
    a = int(np.argmax(ratios))
    return float(ratios[a]), (int(iu[0][a]), int(iu[1][a]))


def probe_radii(domain) -> np.ndarray:
    """Distinct positive pairwise distances together with the midpoints between neighbours."""
    n = domain.n
    d = np.unique(np.asarray(domain.dist)[np.triu_indices(n, 1)])
    d = d[d > 0]
    if d.size == 0:
        return d
    return np.sort(np.concatenate([d, (d[:-1] + d[1:]) / 2]))


@dataclass
class LightWitness:
    constant: float
    radius: float | None = None
    center: int | None = None
    component: list[int] = field(default_factory=list)
    radii_total: int = 0
    radii_scanned: int = 0

    @property
    def true_bounds(self) -> tuple[float, float]:
        """Interval containing the constant over all sets of diameter <= r."""
        return self.constant / SURROGATE_FACTOR, self.constant


def lightness_constant(f, domain, radii=None) -> LightWitness:
    """Max over probe radii r and probe sets W of diam(r-component of f^-1(W)) / r.

    Components and diameters use the domain metric.  Radii are scanned in
    increasing order and the scan stops once ``diam(X) / r`` can no longer
    exceed the running maximum, which leaves the result unchanged.
    """
    n = domain.n
    if n < 1:
        raise ParameterError("empty domain")
    values = as_values(f)
    if values.shape[0] != n:
        raise StructuralError("map and domain disagree on the number of points")
    radii = probe_radii(domain) if radii is None else np.sort(np.asarray(radii, dtype=np.float64))
    if n == 1 or radii.size == 0:
        return LightWitness(0.0, radii_total=int(radii.size))
    # identical image points give identical probe sets
    _, first = np.unique(values, axis=0, return_index=True)
    centers = np.sort(first).astype(np.int64)
    sd = np.ascontiguousarray(domain.dist, dtype=np.float64)
    img = np.ascontiguousarray(image_dist(values))
    best, ri, c, comp, scanned = kernels.light_sweep(sd, img, np.ascontiguousarray(radii), centers, float(sd.max()))
    if ri < 0:
        return LightWitness(0.0, radii_total=int(radii.size), radii_scanned=int(scanned))
    return LightWitness(float(best), float(radii[ri]), int(c), sorted(int(x) for x in comp),
                        int(radii.size), int(scanned))


@dataclass
class LightnessReport:
    lip_constant: float
    lip_witness: tuple[int, int] | None
    light_constant: float
    light_witness: dict
    light_bounds: tuple[float, float]
    surrogate_factor: float
    ceiling: float | None
    passed: bool

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["lip_witness"] = list(self.lip_witness) if self.lip_witness else None
        doc["light_bounds"] = list(self.light_bounds)
        return doc


def lipschitz_light_report(f, domain, ceiling: float | None = None, radii=None) -> LightnessReport:
    if domain.n >= 2:
        lip, pair = lipschitz_constant(f, domain)
    else:
        lip, pair = 0.0, None
    light = lightness_constant(f, domain, radii)
    passed = ceiling is None or (lip <= ceiling and light.constant <= ceiling)
    return LightnessReport(
        lip_constant=lip,
        lip_witness=pair,
        light_constant=light.constant,
        light_witness={
            "radius": light.radius,
            "center": light.center,
            "component": light.component,
            "radii_total": light.radii_total,
            "radii_scanned": light.radii_scanned,
        },
        light_bounds=light.true_bounds,
        surrogate_factor=SURROGATE_FACTOR,
        ceiling=ceiling,
        passed=bool(passed),
    )


def all_connected_sets(m) -> list[np.ndarray]:
    """Every h-connected subset with at least two points (small spaces only)."""
    n = m.n
    if n > 20:
        raise ParameterError("exhaustive enumeration is limited to 20 points")
    adj = mesh_adjacency_bits(m)
    conn, _ = kernels.subset_tables(np.ascontiguousarray(m.dist, dtype=np.float64), adj)
    masks = np.flatnonzero(conn)
    bits = (masks[:, None] >> np.arange(n)) & 1
    return [np.flatnonzero(row) for row in bits if row.sum() >= 2]


def mesh_adjacency_bits(m) -> np.ndarray:
    A = (np.asarray(m.dist) <= m.mesh) & ~np.eye(m.n, dtype=bool)
    return (A.astype(np.int64) << np.arange(m.n, dtype=np.int64)).sum(axis=1).astype(np.int64)


def mesh_paths(m):
    """Shortest paths in the graph of h-steps, weighted by distance: (lengths, predecessors)."""
    D = np.asarray(m.dist)
    W = np.where(D <= m.mesh, D, 0.0)
    return shortest_path(csr_matrix(W), method="D", directed=False, return_predecessors=True)


def path_between(pred: np.ndarray, s: int, t: int) -> list[int]:
    path = [t]
    while path[-1] != s:
        path.append(int(pred[s, path[-1]]))
    return path[::-1]


def sample_connected_sets(m, samples: int = 500, seed: int = 0, exhaustive_limit: int = 12) -> list[np.ndarray]:
    """h-connected sets with >= 2 points.

    Exhaustive when ``n <= exhaustive_limit``; otherwise half shortest
    h-paths between random pairs and half randomly grown blobs.
    """
    n = m.n
    if n < 2:
        return []
    if not is_connected(m):
        raise StructuralError("space is not h-connected")
    if n <= exhaustive_limit:
        return all_connected_sets(m)
    rng = np.random.default_rng(seed)
    _, pred = mesh_paths(m)
    nbrs = [np.flatnonzero(row) for row in (np.asarray(m.dist) <= m.mesh) & ~np.eye(n, dtype=bool)]
    out = []
    for _ in range(samples // 2):
        s, t = rng.choice(n, size=2, replace=False)
        out.append(np.array(sorted(path_between(pred, int(s), int(t)))))
    for _ in range(samples - samples // 2):
        size = int(rng.integers(2, n + 1))
        blob = {int(rng.integers(n))}
        frontier = set(int(v) for v in nbrs[next(iter(blob))])
        while len(blob) < size and frontier:
            v = sorted(frontier)[int(rng.integers(len(frontier)))]
            blob.add(v)
            frontier.discard(v)
            frontier |= set(int(w) for w in nbrs[v]) - blob
        out.append(np.array(sorted(blob)))
    return out


@dataclass
class DiameterProfile:
    min_ratio: float
    max_ratio: float
    samples: int
    degenerate: bool
    argmin: list[int]
    argmax: list[int]

    def to_dict(self) -> dict:
        return asdict(self)


def diameter_preservation_profile(f, domain, samples: int = 500, seed: int = 0,
                                  exhaustive_limit: int = 12) -> DiameterProfile:
    """Range of diam f(K) / diam(K) over sampled h-connected sets K (domain metric)."""
    base = domain.base
    img = image_dist(f)
    D = np.asarray(domain.dist)
    sets = sample_connected_sets(base, samples, seed, exhaustive_limit)
    lo, hi = np.inf, -np.inf
    arg_lo = arg_hi = []
    for K in sets:
        ix = np.ix_(K, K)
        ratio = float(img[ix].max()) / float(D[ix].max())
        if ratio < lo:
            lo, arg_lo = ratio, K.tolist()
        if ratio > hi:
            hi, arg_hi = ratio, K.tolist()
    if not sets:
        lo = hi = 0.0
    return DiameterProfile(float(lo), float(hi), len(sets), bool(hi == 0.0), arg_lo, arg_hi)


def lightness_ceiling_from_profile(a: float, turning: float, epsilon: float = 1.0) -> float:
    """Lightness bound implied by diameter preservation within factor ``a`` on a
    space whose bounded-turning constant (base metric) is ``turning``.

    Joining consecutive points of an s-path by turning-controlled sets gives
    ``diam f(K) <= 2s + 2 a turning^eps s`` under the factor-2 probe family,
    and then ``diam(P) <= a diam f(K)``.
    """
    return SURROGATE_FACTOR * a * (1 + a * turning**epsilon)
