"""Pullback metric ``d_f(x, y) = min diam f(K)`` over h-connected K containing x and y,
the factorisation ``X -> (X, d_f) -> Y`` and empirical distortion envelopes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lightness import as_values, image_dist, mesh_adjacency_bits, mesh_paths, path_between, sample_connected_sets
from .metric import FiniteMetricSpace, ParameterError, StructuralError, is_connected, validate_metric

MAX_EXACT = 16


def mask_to_ids(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


@dataclass(frozen=True, eq=False)
class PullbackMetric:
    """``dist`` is exact in exact mode; in bound mode it is the upper bound and
    ``lower`` holds |f(x) - f(y)|."""

    space: FiniteMetricSpace
    values: np.ndarray
    dist: np.ndarray
    exact: bool
    lower: np.ndarray | None = None
    witness: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def mesh(self) -> float:
        """Largest d_f over an h-step: (X, d_f) is connected at this scale."""
        D = np.asarray(self.space.dist)
        step = (D <= self.space.mesh) & ~np.eye(self.n, dtype=bool)
        return float(self.dist[step].max()) if step.any() else 1.0

    def witness_set(self, x: int, y: int) -> list[int]:
        if self.witness is None:
            raise ParameterError("witness sets exist only in exact mode")
        return mask_to_ids(int(self.witness[x, y]))

    def degenerate_pairs(self) -> list[tuple[int, int]]:
        iu = np.triu_indices(self.n, 1)
        zero = self.dist[iu] == 0
        return [(int(a), int(b)) for a, b in zip(iu[0][zero], iu[1][zero])]

    def as_space(self, label: str = "pullback") -> FiniteMetricSpace:
        if not self.exact:
            raise ParameterError("only exact pullback matrices are metrics")
        return FiniteMetricSpace(self.dist.copy(), self.mesh, label=label)

    def to_dict(self) -> dict:
        doc = {
            "format": "snowfold.pullback",
            "version": 1,
            "mode": "exact" if self.exact else "bounds",
            "dist" if self.exact else "upper": self.dist.tolist(),
        }
        if self.lower is not None:
            doc["lower"] = self.lower.tolist()
        if self.witness is not None:
            n = self.n
            doc["witness"] = [[mask_to_ids(int(self.witness[i, k])) for k in range(n)] for i in range(n)]
        return doc


def _subset_tables(D: np.ndarray, m) -> tuple[np.ndarray, np.ndarray]:
    return kernels.subset_tables(np.ascontiguousarray(D, dtype=np.float64), mesh_adjacency_bits(m))


def pullback_metric(m: FiniteMetricSpace, values, mode: str = "auto") -> PullbackMetric:
    """Exact for n <= 16 (every h-connected set is enumerated as a bitmask);
    otherwise ``[|f(x) - f(y)|, diam f(shortest h-path)]`` bounds.

    Among minimising sets the witness is the one with the smallest bitmask.
    """
    if mode not in ("auto", "exact", "bounds"):
        raise ParameterError(f"unknown pullback mode {mode!r}")
    values = as_values(values)
    n = m.n
    if values.shape[0] != n:
        raise StructuralError("values and space disagree on the number of points")
    if not is_connected(m):
        raise StructuralError("space is not h-connected")
    img = image_dist(values)
    exact = mode == "exact" or (mode == "auto" and n <= MAX_EXACT)
    if exact:
        if n > MAX_EXACT:
            raise ParameterError(f"exact pullback is capped at {MAX_EXACT} points")
        conn, diam = _subset_tables(img, m)
        df, wit = kernels.pair_minimizers(conn, diam, n)
        df.setflags(write=False)
        return PullbackMetric(m, values, df, True, witness=wit)
    _, pred = mesh_paths(m)
    upper = np.zeros((n, n))
    for s in range(n):
        for t in range(s + 1, n):
            path = path_between(pred, s, t)
            upper[s, t] = upper[t, s] = img[np.ix_(path, path)].max()
    return PullbackMetric(m, values, upper, False, lower=img)


@dataclass
class FactorizationReport:
    sets_checked: int = 0
    diameter_mismatches: list = field(default_factory=list)
    lipschitz_violations: list = field(default_factory=list)
    turning_constant: float = 1.0
    turning_slack: float = 0.0
    metric_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.diameter_mismatches or self.lipschitz_violations or self.metric_violations) \
            and self.turning_constant <= 1.0 + 1e-12


def factorization_check(m: FiniteMetricSpace, values, tol: float = 1e-9) -> FactorizationReport:
    """Enumerate every h-connected J and compare diam in d_f with diam f(J);
    check |f(x) - f(y)| <= d_f(x, y) and that each witness set has d_f-diameter d_f(x, y).

    ``turning_slack`` records the d_f-mesh of (X, d_f): witnesses are connected
    at that scale rather than as continua.
    """
    pb = pullback_metric(m, values, mode="exact")
    img = image_dist(pb.values)
    n = m.n
    out = FactorizationReport()
    conn, diam_img = _subset_tables(img, m)
    _, diam_df = _subset_tables(pb.dist, m)
    masks = np.flatnonzero(conn)
    out.sets_checked = int(masks.size)
    bad = np.abs(diam_df[masks] - diam_img[masks]) > tol
    out.diameter_mismatches = [(mask_to_ids(int(k)), float(diam_df[k]), float(diam_img[k])) for k in masks[bad]]
    over = img > pb.dist + tol
    out.lipschitz_violations = [(int(a), int(b)) for a, b in zip(*np.nonzero(np.triu(over, 1)))]
    worst = 1.0
    for x in range(n):
        for y in range(x + 1, n):
            d = pb.dist[x, y]
            if d > 0:
                worst = max(worst, float(diam_df[pb.witness[x, y]]) / d)
    out.turning_constant = worst
    out.turning_slack = pb.mesh if n > 1 else 0.0
    out.metric_violations = validate_metric(pb.dist).violations
    return out


@dataclass
class DistortionProfile:
    """Sorted input ratios, the output ratio of each sample and its running maximum."""

    mode: str
    inputs: np.ndarray
    outputs: np.ndarray
    envelope: np.ndarray
    skipped: int

    def binned(self, bins: int = 32) -> list[tuple[float, float]]:
        """(input, envelope) at the last sample of each log-spaced bin; inputs are realised ratios."""
        if self.inputs.size == 0:
            return []
        lo, hi = self.inputs[0], self.inputs[-1]
        edges = np.geomspace(lo, hi, bins) if lo > 0 and hi > lo else np.array([hi])
        idx = np.unique(np.searchsorted(self.inputs, edges, side="right") - 1)
        return [(float(self.inputs[i]), float(self.envelope[i])) for i in idx if i >= 0]

    def to_dict(self, bins: int = 32) -> dict:
        return {
            "format": "snowfold.profile",
            "mode": self.mode,
            "samples": int(self.inputs.size),
            "skipped": self.skipped,
            "envelope": [list(p) for p in self.binned(bins)],
        }


def _target_dist(target) -> np.ndarray:
    if hasattr(target, "dist"):
        return np.asarray(target.dist)
    return image_dist(target)


def _envelope(mode: str, t: np.ndarray, out: np.ndarray, skipped: int) -> DistortionProfile:
    order = np.argsort(t, kind="stable")
    t, out = t[order], out[order]
    env = np.maximum.accumulate(out) if out.size else out
    return DistortionProfile(mode, t, out, env, skipped)


def distortion_profile(source, target, mode: str = "qs", samples: int = 20000, seed: int = 0) -> DistortionProfile:
    """Empirical control function of the identity ``source -> target``.

    ``qs``: triples (x, a, b) with input d(x,a)/d(x,b) and output the same
    ratio in the target; all triples when there are at most ``samples``.
    ``branched``: intersecting h-connected pairs (E, E') with input
    diam E / diam E' and output diam_t E / diam_t E'.
    Samples whose denominator vanishes are skipped and counted.
    """
    S = np.asarray(source.dist)
    T = _target_dist(target)
    n = S.shape[0]
    if T.shape != S.shape:
        raise StructuralError("source and target disagree on the number of points")
    rng = np.random.default_rng(seed)
    if mode == "qs":
        if n < 3:
            return _envelope(mode, np.zeros(0), np.zeros(0), 0)
        if n * (n - 1) * (n - 2) <= samples:
            x, a, b = np.array([(x, a, b) for x in range(n) for a in range(n) for b in range(n)
                                if x != a and x != b and a != b]).T
        else:
            x = rng.integers(0, n, samples)
            a = (x + rng.integers(1, n, samples)) % n
            b = (x + rng.integers(1, n, samples)) % n
            keep = a != b
            x, a, b = x[keep], a[keep], b[keep]
        den_s, den_t = S[x, b], T[x, b]
        ok = (den_s > 0) & (den_t > 0)
        t = S[x[ok], a[ok]] / den_s[ok]
        out = T[x[ok], a[ok]] / den_t[ok]
        return _envelope(mode, t, out, int((~ok).sum()))
    if mode == "branched":
        base = source.base if hasattr(source, "base") else source
        sets = sample_connected_sets(base, min(samples, 1000), seed)
        if not sets:
            return _envelope(mode, np.zeros(0), np.zeros(0), 0)
        dS = np.array([S[np.ix_(K, K)].max() for K in sets])
        dT = np.array([T[np.ix_(K, K)].max() for K in sets])
        M = np.zeros((len(sets), n))
        for i, K in enumerate(sets):
            M[i, K] = 1.0
        meet = (M @ M.T) > 0
        np.fill_diagonal(meet, False)
        e, f = np.nonzero(meet)
        ok = (dS[f] > 0) & (dT[f] > 0)
        return _envelope(mode, dS[e[ok]] / dS[f[ok]], dT[e[ok]] / dT[f[ok]], int((~ok).sum()))
    raise ParameterError(f"unknown profile mode {mode!r}")
