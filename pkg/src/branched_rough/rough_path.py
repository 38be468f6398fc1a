"""Branched rough paths sampled on a time grid.

Paths are stored as absolute group elements ``X_t``; increments are
``X_s^{-1} X_t`` so Chen's identity holds by construction.  All suprema over
partitions (p-variation, control, ``d_p``) are taken over sub-partitions of
the sample grid and computed exactly there by dynamic programming.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from math import floor
from typing import Callable, Mapping

import numpy as np

from .character_group import Character, GradedBasis, basis
from .forest_algebra import LabelledTree, leaf

TIME_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BranchedRoughPath:
    times: np.ndarray
    values: np.ndarray  # (N, n_trees) absolute positions X_t
    p: float
    d: int
    p_floor: int = field(init=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("a path needs at least two sample times")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "p_floor", int(floor(self.p)))
        if self.values.shape != (len(times), self.basis.n_trees):
            raise ValueError(f"values have shape {self.values.shape}, expected {(len(times), self.basis.n_trees)}")

    @property
    def basis(self) -> GradedBasis:
        return basis(self.d, int(floor(self.p)))

    def __len__(self) -> int:
        return len(self.times)

    def index(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t - TIME_TOL))
        if k >= len(self.times) or abs(self.times[k] - t) > TIME_TOL:
            raise ValueError(f"time {t} is not on the sample grid")
        return k

    def at(self, t: float) -> Character:
        return Character(self.d, self.p_floor, self.values[self.index(t)].copy())

    def level1(self) -> np.ndarray:
        """Projection of ``X_t`` to its degree-one components, shape ``(N, d)``."""
        return self.values[:, : self.d]

    def increments(self, i, j) -> np.ndarray:
        """Tree values of ``X_{t_i}^{-1} X_{t_j}`` for index arrays ``i``, ``j``."""
        b = self.basis
        return b.product(b.inverse(self.values[i]), self.values[j])

    def increment(self, s: float, t: float) -> Character:
        i, j = self.index(s), self.index(t)
        if j < i:
            raise ValueError("increment needs s <= t")
        return Character(self.d, self.p_floor, self.increments(np.array([i]), np.array([j]))[0])

    def restrict(self, i0: int, i1: int, stride: int = 1) -> "BranchedRoughPath":
        """Sub-path on grid indices ``i0, i0+stride, ..., i1`` (``i1`` always kept)."""
        idx = partition_indices(i0, i1, stride)
        return BranchedRoughPath(self.times[idx], self.values[idx], self.p, self.d)

    def dilate(self, lam: float) -> "BranchedRoughPath":
        return BranchedRoughPath(self.times, self.basis.dilate(self.values, lam), self.p, self.d)

    def p_variation(self, s: float | None = None, t: float | None = None, max_points: int | None = None) -> float:
        return p_variation(self, s, t, max_points)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "p_floor": self.p_floor,
            "times": [float(t) for t in self.times],
            "values": [Character(self.d, self.p_floor, v).to_json() for v in self.values],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BranchedRoughPath":
        vals = np.array([Character.from_json(v).values.astype(float) for v in obj["values"]])
        return cls(np.array(obj["times"]), vals, float(obj["p"]), int(obj["d"]))


def partition_indices(i0: int, i1: int, stride: int) -> np.ndarray:
    idx = list(range(i0, i1, stride))
    idx.append(i1)
    return np.array(idx)


# ---------------------------------------------------------------------------
# lifts


def _tree_label_counts(b: GradedBasis) -> tuple[np.ndarray, np.ndarray]:
    return _label_counts(b.d, b.n)


@lru_cache(maxsize=None)
def _label_counts(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    b = basis(d, n)
    counts = np.zeros((b.n_trees, b.d), dtype=int)
    fact = np.zeros(b.n_trees)
    for k, t in enumerate(b.trees):
        _count_labels(t, counts[k])
        fact[k] = tree_factorial(t)
    return counts, fact


def _count_labels(t: LabelledTree, out: np.ndarray):
    out[t.label - 1] += 1
    for c in t.children:
        _count_labels(c, out)


def tree_factorial(t: LabelledTree) -> int:
    """Product over vertices of the size of the subtree rooted there."""
    out = t.degree
    for c in t.children:
        out *= tree_factorial(c)
    return out


def linear_signature(b: GradedBasis, v: np.ndarray) -> np.ndarray:
    """Tree values of the increment of a straight segment with displacement ``v``.

    ``(S, tau) = prod_vertices v_label / tau!`` with ``tau!`` the tree factorial.
    """
    counts, fact = _tree_label_counts(b)
    v = np.asarray(v, dtype=float)
    return np.prod(v[..., None, :] ** counts, axis=-1) / fact


def chen_accumulate(b: GradedBasis, x0: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Absolute values ``X_{k+1} = X_k S_k`` for all k, vectorised degree by degree."""
    n_steps = steps.shape[0]
    out = np.zeros((n_steps + 1, b.n_trees))
    out[0] = x0
    target, left, right, mult = b.tree_coproduct_table
    for deg in range(1, b.n + 1):
        ks = np.nonzero(b.tree_degree == deg)[0]
        # forest values of X_k for lower degrees are already final
        ex = b.ext_values(out[:-1])
        es = b.ext_values(steps)
        for k in ks:
            inc = np.zeros(n_steps)
            for col in np.nonzero(target == k)[0]:
                l, r, m = left[col], right[col], mult[col]
                if r == 0:
                    continue  # the (X_k, tau) term itself
                inc += m * ex[:, l] * es[:, r]
            out[1:, k] = x0[k] + np.cumsum(inc)
    return out


def _start_point(b: GradedBasis, x0: np.ndarray) -> np.ndarray:
    out = np.zeros(b.n_trees)
    out[: b.d] = x0
    return out


def canonical_lift(times, points, p_floor: int | None = None, p: float | None = None) -> BranchedRoughPath:
    """Lift a sampled path through its piecewise-linear interpolation.

    Tree components of increments are exact iterated integrals over each
    linear segment, composed with Chen's identity.  ``X_0`` carries the start
    point in degree one and zeros above, so ``level1()`` returns the samples.
    """
    times = np.asarray(times, dtype=float)
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if len(times) != len(points) or len(times) < 2:
        raise ValueError("need at least two samples with matching times and points")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if p is None:
        if p_floor is None:
            raise ValueError("give p_floor or p")
        p = float(p_floor)
    if p_floor is None:
        p_floor = int(floor(p))
    if int(floor(p)) != p_floor:
        raise ValueError(f"floor(p)={floor(p)} does not match p_floor={p_floor}")
    d = points.shape[1]
    b = basis(d, p_floor)
    steps = linear_signature(b, np.diff(points, axis=0))
    vals = chen_accumulate(b, _start_point(b, points[0]), steps)
    return BranchedRoughPath(times, vals, p, d)


def ito_like_lift(times, points, perturbation: Mapping[tuple[int, int], object], p: float = 2.0) -> BranchedRoughPath:
    """Canonical lift with ``c_ij(t)`` added to the ``[.i]_j`` components of ``X_t``.

    ``perturbation`` maps ``(i, j)`` to a callable of time or an array over
    the grid; each path must vanish at the first sample.  The result is a
    non-geometric branched rough path (e.g. ``c_11(t) = -t/2`` turns the
    Stratonovich lift of ``x_t = t`` into an Ito-type one).
    """
    if int(floor(p)) != 2:
        raise ValueError("the Ito-type lift is defined for p_floor = 2 only")
    X = canonical_lift(times, points, p=p)
    b = X.basis
    vals = X.values.copy()
    for (i, j), c in perturbation.items():
        if not (1 <= i <= X.d and 1 <= j <= X.d):
            raise ValueError(f"perturbation index {(i, j)} outside 1..{X.d}")
        cv = np.asarray(c(X.times) if callable(c) else c, dtype=float)
        if cv.shape != X.times.shape:
            raise ValueError("perturbation path must have one value per sample")
        if abs(cv[0]) > 1e-12:
            raise ValueError("perturbation paths must start at 0")
        vals[:, b.tree_index[LabelledTree(j, (leaf(i),))]] += cv
    return BranchedRoughPath(X.times, vals, p, X.d)


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``t,x1,...,xd`` samples; raises ``ValueError`` naming the offending row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty CSV file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t" or len(header) < 2 or any(h != f"x{k}" for k, h in enumerate(header[1:], 1)):
            raise ValueError(f"CSV header must be 't,x1,...,xd', got {','.join(header)!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise ValueError(f"row {lineno}: non-numeric field in {row!r}") from None
    if len(rows) < 2:
        raise ValueError("need at least two samples")
    arr = np.array(rows)
    if np.any(np.diff(arr[:, 0]) <= 0):
        bad = int(np.nonzero(np.diff(arr[:, 0]) <= 0)[0][0]) + 3
        raise ValueError(f"row {bad}: times must be strictly increasing")
    return arr[:, 0], arr[:, 1:]


# ---------------------------------------------------------------------------
# variation


def _dp_sup(cost_from: Callable[[int], np.ndarray], m: int) -> np.ndarray:
    """Max over partitions of ``0..m-1`` of summed costs.

    ``cost_from(j)`` returns the costs of the intervals ``(i, j)`` for all
    ``i < j`` with shape ``(j, ...)``.  Returns the optimum for the whole range.
    """
    best = None
    for j in range(1, m):
        c = cost_from(j)
        if best is None:
            best = np.zeros((m,) + c.shape[1:])
        best[j] = np.max(best[:j] + c, axis=0)
    return best[m - 1]


def _grid_range(X: BranchedRoughPath, s, t, max_points) -> np.ndarray:
    i0 = 0 if s is None else X.index(s)
    i1 = len(X) - 1 if t is None else X.index(t)
    if i1 <= i0:
        raise ValueError("need s < t")
    stride = 1
    if max_points is not None and i1 - i0 + 1 > max_points:
        stride = int(np.ceil((i1 - i0) / (max_points - 1)))
    return partition_indices(i0, i1, stride)


def p_variation(X: BranchedRoughPath, s: float | None = None, t: float | None = None, max_points: int | None = None) -> float:
    """``sup_D (sum ||X_{t_k, t_k+1}||^p)^(1/p)`` over sub-partitions of the grid on ``[s, t]``.

    ``max_points`` thins the grid first (uniform stride) to bound the O(m^2) cost.
    """
    idx = _grid_range(X, s, t, max_points)
    b = X.basis
    vals = X.values[idx]
    inv = b.inverse(vals)

    def cost(j):
        inc = b.product(inv[:j], np.broadcast_to(vals[j], (j, b.n_trees)))
        return b.norm(inc) ** X.p

    return float(_dp_sup(cost, len(idx)) ** (1.0 / X.p))


class ControlFn:
    """Table ``omega(t_i, t_j) = ||X||_{p-var,[t_i,t_j]}^p`` over all grid pairs."""

    def __init__(self, X: BranchedRoughPath):
        self.X = X
        m = len(X)
        b = X.basis
        inv = b.inverse(X.values)
        table = np.zeros((m, m))
        # norms of all increments, then a DP per starting point
        norms = np.zeros((m, m))
        for j in range(1, m):
            inc = b.product(inv[:j], np.broadcast_to(X.values[j], (j, b.n_trees)))
            norms[:j, j] = b.norm(inc) ** X.p
        for i in range(m):
            best = np.zeros(m)
            for j in range(i + 1, m):
                best[j] = np.max(best[i:j] + norms[i:j, j])
            table[i] = best
        self.table = table

    def __call__(self, s: float, t: float) -> float:
        return float(self.table[self.X.index(s), self.X.index(t)])


def dp_metric(X1: BranchedRoughPath, X2: BranchedRoughPath, max_points: int | None = None) -> float:
    """Rough path distance: start-point gap plus the worst per-forest inhomogeneous variation."""
    if X1.d != X2.d or X1.p != X2.p or len(X1) != len(X2) or np.max(np.abs(X1.times - X2.times)) > TIME_TOL:
        raise ValueError("d_p needs paths on the same grid with the same d and p")
    idx = _grid_range(X1, None, None, max_points)
    b = X1.basis
    v1, v2 = X1.values[idx], X2.values[idx]
    inv1, inv2 = b.inverse(v1), b.inverse(v2)
    expo = X1.p / b.forest_degree

    def cost(j):
        f1 = b.forest_values(b.product(inv1[:j], np.broadcast_to(v1[j], (j, b.n_trees))))
        f2 = b.forest_values(b.product(inv2[:j], np.broadcast_to(v2[j], (j, b.n_trees))))
        return np.abs(f1 - f2) ** expo

    per_forest = _dp_sup(cost, len(idx)) ** (1.0 / X1.p)
    start = float(np.linalg.norm(X1.values[0, : X1.d] - X2.values[0, : X2.d]))
    return start + float(np.max(per_forest))
