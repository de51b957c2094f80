"""Discrete optimal transport on weighted point clouds.

Exact Monge-Kantorovich distances (assignment fast path for equal-weight
clouds, HiGHS linear program otherwise), a log-domain Sinkhorn with
feasibility rounding (so its value is a certified upper bound), Kantorovich
dual certificates, and the subsample estimator used on large empirical
measures.  Ground cost is |x-y|^p with the Euclidean norm on the concatenated
phase coordinates; reported distances are p-th roots of the plan cost.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

#: Largest support allowed in the exact solver; desk-scale guard, not a limit
#: of the algorithm.
SUPPORT_CAP = 2048


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud on R^k with weights summing to one."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or w.ndim != 1 or pts.shape[0] != w.shape[0]:
            raise ValueError("points must be (m, k) with matching weights (m,)")
        if pts.shape[0] == 0:
            raise ValueError("empty support")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("points and weights must be finite")
        if np.any(w < -1e-15):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum():.16g}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", np.maximum(w, 0.0))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]

    @classmethod
    def equal_weights(cls, points) -> "DiscreteMeasure":
        points = np.asarray(points, dtype=float)
        m = points.shape[0]
        return cls(points, np.full(m, 1.0 / m))

    def has_equal_weights(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.weights - 1.0 / self.size) <= tol))


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling as (source, target, mass) triples plus its cost."""

    source_index: np.ndarray
    target_index: np.ndarray
    mass: np.ndarray
    cost_value: float
    exponent: float

    def marginals(self, m: int, n: int):
        row = np.bincount(self.source_index, weights=self.mass, minlength=m)
        col = np.bincount(self.target_index, weights=self.mass, minlength=n)
        return row, col

    def max_marginal_error(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        row, col = self.marginals(mu.size, nu.size)
        return float(
            max(np.max(np.abs(row - mu.weights)), np.max(np.abs(col - nu.weights)))
        )


class SinkhornResult(NamedTuple):
    dist: float
    plan: TransportPlan
    converged: bool
    marginal_gap: float
    iterations: int


def _cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> np.ndarray:
    if mu.k != nu.k:
        raise ValueError("measures live on different-dimensional spaces")
    return cdist(mu.points, nu.points) ** p


def _solve_transport_lp(C: np.ndarray, w: np.ndarray, v: np.ndarray):
    """min <C, gamma> over couplings, via HiGHS.

    The m+n marginal equalities are linearly dependent (both blocks sum to
    total mass); HiGHS mislabels the full system as infeasible on some
    instances, so the last column constraint is dropped and its dual pinned
    to zero.
    """
    m, n = C.shape
    A = sparse.vstack(
        [
            sparse.kron(sparse.eye(m, format="csr"), np.ones((1, n))),
            sparse.kron(np.ones((1, m)), sparse.eye(n, format="csr")),
        ]
    ).tocsc()[:-1]
    b = np.concatenate([w, v])[:-1]
    res = linprog(C.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP did not solve: {res.message}")
    gamma = res.x.reshape(m, n)
    y = np.asarray(res.eqlin.marginals, dtype=float)
    a = y[:m]
    b_dual = np.concatenate([y[m:], [0.0]])
    return float(res.fun), gamma, a, b_dual


def wasserstein_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0):
    """Exact MK distance and optimal plan; returns (dist, plan), dist^p = cost.

    Equal-size equal-weight inputs are solved as an assignment problem
    (deterministic; cost ties resolve to the solver's fixed pivot order),
    everything else as the transportation LP.
    """
    if p < 1:
        raise ValueError("exponent p must be >= 1")
    if abs(float(mu.weights.sum()) - float(nu.weights.sum())) > 1e-12:
        raise ValueError("weight-sum mismatch between measures")
    if mu.size > SUPPORT_CAP or nu.size > SUPPORT_CAP:
        raise ValueError(f"support exceeds cap {SUPPORT_CAP}")
    C = _cost_matrix(mu, nu, p)
    if mu.size == nu.size and mu.has_equal_weights() and nu.has_equal_weights():
        row, col = linear_sum_assignment(C)
        mass = np.full(mu.size, 1.0 / mu.size)
        cost = float(C[row, col] @ mass)
        plan = TransportPlan(
            np.asarray(row, dtype=np.int64),
            np.asarray(col, dtype=np.int64),
            mass,
            cost,
            float(p),
        )
    else:
        cost, gamma, _, _ = _solve_transport_lp(C, mu.weights, nu.weights)
        src, tgt = np.nonzero(gamma > 1e-15)
        plan = TransportPlan(
            src.astype(np.int64),
            tgt.astype(np.int64),
            gamma[src, tgt],
            float(cost),
            float(p),
        )
    return max(cost, 0.0) ** (1.0 / p), plan


def dual_potentials(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float = 2.0):
    """Optimal Kantorovich potentials (a, b) with a_i + b_j <= |x_i - y_j|^p.

    Solves the transportation LP even when the assignment fast path applies,
    because the duals come from the LP solver.
    """
    C = _cost_matrix(mu, nu, p)
    _, _, a, b = _solve_transport_lp(C, mu.weights, nu.weights)
    return a, b


def kantorovich_gap(mu, nu, p, plan: TransportPlan, a, b) -> float:
    """Primal cost of `plan` minus the dual value of (a, b).

    The pair must satisfy a(x) + b(y) <= |x-y|^p on all support pairs (checked
    with 1e-9 slack); a gap <= 1e-9 certifies optimality of the plan.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (mu.size,) or b.shape != (nu.size,):
        raise ValueError("potentials must be defined on the supports")
    C = _cost_matrix(mu, nu, p)
    if float(np.min(C - a[:, None] - b[None, :])) < -1e-9:
        raise ValueError("infeasible dual pair: a(x) + b(y) > |x-y|^p somewhere")
    primal = float(np.sum(plan.mass * C[plan.source_index, plan.target_index]))
    dual = float(a @ mu.weights + b @ nu.weights)
    return max(primal - dual, 0.0)


def _round_to_feasible(pi: np.ndarray, w: np.ndarray, v: np.ndarray) -> np.ndarray:
    # Altschuler-Niles-Weed-Rigollet rounding: scale rows then columns down to
    # their targets, then patch the remaining deficit with a rank-one plan.
    r = pi.sum(axis=1)
    pi = pi * np.minimum(1.0, w / np.maximum(r, 1e-300))[:, None]
    c = pi.sum(axis=0)
    pi = pi * np.minimum(1.0, v / np.maximum(c, 1e-300))[None, :]
    err_r = np.maximum(w - pi.sum(axis=1), 0.0)
    err_c = np.maximum(v - pi.sum(axis=0), 0.0)
    total = err_r.sum()
    if total > 1e-300:
        pi = pi + np.outer(err_r, err_c) / err_c.sum()
    return pi


def wasserstein_sinkhorn(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: float = 2.0,
    reg: float = 1e-2,
    max_iter: int = 20000,
    tol: float = 1e-9,
) -> SinkhornResult:
    """Entropic OT in the log domain, rounded to an exactly feasible plan.

    Because the returned plan is feasible, its cost upper-bounds the true
    optimum regardless of reg; `marginal_gap` is the L1 marginal violation
    before rounding, and non-convergence is reported through `converged`
    rather than raised.
    """
    if reg <= 0:
        raise ValueError("reg must be positive")
    if p < 1:
        raise ValueError("exponent p must be >= 1")
    C = _cost_matrix(mu, nu, p)
    logw = np.log(np.maximum(mu.weights, 1e-300))
    logv = np.log(np.maximum(nu.weights, 1e-300))
    f = np.zeros(mu.size)
    g = np.zeros(nu.size)
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        f = -reg * logsumexp((g[None, :] - C) / reg + logv[None, :], axis=1)
        g = -reg * logsumexp((f[:, None] - C) / reg + logw[:, None], axis=0)
        if it % 10 == 0 or it == max_iter:
            pi = np.exp((f[:, None] + g[None, :] - C) / reg + logw[:, None] + logv[None, :])
            gap = float(
                np.abs(pi.sum(axis=1) - mu.weights).sum()
                + np.abs(pi.sum(axis=0) - nu.weights).sum()
            )
            if gap <= tol:
                break
    pi = np.exp((f[:, None] + g[None, :] - C) / reg + logw[:, None] + logv[None, :])
    pi = _round_to_feasible(pi, mu.weights, nu.weights)
    cost = float(np.sum(pi * C))
    src, tgt = np.nonzero(pi > 1e-15)
    plan = TransportPlan(
        src.astype(np.int64), tgt.astype(np.int64), pi[src, tgt], cost, float(p)
    )
    return SinkhornResult(max(cost, 0.0) ** (1.0 / p), plan, gap <= tol, gap, it)


def subsample_distance(
    cloud_a: DiscreteMeasure,
    cloud_b: DiscreteMeasure,
    p: float,
    subsample_size: int,
    repeats: int,
    seed: int,
):
    """Mean exact distance over equal-weight subsample pairs, with stderr.

    The estimator is biased (a same-law pair does not give zero); callers are
    expected to run the same-law baseline and report it, not subtract it
    silently.  Repeats use independent child streams of `seed`, so the result
    does not depend on execution order.
    """
    if not (cloud_a.has_equal_weights() and cloud_b.has_equal_weights()):
        raise ValueError("subsample estimator requires equal-weight clouds")
    m = int(subsample_size)
    if m < 1 or m > min(cloud_a.size, cloud_b.size):
        raise ValueError("subsample size out of range")
    vals = np.empty(repeats)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(repeats)):
        rng = np.random.default_rng(child)
        ia = rng.choice(cloud_a.size, size=m, replace=False)
        ib = rng.choice(cloud_b.size, size=m, replace=False)
        d, _ = wasserstein_exact(
            DiscreteMeasure.equal_weights(cloud_a.points[ia]),
            DiscreteMeasure.equal_weights(cloud_b.points[ib]),
            p,
        )
        vals[i] = d
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(repeats)) if repeats > 1 else 0.0
    return mean, stderr


def write_measure_csv(measure: DiscreteMeasure, path, position_cols: int | None = None):
    """Write as CSV with header weight,x1,..,xP,xi1,..,xiQ (phase layout)."""
    k = measure.k
    if position_cols is None:
        position_cols = k
    if not 0 <= position_cols <= k:
        raise ValueError("position_cols out of range")
    header = (
        ["weight"]
        + [f"x{i + 1}" for i in range(position_cols)]
        + [f"xi{i + 1}" for i in range(k - position_cols)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for w, row in zip(measure.weights, measure.points):
            writer.writerow([f"{w:.17g}"] + [f"{c:.17g}" for c in row])


def read_measure_csv(path):
    """Inverse of write_measure_csv; returns (measure, position_cols)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.asarray([[float(c) for c in row] for row in reader])
    if header[0] != "weight":
        raise ValueError("not a measure CSV: first column must be 'weight'")
    position_cols = sum(1 for name in header[1:] if name.startswith("x") and not name.startswith("xi"))
    return DiscreteMeasure(rows[:, 1:], rows[:, 0]), position_cols


def write_plan_csv(plan: TransportPlan, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target", "mass"])
        for i, j, m in zip(plan.source_index, plan.target_index, plan.mass):
            writer.writerow([int(i), int(j), f"{m:.17g}"])
