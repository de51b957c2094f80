"""Classical particle dynamics for the mean-field comparison experiments.

Implements the N-body Newton flow with force -(1/N) sum_l grad V(x_k - x_l),
the self-consistent Vlasov particle method (mean-field characteristics over a
reference cloud), the coupled product flow whose first marginal follows the
mean-field dynamics and second marginal the N-body dynamics, and the
functionals measured on them: the p-Dobrushin coupling functional and phase
moments.  All integrators are velocity Verlet with the force field frozen
within each step.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .potentials import Potential
from .transport import DiscreteMeasure

Array = np.ndarray


@dataclass(frozen=True)
class PhaseState:
    """One system of N particles: positions X (N, d), momenta Xi (N, d)."""

    positions: Array
    momenta: Array
    time: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float)
        xi = np.asarray(self.momenta, dtype=float)
        if x.ndim != 2 or x.shape != xi.shape or x.shape[0] < 1:
            raise ValueError("positions and momenta must both be (N, d), N >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ValueError("phase state entries must be finite")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "momenta", xi)


@dataclass(frozen=True)
class VlasovCloud:
    """Equal-weight particle approximation of a phase-space density f(t).

    Points live on R^{2d}: the first d columns are positions, the last d
    momenta.
    """

    points: DiscreteMeasure
    time: float = 0.0

    def __post_init__(self):
        if self.points.k % 2 != 0:
            raise ValueError("phase cloud must have an even number of columns")
        if not self.points.has_equal_weights():
            raise ValueError("Vlasov cloud must carry equal weights")

    @property
    def d(self) -> int:
        return self.points.k // 2

    @property
    def x(self) -> Array:
        return self.points.points[:, : self.d]

    @property
    def xi(self) -> Array:
        return self.points.points[:, self.d :]

    @property
    def size(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class CoupledEnsemble:
    """Monte-Carlo sample of the coupled mean-field/N-body flow.

    Each of the M sample pairs carries a mean-field system (X, Xi), driven
    slot-by-slot by the reference cloud, and an N-body system (Y, H) evolving
    under its own pairwise forces.
    """

    mean_field_side: Sequence[PhaseState]
    nbody_side: Sequence[PhaseState]
    reference_cloud: DiscreteMeasure
    rng_seed: int

    def __post_init__(self):
        mf, nb = list(self.mean_field_side), list(self.nbody_side)
        if len(mf) == 0 or len(mf) != len(nb):
            raise ValueError("sides must be nonempty and of equal length")
        shape = mf[0].positions.shape
        for s in mf + nb:
            if s.positions.shape != shape:
                raise ValueError("all samples must share the same (N, d)")
        object.__setattr__(self, "mean_field_side", mf)
        object.__setattr__(self, "nbody_side", nb)

    @property
    def n_samples(self) -> int:
        return len(self.mean_field_side)

    @property
    def n_particles(self) -> int:
        return self.mean_field_side[0].positions.shape[0]

    @property
    def d(self) -> int:
        return self.mean_field_side[0].positions.shape[1]

    @property
    def time(self) -> float:
        return self.mean_field_side[0].time

    def reference_as_cloud(self) -> VlasovCloud:
        return VlasovCloud(self.reference_cloud, self.time)


# ---------------------------------------------------------------------------
# forces


def nbody_force(V: Potential, X) -> Array:
    """F_k = -(1/N) sum_l grad V(x_k - x_l); the l = k term vanishes by evenness."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be (N, d)")
    diff = X[:, None, :] - X[None, :, :]
    return -V.grad(diff).mean(axis=1)


def _nbody_force_batch(V: Potential, X: Array) -> Array:
    """Same force for a batch (M, N, d), chunked to bound memory."""
    M, N, _ = X.shape
    out = np.empty_like(X)
    chunk = max(1, int(8_000_000 // max(N * N, 1)))
    for s in range(0, M, chunk):
        block = X[s : s + chunk]
        diff = block[:, :, None, :] - block[:, None, :, :]
        out[s : s + chunk] = -V.grad(diff).mean(axis=2)
    return out


def mean_field_force(V: Potential, x, cloud: VlasovCloud) -> Array:
    """-sum_m w_m grad V(x - y_m) against the cloud's spatial coordinates.

    Accepts a single point (d,) or a batch (..., d) of query points; this is
    the exact O(size) summation.
    """
    x = np.asarray(x, dtype=float)
    y = cloud.x
    w = cloud.points.weights
    diff = x[..., None, :] - y
    return -np.sum(w[..., :, None] * V.grad(diff), axis=-2)


def _exact_field(V: Potential, y: Array, w: Array) -> Callable[[Array], Array]:
    def field(q: Array) -> Array:
        q2 = q.reshape(-1, q.shape[-1])
        out = np.empty_like(q2)
        chunk = max(1, int(4_000_000 // max(len(y), 1)))
        for s in range(0, len(q2), chunk):
            diff = q2[s : s + chunk, None, :] - y[None, :, :]
            out[s : s + chunk] = -np.sum(w[:, None] * V.grad(diff), axis=1)
        return out.reshape(q.shape)

    return field


def _grid_field_1d(
    V: Potential, y: Array, w: Array, n_grid: int = 8192
) -> Callable[[Array], Array]:
    """Tabulated 1-D mean-field force: CIC deposit + discrete convolution.

    Error is O(h^2) in the table spacing (~1e-6 at desk scale), far below the
    Monte-Carlo noise of the experiments that use it.  Queries outside the
    table fall back to the exact sum.
    """
    y1 = y[:, 0]
    lo, hi = float(y1.min()), float(y1.max())
    pad = 0.05 * (hi - lo) + 1.0
    lo, hi = lo - pad, hi + pad
    grid = np.linspace(lo, hi, n_grid)
    h = grid[1] - grid[0]

    # cloud-in-cell deposit of the weights onto the grid
    pos = (y1 - lo) / h
    idx = np.clip(pos.astype(int), 0, n_grid - 2)
    frac = pos - idx
    dep = np.bincount(idx, weights=w * (1 - frac), minlength=n_grid)
    dep += np.bincount(idx + 1, weights=w * frac, minlength=n_grid)

    offsets = (np.arange(2 * n_grid - 1) - (n_grid - 1)) * h
    kernel = V.grad(offsets[:, None])[:, 0]
    table = -fftconvolve(dep, kernel)[n_grid - 1 : 2 * n_grid - 1]

    exact = _exact_field(V, y, w)

    def field(q: Array) -> Array:
        q1 = q.reshape(-1)
        out = np.interp(q1, grid, table)
        outside = (q1 < lo) | (q1 > hi)
        if np.any(outside):
            out[outside] = exact(q1[outside, None])[:, 0]
        return out.reshape(q.shape)

    return field


def _frozen_field(
    V: Potential, cloud: VlasovCloud, force_method: str = "auto"
) -> Callable[[Array], Array]:
    """Force field generated by the cloud, frozen for one integrator step."""
    if force_method not in ("auto", "exact", "grid"):
        raise ValueError(f"unknown force_method {force_method!r}")
    use_grid = force_method == "grid" or (
        force_method == "auto" and cloud.d == 1 and cloud.size >= 1024
    )
    if use_grid and cloud.d != 1:
        raise ValueError("gridded force field is only available in d = 1")
    y, w = cloud.x, cloud.points.weights
    return _grid_field_1d(V, y, w) if use_grid else _exact_field(V, y, w)


# ---------------------------------------------------------------------------
# integrators


def verlet_step(state: PhaseState, force_field, dt: float) -> PhaseState:
    """One velocity-Verlet step (mass 1).  dt may be negative; the backward
    step undoes the forward one to round-off."""
    if dt == 0:
        raise ValueError("dt must be nonzero")
    f0 = force_field(state.positions)
    xi_half = state.momenta + 0.5 * dt * f0
    x_new = state.positions + dt * xi_half
    xi_new = xi_half + 0.5 * dt * force_field(x_new)
    return PhaseState(x_new, xi_new, state.time + dt)


def _verlet_arrays(x: Array, xi: Array, field, dt: float):
    xi_half = xi + 0.5 * dt * field(x)
    x_new = x + dt * xi_half
    xi_new = xi_half + 0.5 * dt * field(x_new)
    return x_new, xi_new


def vlasov_advance(
    cloud: VlasovCloud,
    V: Potential,
    dt: float,
    n_steps: int,
    force_method: str = "auto",
) -> VlasovCloud:
    """Self-consistent particle method: each step freezes the cloud, builds
    its mean-field force field, and Verlet-advances every particle in it."""
    if dt == 0:
        raise ValueError("dt must be nonzero")
    x, xi = cloud.x.copy(), cloud.xi.copy()
    w = cloud.points.weights
    t = cloud.time
    for _ in range(n_steps):
        field = _frozen_field(
            V, VlasovCloud(DiscreteMeasure(np.hstack([x, xi]), w), t), force_method
        )
        x, xi = _verlet_arrays(x, xi, field, dt)
        t += dt
    return VlasovCloud(DiscreteMeasure(np.hstack([x, xi]), w), t)


def _stack_side(side: Sequence[PhaseState]):
    return (
        np.stack([s.positions for s in side]),
        np.stack([s.momenta for s in side]),
    )


def _unstack_side(X: Array, Xi: Array, t: float):
    return [PhaseState(X[i], Xi[i], t) for i in range(X.shape[0])]


def coupled_advance(
    ens: CoupledEnsemble,
    ref: VlasovCloud,
    V: Potential,
    dt: float,
    force_method: str = "auto",
) -> CoupledEnsemble:
    """One step of the coupled product flow.

    The mean-field side feels the force generated by `ref` at each of its N
    slots independently; the N-body side feels its own pairwise forces; `ref`
    itself advances one Vlasov step in lockstep.  The advanced reference is
    returned inside the new ensemble (`reference_as_cloud()`).
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    if abs(ens.time - ref.time) > abs(dt) / 2:
        raise RuntimeError(
            f"ensemble time {ens.time} and reference time {ref.time} misaligned"
        )
    field = _frozen_field(V, ref, force_method)
    t_new = ens.time + dt

    X, Xi = _stack_side(ens.mean_field_side)
    X, Xi = _verlet_arrays(X, Xi, field, dt)
    mf = _unstack_side(X, Xi, t_new)

    Y, H = _stack_side(ens.nbody_side)
    Y, H = _verlet_arrays(Y, H, lambda pos: _nbody_force_batch(V, pos), dt)
    nb = _unstack_side(Y, H, t_new)

    rx, rxi = _verlet_arrays(ref.x, ref.xi, field, dt)
    ref_meas = DiscreteMeasure(np.hstack([rx, rxi]), ref.points.weights)
    return CoupledEnsemble(mf, nb, ref_meas, ens.rng_seed)


def run_coupled_trajectory(
    ens: CoupledEnsemble,
    ref: VlasovCloud,
    V: Potential,
    dt: float,
    n_steps: int,
    p: float = 2.0,
    record_every: int = 1,
    force_method: str = "auto",
):
    """Advance the coupled flow, recording t |-> D_N^p; returns
    (ensemble, reference, times, dvals)."""
    times = [ens.time]
    dvals = [dobrushin_functional(ens, p)]
    for step in range(1, n_steps + 1):
        ens = coupled_advance(ens, ref, V, dt, force_method)
        ref = ens.reference_as_cloud()
        if step % record_every == 0 or step == n_steps:
            times.append(ens.time)
            dvals.append(dobrushin_functional(ens, p))
    return ens, ref, np.asarray(times), np.asarray(dvals)


# ---------------------------------------------------------------------------
# functionals


def dobrushin_functional(ens: CoupledEnsemble, p: float) -> float:
    """Monte-Carlo value of (1/N) sum_j (|x_j-y_j|^p + |xi_j-eta_j|^p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if len(ens.mean_field_side) == 0:
        raise ValueError("empty ensemble")
    X, Xi = _stack_side(ens.mean_field_side)
    Y, H = _stack_side(ens.nbody_side)
    dx = np.linalg.norm(X - Y, axis=-1)
    dxi = np.linalg.norm(Xi - H, axis=-1)
    return float((dx**p + dxi**p).mean(axis=1).mean())


def marginal_cloud(side: Sequence[PhaseState], n: int) -> DiscreteMeasure:
    """Equal-weight cloud of the first n particles' phase coordinates, one
    point in R^{2dn} per sample, laid out (x_1..x_n, xi_1..xi_n)."""
    if len(side) == 0:
        raise ValueError("empty side")
    N, d = side[0].positions.shape
    if not 1 <= n <= N:
        raise ValueError(f"marginal order {n} out of range 1..{N}")
    pts = np.empty((len(side), 2 * d * n))
    for i, s in enumerate(side):
        pts[i, : d * n] = s.positions[:n].ravel()
        pts[i, d * n :] = s.momenta[:n].ravel()
    return DiscreteMeasure.equal_weights(pts)


def moment_p(cloud: VlasovCloud, p: float) -> float:
    """Weighted sum of |x|^p + |xi|^p over the cloud."""
    if p < 1:
        raise ValueError("p must be >= 1")
    r = np.linalg.norm(cloud.x, axis=1) ** p + np.linalg.norm(cloud.xi, axis=1) ** p
    return float(cloud.points.weights @ r)


def nbody_energy(V: Potential, state: PhaseState) -> float:
    """H_N = (1/2) sum |xi_k|^2 + (1/2N) sum_{k,l} V(x_k - x_l); conserved by
    the isolated N-body flow up to O(dt^2)."""
    X = state.positions
    diff = X[:, None, :] - X[None, :, :]
    return float(
        0.5 * np.sum(state.momenta**2) + np.sum(V.eval(diff)) / (2 * X.shape[0])
    )


# ---------------------------------------------------------------------------
# initial data


def sample_gaussian_cloud(
    m: int,
    d: int,
    seed: int,
    mean_x=0.0,
    std_x=1.0,
    mean_xi=0.0,
    std_xi=1.0,
) -> VlasovCloud:
    rng = np.random.default_rng(seed)
    x = mean_x + std_x * rng.standard_normal((m, d))
    xi = mean_xi + std_xi * rng.standard_normal((m, d))
    return VlasovCloud(DiscreteMeasure.equal_weights(np.hstack([x, xi])), 0.0)


def sample_uniform_cloud(
    m: int, d: int, seed: int, half_width_x=1.0, half_width_xi=1.0
) -> VlasovCloud:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-half_width_x, half_width_x, (m, d))
    xi = rng.uniform(-half_width_xi, half_width_xi, (m, d))
    return VlasovCloud(DiscreteMeasure.equal_weights(np.hstack([x, xi])), 0.0)


def diagonal_ensemble(
    n_samples: int,
    n_particles: int,
    reference: VlasovCloud,
    seed: int,
    sampler: str = "gaussian",
    **params,
) -> CoupledEnsemble:
    """Diagonal initial coupling: both sides start from the same iid draw of
    N particles per sample, so every Dobrushin functional starts at zero."""
    maker = {"gaussian": sample_gaussian_cloud, "uniform-box": sample_uniform_cloud}[
        sampler
    ]
    d = reference.d
    mf = []
    for child in np.random.SeedSequence(seed).spawn(n_samples):
        sub = maker(n_particles, d, child, **params)
        mf.append(PhaseState(sub.x.copy(), sub.xi.copy(), reference.time))
    nb = [replace(s) for s in mf]
    return CoupledEnsemble(mf, nb, reference.points, seed)
