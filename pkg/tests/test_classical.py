"""Particle dynamics: Verlet oracles, forces, coupled flow, functionals."""
import math
from dataclasses import replace

import numpy as np
import pytest

from mflab.classical import (
    CoupledEnsemble,
    PhaseState,
    VlasovCloud,
    coupled_advance,
    diagonal_ensemble,
    dobrushin_functional,
    marginal_cloud,
    mean_field_force,
    moment_p,
    nbody_energy,
    nbody_force,
    run_coupled_trajectory,
    sample_gaussian_cloud,
    sample_uniform_cloud,
    verlet_step,
    vlasov_advance,
)
from mflab.potentials import make_gaussian_potential

GAUSS = make_gaussian_potential(1.0, 1.0, 1)
FLAT = make_gaussian_potential(0.0, 1.0, 1)


def _harmonic(x):
    return -x


def test_verlet_matches_harmonic_closed_form():
    # x(t) = cos t, xi(t) = -sin t starting from (1, 0); global error O(dt^2)
    dt, n_steps = 1e-3, 1000
    s = PhaseState(np.array([[1.0]]), np.array([[0.0]]), 0.0)
    for _ in range(n_steps):
        s = verlet_step(s, _harmonic, dt)
    t = n_steps * dt
    assert s.time == pytest.approx(t, abs=1e-12)
    assert s.positions[0, 0] == pytest.approx(math.cos(t), abs=5 * dt**2)
    assert s.momenta[0, 0] == pytest.approx(-math.sin(t), abs=5 * dt**2)


def test_verlet_second_order_global_error():
    def run(dt):
        s = PhaseState(np.array([[1.0]]), np.array([[0.0]]), 0.0)
        for _ in range(round(1.0 / dt)):
            s = verlet_step(s, _harmonic, dt)
        return abs(s.positions[0, 0] - math.cos(1.0))

    e1, e2 = run(0.01), run(0.005)
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_verlet_time_reversible():
    rng = np.random.default_rng(0)
    s0 = PhaseState(rng.normal(size=(4, 2)), rng.normal(size=(4, 2)), 0.0)
    field = lambda x: -x + 0.1 * x**2
    s = s0
    for _ in range(50):
        s = verlet_step(s, field, 0.01)
    for _ in range(50):
        s = verlet_step(s, field, -0.01)
    np.testing.assert_allclose(s.positions, s0.positions, atol=1e-12)
    np.testing.assert_allclose(s.momenta, s0.momenta, atol=1e-12)
    assert s.time == pytest.approx(0.0, abs=1e-12)


def test_verlet_energy_drift_law():
    # relative harmonic-energy oscillation peaks at dt^2/4 (so the window must
    # cover a full phase), and is quartered when dt halves
    def drift(dt, t_final):
        s = PhaseState(np.array([[1.0]]), np.array([[0.0]]), 0.0)
        e0 = 0.5 * (s.positions[0, 0] ** 2 + s.momenta[0, 0] ** 2)
        worst = 0.0
        for _ in range(round(t_final / dt)):
            s = verlet_step(s, _harmonic, dt)
            e = 0.5 * (s.positions[0, 0] ** 2 + s.momenta[0, 0] ** 2)
            worst = max(worst, abs(e - e0) / e0)
        return worst

    assert drift(0.01, 4.0) == pytest.approx(0.01**2 / 4, rel=0.01)
    d1, d2 = drift(0.01, 1.0), drift(0.005, 1.0)
    assert d1 / d2 == pytest.approx(4.0, rel=0.2)


def test_verlet_rejects_zero_dt():
    s = PhaseState(np.zeros((1, 1)), np.zeros((1, 1)), 0.0)
    with pytest.raises(ValueError):
        verlet_step(s, _harmonic, 0.0)


def test_nbody_force_two_particle_value():
    # unit Gaussian bump, x = (0, 1): F_1 = -(1/2) grad V(-1) = -(1/2) e^{-1/2}
    X = np.array([[0.0], [1.0]])
    F = nbody_force(GAUSS, X)
    f = 0.5 * math.exp(-0.5)
    assert F[0, 0] == pytest.approx(-f, rel=1e-14)
    assert F[1, 0] == pytest.approx(f, rel=1e-14)


def test_nbody_force_newton_third_law_and_translation():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(7, 2))
    V = make_gaussian_potential(0.8, 1.3, 2)
    F = nbody_force(V, X)
    np.testing.assert_allclose(F.sum(axis=0), 0.0, atol=1e-14)
    np.testing.assert_allclose(nbody_force(V, X + 3.7), F, atol=1e-14)


def test_mean_field_force_single_point_cloud():
    from mflab.transport import DiscreteMeasure

    cloud = VlasovCloud(DiscreteMeasure.equal_weights(np.array([[1.0, 0.0]])), 0.0)
    F = mean_field_force(GAUSS, np.array([[0.0]]), cloud)
    assert F[0, 0] == pytest.approx(-math.exp(-0.5), rel=1e-14)


def test_mean_field_force_grid_matches_exact():
    # one step under the tabulated field differs from the exact-summation step
    # by the interpolation error (~1e-6), far below the cloud's MC noise
    cloud = sample_gaussian_cloud(2048, 1, seed=2)
    a = vlasov_advance(cloud, GAUSS, 0.05, 1, force_method="exact")
    b = vlasov_advance(cloud, GAUSS, 0.05, 1, force_method="grid")
    np.testing.assert_allclose(b.xi, a.xi, atol=1e-6)
    np.testing.assert_allclose(b.x, a.x, atol=1e-7)


def test_vlasov_free_streaming_is_exact():
    cloud = sample_gaussian_cloud(64, 2, seed=3)
    out = vlasov_advance(cloud, make_gaussian_potential(0.0, 1.0, 2), 0.05, 10)
    np.testing.assert_allclose(out.x, cloud.x + 0.5 * cloud.xi, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(out.xi, cloud.xi, rtol=0, atol=0)
    assert out.time == pytest.approx(0.5)


def test_nbody_energy_and_momentum_conserved():
    rng = np.random.default_rng(4)
    s = PhaseState(rng.normal(size=(6, 1)), rng.normal(size=(6, 1)), 0.0)
    e0 = nbody_energy(GAUSS, s)
    ptot = s.momenta.sum()
    field = lambda x: nbody_force(GAUSS, x)
    for _ in range(200):
        s = verlet_step(s, field, 0.005)
    assert nbody_energy(GAUSS, s) == pytest.approx(e0, abs=5 * 0.005**2)
    assert s.momenta.sum() == pytest.approx(ptot, abs=1e-12)


def test_diagonal_ensemble_starts_at_zero_dobrushin():
    ref = sample_gaussian_cloud(128, 1, seed=5)
    ens = diagonal_ensemble(16, 8, ref, seed=6)
    assert ens.n_samples == 16
    assert ens.n_particles == 8
    assert dobrushin_functional(ens, 2.0) == 0.0


def test_coupled_flow_zero_potential_stays_diagonal():
    ref = sample_gaussian_cloud(128, 1, seed=7)
    ens = diagonal_ensemble(8, 4, ref, seed=8)
    ens, ref2, times, dvals = run_coupled_trajectory(ens, ref, FLAT, 0.05, 10)
    np.testing.assert_allclose(dvals, 0.0, atol=0.0)
    assert times[-1] == pytest.approx(0.5)


def test_coupled_flow_time_alignment_guard():
    ref = sample_gaussian_cloud(64, 1, seed=9)
    ens = diagonal_ensemble(4, 2, ref, seed=10)
    stale = VlasovCloud(ref.points, time=1.0)
    with pytest.raises(RuntimeError):
        coupled_advance(ens, stale, GAUSS, 0.05)


def test_dobrushin_functional_hand_value():
    mf = [PhaseState(np.array([[0.0], [1.0]]), np.array([[0.0], [0.0]]), 0.0)]
    nb = [PhaseState(np.array([[1.0], [1.0]]), np.array([[0.0], [2.0]]), 0.0)]
    ref = sample_gaussian_cloud(8, 1, seed=11)
    ens = CoupledEnsemble(mf, nb, ref.points, 0)
    # (1/2)(|0-1|^2 + |1-1|^2) + (1/2)(|0-0|^2 + |0-2|^2) = 1/2 + 2
    assert dobrushin_functional(ens, 2.0) == pytest.approx(2.5, rel=1e-14)


def test_marginal_cloud_layout():
    mf = [
        PhaseState(np.array([[1.0], [2.0], [3.0]]), np.array([[4.0], [5.0], [6.0]]), 0.0),
        PhaseState(np.array([[7.0], [8.0], [9.0]]), np.array([[10.0], [11.0], [12.0]]), 0.0),
    ]
    m = marginal_cloud(mf, 2)
    np.testing.assert_allclose(m.points, [[1.0, 2.0, 4.0, 5.0], [7.0, 8.0, 10.0, 11.0]])
    assert m.has_equal_weights()
    with pytest.raises(ValueError):
        marginal_cloud(mf, 4)


def test_moment_p_hand_value():
    from mflab.transport import DiscreteMeasure

    pts = np.array([[2.0, 0.0], [0.0, 3.0]])  # (x, xi) pairs in d = 1
    cloud = VlasovCloud(DiscreteMeasure.equal_weights(pts), 0.0)
    assert moment_p(cloud, 2.0) == pytest.approx(0.5 * 4.0 + 0.5 * 9.0, rel=1e-14)


def test_samplers_deterministic_and_shaped():
    a = sample_gaussian_cloud(32, 2, seed=12, std_x=0.5)
    b = sample_gaussian_cloud(32, 2, seed=12, std_x=0.5)
    np.testing.assert_array_equal(a.points.points, b.points.points)
    u = sample_uniform_cloud(16, 1, seed=13, half_width_x=2.0)
    assert np.all(np.abs(u.x) <= 2.0)
    assert u.size == 16 and u.d == 1


def test_coupled_trajectory_seeds_reproducible():
    ref = sample_gaussian_cloud(256, 1, seed=14)
    out = []
    for _ in range(2):
        ens = diagonal_ensemble(8, 4, ref, seed=15)
        _, _, _, dvals = run_coupled_trajectory(ens, ref, GAUSS, 0.05, 6)
        out.append(dvals)
    np.testing.assert_array_equal(out[0], out[1])
    assert out[0][-1] > 0  # interacting flow actually separates the sides
