"""Grid containers, the guard band, memory caps, and the checkpoint format."""
import numpy as np
import pytest

from mflab.quantum import (
    DensityMatrix,
    GridSpec,
    GuardBandError,
    ResourceCapError,
    WaveFunction,
    check_guard_band,
    coherent_state,
    guard_band_mass,
    load_state,
    memory_cap_bytes,
    save_state,
    state_density_matrix,
    trace_product,
)
from mflab.quantum.grids import MEMORY_CAP_ENV


def _grid(n=64, L=6.0, eps=0.25, **kw):
    return GridSpec(1, 1, n, L, eps, **kw)


def test_grid_geometry():
    g = _grid(n=8, L=4.0)
    assert g.h == pytest.approx(1.0)
    np.testing.assert_allclose(g.axis_points(), np.arange(8) - 4.0)
    np.testing.assert_allclose(g.wavenumbers(), 2 * np.pi * np.fft.fftfreq(8, d=1.0))
    assert g.shape() == (8,)
    assert g.n_axes == 1
    assert GridSpec(1, 2, 8, 4.0, 0.25, doubled=True).n_axes == 4


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(1, 1, 48, 4.0, 0.25)  # not a power of two
    with pytest.raises(ValueError):
        GridSpec(0, 1, 8, 4.0, 0.25)
    with pytest.raises(ValueError):
        GridSpec(1, 1, 8, -1.0, 0.25)
    with pytest.raises(ValueError):
        GridSpec(1, 1, 8, 4.0, 0.0)


def test_memory_cap_env_override(monkeypatch):
    monkeypatch.setenv(MEMORY_CAP_ENV, "1000000")
    assert memory_cap_bytes() == 1_000_000
    # 16 * 128^4 bytes = 4.3 GB needs a doubled two-particle 128-point grid
    with pytest.raises(ResourceCapError):
        GridSpec(1, 2, 128, 6.0, 0.25, doubled=True)
    monkeypatch.setenv(MEMORY_CAP_ENV, "-3")
    with pytest.raises(ValueError):
        memory_cap_bytes()
    monkeypatch.delenv(MEMORY_CAP_ENV)
    assert memory_cap_bytes() == 2 * 1024**3


def test_wavefunction_normalization_enforced():
    g = _grid()
    vals = np.ones(g.shape(), dtype=complex)
    with pytest.raises(ValueError):
        WaveFunction(g, vals)
    psi = WaveFunction(g, vals / np.sqrt(np.sum(np.abs(vals) ** 2) * g.h))
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_density_matrix_checks():
    g = _grid(n=64)
    psi = coherent_state(g, 0.0, 0.0)
    rho = state_density_matrix(psi)
    assert rho.trace() == pytest.approx(1.0, abs=1e-12)
    assert rho.rayleigh_psd_check() >= -1e-12
    assert trace_product(rho, rho) == pytest.approx(1.0, abs=1e-10)  # pure state
    with pytest.raises(ValueError):
        DensityMatrix(g, np.eye(64, dtype=complex) + 1j * np.eye(64, k=1))
    with pytest.raises(ValueError):
        DensityMatrix(g, np.eye(64, dtype=complex))  # trace h*64 != 1


def test_guard_band_accepts_centered_state():
    psi = coherent_state(_grid(), 0.3, -0.2)
    mass = check_guard_band(psi)
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_guard_band_trips_on_shifted_state():
    g = _grid()
    x = g.axis_points()
    # a normalized bump parked outside half the box
    vals = np.exp(-((x - 2.5) ** 2) / 0.5).astype(complex)
    vals /= np.sqrt(np.sum(np.abs(vals) ** 2) * g.h)
    psi = WaveFunction(g, vals)
    assert guard_band_mass(psi) < 1.0 - 1e-10
    with pytest.raises(GuardBandError):
        check_guard_band(psi)


def test_coherent_center_near_edge_rejected():
    with pytest.raises((ValueError, GuardBandError)):
        coherent_state(_grid(), 5.7, 0.0)  # position tail leaves the box
    with pytest.raises((ValueError, GuardBandError)):
        coherent_state(_grid(), 0.0, 50.0)  # momentum beyond the band


def test_checkpoint_round_trip(tmp_path):
    psi = coherent_state(_grid(), 0.2, 0.4)
    path = tmp_path / "state.mflabst"
    save_state(path, psi)
    back = load_state(path)
    assert back.grid == psi.grid
    assert back.time == psi.time
    np.testing.assert_array_equal(back.values, psi.values)  # lossless

    save_state(path, psi, dtype="complex64")
    lossy = load_state(path)
    np.testing.assert_allclose(lossy.values, psi.values, atol=1e-6)
    with pytest.raises(ValueError):
        save_state(path, psi, dtype="float64")


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTMFLAB" + b"\x00" * 64)
    with pytest.raises(ValueError):
        load_state(path)
