import math
from dataclasses import replace

import numpy as np
import pytest

from tethered_climb.exceptions import ParameterDomainError
from tethered_climb.terrain import (TerrainParams, TerrainPatch, extract_asperities,
    generate_patch, nyquist_max_freq_index, wm_amplitude, wm_height)


def test_zero_amplitude_is_flat():
    """G = 0 gives exactly zero heights and no asperities."""
    params = TerrainParams(roughness_amp=0.0)
    patch = generate_patch(params, 1e-3, 1e-5)
    assert np.all(patch.grid == 0.0), f"max |z| = {np.abs(patch.grid).max()}"
    assert patch.rms() == 0.0
    assert extract_asperities(patch) == []


def test_height_is_deterministic():
    params = TerrainParams(phase_seed=3)
    assert wm_height(params, 0.1, 0.2) == wm_height(params, 0.1, 0.2)
    assert isinstance(wm_height(params, 0.1, 0.2), float)


def test_patch_is_deterministic_per_seed():
    a = generate_patch(TerrainParams(phase_seed=1), 2e-4, 1e-5)
    b = generate_patch(TerrainParams(phase_seed=1), 2e-4, 1e-5)
    c = generate_patch(TerrainParams(phase_seed=2), 2e-4, 1e-5)
    assert np.array_equal(a.grid, b.grid)
    assert not np.array_equal(a.grid, c.grid)


def test_patch_lattice_size(patch):
    """extent 1 mm at 10 um spacing is a 101 x 101 lattice."""
    assert patch.grid.shape == (101, 101)
    assert patch.extent == pytest.approx(1e-3)
    assert patch.metadata['shape'] == [101, 101]


def test_rms_scales_with_amplitude():
    """Doubling G scales the surface by 2^(Ds - 2)."""
    base = TerrainParams(fractal_dim=2.5)
    low = generate_patch(base, 2.55e-3, 1e-5)
    high = generate_patch(replace(base, roughness_amp=2.0 * base.roughness_amp), 2.55e-3, 1e-5)
    ratio = high.rms() / low.rms()
    assert ratio == pytest.approx(math.sqrt(2.0), rel=1e-9), f"ratio {ratio}"


def test_amplitude_closed_form():
    params = TerrainParams(fractal_dim=2.4, roughness_amp=5e-9, sample_length=2e-3,
        gamma_freq=1.5, ridge_count=8)
    expected = 2e-3 * (5e-9 / 2e-3) ** 0.4 * math.sqrt(math.log(1.5) / 8)
    assert wm_amplitude(params) == pytest.approx(expected, rel=1e-12)


def test_rough_patch_is_finite_and_rough(patch):
    assert np.all(np.isfinite(patch.grid))
    assert patch.rms() > 0.0


def test_nyquist_cutoff():
    assert nyquist_max_freq_index(1e-3, 1e-5, 1.5) == 11
    assert nyquist_max_freq_index(1e-3, 1e-3, 1.5) == 0


@pytest.mark.parametrize('changes', [
    {'fractal_dim': 3.0},
    {'fractal_dim': 2.0},
    {'gamma_freq': 1.0},
    {'sample_length': 0.0},
    {'roughness_amp': -1e-9},
])
def test_invalid_params_rejected(changes):
    with pytest.raises(ParameterDomainError):
        wm_height(replace(TerrainParams(), **changes), 0.0, 0.0)


def test_generate_patch_needs_extent_above_spacing():
    with pytest.raises(ParameterDomainError):
        generate_patch(TerrainParams(), 1e-5, 1e-5)
    with pytest.raises(ParameterDomainError):
        generate_patch(TerrainParams(), 1e-3, 0.0)


def test_paraboloid_bump_radius():
    """A sampled paraboloid cap gives back its tip radius."""
    spacing = 1e-5
    radius = 50e-6
    axis = (np.arange(7) - 3) * spacing
    xx, yy = np.meshgrid(axis, axis)
    grid = 1e-6 - (xx ** 2 + yy ** 2) / (2.0 * radius)
    patch = TerrainPatch(TerrainParams(), spacing, axis, axis.copy(), grid)

    asperities = extract_asperities(patch)
    assert len(asperities) == 1, f"found {len(asperities)} asperities"
    bump = asperities[0]
    assert bump.tip_radius == pytest.approx(radius, rel=0.05)
    assert bump.normal_angle == pytest.approx(math.pi / 2)
    assert bump.position[:2] == pytest.approx((0.0, 0.0), abs=1e-12)


def test_asperities_sit_on_local_maxima(patch):
    asperities = extract_asperities(patch)
    assert len(asperities) > 0
    index = {round(v / patch.spacing): k for k, v in enumerate(patch.x)}
    for a in asperities:
        i = index[round(a.position[0] / patch.spacing)]
        j = index[round(a.position[1] / patch.spacing)]
        window = patch.grid[j - 1:j + 2, i - 1:i + 2]
        assert patch.grid[j, i] == window.max(), f"asperity at {(i, j)} is not a maximum"
        assert a.tip_radius > 0.0 and 0.0 <= a.normal_angle <= math.pi


def test_asperity_radii_in_micron_range(patch):
    radii = np.array([a.tip_radius for a in extract_asperities(patch)])
    assert 1e-6 < np.median(radii) < 1e-2, f"median radius {np.median(radii)}"


def test_too_small_patch_rejected():
    axis = np.arange(2) * 1e-5
    patch = TerrainPatch(TerrainParams(), 1e-5, axis, axis.copy(), np.zeros((2, 2)))
    with pytest.raises(ParameterDomainError):
        extract_asperities(patch)
