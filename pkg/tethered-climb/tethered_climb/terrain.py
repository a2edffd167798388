"""Rough wall synthesis with the multivariate Weierstrass-Mandelbrot function
and asperity extraction from the sampled heightfield.

Patch coordinates are local to the wall: x runs across the slope, y runs
up-slope and z points out of the wall.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import rng as streams
from .exceptions import ParameterDomainError


@dataclass(frozen=True)
class TerrainParams:
    fractal_dim: float = 2.5
    roughness_amp: float = 1e-8
    sample_length: float = 1e-3
    gamma_freq: float = 1.5
    ridge_count: int = 10
    max_freq_index: int = 11
    phase_seed: int = 0

    def validate(self):
        if not 2.0 < self.fractal_dim < 3.0:
            raise ParameterDomainError(f'fractal_dim must lie in (2, 3), got {self.fractal_dim}')
        if self.gamma_freq <= 1.0:
            raise ParameterDomainError(f'gamma_freq must exceed 1, got {self.gamma_freq}')
        if self.sample_length <= 0.0:
            raise ParameterDomainError(f'sample_length must be positive, got {self.sample_length}')
        if self.roughness_amp < 0.0:
            raise ParameterDomainError(f'roughness_amp must be non-negative, got {self.roughness_amp}')
        if int(self.ridge_count) != self.ridge_count or self.ridge_count < 1:
            raise ParameterDomainError(f'ridge_count must be a positive integer, got {self.ridge_count}')
        if int(self.max_freq_index) != self.max_freq_index or self.max_freq_index < 0:
            raise ParameterDomainError(
                f'max_freq_index must be a non-negative integer, got {self.max_freq_index}')


@dataclass(frozen=True)
class Asperity:
    position: tuple
    tip_radius: float
    normal_angle: float

    def __post_init__(self):
        if not self.tip_radius > 0.0:
            raise ParameterDomainError(f'tip_radius must be positive, got {self.tip_radius}')
        if not 0.0 <= self.normal_angle <= math.pi:
            raise ParameterDomainError(f'normal_angle must lie in [0, pi], got {self.normal_angle}')


@dataclass(frozen=True, eq=False)
class TerrainPatch:
    """Heights on a regular lattice. `grid[j, i]` is the height at
        `(x[i], y[j])`.
    """
    params: TerrainParams
    spacing: float
    x: np.ndarray
    y: np.ndarray
    grid: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid.shape != (len(self.y), len(self.x)):
            raise ParameterDomainError(
                f'grid shape {self.grid.shape} does not match lattice {(len(self.y), len(self.x))}')
        for axis in (self.x, self.y):
            if len(axis) > 1 and not np.allclose(np.diff(axis), self.spacing, rtol=1e-9, atol=0.0):
                raise ParameterDomainError('lattice coordinates are not evenly spaced at `spacing`')
        if not np.all(np.isfinite(self.grid)):
            raise ParameterDomainError('terrain heights must be finite')

    @property
    def extent(self):
        return self.spacing * (len(self.x) - 1)

    def rms(self):
        return float(np.sqrt(np.mean((self.grid - self.grid.mean()) ** 2)))


def nyquist_max_freq_index(sample_length, spacing, gamma_freq):
    """Highest frequency index whose wavelength is still resolved by the
        lattice, i.e. gamma^n * spacing / L ~ 1.
    """
    if spacing <= 0.0 or sample_length <= 0.0:
        raise ParameterDomainError('sample_length and spacing must be positive')
    return max(0, int(math.floor(math.log(sample_length / spacing) / math.log(gamma_freq))))


def wm_amplitude(params):
    """Amplitude C = L (G/L)^(Ds-2) (ln(gamma)/M)^0.5."""
    params.validate()
    return (
        params.sample_length
        * (params.roughness_amp / params.sample_length) ** (params.fractal_dim - 2.0)
        * math.sqrt(math.log(params.gamma_freq) / params.ridge_count)
    )


def wm_phases(params):
    """Random phases, one per (ridge, frequency index), uniform on [0, 2pi)."""
    gen = streams.stream(params.phase_seed, streams.TERRAIN_PHASES)
    return gen.uniform(0.0, 2.0 * math.pi, size=(params.ridge_count, params.max_freq_index + 1))


def _wm_sum(params, x, y, phases):
    ridges = params.ridge_count
    total = np.zeros(np.broadcast(x, y).shape)
    for m in range(1, ridges + 1):
        alpha = math.pi * m / ridges
        proj = x * math.cos(alpha) + y * math.sin(alpha)
        for n in range(params.max_freq_index + 1):
            weight = params.gamma_freq ** ((params.fractal_dim - 3.0) * n)
            phi = phases[m - 1, n]
            wave = 2.0 * math.pi * params.gamma_freq ** n * proj / params.sample_length
            total += weight * (math.cos(phi) - np.cos(wave + phi))
    return total


def wm_height(params, x, y):
    """Height of the W-M surface at (x, y).

        Args:
            params (TerrainParams): surface parameters
            x (float or array): across-slope coordinate in m
            y (float or array): up-slope coordinate in m
        Returns
            Height in m, a float for scalar input and an array otherwise.
    """
    amplitude = wm_amplitude(params)
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if amplitude == 0.0:
        z = np.zeros(np.broadcast(x, y).shape)
    else:
        z = amplitude * _wm_sum(params, x, y, wm_phases(params))
    return float(z) if scalar else z


def generate_patch(params, extent, spacing):
    """Samples the surface on a square lattice starting at the origin."""
    if not extent > spacing > 0.0:
        raise ParameterDomainError(f'need extent > spacing > 0, got extent={extent}, spacing={spacing}')
    params.validate()

    count = int(round(extent / spacing)) + 1
    axis = np.arange(count) * spacing
    xx, yy = np.meshgrid(axis, axis)

    logging.info(f'Generating {count}x{count} terrain patch...')
    grid = wm_height(params, xx, yy)

    metadata = {
        'version': __version__,
        'extent': float(extent),
        'spacing': float(spacing),
        'shape': [count, count],
        'amplitude': wm_amplitude(params),
    }
    return TerrainPatch(params=params, spacing=float(spacing), x=axis, y=axis.copy(),
        grid=grid, metadata=metadata)


def _quadratic_fit_operator(spacing):
    # z = a + b x + c y + d x^2 + e x y + f y^2 over the 3x3 stencil,
    # rows in the same row-major order the neighborhoods are flattened in
    offsets = np.array([-spacing, 0.0, spacing])
    dy, dx = np.meshgrid(offsets, offsets, indexing='ij')
    dx = dx.ravel()
    dy = dy.ravel()
    design = np.column_stack([np.ones(9), dx, dy, dx ** 2, dx * dy, dy ** 2])
    return np.linalg.pinv(design)


def extract_asperities(patch):
    """One asperity per strict interior local maximum of the heightfield.

        The tip radius is the inverse mean curvature of a least-squares
        quadratic fitted over the 3x3 neighborhood; the normal angle is
        measured between the fitted surface normal and the down-slope drag
        direction. Non-convex or flat fits are skipped.
    """
    grid = patch.grid
    rows, cols = grid.shape
    if rows < 3 or cols < 3:
        raise ParameterDomainError(f'need at least a 3x3 patch, got {grid.shape}')

    centre = grid[1:-1, 1:-1]
    is_peak = np.ones(centre.shape, dtype=bool)
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            if dj == 0 and di == 0:
                continue
            neighbour = grid[1 + dj:rows - 1 + dj, 1 + di:cols - 1 + di]
            is_peak &= centre > neighbour

    peaks = np.argwhere(is_peak) + 1
    if len(peaks) == 0:
        return []

    operator = _quadratic_fit_operator(patch.spacing)
    windows = np.stack([
        grid[j - 1:j + 2, i - 1:i + 2].ravel() for j, i in peaks
    ])
    _, zx, zy, d, e, f = (operator @ windows.T)
    zxx = 2.0 * d
    zyy = 2.0 * f
    zxy = e

    grad_sq = 1.0 + zx ** 2 + zy ** 2
    # curvature of the cap, positive for a bump
    curvature = -(
        (1.0 + zy ** 2) * zxx - 2.0 * zx * zy * zxy + (1.0 + zx ** 2) * zyy
    ) / (2.0 * grad_sq ** 1.5)
    angle = np.arccos(np.clip(zy / np.sqrt(grad_sq), -1.0, 1.0))

    asperities = []
    for (j, i), kappa, theta in zip(peaks, curvature, angle):
        if not np.isfinite(kappa) or kappa <= 1e-12:
            continue
        asperities.append(Asperity(
            position=(float(patch.x[i]), float(patch.y[j]), float(grid[j, i])),
            tip_radius=float(1.0 / kappa),
            normal_angle=float(theta),
        ))
    logging.debug(f'\tasperities: {len(asperities)} of {len(peaks)} peaks')
    return asperities
