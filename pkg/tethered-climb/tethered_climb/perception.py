"""Pinhole cameras, stereo range to obstacles and hop-target selection."""
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterDomainError, ProjectionError


def intrinsic_matrix(fx, fy, cx, cy, skew=0.0):
    """Five-parameter intrinsic matrix A."""
    return np.array([
        [fx, skew, cx],
        [0.0, fy, cy],
        [0.0, 0.0, 1.0],
    ])


@dataclass(frozen=True, eq=False)
class CameraModel:
    """World-to-pixel model s m' = A [R T] M'."""
    intrinsics: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.intrinsics, dtype=float)
        R = np.asarray(self.rotation, dtype=float)
        if A.shape != (3, 3) or R.shape != (3, 3) or np.shape(self.translation) != (3,):
            raise ParameterDomainError('camera needs 3x3 intrinsics and rotation and a 3-vector translation')
        if not np.allclose(np.tril(A, -1), 0.0) or A[2, 2] != 1.0 or A[0, 0] <= 0.0 or A[1, 1] <= 0.0:
            raise ParameterDomainError('intrinsics must be upper triangular with positive focal terms')
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9) or not np.isclose(np.linalg.det(R), 1.0):
            raise ParameterDomainError('rotation must be orthonormal with determinant +1')

    @property
    def projection(self):
        return np.asarray(self.intrinsics, dtype=float) @ np.column_stack(
            [np.asarray(self.rotation, dtype=float), np.asarray(self.translation, dtype=float)])

    @property
    def center(self):
        """Optical centre in world coordinates."""
        return -np.asarray(self.rotation, dtype=float).T @ np.asarray(self.translation, dtype=float)

    def ray(self, pixel):
        """Unit direction, in world coordinates, of the ray through `pixel`."""
        homogeneous = np.array([pixel[0], pixel[1], 1.0])
        direction = np.asarray(self.rotation, dtype=float).T @ np.linalg.solve(
            np.asarray(self.intrinsics, dtype=float), homogeneous)
        return direction / np.linalg.norm(direction)


def stereo_pair(focal, baseline, cx=0.0, cy=0.0, position=(0.0, 0.0, 0.0), rotation=None):
    """Two identical cameras with parallel axes, the right one offset by
        `baseline` along the left camera's x axis.
    """
    R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
    A = intrinsic_matrix(focal, focal, cx, cy)
    left_center = np.asarray(position, dtype=float)
    right_center = left_center + baseline * R[0]
    left = CameraModel(A, R, -R @ left_center)
    right = CameraModel(A, R, -R @ right_center)
    return left, right


def project(camera, point):
    """Pixel of a world point, given as a 3-vector or homogeneous 4-vector."""
    point = np.asarray(point, dtype=float)
    if point.shape == (3,):
        point = np.append(point, 1.0)
    elif point.shape != (4,):
        raise ParameterDomainError(f'expected a 3- or 4-vector, got shape {point.shape}')
    image = camera.projection @ point
    depth = image[2]
    if point[3] != 0.0:
        # depth along the optical axis in the point's own scale
        depth = depth * np.sign(point[3])
    if not depth > 0.0:
        raise ProjectionError(f'point {point[:3].tolist()} is not in front of the camera')
    return image[:2] / image[2]


@dataclass(frozen=True)
class Triangulation:
    point: np.ndarray
    range: float
    gap: float
    low_confidence: bool


def triangulate(pair, pixel_left, pixel_right, min_angle=1e-6):
    """Midpoint of the shortest segment between the two back-projected rays.

        Rays closer than `min_angle` rad to parallel, or a midpoint behind
        either camera, give a low-confidence result with infinite range.
    """
    left, right = pair
    c1, c2 = left.center, right.center
    d1, d2 = left.ray(pixel_left), right.ray(pixel_right)
    cos = float(np.dot(d1, d2))
    denom = 1.0 - cos ** 2
    if denom < math.sin(min_angle) ** 2:
        return Triangulation(np.full(3, np.nan), math.inf, math.nan, True)

    w = c1 - c2
    b1 = float(np.dot(d1, w))
    b2 = float(np.dot(d2, w))
    s = (cos * b2 - b1) / denom
    t = (b2 - cos * b1) / denom
    p1 = c1 + s * d1
    p2 = c2 + t * d2
    point = 0.5 * (p1 + p2)
    if s <= 0.0 or t <= 0.0:
        return Triangulation(point, math.inf, float(np.linalg.norm(p1 - p2)), True)
    return Triangulation(point, float(np.linalg.norm(point - c1)), float(np.linalg.norm(p1 - p2)),
        False)


def obstacle_distance(pair, pixel_left, pixel_right):
    """Range in m from the left camera to the feature seen at the two pixels,
        with a low-confidence flag.
    """
    result = triangulate(pair, pixel_left, pixel_right)
    return result.range, result.low_confidence


def locate_candidates(pair, points, noise_px=0.0, rng=None):
    """Projects candidate grip points into both cameras, optionally adds
        pixel noise, and triangulates them back.

        Returns
            list of Triangulation, one per input point
    """
    gen = rng if rng is not None else np.random.default_rng(0)
    left, right = pair
    located = []
    for point in np.asarray(points, dtype=float):
        pl = project(left, point)
        pr = project(right, point)
        if noise_px:
            pl = pl + gen.normal(0.0, noise_px, 2)
            pr = pr + gen.normal(0.0, noise_px, 2)
        located.append(triangulate(pair, pl, pr))
    return located


def select_hop_target(candidates, position, max_range, up=(0.0, 0.0, 1.0)):
    """Nearest candidate that lies up-slope of `position` within `max_range`.

        Returns
            index into `candidates`, or None when nothing qualifies
    """
    candidates = np.asarray(candidates, dtype=float).reshape(-1, 3)
    if len(candidates) == 0:
        return None
    offsets = candidates - np.asarray(position, dtype=float)
    distance = np.linalg.norm(offsets, axis=1)
    usable = (offsets @ np.asarray(up, dtype=float) > 0.0) & (distance <= max_range) \
        & np.all(np.isfinite(candidates), axis=1)
    if not usable.any():
        return None
    return int(np.flatnonzero(usable)[np.argmin(distance[usable])])
