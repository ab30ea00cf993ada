"""Rigid-motion primitives: rotations, SE(3) elements, point clouds.

Frame convention used throughout the package: the absolute motion M_i maps
scan-i coordinates into the world frame, and the relative motion M_ij maps
scan-i coordinates into scan-j's frame, so M_ij = M_j^-1 * M_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMatrix

ORTHONORMALITY_TOL = 1e-9


def _frozen_array(values, shape, name):
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Rotation3:
    """Element of SO(3): orthonormal 3x3 matrix with determinant +1."""

    m: np.ndarray

    def __post_init__(self):
        m = _frozen_array(self.m, (3, 3), "rotation matrix")
        err = np.linalg.norm(m.T @ m - np.eye(3))
        if err > ORTHONORMALITY_TOL:
            raise ValueError(f"matrix is not orthonormal (|R^T R - I|_F = {err:.3e})")
        det = np.linalg.det(m)
        if abs(det - 1.0) > ORTHONORMALITY_TOL:
            raise ValueError(f"matrix determinant is {det:.12f}, not +1")
        object.__setattr__(self, "m", m)

    @staticmethod
    def identity() -> "Rotation3":
        return Rotation3(np.eye(3))

    def transpose(self) -> "Rotation3":
        return Rotation3(self.m.T)


@dataclass(frozen=True, eq=False)
class RigidMotion:
    """SE(3) element: rotation plus translation, acting as x -> R x + t."""

    rotation: Rotation3
    translation: np.ndarray

    def __post_init__(self):
        t = _frozen_array(self.translation, (3,), "translation")
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidMotion":
        return RigidMotion(Rotation3.identity(), np.zeros(3))

    @staticmethod
    def from_matrix(mat) -> "RigidMotion":
        """Build from a 4x4 homogeneous matrix (bottom row must be 0 0 0 1)."""
        mat = np.asarray(mat, dtype=np.float64)
        if mat.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {mat.shape}")
        if np.linalg.norm(mat[3] - np.array([0.0, 0.0, 0.0, 1.0])) > ORTHONORMALITY_TOL:
            raise ValueError("bottom row of homogeneous matrix must be (0, 0, 0, 1)")
        return RigidMotion(Rotation3(mat[:3, :3]), mat[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous form [[R, t], [0, 1]]."""
        mat = np.eye(4)
        mat[:3, :3] = self.rotation.m
        mat[:3, 3] = self.translation
        return mat


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N points in meters, optionally with one descriptor row per point."""

    points: np.ndarray
    features: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError(f"points must be an N x 3 array with N >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.features is not None:
            feats = np.array(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != pts.shape[0]:
                raise ValueError(
                    f"features must have one row per point, got {feats.shape} for {pts.shape[0]} points"
                )
            if not np.all(np.isfinite(feats)):
                raise ValueError("features must be finite")
            feats.setflags(write=False)
            object.__setattr__(self, "features", feats)

    def __len__(self) -> int:
        return self.points.shape[0]


def compose(a: RigidMotion, b: RigidMotion) -> RigidMotion:
    """Motion applying b first, then a: (a . b) x = a(b(x))."""
    rot = Rotation3(a.rotation.m @ b.rotation.m)
    trans = a.rotation.m @ b.translation + a.translation
    return RigidMotion(rot, trans)


def invert(m: RigidMotion) -> RigidMotion:
    return RigidMotion(Rotation3(m.rotation.m.T), -m.rotation.m.T @ m.translation)


def transform_points(m: RigidMotion, points: np.ndarray) -> np.ndarray:
    """Apply x -> R x + t to each row of an N x 3 array."""
    return np.asarray(points, dtype=np.float64) @ m.rotation.m.T + m.translation


def apply(m: RigidMotion, cloud: PointCloud) -> PointCloud:
    """Rigidly move a cloud; features ride along unchanged."""
    return PointCloud(transform_points(m, cloud.points), cloud.features)


def project_to_so3(m) -> Rotation3:
    """Nearest rotation to m under the Frobenius norm.

    From the SVD m = U S V^T the projection is U diag(1, 1, det(VU^T)) V^T;
    the determinant factor forces a proper rotation instead of a reflection.
    Raises DegenerateMatrix when m has rank < 2 (two vanishing singular
    values), where the nearest rotation is not unique.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DegenerateMatrix("matrix has non-finite entries")
    u, s, vt = np.linalg.svd(m)
    if s[1] <= 1e-12 * s[0] or s[0] == 0.0:
        raise DegenerateMatrix(
            f"two singular values vanish (singular values {s}); nearest rotation undefined"
        )
    d = np.sign(np.linalg.det(u @ vt))
    r = u @ np.diag([1.0, 1.0, d]) @ vt
    return Rotation3(r)


def relative_from_absolute(mi: RigidMotion, mj: RigidMotion) -> RigidMotion:
    """Motion taking frame-i coordinates to frame-j coordinates: M_j^-1 * M_i."""
    return compose(invert(mj), mi)


def geodesic_angle(a, b) -> float:
    """Angle of the rotation a^T b in radians, via the trace formula."""
    ma = a.m if isinstance(a, Rotation3) else np.asarray(a, dtype=np.float64)
    mb = b.m if isinstance(b, Rotation3) else np.asarray(b, dtype=np.float64)
    cos_angle = (np.trace(ma.T @ mb) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos_angle, -1.0, 1.0)))


def rotation_about_z(angle: float) -> Rotation3:
    """Rotation by `angle` radians about the +z axis."""
    c, s = np.cos(angle), np.sin(angle)
    return Rotation3(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]))
