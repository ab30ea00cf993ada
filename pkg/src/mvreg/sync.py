"""Transformation synchronization: closed-form recovery of absolute poses
from relative measurements on a pose graph.

Rotations come from a spectral relaxation: the three eigenvectors of the
smallest eigenvalues of a block Laplacian built from the weighted relative
rotations, projected block-wise back to SO(3). Translations come from the
pseudoinverse solution of the weighted least-squares system that asks the
relative translations rebuilt from the absolutes to match the measured ones.
Both solutions are gauge-fixed so node 0 carries the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DisconnectedGraph, EigenSolverFailure
from .geometry import RigidMotion, Rotation3, project_to_so3, relative_from_absolute
from .graph import (
    PoseGraph,
    cauchy_global_confidence,
    cauchy_scale,
    harmonic_fuse,
    is_connected,
)

PINV_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class SyncResult:
    """Absolute motions (node 0 = identity) plus solver diagnostics."""

    absolute: tuple[RigidMotion, ...]
    rotation_eigengap: float
    translation_rank_deficiency: int
    graph: PoseGraph
    rounds_completed: int = 1
    disconnected: bool = False


def _require_connected(g: PoseGraph):
    if not is_connected(g):
        raise DisconnectedGraph("active edges do not connect all nodes")


def _rotation_sync_full(g: PoseGraph) -> tuple[list[Rotation3], float]:
    """Synchronized rotations and the eigengap lambda_4 - lambda_3 of L."""
    _require_connected(g)
    n = g.node_count
    lap = np.zeros((3 * n, 3 * n))
    eye3 = np.eye(3)
    for e in g.active_edges():
        c = e.c_fused
        rel = e.motion.rotation.m
        si, sj = 3 * e.i, 3 * e.j
        # off-diagonal blocks carry c * R^T / c * R so that the stack of
        # R_i^T blocks spans the nullspace for consistent measurements
        lap[si:si + 3, sj:sj + 3] -= c * rel.T
        lap[sj:sj + 3, si:si + 3] -= c * rel
        lap[si:si + 3, si:si + 3] += c * eye3
        lap[sj:sj + 3, sj:sj + 3] += c * eye3
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(f"symmetric eigendecomposition failed: {exc}") from exc
    basis = eigenvectors[:, :3]
    eigengap = float(eigenvalues[3] - eigenvalues[2])
    blocks = basis.reshape(n, 3, 3)
    # eigenvectors are sign-ambiguous; pick the global sign under which most
    # blocks are nearer to rotations than to reflections
    negative = int(np.sum(np.linalg.det(blocks) < 0.0))
    if negative > n - negative:
        blocks = -blocks
    projected = [project_to_so3(b) for b in blocks]
    anchor = projected[0].m
    return [Rotation3(anchor @ p.m.T) for p in projected], eigengap


def rotation_sync(g: PoseGraph) -> list[Rotation3]:
    """Absolute rotations from the spectral relaxation, node 0 = identity."""
    return _rotation_sync_full(g)[0]


def _translation_sync_full(
    g: PoseGraph, rotations: list[Rotation3]
) -> tuple[list[np.ndarray], int]:
    """Least-squares translations given synchronized rotations.

    Minimizes sum_e c_e |R_j^T (t_i - t_j) - t_e|^2 over the absolute
    translations t, with the rotations held fixed. The quadratic form is the
    scalar graph Laplacian acting on each coordinate, so a connected graph
    yields exactly a 3-dimensional nullspace (global shifts); the
    pseudoinverse picks one minimizer and the result is shifted so t_0 = 0,
    which moves along that nullspace and preserves optimality.
    """
    _require_connected(g)
    n = g.node_count
    normal = np.zeros((3 * n, 3 * n))
    rhs = np.zeros(3 * n)
    eye3 = np.eye(3)
    for e in g.active_edges():
        c = e.c_fused
        rj = rotations[e.j].m
        si, sj = 3 * e.i, 3 * e.j
        normal[si:si + 3, si:si + 3] += c * eye3
        normal[sj:sj + 3, sj:sj + 3] += c * eye3
        normal[si:si + 3, sj:sj + 3] -= c * eye3
        normal[sj:sj + 3, si:si + 3] -= c * eye3
        projected = c * (rj @ e.motion.translation)
        rhs[si:si + 3] += projected
        rhs[sj:sj + 3] -= projected
    singular = np.linalg.svd(normal, compute_uv=False)
    cutoff = PINV_RCOND * singular[0] if singular[0] > 0.0 else 0.0
    deficiency = int(np.sum(singular <= cutoff))
    solution = np.linalg.pinv(normal, rcond=PINV_RCOND) @ rhs
    translations = solution.reshape(n, 3)
    translations = translations - translations[0]
    return [t for t in translations], deficiency


def translation_sync(g: PoseGraph, rotations: list[Rotation3]) -> list[np.ndarray]:
    """Absolute translations (node 0 = zero) given synchronized rotations."""
    return _translation_sync_full(g, rotations)[0]


def translation_objective(g: PoseGraph, rotations: list[Rotation3], translations) -> float:
    """Weighted squared mismatch minimized by translation_sync.

    Exposed so solutions can be checked by finite differences.
    """
    translations = np.asarray(translations, dtype=np.float64).reshape(g.node_count, 3)
    total = 0.0
    for e in g.active_edges():
        rebuilt = rotations[e.j].m.T @ (translations[e.i] - translations[e.j])
        diff = rebuilt - e.motion.translation
        total += e.c_fused * float(diff @ diff)
    return total


def _consistency_residuals(g: PoseGraph, absolute: tuple[RigidMotion, ...]) -> np.ndarray:
    """Per-active-edge Frobenius gap between measured and rebuilt relatives."""
    values = []
    for e in g.active_edges():
        rebuilt = relative_from_absolute(absolute[e.i], absolute[e.j])
        values.append(np.linalg.norm(e.motion.matrix - rebuilt.matrix))
    return np.asarray(values)


def _updated_confidences(g: PoseGraph, absolute, gamma: float, beta: float) -> PoseGraph:
    """Refresh global and fused confidences from consistency residuals."""
    residual_values = _consistency_residuals(g, absolute)
    if residual_values.size == 0:
        return g
    b = cauchy_scale(residual_values, gamma)
    edges = list(g.edges)
    k = 0
    for idx, e in enumerate(edges):
        if not e.active:
            continue
        c_global = cauchy_global_confidence(float(residual_values[k]), b)
        k += 1
        c_fused = min(max(harmonic_fuse(e.c_local, c_global, beta), 0.0), 1.0)
        edges[idx] = replace(e, c_global=c_global, c_fused=c_fused)
    return g.with_edges(edges)


def transf_sync(
    g: PoseGraph, rounds: int = 4, gamma: float = 3.0, beta: float = 1.0
) -> SyncResult:
    """Alternate synchronization and confidence reweighting for `rounds` rounds.

    Each round synchronizes rotations and translations, rebuilds the relative
    motions, and refreshes the global/fused confidences with a Cauchy weight
    at a MAD-derived scale. Local confidences are held fixed here; the outer
    pipeline owns them. If the graph disconnects after the first completed
    round, the last valid result is returned with the disconnection flag set.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    current = g
    last_valid: SyncResult | None = None
    for round_index in range(1, rounds + 1):
        if not is_connected(current):
            if last_valid is None:
                raise DisconnectedGraph("active edges do not connect all nodes")
            return replace(last_valid, disconnected=True)
        rotations, eigengap = _rotation_sync_full(current)
        translations, deficiency = _translation_sync_full(current, rotations)
        absolute = tuple(
            RigidMotion(rot, t) for rot, t in zip(rotations, translations)
        )
        current = _updated_confidences(current, absolute, gamma, beta)
        last_valid = SyncResult(
            absolute=absolute,
            rotation_eigengap=eigengap,
            translation_rank_deficiency=deficiency,
            graph=current,
            rounds_completed=round_index,
            disconnected=False,
        )
    return last_valid
