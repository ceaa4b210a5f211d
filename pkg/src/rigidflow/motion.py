"""World-frame reconstruction and the body/world change of variables.

The body-frame solvers evolve (ell, rot); the world-frame pose follows by
integrating h' = Q ell and Q' = Q [rot]x on the rotation group, with a
polar re-orthonormalization each step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def skew(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def rotation_exp(v: np.ndarray) -> np.ndarray:
    """Matrix exponential of skew(v) (Rodrigues)."""
    v = np.asarray(v, dtype=float)
    angle = float(np.linalg.norm(v))
    if angle < 1e-300:
        return np.eye(3)
    k = skew(v / angle)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def polar_orthonormalize(q: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(q)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] *= -1
        out = u @ vt
    return out


@dataclass
class BodyMotion:
    """Sampled body-frame velocities with the reconstructed pose."""

    times: np.ndarray
    ell: np.ndarray        # (nt, 3)
    rot: np.ndarray        # (nt, 3)
    h: np.ndarray          # (nt, 3) world-frame center positions
    q: np.ndarray          # (nt, 3, 3) rotation matrices

    def world_angular(self) -> np.ndarray:
        """R(t) = Q(t) rot(t)."""
        return np.einsum("nij,nj->ni", self.q, self.rot)

    def orthonormality_defect(self) -> float:
        qt = np.einsum("nji,njk->nik", self.q, self.q)
        return float(np.abs(qt - np.eye(3)[None]).max())

    def inertia_world(self, j0: np.ndarray, idx: int) -> np.ndarray:
        return self.q[idx] @ j0 @ self.q[idx].T


def reconstruct_world_frame(times, ell, rot) -> BodyMotion:
    """Integrate the pose from uniformly sampled body velocities.

    Q advances by the exponential of the midpoint angular velocity; h by
    the trapezoid rule on Q ell. Q(0) = Id, h(0) = 0.
    """
    times = np.asarray(times, dtype=float)
    ell = np.atleast_2d(np.asarray(ell, dtype=float))
    rot = np.atleast_2d(np.asarray(rot, dtype=float))
    nt = len(times)
    q = np.empty((nt, 3, 3))
    h = np.empty((nt, 3))
    q[0] = np.eye(3)
    h[0] = 0.0
    for k in range(nt - 1):
        dt = times[k + 1] - times[k]
        mid = 0.5 * (rot[k] + rot[k + 1])
        q[k + 1] = polar_orthonormalize(q[k] @ rotation_exp(dt * mid))
        h[k + 1] = h[k] + 0.5 * dt * (q[k] @ ell[k] + q[k + 1] @ ell[k + 1])
    return BodyMotion(times=times, ell=ell, rot=rot, h=h, q=q)


def to_world_frame(u_body, motion: BodyMotion, idx: int):
    """Spatial field U(y) = Q u(Q^T (y - h)) at sample idx."""
    q = motion.q[idx]
    h = motion.h[idx]

    def field(y):
        y = np.atleast_2d(y)
        x = (y - h[None, :]) @ q  # Q^T (y - h)
        return u_body(x) @ q.T

    return field


def to_body_frame(u_world, motion: BodyMotion, idx: int):
    """Inverse map: u(x) = Q^T U(Q x + h)."""
    q = motion.q[idx]
    h = motion.h[idx]

    def field(x):
        x = np.atleast_2d(x)
        y = x @ q.T + h[None, :]
        return u_world(y) @ q

    return field
