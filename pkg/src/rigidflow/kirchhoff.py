"""Exterior harmonic potentials, rigid test fields, virtual inertia tensor.

The six potentials solve the exterior Neumann problem with data K_i = n_i
(i = 1..3) or [x ^ n]_{i-3} (i = 4..6), n pointing out of the fluid. For a
sphere centered at the origin the translational potentials are dipoles and
the rotational ones vanish; meshes go through the boundary-element solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import FieldH
from .geometry import QuadratureRule, RigidBodySpec
from . import bem


class SolverError(RuntimeError):
    """Potential solve failed (singular or ill-conditioned system)."""


def neumann_data(i: int, points: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """K_i at surface points for the given normal field."""
    if i < 1 or i > 6:
        raise ValueError("i must be in 1..6")
    if i <= 3:
        return normals[:, i - 1]
    return np.cross(points, normals)[:, i - 4]


class SpherePotential:
    """Closed-form potential of the unit-velocity sphere problem.

    phi_i = -a^3 x_i / (2 |x|^3) for i = 1..3; identically zero for
    i = 4..6 (x ^ n vanishes on a centered sphere).
    """

    def __init__(self, radius: float, i: int):
        self.radius = radius
        self.i = i
        self.translational = i <= 3

    def phi(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if not self.translational:
            return np.zeros(x.shape[0])
        r = np.linalg.norm(x, axis=1)
        return -self.radius**3 * x[:, self.i - 1] / (2.0 * r**3)

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if not self.translational:
            return np.zeros((x.shape[0], 3))
        r = np.linalg.norm(x, axis=1)
        e = np.zeros(3)
        e[self.i - 1] = 1.0
        out = -(self.radius**3 / 2.0) * (
            e[None, :] / r[:, None] ** 3
            - 3.0 * x[:, self.i - 1 : self.i] * x / r[:, None] ** 5
        )
        return out

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        n = x.shape[0]
        if not self.translational:
            return np.zeros((n, 3, 3))
        r = np.linalg.norm(x, axis=1)
        i = self.i - 1
        eye = np.eye(3)
        out = np.zeros((n, 3, 3))
        r5 = r**5
        r7 = r**7
        for j in range(3):
            for k in range(3):
                out[:, j, k] = (
                    eye[i, j] * x[:, k] + eye[i, k] * x[:, j] + eye[j, k] * x[:, i]
                ) / r5 - 5.0 * x[:, i] * x[:, j] * x[:, k] / r7
        return out * (3.0 * self.radius**3 / 2.0)


def solve_kirchhoff(spec: RigidBodySpec, i: int, rule: QuadratureRule | None = None):
    """Potential for mode i; analytic for spheres, BEM for meshes."""
    if i < 1 or i > 6:
        raise ValueError("i must be in 1..6")
    if spec.shape == "sphere":
        return SpherePotential(spec.radius, i)
    if rule is None:
        raise ValueError("mesh potentials need a quadrature rule")
    return bem.solve_exterior_neumann(spec.mesh, i)


def sphere_pair_tail(radius: float, r_out: float) -> np.ndarray:
    """Analytic T[i,j] = integral over r > r_out of grad(phi_i).grad(phi_j).

    Only the translational block is nonzero; by symmetry it is diagonal
    with value (2 pi / 3) a^6 / r_out^3.
    """
    t = np.zeros((6, 6))
    val = 2.0 * math.pi / 3.0 * radius**6 / r_out**3
    for i in range(3):
        t[i, i] = val
    return t


def sphere_hessian_pair_tail(radius: float, r_out: float) -> np.ndarray:
    """Analytic T[i,j] = integral over r > r_out of Hess(phi_i):Hess(phi_j).

    Diagonal translational block, value 6 pi a^6 / r_out^5 (the angular
    integral of |Hess phi_1|^2 r^2 is 30 pi a^6 r^-6 and the radial tail
    integrates r^-6 from r_out). Coincides with the D(v_i):D(v_j) tail
    since D(grad phi) is the Hessian.
    """
    t = np.zeros((6, 6))
    val = 6.0 * math.pi * radius**6 / r_out**5
    for i in range(3):
        t[i, i] = val
    return t


@dataclass
class KirchhoffContext:
    """Six potentials, rigid test fields, and the added-mass tensors."""

    spec: RigidBodySpec
    rule: QuadratureRule
    potentials: list
    m: float
    j0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    added_mass: np.ndarray

    def test_field(self, i: int) -> FieldH:
        return rigid_test_field(self, i)

    def pair_tail(self) -> np.ndarray:
        if self.spec.shape == "sphere":
            return sphere_pair_tail(self.spec.radius, self.rule.volume.truncation_radius)
        return np.zeros((6, 6))


def assemble_added_mass(
    spec: RigidBodySpec, rule: QuadratureRule, potentials: list | None = None
) -> KirchhoffContext:
    """Build the context; M2 entries via the boundary reduction
    integral of phi_j K_i over the body surface (Green identity)."""
    from .geometry import compute_inertia

    if potentials is None:
        potentials = [solve_kirchhoff(spec, i, rule) for i in range(1, 7)]
    surf = rule.surface
    m, _, j0 = compute_inertia(spec)
    m2 = np.empty((6, 6))
    phivals = [p.phi(surf.nodes) for p in potentials]
    for i in range(6):
        ki = neumann_data(i + 1, surf.nodes, surf.normals)
        for j in range(6):
            m2[i, j] = surf.integrate(phivals[j] * ki)
    asym = np.abs(m2 - m2.T).max()
    scale = max(np.abs(m2).max(), 1e-30)
    if asym > 1e-6 * scale + 1e-12:
        raise SolverError(f"added-mass asymmetry {asym:.3e} beyond tolerance")
    m2 = 0.5 * (m2 + m2.T)
    m1 = np.zeros((6, 6))
    m1[:3, :3] = m * np.eye(3)
    m1[3:, 3:] = j0
    mm = m1 + m2
    if np.any(np.linalg.eigvalsh(mm) <= 0):
        raise SolverError("virtual inertia tensor not positive definite")
    return KirchhoffContext(
        spec=spec, rule=rule, potentials=potentials, m=m, j0=j0, m1=m1, m2=m2,
        added_mass=mm,
    )


def rigid_test_field(ctx: KirchhoffContext, i: int) -> FieldH:
    """v_i: grad(phi_i) in the fluid, the unit rigid motion in the body."""
    pot = ctx.potentials[i - 1]
    ell = np.zeros(3)
    rot = np.zeros(3)
    if i <= 3:
        ell[i - 1] = 1.0
    else:
        rot[i - 4] = 1.0
    far = np.zeros(6)
    far[i - 1] = 1.0

    def lap(x):
        return np.zeros((np.atleast_2d(x).shape[0], 3))

    return FieldH(
        velocity=pot.grad,
        gradient=pot.hessian,
        laplacian=lap,
        ell=ell,
        rot=rot,
        matched_trace=True,
        in_weighted=True,
        support_radius=None,
        far_coeffs=far if ctx.spec.shape == "sphere" else None,
    )


def rigid_test_fields(ctx: KirchhoffContext) -> list[FieldH]:
    return [rigid_test_field(ctx, i) for i in range(1, 7)]


def inverse_bound_check(mm: np.ndarray, m: float, j0: np.ndarray, force, torque):
    """Check |M^-1 [F;T]| <= 2 (m^-1 |F| + |J0^-1| |T|).

    Returns (lhs, rhs, holds). |J0^-1| is the spectral norm, i.e. the
    reciprocal of the smallest inertia eigenvalue.
    """
    force = np.asarray(force, dtype=float)
    torque = np.asarray(torque, dtype=float)
    rhsvec = np.concatenate([force, torque])
    try:
        sol = np.linalg.solve(mm, rhsvec)
    except np.linalg.LinAlgError as exc:
        raise SolverError("virtual inertia tensor is singular") from exc
    lhs = float(np.linalg.norm(sol))
    lam_min = float(np.linalg.eigvalsh(0.5 * (j0 + j0.T)).min())
    rhs = 2.0 * (np.linalg.norm(force) / m + np.linalg.norm(torque) / lam_min)
    return lhs, rhs, lhs <= rhs


def inverse_bound_threshold(
    m2: np.ndarray,
    mass_grid=(0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0),
    n_samples: int = 128,
    seed: int = 0,
):
    """Smallest (m, beta) on the grid for which the bound holds for all
    sampled force/torque pairs; the paper's constant is nonconstructive,
    so this is an empirical threshold, not a proof."""
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((n_samples, 6))
    samples /= np.linalg.norm(samples, axis=1)[:, None]
    found = []
    for mass in mass_grid:
        for beta in mass_grid:
            j0 = beta * np.eye(3)
            m1 = np.zeros((6, 6))
            m1[:3, :3] = mass * np.eye(3)
            m1[3:, 3:] = j0
            mm = m1 + m2
            ok = all(
                inverse_bound_check(mm, mass, j0, s[:3], s[3:])[2] for s in samples
            )
            if ok:
                found.append((mass, beta))
    if not found:
        return None
    return min(found)
