"""Inviscid coupled solver: vortex particles + added-mass body dynamics.

Vorticity is carried by Lagrangian particles advected by the relative
velocity and stretched by its gradient; the velocity is reconstructed as
a regularized Biot-Savart sum plus a six-dimensional potential-flow
correction enforcing the impermeability condition in the weak
(surface-projected) sense. The body velocities evolve by the 6x6
virtual-inertia ODE driven by the advection form evaluated on the rigid
test fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield, replace

import numpy as np

from .geometry import RigidBodySpec, make_quadrature
from .kirchhoff import KirchhoffContext, neumann_data, sphere_pair_tail


# ----------------------------------------------------------------------
# Regularized Biot-Savart kernel (high-order algebraic smoothing)
# ----------------------------------------------------------------------


def _q_frac(rho: np.ndarray) -> np.ndarray:
    """Enclosed-circulation fraction of the order-4 algebraic blob."""
    r2 = rho * rho
    return rho * r2 * (r2 + 2.5) / (r2 + 1.0) ** 2.5


def _q_frac_d(rho: np.ndarray) -> np.ndarray:
    return 7.5 * rho * rho / (rho * rho + 1.0) ** 3.5


def mollifier(rho: np.ndarray) -> np.ndarray:
    """Blob profile zeta with unit mass: 15/(8 pi) (rho^2+1)^(-7/2)."""
    return 15.0 / (8.0 * math.pi) / (rho * rho + 1.0) ** 3.5


def biot_savart(
    targets: np.ndarray,
    positions: np.ndarray,
    strengths: np.ndarray,
    eps: float,
    want_gradient: bool = False,
    chunk: int = 256,
):
    """Velocity (and optionally its Jacobian) induced by the particles."""
    nt = targets.shape[0]
    vel = np.zeros((nt, 3))
    grad = np.zeros((nt, 3, 3)) if want_gradient else None
    if positions.shape[0] == 0:
        return (vel, grad) if want_gradient else vel
    for start in range(0, nt, chunk):
        stop = min(start + chunk, nt)
        z = targets[start:stop, None, :] - positions[None, :, :]  # (m, p, 3)
        s = np.linalg.norm(z, axis=-1)
        s = np.maximum(s, 1e-30)
        rho = s / eps
        g = _q_frac(rho) / (4.0 * math.pi * s**3)
        axz = np.cross(strengths[None, :, :], z)
        vel[start:stop] = np.einsum("mp,mpd->md", g, axz)
        if want_gradient:
            gp = _q_frac_d(rho) / (4.0 * math.pi * eps * s**3) - 3.0 * g / s
            zs = z / s[:, :, None]
            grad[start:stop] = np.einsum("mp,mpi,mpj->mij", gp, axz, zs)
            # d/dz_j (alpha x z)_i summed with weight g
            gsum = g.sum(axis=1)
            ga = np.einsum("mp,pd->md", g, strengths)
            sk = np.zeros((stop - start, 3, 3))
            sk[:, 0, 1] = -ga[:, 2]
            sk[:, 0, 2] = ga[:, 1]
            sk[:, 1, 0] = ga[:, 2]
            sk[:, 1, 2] = -ga[:, 0]
            sk[:, 2, 0] = -ga[:, 1]
            sk[:, 2, 1] = ga[:, 0]
            grad[start:stop] += sk
    return (vel, grad) if want_gradient else vel


def mollified_vorticity(targets, positions, strengths, eps):
    z = targets[:, None, :] - positions[None, :, :]
    rho = np.linalg.norm(z, axis=-1) / eps
    return np.einsum("mp,pd->md", mollifier(rho) / eps**3, strengths)


# ----------------------------------------------------------------------
# State and context
# ----------------------------------------------------------------------


@dataclass
class VortexField:
    positions: np.ndarray            # (p, 3)
    strengths: np.ndarray            # (p, 3) vorticity * volume
    volumes: np.ndarray              # (p,)
    eps: float
    reflections: int = 0

    @property
    def count(self) -> int:
        return self.positions.shape[0]


@dataclass
class EulerState:
    t: float
    field: VortexField
    ell: np.ndarray
    rot: np.ndarray
    beta: np.ndarray = dfield(default_factory=lambda: np.zeros(6))


@dataclass
class EulerContext:
    """Kirchhoff context plus the quadratures for forces and energy."""

    kctx: KirchhoffContext
    force_rule: object
    check_nodes: np.ndarray
    check_normals: np.ndarray
    kgram_pinv: np.ndarray
    energy_tail: np.ndarray
    reflection_limit: int = 1000

    @property
    def spec(self) -> RigidBodySpec:
        return self.kctx.spec


def make_euler_context(
    kctx: KirchhoffContext,
    force_surface_order: int = 12,
    force_radial_order: int = 12,
    force_truncation: float = 8.0,
    reflection_limit: int = 1000,
) -> EulerContext:
    spec = kctx.spec
    a = spec.bounding_radius()
    rule = make_quadrature(
        spec,
        surface_order=force_surface_order,
        radial_order=force_radial_order,
        truncation_radius=force_truncation,
        radial_breaks=(1.5 * a, 2.5 * a, 0.5 * (2.5 * a + force_truncation)),
    )
    surf = kctx.rule.surface
    kvals = np.stack(
        [neumann_data(i, surf.nodes, surf.normals) for i in range(1, 7)], axis=1
    )
    gram = np.einsum("n,ni,nj->ij", surf.weights, kvals, kvals)
    kgram_pinv = np.linalg.pinv(gram, rcond=1e-10)
    tail = (
        sphere_pair_tail(spec.radius, force_truncation)
        if spec.shape == "sphere"
        else np.zeros((6, 6))
    )
    stride = max(1, surf.nodes.shape[0] // 256)
    return EulerContext(
        kctx=kctx,
        force_rule=rule.volume,
        check_nodes=surf.nodes[::stride],
        check_normals=surf.normals[::stride],
        kgram_pinv=kgram_pinv,
        energy_tail=tail,
        reflection_limit=reflection_limit,
    )


# ----------------------------------------------------------------------
# Velocity reconstruction
# ----------------------------------------------------------------------


def flux_correction(field: VortexField, ectx: EulerContext) -> np.ndarray:
    """Coefficients cancelling the particle-induced normal flux in the
    weak sense (independent of the body velocities)."""
    surf = ectx.kctx.rule.surface
    ubs = biot_savart(surf.nodes, field.positions, field.strengths, field.eps)
    fn = np.einsum("nd,nd->n", ubs, surf.normals)
    kvals = np.stack(
        [neumann_data(i, surf.nodes, surf.normals) for i in range(1, 7)], axis=1
    )
    rhs = -np.einsum("n,n,ni->i", surf.weights, fn, kvals)
    return ectx.kgram_pinv @ rhs


def reconstruction_coeffs(field, ell, rot, ectx) -> np.ndarray:
    """beta = (ell, rot) + flux correction: the potential part of u."""
    return np.concatenate([ell, rot]) + flux_correction(field, ectx)


def velocity_from_vorticity(field: VortexField, ell, rot, ectx: EulerContext):
    """Velocity evaluator u = Biot-Savart + sum beta_i grad(phi_i); the
    correction enforces (u - u_S) . n = 0 in the surface-projected sense.

    Returns (velocity(x), gradient(x), beta)."""
    beta = reconstruction_coeffs(field, np.asarray(ell, float), np.asarray(rot, float), ectx)
    pots = ectx.kctx.potentials

    def vel(x):
        x = np.atleast_2d(x)
        out = biot_savart(x, field.positions, field.strengths, field.eps)
        for i in range(6):
            if beta[i] != 0.0:
                out += beta[i] * pots[i].grad(x)
        return out

    def grad(x):
        x = np.atleast_2d(x)
        _, g = biot_savart(x, field.positions, field.strengths, field.eps,
                           want_gradient=True)
        for i in range(6):
            if beta[i] != 0.0:
                g += beta[i] * pots[i].hessian(x)
        return g

    return vel, grad, beta


def boundary_residual(field: VortexField, ell, rot, ectx: EulerContext) -> float:
    """max |(u - u_S) . n| at the surface check nodes."""
    vel, _, _ = velocity_from_vorticity(field, ell, rot, ectx)
    x = ectx.check_nodes
    us = np.asarray(ell)[None, :] + np.cross(np.asarray(rot)[None, :], x)
    resid = np.einsum("nd,nd->n", vel(x) - us, ectx.check_normals)
    return float(np.abs(resid).max())


# ----------------------------------------------------------------------
# Dynamics
# ----------------------------------------------------------------------


def body_force(field: VortexField, ell, rot, beta, ectx: EulerContext) -> np.ndarray:
    """Six projected advection forces: the gyroscopic blocks
    [m r ^ l ; (J r) ^ r] plus the volume terms pairing the flow with the
    test-field Hessians."""
    kctx = ectx.kctx
    out = np.empty(6)
    out[:3] = kctx.m * np.cross(ell, rot)
    out[3:] = np.cross(kctx.j0 @ rot, rot)
    rule = ectx.force_rule
    x = rule.nodes
    u = biot_savart(x, field.positions, field.strengths, field.eps)
    for i in range(6):
        if beta[i] != 0.0:
            u += beta[i] * kctx.potentials[i].grad(x)
    urel = u - (np.asarray(ell)[None, :] + np.cross(np.asarray(rot)[None, :], x))
    for i in range(6):
        pot = kctx.potentials[i]
        gp = pot.grad(x)
        if not np.any(gp):
            continue
        hp = pot.hessian(x)
        t1 = np.einsum("ncd,nd,nc->n", hp, urel, u)
        t1 -= np.einsum("d,nd->n", np.asarray(rot), np.cross(u, gp))
        out[i] += float(rule.weights @ t1)
    return out


def body_rates(field, ell, rot, beta, ectx) -> np.ndarray:
    return np.linalg.solve(ectx.kctx.added_mass, body_force(field, ell, rot, beta, ectx))


def _particle_rates(field: VortexField, ell, rot, ectx, velocity_override=None):
    """(dx/dt, dalpha/dt) for the relative transport-stretching system."""
    if velocity_override is not None:
        vel_fn, grad_fn = velocity_override
        u = vel_fn(field.positions)
        g = grad_fn(field.positions)
        beta = None
    else:
        vel_fn, grad_fn, beta = velocity_from_vorticity(field, ell, rot, ectx)
        u = vel_fn(field.positions)
        g = grad_fn(field.positions)
    us = np.asarray(ell)[None, :] + np.cross(np.asarray(rot)[None, :], field.positions)
    dpos = u - us
    dalpha = np.einsum("pij,pj->pi", g, field.strengths) - np.cross(
        np.broadcast_to(rot, field.strengths.shape), field.strengths
    )
    return dpos, dalpha


def _reflect(field: VortexField, spec: RigidBodySpec) -> VortexField:
    if field.count == 0 or spec.shape != "sphere":
        return field
    a = spec.radius
    r = np.linalg.norm(field.positions, axis=1)
    inside = r < a
    if not np.any(inside):
        return field
    pos = field.positions.copy()
    scale = (2 * a - r[inside]) / r[inside]
    pos[inside] *= scale[:, None]
    return replace(
        field, positions=pos, reflections=field.reflections + int(inside.sum())
    )


def euler_step(state: EulerState, dt: float, ectx: EulerContext) -> EulerState:
    """RK4 on the joint (particles, body) system; the reconstruction is
    recomputed at each substage state."""
    if dt <= 0:
        raise ValueError("dt must be positive")

    def rates(s: EulerState):
        beta = reconstruction_coeffs(s.field, s.ell, s.rot, ectx)
        dpos, dalpha = _particle_rates(s.field, s.ell, s.rot, ectx)
        d6 = body_rates(s.field, s.ell, s.rot, beta, ectx)
        return dpos, dalpha, d6[:3], d6[3:]

    def advanced(s: EulerState, k, factor):
        f = replace(
            s.field,
            positions=s.field.positions + factor * k[0],
            strengths=s.field.strengths + factor * k[1],
        )
        return EulerState(
            t=s.t, field=f, ell=s.ell + factor * k[2], rot=s.rot + factor * k[3]
        )

    k1 = rates(state)
    k2 = rates(advanced(state, k1, dt / 2))
    k3 = rates(advanced(state, k2, dt / 2))
    k4 = rates(advanced(state, k3, dt))
    newf = replace(
        state.field,
        positions=state.field.positions
        + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        strengths=state.field.strengths
        + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
    )
    newf = _reflect(newf, ectx.spec)
    if newf.reflections > ectx.reflection_limit:
        raise FloatingPointError(
            f"{newf.reflections} particle reflections exceed the limit"
        )
    ell = state.ell + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    rot = state.rot + dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    beta = reconstruction_coeffs(newf, ell, rot, ectx)
    return EulerState(t=state.t + dt, field=newf, ell=ell, rot=rot, beta=beta)


def vorticity_step(
    state: EulerState, dt: float, ectx: EulerContext, velocity_override=None
) -> EulerState:
    """Advance particles only (body velocities frozen): advection by the
    relative velocity, stretching by its gradient, RK4 in time."""
    if dt <= 0:
        raise ValueError("dt must be positive")

    def rates(f):
        return _particle_rates(f, state.ell, state.rot, ectx, velocity_override)

    def adv(f, k, factor):
        return replace(
            f, positions=f.positions + factor * k[0], strengths=f.strengths + factor * k[1]
        )

    f0 = state.field
    k1 = rates(f0)
    k2 = rates(adv(f0, k1, dt / 2))
    k3 = rates(adv(f0, k2, dt / 2))
    k4 = rates(adv(f0, k3, dt))
    newf = replace(
        f0,
        positions=f0.positions + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        strengths=f0.strengths + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
    )
    newf = _reflect(newf, ectx.spec)
    if newf.reflections > ectx.reflection_limit:
        raise FloatingPointError(
            f"{newf.reflections} particle reflections exceed the limit"
        )
    return replace(state, t=state.t + dt, field=newf)


def body_ode_step(state: EulerState, dt: float, ectx: EulerContext) -> EulerState:
    """Advance (ell, rot) only; the particle-induced flux is frozen within
    the step while the rigid part of the reconstruction tracks the
    substage body velocities."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    corr = flux_correction(state.field, ectx)

    def rates(ell, rot):
        beta = np.concatenate([ell, rot]) + corr
        return body_rates(state.field, ell, rot, beta, ectx)

    l0, r0 = state.ell, state.rot
    k1 = rates(l0, r0)
    k2 = rates(l0 + dt / 2 * k1[:3], r0 + dt / 2 * k1[3:])
    k3 = rates(l0 + dt / 2 * k2[:3], r0 + dt / 2 * k2[3:])
    k4 = rates(l0 + dt * k3[:3], r0 + dt * k3[3:])
    d6 = (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    ell = l0 + dt * d6[:3]
    rot = r0 + dt * d6[3:]
    return replace(state, t=state.t + dt, ell=ell, rot=rot,
                   beta=np.concatenate([ell, rot]) + corr)


def coupled_energy(state: EulerState, ectx: EulerContext) -> float:
    """Kinetic energy in the coupled norm: truncated fluid integral with
    the dipole tail plus the rigid inertia terms."""
    rule = ectx.force_rule
    beta = reconstruction_coeffs(state.field, state.ell, state.rot, ectx)
    u = biot_savart(rule.nodes, state.field.positions, state.field.strengths,
                    state.field.eps)
    for i in range(6):
        if beta[i] != 0.0:
            u += beta[i] * ectx.kctx.potentials[i].grad(rule.nodes)
    out = float(rule.weights @ np.einsum("nd,nd->n", u, u))
    out += float(beta @ ectx.energy_tail @ beta)
    out += ectx.kctx.m * float(state.ell @ state.ell)
    out += float(state.rot @ (ectx.kctx.j0 @ state.rot))
    return out


@dataclass
class EulerTrajectory:
    times: np.ndarray
    body: np.ndarray          # (nt, 6)
    rates: np.ndarray         # (nt, 6) added-mass RHS at samples
    energies: np.ndarray
    residuals: np.ndarray
    states: list

    def body_series(self) -> np.ndarray:
        return self.body


def run_euler(
    state: EulerState,
    ectx: EulerContext,
    t_final: float,
    dt: float,
    sample_every: int = 1,
    keep_states: bool = False,
) -> EulerTrajectory:
    n_steps = int(round(t_final / dt))
    times = [state.t]
    body = [np.concatenate([state.ell, state.rot])]
    beta0 = reconstruction_coeffs(state.field, state.ell, state.rot, ectx)
    rates0 = body_rates(state.field, state.ell, state.rot, beta0, ectx)
    rates = [rates0]
    energies = [coupled_energy(state, ectx)]
    residuals = [boundary_residual(state.field, state.ell, state.rot, ectx)]
    states = [state] if keep_states else []
    for k in range(n_steps):
        state = euler_step(state, dt, ectx)
        if (k + 1) % sample_every == 0 or k == n_steps - 1:
            times.append(state.t)
            body.append(np.concatenate([state.ell, state.rot]))
            rates.append(body_rates(state.field, state.ell, state.rot, state.beta, ectx))
            energies.append(coupled_energy(state, ectx))
            residuals.append(boundary_residual(state.field, state.ell, state.rot, ectx))
            if keep_states:
                states.append(state)
    return EulerTrajectory(
        times=np.array(times), body=np.array(body), rates=np.array(rates),
        energies=np.array(energies), residuals=np.array(residuals), states=states,
    )


# ----------------------------------------------------------------------
# Initial vorticity profiles
# ----------------------------------------------------------------------


def vortex_ring(
    center, radius: float, circulation: float, n_particles: int = 128,
    axis=(0.0, 0.0, 1.0), core: float | None = None,
) -> VortexField:
    """Ring filament discretized by particles with tangential strengths."""
    center = np.asarray(center, dtype=float)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    # orthonormal frame around the axis
    ref = np.array([1.0, 0.0, 0.0])
    if abs(axis @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    theta = 2.0 * math.pi * np.arange(n_particles) / n_particles
    pos = center[None, :] + radius * (
        np.cos(theta)[:, None] * e1[None, :] + np.sin(theta)[:, None] * e2[None, :]
    )
    tangent = -np.sin(theta)[:, None] * e1[None, :] + np.cos(theta)[:, None] * e2[None, :]
    seg = 2.0 * math.pi * radius / n_particles
    strengths = circulation * seg * tangent
    eps = core if core is not None else 1.5 * seg
    vols = np.full(n_particles, seg * math.pi * eps**2)
    return VortexField(positions=pos, strengths=strengths, volumes=vols, eps=eps)


def gaussian_blob(
    center, core: float, amplitude, spacing: float, cut: float = 1e-3
) -> VortexField:
    """Swirling blob: vorticity = curl(A exp(-|x-c|^2/core^2)) for constant
    A, discretized on a lattice where it is non-negligible."""
    center = np.asarray(center, dtype=float)
    amp = np.asarray(amplitude, dtype=float)
    half = 3.0 * core
    n = max(2, int(math.ceil(2 * half / spacing)))
    axes = [center[d] - half + spacing * (np.arange(n) + 0.5) for d in range(3)]
    xg, yg, zg = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([xg.ravel(), yg.ravel(), zg.ravel()], axis=-1)
    d = pts - center[None, :]
    gauss = np.exp(-np.einsum("nd,nd->n", d, d) / core**2)
    # curl(A g) = grad(g) x A
    gradg = -2.0 * d / core**2 * gauss[:, None]
    omega = np.cross(gradg, np.broadcast_to(amp, d.shape))
    mag = np.linalg.norm(omega, axis=1)
    keep = mag > cut * mag.max()
    pos = pts[keep]
    strengths = omega[keep] * spacing**3
    eps = 1.5 * spacing
    vols = np.full(pos.shape[0], spacing**3)
    return VortexField(positions=pos, strengths=strengths, volumes=vols, eps=eps)
