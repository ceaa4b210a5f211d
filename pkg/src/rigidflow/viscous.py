"""Galerkin solver for the body-frame viscous coupled system.

The basis holds the six rigid potential-flow fields first, then
compactly supported toroidal/poloidal modes with zero normal trace.
Projecting the momentum equation on the basis yields the ODE system

    Gram * G' = 2 nu * A * G + B(G, G)

whose energy identity is exact by the skew assembly of B: the ledger
(kinetic energy + accumulated dissipation + boundary friction) is
conserved up to time-integration error, realizing the energy inequality
step by step.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from ._poly import real_solid_harmonic
from .fields import FieldH, RadialBump, combine, poloidal_mode, toroidal_mode
from .forms import FormsContext, dissipation_pairing, inner_h, slip_pairing
from .geometry import RigidBodySpec
from .kirchhoff import KirchhoffContext, rigid_test_fields


class BasisError(ValueError):
    pass


@dataclass
class GalerkinBasis:
    """Ordered basis fields with metadata for checkpoint headers."""

    spec: RigidBodySpec
    fields: list[FieldH]
    labels: list[str]
    support_radius: float
    include_rigid: bool

    @property
    def n(self) -> int:
        return len(self.fields)

    def field_of_coeffs(self, coeffs: np.ndarray) -> FieldH:
        return combine(self.fields, coeffs)

    def rigid_part(self, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(ell, rot) carried by the coefficient vector."""
        ell = np.zeros(3)
        rot = np.zeros(3)
        for c, f in zip(coeffs, self.fields):
            ell = ell + c * f.ell
            rot = rot + c * f.rot
        return ell, rot


def _mode_catalog(lmax: int, n_radial: int, a: float, r_supp: float):
    out = []
    for k in range(n_radial):
        for l in range(1, lmax + 1):
            for family in ("tor", "pol"):
                for m in range(-l, l + 1):
                    out.append((k, l, family, m))
    return out


def build_basis(
    spec: RigidBodySpec,
    n: int,
    kctx: KirchhoffContext,
    support_radius: float = 4.0,
    lmax: int = 3,
    n_radial: int = 3,
    include_rigid: bool = True,
) -> GalerkinBasis:
    """First six fields are the rigid potential-flow test fields, the rest
    compact solenoidal modes. Sphere geometry only."""
    if spec.shape != "sphere":
        raise BasisError("basis construction supports sphere geometry only")
    n_rigid = 6 if include_rigid else 0
    if include_rigid and n < 6:
        raise BasisError("need n >= 6 to carry the rigid test fields")
    fields: list[FieldH] = []
    labels: list[str] = []
    if include_rigid:
        fields.extend(rigid_test_fields(kctx))
        labels.extend([f"rigid_{i}" for i in range(1, 7)])
    catalog = _mode_catalog(lmax, n_radial, spec.radius, support_radius)
    need = n - n_rigid
    if need > len(catalog):
        raise BasisError(
            f"requested {need} exterior modes but catalog holds {len(catalog)}"
        )
    for k, l, family, m in catalog[:need]:
        harm = real_solid_harmonic(l, m)
        g = RadialBump(spec.radius, support_radius, k)
        if family == "tor":
            fields.append(toroidal_mode(harm, g))
        else:
            fields.append(poloidal_mode(harm, g, l))
        labels.append(f"{family}_{l}_{m}_k{k}")
    return GalerkinBasis(
        spec=spec,
        fields=fields,
        labels=labels,
        support_radius=support_radius,
        include_rigid=include_rigid,
    )


@dataclass
class SystemMatrices:
    gram: np.ndarray     # (w_i, w_j) in the coupled inner product
    diss: np.ndarray     # D(w_i):D(w_j) volume pairings
    slip: np.ndarray     # boundary slip pairings
    advect: np.ndarray   # B[i, k, j] = b_R(w_i, w_k, w_j), skew in (k, j)
    gram_inv: np.ndarray = dfield(default=None, repr=False)

    def __post_init__(self):
        if self.gram_inv is None:
            self.gram_inv = np.linalg.inv(self.gram)

    def stiffness(self, alpha: float) -> np.ndarray:
        return -(self.diss + alpha * self.slip)

    def rhs(self, g: np.ndarray, nu: float, alpha: float) -> np.ndarray:
        quad = np.einsum("i,ikj,k->j", g, self.advect, g)
        return self.gram_inv @ (2.0 * nu * (self.stiffness(alpha) @ g) + quad)


def assemble_system(basis: GalerkinBasis, ctx: FormsContext) -> SystemMatrices:
    """Gram/stiffness/advection assembly over cached node tables.

    The advection tensor is assembled in skew form, so its contraction
    against equal last-two-slot vectors vanishes identically.
    """
    fields = basis.fields
    n = basis.n
    nodes = ctx.vol_nodes
    w = ctx.vol_w
    vals = np.stack([ctx.vol_values(f) for f in fields])        # (n, nn, 3)
    grads = np.stack([ctx.vol_gradients(f) for f in fields])    # (n, nn, 3, 3)

    gram = np.empty((n, n))
    diss = np.empty((n, n))
    slip = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = inner_h(fields[i], fields[j], ctx)
            diss[i, j] = diss[j, i] = dissipation_pairing(fields[i], fields[j], ctx)
            slip[i, j] = slip[j, i] = slip_pairing(fields[i], fields[j], ctx)

    # solid velocities at the nodes, truncated (identity inside chi_R radius)
    chir = ctx.chi_r(nodes)
    adv = np.empty((n, n, n))
    wvals = vals * w[None, :, None]
    flat_wvals = wvals.reshape(n, -1)
    for i in range(n):
        solid = fields[i].ell[None, :] + np.cross(fields[i].rot[None, :], chir)
        a_i = vals[i] - solid
        # t[j, k] = integral of (a_i . grad w_j) . w_k
        conv = np.einsum("nd,jncd->jnc", a_i, grads)
        t = conv.reshape(n, -1) @ flat_wvals.T
        adv[i] = 0.5 * (t.T - t)  # [k, j] skew part
    # determinant terms (exactly antisymmetric in the last two slots)
    cmat = np.empty((n, n, 3))  # C[k, j] = integral of w_k x w_j
    for k in range(n):
        cmat[k] = np.einsum("n,jnd->jd", w, np.cross(vals[k][None, :, :], vals))
    ells = np.stack([f.ell for f in fields])
    rots = np.stack([f.rot for f in fields])
    ell_cross = np.cross(ells[:, None, :], ells[None, :, :])
    rot_cross = np.cross(rots[:, None, :], rots[None, :, :])
    for i in range(n):
        ri = fields[i].rot
        # mass det term carries the proof-consistent slot order (j, k)
        adv[i] -= ctx.m * np.einsum("d,kjd->kj", ri, ell_cross)
        adv[i] += np.einsum("d,kjd->kj", ctx.j0 @ ri, rot_cross)
        adv[i] -= cmat @ ri
    return SystemMatrices(gram=gram, diss=diss, slip=slip, advect=adv)


@dataclass
class ViscousState:
    t: float
    coeffs: np.ndarray
    diss_cum: float = 0.0
    fric_cum: float = 0.0
    halvings: int = 0

    def energy(self, sys: SystemMatrices) -> float:
        return 0.5 * float(self.coeffs @ sys.gram @ self.coeffs)


def project_initial(u0: FieldH, basis: GalerkinBasis, ctx: FormsContext) -> np.ndarray:
    """Orthogonal projection in the coupled inner product."""
    rhs = np.array([inner_h(u0, f, ctx) for f in basis.fields])
    return np.linalg.solve(
        np.array([[inner_h(fi, fj, ctx) for fj in basis.fields] for fi in basis.fields]),
        rhs,
    )


def _rk4_extended(g, diss, fric, dt, sys: SystemMatrices, nu, alpha):
    def rates(gv):
        gdot = sys.rhs(gv, nu, alpha)
        ddot = 2.0 * nu * float(gv @ sys.diss @ gv)
        fdot = 2.0 * alpha * nu * float(gv @ sys.slip @ gv)
        return gdot, ddot, fdot

    k1 = rates(g)
    k2 = rates(g + 0.5 * dt * k1[0])
    k3 = rates(g + 0.5 * dt * k2[0])
    k4 = rates(g + dt * k3[0])
    gn = g + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    dn = diss + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    fn = fric + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return gn, dn, fn


def step(
    state: ViscousState,
    dt: float,
    ctx: FormsContext,
    sys: SystemMatrices,
    e0: float | None = None,
    ledger_tol: float = 1e-8,
    max_halvings: int = 20,
) -> ViscousState:
    """One RK4 step with energy-ledger control: on a slack violation the
    step re-runs at half the step size (recursively, capped)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nu, alpha = ctx.nu, ctx.alpha
    base = e0 if e0 is not None else state.energy(sys) + state.diss_cum + state.fric_cum
    gn, dn, fn = _rk4_extended(
        state.coeffs, state.diss_cum, state.fric_cum, dt, sys, nu, alpha
    )
    if not np.all(np.isfinite(gn)):
        raise FloatingPointError("non-finite coefficients: flagged blow-up")
    slack = base - (0.5 * float(gn @ sys.gram @ gn) + dn + fn)
    if slack < -ledger_tol * max(base, 1e-300):
        if state.halvings >= max_halvings:
            raise FloatingPointError(
                f"energy ledger violated after {max_halvings} halvings"
            )
        half = ViscousState(
            t=state.t, coeffs=state.coeffs, diss_cum=state.diss_cum,
            fric_cum=state.fric_cum, halvings=state.halvings + 1,
        )
        mid = step(half, dt / 2, ctx, sys, e0=base, ledger_tol=ledger_tol,
                   max_halvings=max_halvings)
        return step(mid, dt / 2, ctx, sys, e0=base, ledger_tol=ledger_tol,
                    max_halvings=max_halvings)
    return ViscousState(
        t=state.t + dt, coeffs=gn, diss_cum=dn, fric_cum=fn, halvings=state.halvings
    )


@dataclass
class Trajectory:
    times: np.ndarray
    coeffs: np.ndarray      # (nt, n)
    diss: np.ndarray
    fric: np.ndarray
    basis: GalerkinBasis
    nu: float
    alpha: float

    def body_velocity(self, idx: int) -> tuple[np.ndarray, np.ndarray]:
        return self.basis.rigid_part(self.coeffs[idx])

    def body_series(self) -> np.ndarray:
        """(nt, 6) array of (ell, rot) samples."""
        out = np.empty((len(self.times), 6))
        for i in range(len(self.times)):
            ell, rot = self.basis.rigid_part(self.coeffs[i])
            out[i, :3] = ell
            out[i, 3:] = rot
        return out


def run_viscous(
    basis: GalerkinBasis,
    sys: SystemMatrices,
    ctx: FormsContext,
    g0: np.ndarray,
    t_final: float,
    dt: float,
    ledger_tol: float = 1e-8,
) -> Trajectory:
    n_steps = int(round(t_final / dt))
    state = ViscousState(t=0.0, coeffs=np.asarray(g0, dtype=float).copy())
    times = [0.0]
    coeffs = [state.coeffs.copy()]
    diss = [0.0]
    fric = [0.0]
    e0 = state.energy(sys)
    for _ in range(n_steps):
        state = step(state, dt, ctx, sys, e0=None, ledger_tol=ledger_tol)
        times.append(state.t)
        coeffs.append(state.coeffs.copy())
        diss.append(state.diss_cum)
        fric.append(state.fric_cum)
    return Trajectory(
        times=np.array(times), coeffs=np.array(coeffs), diss=np.array(diss),
        fric=np.array(fric), basis=basis, nu=ctx.nu, alpha=ctx.alpha,
    )


def energy_report(traj: Trajectory, sys: SystemMatrices) -> dict:
    """Per-sample ledger: kinetic energy, cumulative dissipation terms and
    the inequality slack (initial energy minus the running total)."""
    nt = len(traj.times)
    half = np.empty(nt)
    for i in range(nt):
        g = traj.coeffs[i]
        half[i] = 0.5 * float(g @ sys.gram @ g)
    total = half + traj.diss + traj.fric
    slack = total[0] - total
    return {
        "t": traj.times,
        "half_h_norm_sq": half,
        "visc_dissipation": traj.diss,
        "friction_dissipation": traj.fric,
        "slack": slack,
        "min_slack": float(slack.min()),
        "initial_energy": float(total[0]),
    }


def body_rate_from_added_mass(
    coeffs: np.ndarray,
    ctx: FormsContext,
    kctx: KirchhoffContext,
    sys: SystemMatrices,
) -> np.ndarray:
    """(ell, rot) rate from the 6x6 virtual-inertia ODE: the six projected
    forces 2 nu a(u, v_i) + b(u, u, v_i) mapped through the added mass."""
    g = np.asarray(coeffs, dtype=float)
    forces = 2.0 * ctx.nu * (sys.stiffness(ctx.alpha) @ g)[:6]
    forces = forces + np.einsum("i,ikj,k->j", g, sys.advect[:, :, :6], g)
    return np.linalg.solve(kctx.added_mass, forces)
