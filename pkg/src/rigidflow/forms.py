"""Inner product, dissipation and advection forms, identities, monitors.

All integrals are quadrature realizations over the truncated fluid domain.
The advective trilinear form is assembled in skew-symmetric form, which
makes the cancellation b(u, v, v) = 0 exact at the discrete level (the
determinant terms are antisymmetric already); consistency of the skew and
one-sided quadratures is covered by tests on compactly supported fields.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .fields import FieldH, solid_lifting
from .geometry import (
    CutoffField,
    QuadratureRule,
    RigidBodySpec,
    TruncationField,
    compute_inertia,
    cutoff_chi,
    make_quadrature,
    truncation_field,
)

_CTX_COUNTER = itertools.count(1)


@dataclass
class FormsContext:
    """Quadrature rules plus the physical parameters entering the forms."""

    spec: RigidBodySpec
    rule: QuadratureRule
    alpha: float
    nu: float
    m: float
    j0: np.ndarray
    chi: CutoffField
    chi_r: TruncationField
    tail_matrix: np.ndarray
    tail_matrix_grad: np.ndarray = None
    uid: int = dfield(default_factory=lambda: next(_CTX_COUNTER))

    def __post_init__(self):
        if self.alpha < 0 or self.nu <= 0:
            raise ValueError("need alpha >= 0 and nu > 0")

    # cached node access -------------------------------------------------
    @property
    def vol_nodes(self):
        return self.rule.volume.nodes

    @property
    def vol_w(self):
        return self.rule.volume.weights

    @property
    def surf(self):
        return self.rule.surface

    def vol_values(self, f: FieldH) -> np.ndarray:
        return f.values(self.vol_nodes, key=("vol", self.uid))

    def vol_gradients(self, f: FieldH) -> np.ndarray:
        return f.gradients(self.vol_nodes, key=("volg", self.uid))

    def surf_values(self, f: FieldH) -> np.ndarray:
        return f.values(self.surf.nodes, key=("surf", self.uid))

    def surf_gradients(self, f: FieldH) -> np.ndarray:
        return f.gradients(self.surf.nodes, key=("surfg", self.uid))


def make_context(
    spec: RigidBodySpec,
    alpha: float = 1.0,
    nu: float = 1e-2,
    surface_order: int = 24,
    radial_order: int = 14,
    truncation_radius: float = 12.0,
    support_radius: float = 4.0,
    cutoff_width: float | None = None,
    field_radius: float | None = None,
    volume_n_theta: int | None = None,
) -> FormsContext:
    """Build a context with quadrature panels aligned to all structural
    radii (cutoff collar edges, basis support edge)."""
    a = spec.bounding_radius()
    c = cutoff_width if cutoff_width is not None else 0.5 * a
    chi = cutoff_chi(spec, c)
    breaks = (*chi.breakpoints, support_radius)
    mid = 0.5 * (support_radius + truncation_radius)
    rule = make_quadrature(
        spec,
        surface_order=surface_order,
        radial_order=radial_order,
        truncation_radius=truncation_radius,
        radial_breaks=(*breaks, mid),
        volume_n_theta=volume_n_theta,
    )
    rfield = field_radius if field_radius is not None else 1.25 * truncation_radius
    chi_r = truncation_field(rfield, spec)
    m, _, j0 = compute_inertia(spec)
    if spec.shape == "sphere":
        from .kirchhoff import sphere_hessian_pair_tail, sphere_pair_tail

        tail = sphere_pair_tail(spec.radius, truncation_radius)
        tail_g = sphere_hessian_pair_tail(spec.radius, truncation_radius)
    else:
        tail = np.zeros((6, 6))
        tail_g = np.zeros((6, 6))
    return FormsContext(
        spec=spec, rule=rule, alpha=alpha, nu=nu, m=m, j0=j0, chi=chi,
        chi_r=chi_r, tail_matrix=tail, tail_matrix_grad=tail_g,
    )


# ----------------------------------------------------------------------
# Inner product and norms
# ----------------------------------------------------------------------


def inner_h(u: FieldH, v: FieldH, ctx: FormsContext) -> float:
    """(u, v): fluid L2 pairing + m l_u . l_v + J0 r_u . r_v.

    Fields carrying far-field dipole coefficients get the analytic tail
    of the truncated fluid integral added back."""
    uv = np.einsum("nd,nd->n", ctx.vol_values(u), ctx.vol_values(v))
    out = float(ctx.vol_w @ uv)
    if u.far_coeffs is not None and v.far_coeffs is not None:
        out += float(u.far_coeffs @ ctx.tail_matrix @ v.far_coeffs)
    out += ctx.m * float(u.ell @ v.ell) + float(u.rot @ (ctx.j0 @ v.rot))
    return out


def norm_h(u: FieldH, ctx: FormsContext) -> float:
    return math.sqrt(max(inner_h(u, u, ctx), 0.0))


def fluid_l2(u: FieldH, ctx: FormsContext) -> float:
    uu = np.einsum("nd,nd->n", ctx.vol_values(u), ctx.vol_values(u))
    out = float(ctx.vol_w @ uu)
    if u.far_coeffs is not None:
        out += float(u.far_coeffs @ ctx.tail_matrix @ u.far_coeffs)
    return math.sqrt(max(out, 0.0))


def grad_l2(u: FieldH, ctx: FormsContext, weighted: bool = False) -> float:
    g = ctx.vol_gradients(u)
    gg = np.einsum("nij,nij->n", g, g)
    if weighted:
        w = np.sqrt(1.0 + np.einsum("nd,nd->n", ctx.vol_nodes, ctx.vol_nodes))
        gg = gg * w
    out = float(ctx.vol_w @ gg)
    if not weighted and u.far_coeffs is not None and ctx.tail_matrix_grad is not None:
        out += float(u.far_coeffs @ ctx.tail_matrix_grad @ u.far_coeffs)
    return math.sqrt(max(out, 0.0))


def norm_vbar(u: FieldH, ctx: FormsContext) -> float:
    return norm_h(u, ctx) + grad_l2(u, ctx)


def norm_v(u: FieldH, ctx: FormsContext) -> float:
    return norm_h(u, ctx) + grad_l2(u, ctx, weighted=True)


def norm_vhat(u: FieldH, ctx: FormsContext, n_pairs: int = 2000, seed: int = 7) -> float:
    """norm_v plus a sampled Lipschitz seminorm over quadrature-node pairs."""
    rng = np.random.default_rng(seed)
    nodes = ctx.vol_nodes
    i = rng.integers(0, nodes.shape[0], size=n_pairs)
    j = rng.integers(0, nodes.shape[0], size=n_pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    vals = ctx.vol_values(u)
    num = np.linalg.norm(vals[i] - vals[j], axis=1)
    den = np.linalg.norm(nodes[i] - nodes[j], axis=1)
    lip = float(np.max(num / den)) if len(num) else 0.0
    return norm_v(u, ctx) + lip


def sym_grad(g: np.ndarray) -> np.ndarray:
    return 0.5 * (g + np.swapaxes(g, -1, -2))


# ----------------------------------------------------------------------
# Forms a and b
# ----------------------------------------------------------------------


def slip_values(u: FieldH, ctx: FormsContext) -> np.ndarray:
    """u - u_S at the surface nodes."""
    return ctx.surf_values(u) - u.rigid_values(ctx.surf.nodes)


def dissipation_pairing(u: FieldH, v: FieldH, ctx: FormsContext) -> float:
    """Volume integral of D(u):D(v) with the analytic dipole tail."""
    du = sym_grad(ctx.vol_gradients(u))
    dv = sym_grad(ctx.vol_gradients(v))
    out = float(ctx.vol_w @ np.einsum("nij,nij->n", du, dv))
    if (
        u.far_coeffs is not None
        and v.far_coeffs is not None
        and ctx.tail_matrix_grad is not None
    ):
        out += float(u.far_coeffs @ ctx.tail_matrix_grad @ v.far_coeffs)
    return out


def slip_pairing(u: FieldH, v: FieldH, ctx: FormsContext) -> float:
    su = slip_values(u, ctx)
    sv = slip_values(v, ctx)
    return float(ctx.surf.integrate(np.einsum("nd,nd->n", su, sv)))


def eval_a(u: FieldH, v: FieldH, ctx: FormsContext, alpha: float | None = None) -> float:
    """-alpha * boundary slip pairing - volume D(u):D(v)."""
    al = ctx.alpha if alpha is None else alpha
    out = -dissipation_pairing(u, v, ctx)
    if al != 0.0:
        out -= al * slip_pairing(u, v, ctx)
    return out


def _det_rows(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.einsum("nd,nd->n", a, np.cross(b, c))


def _advection_skew(adv: np.ndarray, v: FieldH, w: FieldH, ctx: FormsContext) -> float:
    vv = ctx.vol_values(v)
    wv = ctx.vol_values(w)
    gw = ctx.vol_gradients(w)
    gv = ctx.vol_gradients(v)
    t1 = np.einsum("nc,ncd,nd->n", vv, gw, adv)
    t2 = np.einsum("nc,ncd,nd->n", wv, gv, adv)
    return 0.5 * float(ctx.vol_w @ (t1 - t2))


def _b_common(u: FieldH, v: FieldH, w: FieldH, ctx: FormsContext, solid_vel: np.ndarray) -> float:
    # mass term ordered as the weak-form derivation (and the free-motion
    # oracle) demands: contracted against the test slot w it contributes
    # m l_w . (l_u ^ r_u)
    out = ctx.m * float(np.dot(u.rot, np.cross(w.ell, v.ell)))
    out += float(np.dot(ctx.j0 @ u.rot, np.cross(v.rot, w.rot)))
    adv = ctx.vol_values(u) - solid_vel
    out += _advection_skew(adv, v, w, ctx)
    vv = ctx.vol_values(v)
    wv = ctx.vol_values(w)
    det = np.cross(vv, wv) @ u.rot
    out -= float(ctx.vol_w @ det)
    return out


def eval_b(u: FieldH, v: FieldH, w: FieldH, ctx: FormsContext) -> float:
    """Trilinear advection form; the third argument must certify the
    weighted gradient integrability of the heavy test space."""
    if not w.in_weighted:
        raise ValueError("third argument of b must be certified weighted-integrable")
    solid = u.rigid_values(ctx.vol_nodes)
    return _b_common(u, v, w, ctx, solid)


def eval_b_truncated(
    u: FieldH, v: FieldH, w: FieldH, ctx: FormsContext, chi_r: TruncationField | None = None
) -> float:
    """b with the solid velocity truncated: l_u + r_u ^ chi_R(x)."""
    cr = chi_r if chi_r is not None else ctx.chi_r
    solid = u.ell[None, :] + np.cross(u.rot[None, :], cr(ctx.vol_nodes))
    return _b_common(u, v, w, ctx, solid)


def solid_lifting_field(ell, rot, ctx: FormsContext) -> FieldH:
    return solid_lifting(ell, rot, ctx.chi)


# ----------------------------------------------------------------------
# Identities and monitors
# ----------------------------------------------------------------------


def verify_useful_identity(u: FieldH, v: FieldH, ctx: FormsContext) -> dict:
    """Residual of the integration-by-parts identity relating the fluid
    Laplacian pairing to D(u):D(v) plus boundary terms.

    Needs Laplacian access on u. Returns lhs, rhs, residual and a scale.
    """
    lap = u.laplacians(ctx.vol_nodes, key=("voll", ctx.uid))
    lhs = float(ctx.vol_w @ np.einsum("nd,nd->n", lap, ctx.vol_values(v)))
    t_vol = -2.0 * dissipation_pairing(u, v, ctx)
    surf = ctx.surf
    dsu = sym_grad(ctx.surf_gradients(u))
    dn = np.einsum("nij,nj->ni", dsu, surf.normals)
    t_ell = 2.0 * float(v.ell @ surf.integrate(dn))
    t_rot = 2.0 * float(v.rot @ surf.integrate(np.cross(surf.nodes, dn)))
    slip_v = slip_values(v, ctx)
    t_slip = 2.0 * float(
        surf.integrate(
            np.einsum(
                "nd,nd->n",
                np.cross(dn, surf.normals),
                np.cross(slip_v, surf.normals),
            )
        )
    )
    rhs = t_vol + t_ell + t_rot + t_slip
    scale = max(abs(lhs), abs(t_vol), abs(t_ell), abs(t_rot), abs(t_slip), 1e-300)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "residual": abs(lhs - rhs),
        "scale": scale,
        "relative": abs(lhs - rhs) / scale,
    }


def interpolation_inequality(u: FieldH, ctx: FormsContext) -> dict:
    """L4 interpolation bound with constant sqrt(2) on the fluid side."""
    vals = ctx.vol_values(u)
    l4 = float(ctx.vol_w @ (np.einsum("nd,nd->n", vals, vals) ** 2)) ** 0.25
    l2 = fluid_l2(u, ctx)
    g2 = grad_l2(u, ctx)
    rhs = math.sqrt(2.0) * l2**0.25 * g2**0.75
    return {"lhs": l4, "rhs": rhs, "holds": l4 <= rhs * (1 + 1e-12)}


def wedge_bound_constant(j0: np.ndarray, n_grid: int = 4000, seed: int = 3) -> float:
    """C(J0) = max over unit r of |(J0 r) ^ r| / ((J0 r) . r)."""
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((n_grid, 3))
    r /= np.linalg.norm(r, axis=1)[:, None]
    jr = r @ j0.T
    num = np.linalg.norm(np.cross(jr, r), axis=1)
    den = np.einsum("nd,nd->n", jr, r)
    return float(np.max(num / den))


def wedge_inequality(j0: np.ndarray, r: np.ndarray, constant: float) -> dict:
    jr = j0 @ r
    lhs = float(np.linalg.norm(np.cross(jr, r)))
    rhs = constant * float(jr @ r)
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * (1 + 1e-9) + 1e-300}


def trace_inequality(f: FieldH, ctx: FormsContext, gammas=(0.25, 1.0, 4.0)) -> list[dict]:
    """Boundary trace bound report for divergence-free fields tangent to
    the boundary; reports the per-gamma constant that would make the
    stated bound an equality."""
    sv = ctx.surf_values(f)
    lhs = math.sqrt(float(ctx.surf.integrate(np.einsum("nd,nd->n", sv, sv))))
    l2 = fluid_l2(f, ctx)
    df = sym_grad(ctx.vol_gradients(f))
    d2 = float(ctx.vol_w @ np.einsum("nij,nij->n", df, df))
    rows = []
    for g in gammas:
        # lhs <= C g^{1/3} l2^{2/3} + d2 / (4 g) + C l2
        base = g ** (1.0 / 3.0) * l2 ** (2.0 / 3.0) + l2
        cfit = max((lhs - d2 / (4.0 * g)) / base, 0.0)
        rows.append({"gamma": g, "lhs": lhs, "l2": l2, "dsq": d2, "fitted_c": cfit})
    return rows


def b_continuity_ratio(u: FieldH, v: FieldH, w: FieldH, ctx: FormsContext) -> float:
    denom = norm_vbar(u, ctx) * norm_vbar(v, ctx) * norm_v(w, ctx)
    return abs(eval_b(u, v, w, ctx)) / max(denom, 1e-300)


def inequality_monitors(
    fields: list[FieldH], ctx: FormsContext, rotations: np.ndarray | None = None
) -> dict:
    """Monitor suite: interpolation inequality per field, wedge bound per
    sampled rotation, trace report for the first field."""
    interp = [interpolation_inequality(f, ctx) for f in fields]
    cwedge = wedge_bound_constant(ctx.j0)
    rows_wedge = []
    if rotations is not None:
        rows_wedge = [wedge_inequality(ctx.j0, r, cwedge) for r in rotations]
    trace = trace_inequality(fields[0], ctx) if fields else []
    return {
        "interpolation": interp,
        "interpolation_violations": sum(0 if row["holds"] else 1 for row in interp),
        "wedge_constant": cwedge,
        "wedge": rows_wedge,
        "wedge_violations": sum(0 if row["holds"] else 1 for row in rows_wedge),
        "trace": trace,
    }
