"""Boundary-element solver for the exterior Laplace Neumann problem.

Direct (Green representation) collocation with flat triangles and
piecewise-constant boundary values: the surface potential solves

    (I/2 - W) phi = -V g

where W holds exact signed solid angles of the panels (double layer) and
V the exact single-layer panel potentials (edge log terms plus the
Van Oosterom-Strackee solid angle). Panel integrals are closed-form, so
the only error left is the collocation discretization itself. Internally
the solver works with the body-outward normal; callers converting to the
fluid-outward convention flip signs at the interface.
"""

from __future__ import annotations

import numpy as np

from .geometry import TriMesh


def _panel_frame(mesh: TriMesh):
    a, b, c = mesh.triangle_corners()
    n = np.cross(b - a, c - a)
    nn = np.linalg.norm(n, axis=1)
    nhat = n / nn[:, None]
    areas = 0.5 * nn
    edges = []
    for v0, v1 in ((a, b), (b, c), (c, a)):
        e = v1 - v0
        elen = np.linalg.norm(e, axis=1)
        ehat = e / elen[:, None]
        mhat = np.cross(ehat, nhat)  # in-plane outward edge normal
        edges.append((v0, v1, ehat, mhat))
    return (a, b, c), edges, nhat, areas


def panel_influence(targets: np.ndarray, mesh: TriMesh, chunk: int = 384):
    """Exact flat-panel influence matrices at the target points.

    Returns (V, W, G) with
      V[t, f] : single-layer value, integral of 1/(4 pi |x_t - y|)
      W[t, f] : double-layer value, integral of d/dn_y 1/(4 pi |x_t - y|)
                (the signed solid angle / 4 pi; principal value in-plane)
      G[t, f] : gradient of V with respect to x_t.
    """
    verts, edges, nhat, _ = _panel_frame(mesh)
    va, vb, vc = verts
    nt = targets.shape[0]
    nf = nhat.shape[0]
    vmat = np.empty((nt, nf))
    wmat = np.empty((nt, nf))
    gmat = np.empty((nt, nf, 3))
    for start in range(0, nt, chunk):
        stop = min(start + chunk, nt)
        p = targets[start:stop]
        m = p.shape[0]
        acc_v = np.zeros((m, nf))
        acc_g = np.zeros((m, nf, 3))
        z = np.einsum("mfd,fd->mf", p[:, None, :] - va[None, :, :], nhat)
        for v0, v1, ehat, mhat in edges:
            d0 = v0[None, :, :] - p[:, None, :]
            s0 = np.einsum("mfd,fd->mf", d0, ehat)
            s1 = np.einsum("mfd,fd->mf", v1[None, :, :] - p[:, None, :], ehat)
            h = np.einsum("mfd,fd->mf", d0, mhat)
            perp2 = np.maximum(np.einsum("mfd,mfd->mf", d0, d0) - s0**2, 0.0)
            r0 = np.sqrt(perp2 + s0**2)
            r1 = np.sqrt(perp2 + s1**2)
            num = r1 + s1
            den = r0 + s0
            tiny = 1e-300
            log_term = np.log(np.maximum(num, tiny) / np.maximum(den, tiny))
            bad = (num < 1e-14) | (den < 1e-14)
            log_term = np.where(bad, 0.0, log_term)
            acc_v += h * log_term
            acc_g -= log_term[:, :, None] * mhat[None, :, :]
        ra = va[None, :, :] - p[:, None, :]
        rb = vb[None, :, :] - p[:, None, :]
        rc = vc[None, :, :] - p[:, None, :]
        la = np.linalg.norm(ra, axis=-1)
        lb = np.linalg.norm(rb, axis=-1)
        lc = np.linalg.norm(rc, axis=-1)
        numer = np.abs(np.einsum("mfd,mfd->mf", ra, np.cross(rb, rc)))
        denom = (
            la * lb * lc
            + np.einsum("mfd,mfd->mf", ra, rb) * lc
            + np.einsum("mfd,mfd->mf", ra, rc) * lb
            + np.einsum("mfd,mfd->mf", rb, rc) * la
        )
        omega = 2.0 * np.arctan2(numer, denom)
        sz = np.where(np.abs(z) < 1e-12, 0.0, np.sign(z))
        vmat[start:stop] = (acc_v - np.abs(z) * omega) / (4.0 * np.pi)
        gmat[start:stop] = (acc_g - (sz * omega)[:, :, None] * nhat[None, :, :]) / (
            4.0 * np.pi
        )
        wmat[start:stop] = sz * omega / (4.0 * np.pi)
    return vmat, wmat, gmat


class BemPotential:
    """Exterior harmonic potential from the direct boundary representation:
    phi(x) = D[surface values](x) - S[neumann data](x)."""

    def __init__(self, mesh: TriMesh, surface_phi: np.ndarray, neumann: np.ndarray,
                 centroids: np.ndarray, areas: np.ndarray):
        self.mesh = mesh
        self.surface_phi = surface_phi
        self.neumann = neumann
        self._centroids = centroids
        self._areas = areas

    def phi_on_collocation(self) -> np.ndarray:
        return self.surface_phi

    def phi(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        v, w, _ = panel_influence(x, self.mesh)
        return w @ self.surface_phi - v @ self.neumann

    def grad(self, x: np.ndarray, h: float | None = None) -> np.ndarray:
        """Gradient off the surface; FD of the exact representation."""
        x = np.atleast_2d(x)
        if h is None:
            h = 1e-5 * max(1.0, float(np.linalg.norm(x, axis=1).max()))
        out = np.empty((x.shape[0], 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            out[:, j] = (self.phi(x + e) - self.phi(x - e)) / (2 * h)
        return out

    def hessian(self, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.empty((x.shape[0], 3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            out[:, :, j] = (self.grad(x + e) - self.grad(x - e)) / (2 * h)
        return out


class _BemWorkspace:
    _cache: dict = {}

    @classmethod
    def get(cls, mesh: TriMesh):
        key = id(mesh)
        if key not in cls._cache:
            cls._cache.clear()  # one mesh at a time is plenty
            a, b, c = mesh.triangle_corners()
            areas, body_n = mesh.areas_and_body_normals()
            centroids = (a + b + c) / 3.0
            vmat, wmat, _ = panel_influence(centroids, mesh)
            cls._cache[key] = (vmat, wmat, centroids, areas, body_n)
        return cls._cache[key]


def _solve_all_modes(mesh: TriMesh):
    """One factorization for all six Neumann modes; cached per mesh."""
    from .kirchhoff import SolverError, neumann_data

    vmat, wmat, centroids, areas, body_n = _BemWorkspace.get(mesh)
    key = ("modes", id(mesh))
    if key in _BemWorkspace._cache:
        return _BemWorkspace._cache[key]
    g = np.stack([neumann_data(i, centroids, body_n) for i in range(1, 7)], axis=1)
    lhs = 0.5 * np.eye(len(areas)) - wmat
    try:
        phi = np.linalg.solve(lhs, -vmat @ g)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(lhs)
        raise SolverError(f"BEM system singular (cond ~ {cond:.3e})") from exc
    residual = np.abs(lhs @ phi + vmat @ g).max()
    if not np.isfinite(residual) or residual > 1e-8 * max(1.0, np.abs(phi).max()):
        raise SolverError(f"BEM solve residual {residual:.3e} too large")
    _BemWorkspace._cache[key] = (phi, g, centroids, areas, body_n)
    return _BemWorkspace._cache[key]


def solve_exterior_neumann(mesh: TriMesh, i: int) -> BemPotential:
    """Surface potential for mode i; the Neumann datum is taken with the
    body-outward normal, which coincides with K_i in either convention."""
    phi, g, centroids, areas, _ = _solve_all_modes(mesh)
    return BemPotential(mesh, phi[:, i - 1], g[:, i - 1], centroids, areas)


def added_mass_from_bem(mesh: TriMesh) -> np.ndarray:
    """M2 for a mesh body via the boundary reduction with fluid-outward
    normals: M2[i,j] = sum of phi_j K_i(n_fluid) over panels."""
    from .kirchhoff import neumann_data

    phi, g, centroids, areas, body_n = _solve_all_modes(mesh)
    fluid_n = -body_n
    m2 = np.empty((6, 6))
    for i in range(6):
        ki = neumann_data(i + 1, centroids, fluid_n)
        for j in range(6):
            m2[i, j] = np.sum(areas * phi[:, j] * ki)
    return 0.5 * (m2 + m2.T)
