"""Trivariate polynomials and real solid harmonics.

Internal helper for the divergence-free spectral basis and for analytic
derivative/Laplacian evaluation. Polynomials are stored as exponent
triples -> coefficient maps and evaluated vectorized over point arrays.
"""

from __future__ import annotations

import math

import numpy as np


class Poly3:
    """Polynomial in (x, y, z) with exact differentiation."""

    __slots__ = ("coeffs", "_exps", "_c")

    def __init__(self, coeffs: dict[tuple[int, int, int], float]):
        self.coeffs = {e: float(c) for e, c in coeffs.items() if c != 0.0}
        if self.coeffs:
            items = sorted(self.coeffs.items())
            self._exps = np.array([e for e, _ in items], dtype=np.int64)
            self._c = np.array([c for _, c in items])
        else:
            self._exps = np.zeros((0, 3), dtype=np.int64)
            self._c = np.zeros(0)

    @classmethod
    def zero(cls) -> "Poly3":
        return cls({})

    @classmethod
    def monomial(cls, i: int, j: int, k: int, c: float = 1.0) -> "Poly3":
        return cls({(i, j, k): c})

    def __add__(self, other: "Poly3") -> "Poly3":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) + c
        return Poly3(out)

    def __sub__(self, other: "Poly3") -> "Poly3":
        return self + other.scale(-1.0)

    def scale(self, s: float) -> "Poly3":
        return Poly3({e: c * s for e, c in self.coeffs.items()})

    def __mul__(self, other: "Poly3") -> "Poly3":
        out: dict[tuple[int, int, int], float] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[e] = out.get(e, 0.0) + c1 * c2
        return Poly3(out)

    def diff(self, axis: int) -> "Poly3":
        out: dict[tuple[int, int, int], float] = {}
        for e, c in self.coeffs.items():
            if e[axis] > 0:
                ne = list(e)
                ne[axis] -= 1
                out[tuple(ne)] = out.get(tuple(ne), 0.0) + c * e[axis]
        return Poly3(out)

    def laplacian(self) -> "Poly3":
        return self.diff(0).diff(0) + self.diff(1).diff(1) + self.diff(2).diff(2)

    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at points x with shape (n, 3); returns (n,)."""
        x = np.asarray(x, dtype=float)
        if self._c.size == 0:
            return np.zeros(x.shape[0])
        # (n, nterm) monomial matrix; exponents are small so power is cheap
        mono = (
            x[:, 0:1] ** self._exps[None, :, 0]
            * x[:, 1:2] ** self._exps[None, :, 1]
            * x[:, 2:3] ** self._exps[None, :, 2]
        )
        return mono @ self._c


def _pi_lm(l: int, m: int) -> Poly3:
    # Homogeneous polynomial Pi_l^m(x) with r^{2k} z^{l-2k-m} terms.
    r2 = Poly3({(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0})
    out = Poly3.zero()
    for k in range((l - m) // 2 + 1):
        num = (-1) ** k * math.comb(l, k) * math.comb(2 * l - 2 * k, l)
        num *= math.factorial(l - 2 * k) // math.factorial(l - 2 * k - m)
        coef = num / 2.0**l
        term = Poly3.monomial(0, 0, l - 2 * k - m, coef)
        for _ in range(k):
            term = term * r2
        out = out + term
    return out


def _am_bm(m: int) -> tuple[Poly3, Poly3]:
    # Real/imaginary parts of (x + iy)^m.
    a = Poly3.zero()
    b = Poly3.zero()
    for p in range(m + 1):
        c = math.comb(m, p)
        q = m - p
        cr = math.cos(q * math.pi / 2.0)
        ci = math.sin(q * math.pi / 2.0)
        # cos/sin of multiples of pi/2 are exactly in {-1, 0, 1}
        cr = round(cr)
        ci = round(ci)
        if cr:
            a = a + Poly3.monomial(p, q, 0, c * cr)
        if ci:
            b = b + Poly3.monomial(p, q, 0, c * ci)
    return a, b


def real_solid_harmonic(l: int, m: int) -> Poly3:
    """Real solid harmonic r^l Y_lm as an exact polynomial, for |m| <= l.

    Normalized so the restrictions to the unit sphere are L2-orthonormal.
    The polynomial is harmonic: its exact Laplacian is zero.
    """
    am = abs(m)
    if am > l:
        raise ValueError("need |m| <= l")
    pi = _pi_lm(l, am)
    a, b = _am_bm(am)
    # Schmidt-style prefactor; combined with the spherical normalization below.
    norm = math.sqrt(
        (2 - (1 if am == 0 else 0)) * math.factorial(l - am) / math.factorial(l + am)
    )
    sph = math.sqrt((2 * l + 1) / (4.0 * math.pi))
    if m >= 0:
        return (pi * a).scale(norm * sph)
    return (pi * b).scale(norm * sph)


def solid_harmonics_up_to(lmax: int) -> list[tuple[int, int, Poly3]]:
    """All (l, m, polynomial) for 1 <= l <= lmax, ordered by (l, m)."""
    out = []
    for l in range(1, lmax + 1):
        for m in range(-l, l + 1):
            out.append((l, m, real_solid_harmonic(l, m)))
    return out


class PolyVec:
    """Vector field with polynomial components."""

    __slots__ = ("comps",)

    def __init__(self, comps: tuple[Poly3, Poly3, Poly3]):
        self.comps = comps

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.stack([p(x) for p in self.comps], axis=-1)

    def grad(self) -> list[list[Poly3]]:
        """J[i][j] = d comps[i] / d x_j."""
        return [[p.diff(j) for j in range(3)] for p in self.comps]

    def curl(self) -> "PolyVec":
        p, q, r = self.comps
        return PolyVec(
            (
                r.diff(1) - q.diff(2),
                p.diff(2) - r.diff(0),
                q.diff(0) - p.diff(1),
            )
        )

    def divergence(self) -> Poly3:
        return sum((self.comps[i].diff(i) for i in range(3)), Poly3.zero())


def grad_poly(p: Poly3) -> PolyVec:
    return PolyVec((p.diff(0), p.diff(1), p.diff(2)))


def cross_with_x(v: PolyVec) -> PolyVec:
    """v(x) x x, componentwise polynomial."""
    x = Poly3.monomial(1, 0, 0)
    y = Poly3.monomial(0, 1, 0)
    z = Poly3.monomial(0, 0, 1)
    p, q, r = v.comps
    return PolyVec((q * z - r * y, r * x - p * z, p * y - q * x))
