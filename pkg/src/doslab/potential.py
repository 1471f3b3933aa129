"""Bounded potentials and quadrature of functions of them over domains.

The central class of potentials is the radially homogeneous one,
V(t x) = V(x) for t > 0, fixed by an angular profile.  For these the
integral of any g(V) over a ball or a star-shaped polygon reduces
exactly to a boundary integral, which the quadrature routines exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import NumericalError, PreconditionError
from . import geometry

CONSTANT = "constant"
HOMOGENEOUS = "radially-homogeneous"
GENERAL = "general-bounded"

_QUAD_LIMIT = 200


@dataclass(frozen=True)
class Potential:
    """Bounded measurable potential with a declared bound M >= |V|.

    ``profile`` is evaluated on unit directions for the radially
    homogeneous kind and on raw points otherwise.  ``profile_vec`` is an
    optional vectorized form taking an (n, d) array.
    """

    kind: str
    bound: float
    name: str = "anonymous"
    value: float = 0.0
    profile: Callable[[np.ndarray], float] | None = field(default=None, compare=False)
    profile_vec: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )
    params: tuple = ()

    def descriptor(self) -> dict:
        rec = {"kind": self.kind, "name": self.name, "bound": self.bound}
        if self.kind == CONSTANT:
            rec["value"] = self.value
        if self.params:
            rec["params"] = list(self.params)
        return rec


def constant_potential(c: float) -> Potential:
    return Potential(kind=CONSTANT, bound=abs(float(c)), name="constant", value=float(c))


def example_potential(d: int = 2) -> Potential:
    """V(x) = |x1 x2| / (x1^2 + x2^2) on the first two coordinates.

    Radially homogeneous with bound 1/2 (by the arithmetic-geometric
    mean inequality).  Requires d >= 2.
    """
    if d < 2:
        raise PreconditionError("example potential needs d >= 2")

    def prof(u):
        q = u[0] * u[0] + u[1] * u[1]
        if q == 0.0:
            return 0.0
        return abs(u[0] * u[1]) / q

    def prof_vec(pts):
        q = pts[:, 0] ** 2 + pts[:, 1] ** 2
        out = np.zeros(len(pts))
        nz = q > 0
        out[nz] = np.abs(pts[nz, 0] * pts[nz, 1]) / q[nz]
        return out

    return Potential(
        kind=HOMOGENEOUS,
        bound=0.5,
        name="example",
        profile=prof,
        profile_vec=prof_vec,
    )


def angular_step_potential(width: float, height: float = 1.0) -> Potential:
    """Indicator of the planar angular sector 0 <= angle < width, scaled
    by ``height``.  Piecewise-continuous angular profile for
    shape-sensitivity demonstrations."""
    if not 0 < width <= 2 * math.pi:
        raise PreconditionError("sector width must lie in (0, 2*pi]")

    def prof(u):
        a = math.atan2(u[1], u[0]) % (2 * math.pi)
        return height if a < width else 0.0

    def prof_vec(pts):
        a = np.arctan2(pts[:, 1], pts[:, 0]) % (2 * math.pi)
        return np.where(a < width, height, 0.0)

    return Potential(
        kind=HOMOGENEOUS,
        bound=abs(height),
        name="angular-step",
        profile=prof,
        profile_vec=prof_vec,
        params=(float(width), float(height)),
    )


def from_function(f, bound: float, name: str = "custom") -> Potential:
    """General bounded potential from a pointwise function."""
    return Potential(kind=GENERAL, bound=float(bound), name=name, profile=f)


REGISTRY = {
    "example": lambda d=2: example_potential(d),
    "constant": lambda value=0.0: constant_potential(value),
    "angular-step": lambda width=math.pi / 2, height=1.0: angular_step_potential(
        width, height
    ),
}


def is_homogeneous(potential: Potential) -> bool:
    return potential.kind in (CONSTANT, HOMOGENEOUS)


def evaluate(potential: Potential, x) -> float:
    """V(x).  Radially homogeneous potentials return 0 at x = 0; the
    origin has measure zero, so the convention changes no integral.

    Homogeneous evaluation first divides by the largest component
    magnitude, then normalizes.  This avoids overflow for very large
    points and makes V(t x) = V(x) bit-exact whenever t x is itself
    exact (for instance t a power of two); for general t the forming of
    t x already rounds each component, so equality holds to a couple of
    ulp rather than exactly.
    """
    x = np.asarray(x, dtype=float)
    if potential.kind == CONSTANT:
        return potential.value
    if potential.kind == HOMOGENEOUS:
        m = np.max(np.abs(x))
        if m == 0.0:
            return 0.0
        u = x / m
        return float(potential.profile(u / math.sqrt(float(u @ u))))
    return float(potential.profile(x))


def evaluate_many(potential: Potential, pts: np.ndarray) -> np.ndarray:
    """Vectorized V over an (n, d) array of points."""
    pts = np.asarray(pts, dtype=float)
    if potential.kind == CONSTANT:
        return np.full(len(pts), potential.value)
    if potential.kind == HOMOGENEOUS:
        m = np.max(np.abs(pts), axis=1)
        out = np.zeros(len(pts))
        nz = m > 0
        u = pts[nz] / m[nz, None]
        u /= np.linalg.norm(u, axis=1)[:, None]
        if potential.profile_vec is not None:
            out[nz] = potential.profile_vec(u)
        else:
            out[nz] = [potential.profile(p) for p in u]
        return out
    if potential.profile_vec is not None:
        return np.asarray(potential.profile_vec(pts), dtype=float)
    return np.array([potential.profile(p) for p in pts])


def mean_over_domain(potential: Potential, domain, tol: float = 1e-9) -> float:
    """(1/|Omega|) integral of V over the domain, absolute error <= tol."""
    total, err = _integrate_of_v(potential, domain, lambda v: v, tol * _vol(domain))
    if err > tol * _vol(domain) * 1.01 + 1e-15:
        raise NumericalError(f"quadrature error estimate {err:.2e} above tolerance")
    return total / _vol(domain)


def exp_integral(potential: Potential, domain, t: float, tol: float = 1e-9) -> float:
    """Integral of exp(-t V(x)) over the domain, absolute error <= tol."""
    if t < 0:
        raise PreconditionError("t must be >= 0")
    if t == 0.0:
        return _vol(domain)
    total, err = _integrate_of_v(potential, domain, lambda v: math.exp(-t * v), tol)
    if err > tol * 1.01 + 1e-15:
        raise NumericalError(f"quadrature error estimate {err:.2e} above tolerance")
    return total


# -- quadrature internals ----------------------------------------------------


def _vol(domain) -> float:
    if domain.kind == geometry.MASK:
        raise PreconditionError("quadrature is not supported on mask-function domains")
    return geometry.volume(domain)


def _integrate_of_v(potential, domain, g, tol):
    """Integral of g(V(x)) over the domain with an error estimate.

    Dispatches on domain kind; radially homogeneous potentials use the
    exact radial reduction on balls and polygon fans.
    """
    if domain.kind == geometry.MASK:
        raise PreconditionError("quadrature is not supported on mask-function domains")
    if potential.kind == CONSTANT:
        return g(potential.value) * _vol(domain), 0.0
    if domain.kind == geometry.BOX:
        return _box_integral(potential, domain, g, tol)
    if domain.kind == geometry.BALL:
        return _ball_integral(potential, domain, g, tol)
    return _polygon_integral(potential, domain, g, tol)


def _box_integral(potential, domain, g, tol):
    w = domain.half_width
    d = domain.dimension
    # the absolute-value kinks of homogeneous profiles sit on the
    # coordinate hyperplanes; giving quad the breakpoint restores
    # smoothness per panel
    pts = [0.0]

    if d == 1:
        f = lambda x: g(evaluate(potential, (x,)))
        val, err = integrate.quad(f, -w, w, points=pts, limit=_QUAD_LIMIT,
                                  epsabs=tol, epsrel=0)
        return val, err

    if d == 2:
        def outer(x):
            inner = lambda y: g(evaluate(potential, (x, y)))
            v, _ = integrate.quad(inner, -w, w, points=pts, limit=_QUAD_LIMIT,
                                  epsabs=tol / (4 * w), epsrel=0)
            return v

        val, err = integrate.quad(outer, -w, w, points=pts, limit=_QUAD_LIMIT,
                                  epsabs=tol / 2, epsrel=0)
        return val, 2 * err + tol / 2

    if d == 3:
        def outer(x):
            def mid(y):
                inner = lambda z: g(evaluate(potential, (x, y, z)))
                v, _ = integrate.quad(inner, -w, w, points=pts, limit=_QUAD_LIMIT,
                                      epsabs=tol / (8 * w * w), epsrel=0)
                return v

            v, _ = integrate.quad(mid, -w, w, points=pts, limit=_QUAD_LIMIT,
                                  epsabs=tol / (8 * w), epsrel=0)
            return v

        val, err = integrate.quad(outer, -w, w, points=pts, limit=_QUAD_LIMIT,
                                  epsabs=tol / 2, epsrel=0)
        return val, 2 * err + tol / 2

    raise PreconditionError(f"box quadrature supports d <= 3, got d={d}")


def _ball_integral(potential, domain, g, tol):
    r = domain.radius
    d = domain.dimension

    if potential.kind == HOMOGENEOUS:
        # radial reduction: integral = (r^d / d) * integral of g(V) over
        # the unit sphere, exact because V is constant along rays
        radial = r**d / d
        sph, err = _sphere_integral(potential, d, g, tol / radial)
        return radial * sph, radial * err

    # general potential: radial Gauss times sphere product rule, with
    # one refinement step as the error estimate
    if d == 1:
        f = lambda x: g(evaluate(potential, (x,)))
        return integrate.quad(f, -r, r, limit=_QUAD_LIMIT, epsabs=tol, epsrel=0)[:2]
    coarse = _ball_product(potential, r, d, g, 48)
    fine = _ball_product(potential, r, d, g, 96)
    return fine, abs(fine - coarse)


def _sphere_integral(potential, d, g, tol):
    """Integral of g(V) over the unit sphere S^{d-1} with error estimate."""
    if d == 1:
        vals = g(evaluate(potential, np.array([1.0]))) + g(
            evaluate(potential, np.array([-1.0]))
        )
        return vals, 0.0
    if d == 2:
        f = lambda th: g(potential.profile(np.array([math.cos(th), math.sin(th)])))
        # quadrant boundaries are profile kink candidates
        val, err = integrate.quad(
            f, 0.0, 2 * math.pi,
            points=[math.pi / 2, math.pi, 3 * math.pi / 2],
            limit=_QUAD_LIMIT, epsabs=tol, epsrel=0,
        )
        return val, err
    if d == 3:
        def f_mu(mu):
            s = math.sqrt(max(0.0, 1.0 - mu * mu))

            def f_phi(phi):
                u = np.array([s * math.cos(phi), s * math.sin(phi), mu])
                return g(potential.profile(u))

            v, _ = integrate.quad(
                f_phi, 0.0, 2 * math.pi,
                points=[math.pi / 2, math.pi, 3 * math.pi / 2],
                limit=_QUAD_LIMIT, epsabs=tol / (4 * math.pi), epsrel=0,
            )
            return v

        val, err = integrate.quad(f_mu, -1.0, 1.0, points=[0.0],
                                  limit=_QUAD_LIMIT, epsabs=tol / 2, epsrel=0)
        return val, 2 * err + tol / 2
    raise PreconditionError(f"sphere quadrature supports d <= 3, got d={d}")


def _ball_product(potential, r, d, g, order):
    rho, rho_w = np.polynomial.legendre.leggauss(order)
    rho = 0.5 * r * (rho + 1.0)
    rho_w = 0.5 * r * rho_w
    q = geometry.boundary_quadrature(geometry.ball(1.0, d), 4 * order)
    total = 0.0
    for p, wr in zip(rho, rho_w):
        vals = evaluate_many(potential, p * q.points)
        total += wr * p ** (d - 1) * float(
            np.sum(q.weights * np.array([g(v) for v in vals]))
        )
    return total


def _polygon_integral(potential, domain, g, tol):
    v = domain.vertices
    w = np.roll(v, -1, axis=0)
    total = 0.0
    err_total = 0.0
    n_edges = len(v)
    for a, b in zip(v, w):
        cross = a[0] * b[1] - a[1] * b[0]
        if potential.kind == HOMOGENEOUS:
            # fan triangle (0, a, b): with x = rho (a + s (b - a)) the
            # Jacobian is rho * cross, and V depends on s only
            f = lambda s: g(evaluate(potential, a + s * (b - a)))
            val, err = integrate.quad(f, 0.0, 1.0, limit=_QUAD_LIMIT,
                                      epsabs=tol / (n_edges * cross), epsrel=0)
            total += 0.5 * cross * val
            err_total += 0.5 * cross * err
        else:
            def f2(s, rho):
                x = rho * (a + s * (b - a))
                return g(evaluate(potential, x)) * rho

            val, err = integrate.dblquad(
                f2, 0.0, 1.0, 0.0, 1.0,
                epsabs=tol / (n_edges * cross), epsrel=0,
            )
            total += cross * val
            err_total += cross * err
    return total, err_total
