"""Bounded open domains containing the origin.

A :class:`Domain` is one of four kinds: an axis-aligned box (centered,
given by its half-width), a ball, a polygon star-shaped about the origin,
or a bare membership predicate.  Domains know membership, volume, scaling
``R * Omega``, and (except for predicates) boundary quadrature rules that
resolve the surface measure and outward normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError

EPS = 1e-12

BOX = "box"
BALL = "ball"
STAR_POLYGON = "star-polygon"
MASK = "mask-function"


@dataclass(frozen=True)
class Domain:
    """Bounded open set containing 0.

    Parameters
    ----------
    kind : str
        One of ``box``, ``ball``, ``star-polygon``, ``mask-function``.
    dimension : int
        Ambient dimension d >= 1.
    half_width : float, optional
        Box half-width (box kind only).
    radius : float, optional
        Ball radius (ball kind only).
    vertices : ndarray, optional
        Polygon vertices in counterclockwise order, shape (m, 2).
        The polygon must be star-shaped with respect to the origin.
    predicate : callable, optional
        Membership test for mask-function domains.
    bounding_radius : float, optional
        Finite radius enclosing the domain (required for mask-function).
    """

    kind: str
    dimension: int
    half_width: float = 0.0
    radius: float = 0.0
    vertices: np.ndarray | None = None
    predicate: Callable[[np.ndarray], bool] | None = field(default=None, compare=False)
    bounding_radius: float = 0.0

    def __post_init__(self):
        if self.dimension < 1:
            raise PreconditionError(f"dimension must be >= 1, got {self.dimension}")
        if self.kind not in (BOX, BALL, STAR_POLYGON, MASK):
            raise PreconditionError(f"unknown domain kind {self.kind!r}")
        if self.kind == BOX and self.half_width <= 0:
            raise PreconditionError("box half-width must be positive")
        if self.kind == BALL and self.radius <= 0:
            raise PreconditionError("ball radius must be positive")
        if self.kind == STAR_POLYGON:
            v = self.vertices
            if v is None or v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise PreconditionError("star-polygon needs >= 3 planar vertices")
            if self.dimension != 2:
                raise PreconditionError("star-polygon domains are planar")
            if not _is_star_shaped(v):
                raise PreconditionError(
                    "vertex list is not star-shaped about the origin"
                )
        if self.kind == MASK:
            if self.predicate is None or self.bounding_radius <= 0:
                raise PreconditionError(
                    "mask-function domains need a predicate and a bounding radius"
                )
            if not self.predicate(np.zeros(self.dimension)):
                raise PreconditionError("domain must contain the origin")

    def descriptor(self) -> dict:
        """JSON-serializable description (mask predicates are named only)."""
        rec = {"kind": self.kind, "dimension": self.dimension}
        if self.kind == BOX:
            rec["half_width"] = self.half_width
        elif self.kind == BALL:
            rec["radius"] = self.radius
        elif self.kind == STAR_POLYGON:
            rec["vertices"] = [[float(a), float(b)] for a, b in self.vertices]
        else:
            rec["bounding_radius"] = self.bounding_radius
        return rec


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Nodes of a surface rule: points on the boundary, outward unit
    normals, and weights summing to the surface measure."""

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray


def box(half_width: float, dimension: int = 2) -> Domain:
    """Centered axis-aligned box (-w, w)^d."""
    return Domain(kind=BOX, dimension=dimension, half_width=float(half_width))


def ball(radius: float, dimension: int = 2) -> Domain:
    """Open ball of given radius about the origin."""
    return Domain(kind=BALL, dimension=dimension, radius=float(radius))


def star_polygon(vertices: Sequence[Sequence[float]]) -> Domain:
    """Planar polygon star-shaped about 0, vertices counterclockwise."""
    v = np.asarray(vertices, dtype=float)
    if _signed_area(v) < 0:
        v = v[::-1].copy()
    return Domain(kind=STAR_POLYGON, dimension=2, vertices=v)


def mask_domain(predicate, dimension: int, bounding_radius: float) -> Domain:
    """Domain given only by a membership predicate.

    Supports membership and approximate volume; boundary data is not
    recoverable from a predicate, so quadrature-based operations reject
    this kind.
    """
    return Domain(
        kind=MASK,
        dimension=dimension,
        predicate=predicate,
        bounding_radius=float(bounding_radius),
    )


def contains(domain: Domain, point) -> bool:
    """Membership in the open set."""
    x = np.asarray(point, dtype=float)
    if x.shape != (domain.dimension,):
        raise PreconditionError(
            f"point has shape {x.shape}, expected ({domain.dimension},)"
        )
    if domain.kind == BOX:
        return bool(np.all(np.abs(x) < domain.half_width))
    if domain.kind == BALL:
        return bool(x @ x < domain.radius**2)
    if domain.kind == MASK:
        return bool(domain.predicate(x))
    return _polygon_contains(domain.vertices, x)


def volume(domain: Domain, mask_spacing: float | None = None) -> float:
    """Lebesgue measure of the domain.

    Closed form for box and ball, shoelace for polygons.  For
    mask-function domains the value is a pixel count on a grid of the
    given spacing (default ``bounding_radius / 200``) and is approximate.
    """
    d = domain.dimension
    if domain.kind == BOX:
        return (2.0 * domain.half_width) ** d
    if domain.kind == BALL:
        return unit_ball_volume(d) * domain.radius**d
    if domain.kind == STAR_POLYGON:
        return _signed_area(domain.vertices)
    h = mask_spacing if mask_spacing is not None else domain.bounding_radius / 200.0
    return _counting_volume(domain, h)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def surface_measure(domain: Domain) -> float:
    """Exact boundary measure for box, ball, and polygon domains."""
    d = domain.dimension
    if domain.kind == BOX:
        w = 2.0 * domain.half_width
        return 2.0 * d * w ** (d - 1)
    if domain.kind == BALL:
        if d == 1:
            return 2.0
        return d * unit_ball_volume(d) * domain.radius ** (d - 1)
    if domain.kind == STAR_POLYGON:
        v = domain.vertices
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))
    raise PreconditionError("mask-function domains have no boundary data")


def scale(domain: Domain, R: float) -> Domain:
    """The dilation R * Omega, R > 0."""
    if R <= 0:
        raise PreconditionError(f"scale factor must be positive, got {R}")
    if domain.kind == BOX:
        return box(domain.half_width * R, domain.dimension)
    if domain.kind == BALL:
        return ball(domain.radius * R, domain.dimension)
    if domain.kind == STAR_POLYGON:
        return star_polygon(domain.vertices * R)
    inner = domain.predicate
    return mask_domain(
        lambda x, _p=inner, _R=R: _p(np.asarray(x, dtype=float) / _R),
        domain.dimension,
        domain.bounding_radius * R,
    )


def bounding_radius(domain: Domain) -> float:
    if domain.kind == BOX:
        return domain.half_width * math.sqrt(domain.dimension)
    if domain.kind == BALL:
        return domain.radius
    if domain.kind == STAR_POLYGON:
        return float(np.max(np.linalg.norm(domain.vertices, axis=1)))
    return domain.bounding_radius


def inradius(domain: Domain) -> float:
    """Radius of the largest origin-centered ball inside the domain."""
    if domain.kind == BOX:
        return domain.half_width
    if domain.kind == BALL:
        return domain.radius
    if domain.kind == STAR_POLYGON:
        v = domain.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
        return float(np.min(cross / np.linalg.norm(w - v, axis=1)))
    # predicate domains: probe along rays
    d = domain.dimension
    rng = np.random.default_rng(0)
    best = domain.bounding_radius
    for _ in range(64):
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        r = domain.bounding_radius
        while r > 1e-9 and not domain.predicate(r * u):
            r *= 0.5
        best = min(best, r)
    return best


def boundary_quadrature(domain: Domain, resolution: int) -> BoundaryQuadrature:
    """Surface rule whose total weight converges to the boundary measure.

    Ball: equal-angle nodes for d=2, latitude-longitude product rule for
    d=3.  Box and polygon: composite midpoint panels per face or edge.
    Mask-function domains are rejected.

    Parameters
    ----------
    resolution : int
        Nodes per face/edge axis (box, polygon) or total azimuthal count
        (ball).
    """
    if resolution < 1:
        raise PreconditionError("resolution must be >= 1")
    if domain.kind == MASK:
        raise PreconditionError("mask-function domains support no boundary rule")
    d = domain.dimension
    if domain.kind == BALL:
        return _ball_quadrature(domain.radius, d, resolution)
    if domain.kind == BOX:
        return _box_quadrature(domain.half_width, d, resolution)
    return _polygon_quadrature(domain.vertices, resolution)


# -- internals ---------------------------------------------------------------


def _signed_area(v: np.ndarray) -> float:
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]))


def _is_star_shaped(v: np.ndarray) -> bool:
    # every origin-fan triangle must have positive area (CCW ordering)
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]
    return bool(np.all(cross > 0))


def _polygon_contains(v: np.ndarray, x: np.ndarray) -> bool:
    # star-shaped fan: x = alpha*a + beta*b with alpha, beta >= 0 and
    # alpha + beta < 1 for some edge (a, b); cross products give the
    # barycentric coordinates scaled by cross(a, b) > 0
    w = np.roll(v, -1, axis=0)
    for a, b in zip(v, w):
        d1 = a[0] * x[1] - a[1] * x[0]
        d2 = x[0] * b[1] - x[1] * b[0]
        d3 = a[0] * b[1] - a[1] * b[0]
        if d1 >= 0 and d2 >= 0 and d1 + d2 < d3:
            return True
    return False


def _counting_volume(domain: Domain, h: float) -> float:
    rb = domain.bounding_radius
    kmax = int(math.ceil(rb / h)) + 1
    d = domain.dimension
    axes = [np.arange(-kmax, kmax + 1) * h] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    count = sum(1 for p in grid if domain.predicate(p))
    return count * h**d


def _ball_quadrature(r: float, d: int, resolution: int) -> BoundaryQuadrature:
    if d == 1:
        pts = np.array([[-r], [r]])
        nrm = np.array([[-1.0], [1.0]])
        wts = np.array([1.0, 1.0])
        return BoundaryQuadrature(pts, nrm, wts)
    if d == 2:
        theta = 2.0 * math.pi * (np.arange(resolution) + 0.5) / resolution
        nrm = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        pts = r * nrm
        wts = np.full(resolution, 2.0 * math.pi * r / resolution)
        return BoundaryQuadrature(pts, nrm, wts)
    if d == 3:
        # product rule: Gauss-Legendre in cos(polar), midpoint in azimuth
        n_mu = max(2, resolution // 2)
        mu, mu_w = np.polynomial.legendre.leggauss(n_mu)
        phi = 2.0 * math.pi * (np.arange(resolution) + 0.5) / resolution
        phi_w = 2.0 * math.pi / resolution
        s = np.sqrt(1.0 - mu**2)
        nrm = np.stack(
            [
                np.outer(s, np.cos(phi)).ravel(),
                np.outer(s, np.sin(phi)).ravel(),
                np.outer(mu, np.ones_like(phi)).ravel(),
            ],
            axis=1,
        )
        pts = r * nrm
        wts = (np.outer(mu_w, np.ones_like(phi)) * phi_w * r**2).ravel()
        return BoundaryQuadrature(pts, nrm, wts)
    raise PreconditionError(f"ball quadrature supports d <= 3, got d={d}")


def _box_quadrature(w: float, d: int, resolution: int) -> BoundaryQuadrature:
    if d == 1:
        pts = np.array([[-w], [w]])
        nrm = np.array([[-1.0], [1.0]])
        wts = np.array([1.0, 1.0])
        return BoundaryQuadrature(pts, nrm, wts)
    m = resolution
    ticks = w * (2.0 * (np.arange(m) + 0.5) / m - 1.0)
    face_axes = [np.stack(np.meshgrid(*([ticks] * (d - 1)), indexing="ij"), axis=-1)]
    face_pts = face_axes[0].reshape(-1, d - 1)
    panel = (2.0 * w / m) ** (d - 1)
    points, normals, weights = [], [], []
    for axis in range(d):
        for sgn in (-1.0, 1.0):
            p = np.zeros((len(face_pts), d))
            p[:, axis] = sgn * w
            other = [i for i in range(d) if i != axis]
            p[:, other] = face_pts
            n = np.zeros((len(face_pts), d))
            n[:, axis] = sgn
            points.append(p)
            normals.append(n)
            weights.append(np.full(len(face_pts), panel))
    return BoundaryQuadrature(
        np.concatenate(points), np.concatenate(normals), np.concatenate(weights)
    )


def _polygon_quadrature(v: np.ndarray, resolution: int) -> BoundaryQuadrature:
    w = np.roll(v, -1, axis=0)
    points, normals, weights = [], [], []
    s = (np.arange(resolution) + 0.5) / resolution
    for a, b in zip(v, w):
        edge = b - a
        length = float(np.hypot(edge[0], edge[1]))
        n = np.array([edge[1], -edge[0]]) / length
        pts = a[None, :] + s[:, None] * edge[None, :]
        points.append(pts)
        normals.append(np.tile(n, (resolution, 1)))
        weights.append(np.full(resolution, length / resolution))
    return BoundaryQuadrature(
        np.concatenate(points), np.concatenate(normals), np.concatenate(weights)
    )
