"""Finite-difference grids over domains and the sparse operator
hbar^2 (-Delta_h) + V with Dirichlet conditions by node omission.

Couplings to lattice neighbors outside the domain are simply dropped,
which realizes u = 0 outside, keeps the matrix symmetric, and preserves
the exact correspondence between the operator on a grown domain at
hbar = 1 and the operator on the unit domain at hbar = 1/R.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from . import geometry, potential as potential_mod
from .errors import NumericalError, PreconditionError

# lattice counts within this relative distance of a boundary hit are
# treated as ON the boundary and excluded, so that k*h == w up to
# rounding never produces a spurious node
_COLLISION_RTOL = 1e-9


class Grid:
    """Lattice points retained strictly inside a domain.

    Nodes sit at ``h * (k + offset)`` for integer vectors ``k``; the
    offset is 0 for boxes (classical interior rule) and 1/2 for other
    kinds so no node can land on the boundary.  Node order is
    lexicographic in ``k``, and ``index_of`` maps lattice vectors to
    contiguous indices 0..N-1.
    """

    def __init__(self, domain, h: float, lattice: np.ndarray, offset: float):
        self.domain = domain
        self.h = float(h)
        self.offset = float(offset)
        self.lattice = lattice
        self.n_nodes = len(lattice)
        self.dimension = domain.dimension
        self._key_strides, self._keys = _lattice_keys(lattice)

    def nodes(self) -> np.ndarray:
        """Coordinates of all nodes, shape (N, d)."""
        return self.h * (self.lattice + self.offset)

    def neighbor_indices(self, axis: int):
        """Pairs (i, j) of node indices adjacent along the given axis,
        with j the +1 neighbor of i; pairs where the neighbor fell
        outside the domain are absent."""
        shifted = self.lattice.copy()
        shifted[:, axis] += 1
        keys = _encode(shifted, self._key_strides)
        pos = np.searchsorted(self._keys, keys)
        pos = np.clip(pos, 0, len(self._keys) - 1)
        hit = self._keys[pos] == keys
        return np.nonzero(hit)[0], pos[hit]

    def index_grid(self):
        """Dense lattice-index lookup for d=2 grids: an (nx, ny) int32
        array holding node indices, -1 outside; plus the k-ranges."""
        if self.dimension != 2:
            raise PreconditionError("index_grid is for planar grids")
        kmin = self.lattice.min(axis=0)
        kmax = self.lattice.max(axis=0)
        shape = tuple(kmax - kmin + 1)
        idx = np.full(shape, -1, dtype=np.int32)
        idx[self.lattice[:, 0] - kmin[0], self.lattice[:, 1] - kmin[1]] = np.arange(
            self.n_nodes, dtype=np.int32
        )
        return idx, kmin


class DiscreteHamiltonian:
    """Sparse symmetric hbar^2 (-Delta_h) + diag(V) on a grid.

    ``matrix`` is CSR with sorted indices.  ``lambda_max`` is the
    Gershgorin bound 4 d hbar^2 / h^2 + M, valid for every eigenvalue.
    """

    def __init__(self, matrix, grid, hbar, coupling, v_diag, bound):
        self.matrix = matrix
        self.grid = grid
        self.hbar = float(hbar)
        self.h = grid.h
        self.n = matrix.shape[0]
        self.coupling = float(coupling)
        self.v_diag = v_diag
        self.potential_bound = float(bound)
        d = grid.dimension
        self.lambda_max = 4.0 * d * coupling + bound

    @property
    def dimension(self):
        return self.grid.dimension

    def spectral_interval(self):
        """[lo, hi] certainly containing the spectrum: the kinetic part
        is positive semidefinite, so lo = min(0, min V); hi is the
        Gershgorin bound."""
        lo = min(0.0, float(self.v_diag.min()))
        return lo, self.lambda_max


def build_grid(domain, h: float) -> Grid:
    """Retain lattice points strictly inside the domain.

    Box grids use the interior rule (nodes at k*h, so h = 2w/(n+1)
    yields exactly n nodes per axis); other kinds place nodes at
    h*(k + 1/2) so none can collide with the boundary.
    """
    if h <= 0:
        raise PreconditionError("spacing must be positive")
    if h >= 2.0 * geometry.inradius(domain):
        raise NumericalError(
            f"spacing {h} too coarse for inradius {geometry.inradius(domain):.3g}"
        )
    d = domain.dimension
    if domain.kind == geometry.BOX:
        lattice, offset = _box_lattice(domain.half_width, h, d)
    else:
        offset = 0.5
        rb = geometry.bounding_radius(domain)
        kmax = int(math.ceil(rb / h)) + 1
        rng = np.arange(-kmax, kmax)
        mesh = np.meshgrid(*([rng] * d), indexing="ij")
        lattice = np.stack([m.ravel() for m in mesh], axis=1)
        pts = h * (lattice + offset)
        if domain.kind == geometry.BALL:
            r2 = np.sum(pts * pts, axis=1)
            keep = r2 < domain.radius**2
            # near-exact boundary hits are ambiguous between scaled
            # copies of the same grid; drop them
            keep &= np.abs(r2 - domain.radius**2) > _COLLISION_RTOL * domain.radius**2
        else:
            keep = np.array([geometry.contains(domain, p) for p in pts])
        lattice = lattice[keep]
    if len(lattice) == 0:
        raise NumericalError("grid is empty at this spacing")
    order = np.lexsort(lattice.T[::-1])
    return Grid(domain, h, np.ascontiguousarray(lattice[order]), offset)


def assemble(grid: Grid, potential, hbar: float) -> DiscreteHamiltonian:
    """The (2d+1)-point stencil operator on the grid.

    Off-diagonal entries are -hbar^2/h^2 between lattice-adjacent
    retained nodes; diagonals are 2d hbar^2/h^2 + V(node).  Dropped
    neighbors impose the Dirichlet condition.
    """
    if hbar <= 0:
        raise PreconditionError("hbar must be positive")
    c = (hbar / grid.h) ** 2
    d = grid.dimension
    n = grid.n_nodes
    if potential_mod.is_homogeneous(potential):
        # homogeneous V ignores the scale factor h, and the lattice
        # vectors k + offset are exactly representable, so grids that
        # are scaled copies of each other get bitwise-equal potentials
        v = potential_mod.evaluate_many(potential, grid.lattice + grid.offset)
    else:
        v = potential_mod.evaluate_many(potential, grid.nodes())
    diag = 2.0 * d * c + v
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [diag]
    for axis in range(d):
        i, j = grid.neighbor_indices(axis)
        rows.extend([i, j])
        cols.extend([j, i])
        off = np.full(len(i), -c)
        vals.extend([off, off])
    H = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    H.sort_indices()
    return DiscreteHamiltonian(H, grid, hbar, c, v, potential.bound)


def rescaled_pair(domain, potential, R: float, h: float):
    """Discrete form of the growth-to-semiclassical correspondence.

    Returns ``(H_grown, H_semiclassical)``: the operator on R*Omega at
    hbar = 1 with spacing h*R, and the operator on Omega at hbar = 1/R
    with spacing h.  For radially homogeneous potentials the two are
    entrywise equal under the lattice-index bijection x <-> R x, because
    V(R x) = V(x) and (h R)^{-2} = R^{-2} h^{-2}.  Equality is exact up
    to floating rounding (<= 1e-15 per entry for tabulated spacings).

    Non-homogeneous potentials are rejected: for them the identity
    fails.
    """
    if R <= 0:
        raise PreconditionError("R must be positive")
    if not potential_mod.is_homogeneous(potential):
        raise PreconditionError(
            "rescaling requires a radially homogeneous potential"
        )
    grid_small = build_grid(domain, h)
    grid_big = build_grid(geometry.scale(domain, R), h * R)
    if not np.array_equal(grid_small.lattice, grid_big.lattice):
        raise NumericalError(
            "lattice membership differs between the scaled grids; "
            "choose a spacing with more boundary clearance"
        )
    H_semi = assemble(grid_small, potential, 1.0 / R)
    H_grown = assemble(grid_big, potential, 1.0)
    return H_grown, H_semi


def dump_coo(H: DiscreteHamiltonian) -> str:
    """Operator as sorted 'row col value' lines (debugging aid)."""
    coo = H.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [
        f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}"
        for k in order
    ]
    return "\n".join(lines)


# -- internals ---------------------------------------------------------------


def _box_lattice(w: float, h: float, d: int):
    q = w / h
    qr = round(q)
    if abs(q - qr) <= _COLLISION_RTOL * max(1.0, abs(q)):
        kmax = int(qr) - 1  # nodes at +-w excluded
    elif abs(q - math.floor(q) - 0.5) <= _COLLISION_RTOL * max(1.0, abs(q)):
        # half-integer w/h: the classical interior rule places nodes at
        # (k + 1/2) h, e.g. h = 2w/(n+1) with n even
        m = int(round(q - 0.5))
        rng = np.arange(-m, m)
        mesh = np.meshgrid(*([rng] * d), indexing="ij")
        return np.stack([mm.ravel() for mm in mesh], axis=1), 0.5
    else:
        kmax = int(math.floor(q))
    rng = np.arange(-kmax, kmax + 1)
    mesh = np.meshgrid(*([rng] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1), 0.0


def _lattice_keys(lattice: np.ndarray):
    kmin = lattice.min(axis=0)
    kmax = lattice.max(axis=0)
    spans = (kmax - kmin + 3).astype(np.int64)
    strides = np.ones(lattice.shape[1], dtype=np.int64)
    for a in range(lattice.shape[1] - 2, -1, -1):
        strides[a] = strides[a + 1] * spans[a + 1]
    keys = _encode(lattice, (strides, kmin))
    return (strides, kmin), keys


def _encode(lattice, strides_kmin):
    strides, kmin = strides_kmin
    return ((lattice - kmin + 1) @ strides).astype(np.int64)
