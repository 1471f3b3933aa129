"""Heat traces Tr exp(-t H) of discrete Hamiltonians.

Small operators use a dense eigendecomposition.  Large ones use
Hutchinson estimation with a Chebyshev polynomial approximant of the
exponential on the Gershgorin interval: for each +-1 probe z the
estimate is || q(H) z ||^2 = z^T q(H)^2 z, where q approximates
exp(-t lambda / 2).  Squaring the half-time polynomial halves the
degree a direct expansion of exp(-t lambda) would need and makes every
per-probe value positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.special import ive

from .errors import NumericalError, PreconditionError

DENSE_CAP = 4000
_BLOCK = 32

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    _HAVE_NUMBA = False


@dataclass(frozen=True)
class HeatTraceEstimate:
    """Value of Tr exp(-t H) with method and error metadata.

    ``truncation_bound`` bounds |value - Tr exp(-t H)| contributed by
    the polynomial approximation (N times its uniform error); it is 0
    for the dense method.  ``degree`` is the Chebyshev degree of the
    half-time polynomial actually iterated.
    """

    t: float
    value: float
    method: str
    stderr: float = 0.0
    truncation_bound: float = 0.0
    probes: int = 0
    degree: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.value <= 0:
            raise NumericalError(f"trace estimate must be positive, got {self.value}")


def eigen_dense(H) -> np.ndarray:
    """Full ascending spectrum of a symmetric operator, N <= DENSE_CAP."""
    m = getattr(H, "matrix", H)
    n = m.shape[0]
    if n > DENSE_CAP:
        raise PreconditionError(
            f"dense path capped at {DENSE_CAP} nodes, operator has {n}"
        )
    a = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
    return scipy.linalg.eigvalsh(a)


def heat_trace_dense(H, t: float) -> HeatTraceEstimate:
    """Sum of exp(-t lambda_i) over the full spectrum."""
    if t <= 0:
        raise PreconditionError("t must be positive")
    lam = eigen_dense(H)
    return HeatTraceEstimate(
        t=float(t), value=float(np.sum(np.exp(-t * lam))), method="dense"
    )


def chebyshev_halftime_coefficients(t: float, lo: float, hi: float):
    """Chebyshev coefficients of exp(-(t/2) lambda) on [lo, hi].

    Returns (coefficients c_0..c_K, absolute tail bounds); c_k =
    (2 - delta_k0) (-1)^k exp(-s c) I_k(s r) with s = t/2, c and r the
    interval center and half-width, evaluated stably through the
    exponentially scaled Bessel function.  tails[k] bounds the uniform
    error of truncating after degree k.
    """
    s = 0.5 * t
    c = 0.5 * (hi + lo)
    r = 0.5 * (hi - lo)
    z = s * r
    k_big = int(z + 12.0 * math.sqrt(max(z, 1.0)) + 60)
    k = np.arange(k_big + 1)
    base = ive(k, z) * math.exp(-s * lo)
    coeffs = np.where(k == 0, 1.0, 2.0) * ((-1.0) ** k) * base
    mags = np.abs(coeffs)
    if mags[-1] > 0 and mags[-2] > 0 and mags[-1] / mags[-2] > 0.5:
        raise NumericalError("Chebyshev coefficient range too short")
    # remainder beyond k_big, bounded by a geometric tail
    ratio = mags[-1] / mags[-2] if mags[-2] > 0 else 0.0
    rem = mags[-1] * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
    tails = np.concatenate([np.cumsum(mags[::-1])[::-1][1:], [0.0]]) + rem
    return coeffs, tails


def required_degree(t: float, lo: float, hi: float, tol: float) -> int:
    """Minimal half-time Chebyshev degree with uniform error below
    tol * exp(-(t/2) lo)."""
    _, tails = chebyshev_halftime_coefficients(t, lo, hi)
    tol_abs = tol * math.exp(-0.5 * t * lo)
    ok = np.nonzero(tails <= tol_abs)[0]
    if len(ok) == 0:
        raise NumericalError("tolerance unreachable within coefficient range")
    return int(ok[0])


def heat_trace_stochastic(
    H,
    t: float,
    probes: int = 64,
    seed: int = 0,
    degree: int | None = None,
    tol: float = 1e-7,
    threads: int = 1,
) -> HeatTraceEstimate:
    """Hutchinson estimate of Tr exp(-t H) from +-1 probe vectors.

    Each probe stream is seeded by the pair (seed, probe index), so the
    result does not depend on how probes are scheduled or blocked, and
    is bitwise independent of ``threads``.  If ``degree`` is given it must reach
    ``tol``; the error message reports the required degree.  stderr is
    the sample standard deviation over probes divided by sqrt(probes);
    truncation_bound is N times the uniform error bound of the squared
    polynomial approximant.
    """
    return heat_trace_stochastic_batch(
        H, [t], probes=probes, seed=seed, degree=degree, tol=tol, threads=threads
    )[0]


def heat_trace_stochastic_batch(
    H,
    ts,
    probes: int = 64,
    seed: int = 0,
    degree: int | None = None,
    tol: float = 1e-7,
    threads: int = 1,
) -> list[HeatTraceEstimate]:
    """Estimates for several t values from one shared probe sweep.

    The Chebyshev vectors T_k(y) z depend only on the operator, so all
    t values reuse the same recurrence; each t accumulates its own
    polynomial up to its own degree, making the batched result bitwise
    identical to separate single-t calls with the same seed.
    """
    ts = [float(x) for x in ts]
    if any(x <= 0 for x in ts):
        raise PreconditionError("t must be positive")
    if probes < 8:
        raise PreconditionError("at least 8 probes are required")
    lo, hi = H.spectral_interval()
    plans = []
    for t in ts:
        coeffs, tails = chebyshev_halftime_coefficients(t, lo, hi)
        tol_abs = tol * math.exp(-0.5 * t * lo)
        k_req = np.nonzero(tails <= tol_abs)[0]
        if len(k_req) == 0:
            raise NumericalError("tolerance unreachable within coefficient range")
        k_req = int(k_req[0])
        if degree is not None:
            if degree < k_req:
                raise NumericalError(
                    f"degree {degree} insufficient for tolerance {tol:g}; "
                    f"required degree {k_req}"
                )
            k_use = int(degree)
        else:
            k_use = k_req
        eps_half = float(tails[k_use])
        # |q^2 - exp(-t lambda)| <= eps (2 max|exp(-t lambda/2)| + eps)
        eps_sq = eps_half * (2.0 * math.exp(-0.5 * t * lo) + eps_half)
        plans.append((t, coeffs[: k_use + 1], k_use, eps_sq))
    k_max = max(p[2] for p in plans)

    use_stencil = (
        _HAVE_NUMBA
        and getattr(H, "grid", None) is not None
        and H.grid.dimension == 2
    )
    if use_stencil:
        per_probe = _sweep_stencil(H, plans, k_max, probes, seed, threads)
    else:
        per_probe = _sweep_csr(H, plans, k_max, probes, seed, threads)

    out = []
    for (t, _, k_use, eps_sq), vals in zip(plans, per_probe):
        mean = float(np.mean(vals))
        stderr = float(np.std(vals, ddof=1) / math.sqrt(probes))
        out.append(
            HeatTraceEstimate(
                t=t,
                value=mean,
                method="stochastic",
                stderr=stderr,
                truncation_bound=float(H.n * eps_sq),
                probes=int(probes),
                degree=int(k_use),
                seed=int(seed),
            )
        )
    return out


def stochastic_kernel_tag(H) -> str:
    """Identifier of the arithmetic path the stochastic estimator will
    take for this operator; cached results are keyed on it."""
    if _HAVE_NUMBA and getattr(H, "grid", None) is not None and H.grid.dimension == 2:
        return "stencil2d-f32"
    return "csr-f64"


# -- probe sweeps ------------------------------------------------------------


def _run_blocks(fn, starts, threads):
    starts = list(starts)
    if threads <= 1 or len(starts) <= 1:
        for s in starts:
            fn(s)
        return
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, starts))


def _probe_block(seed, start, count, n):
    cols = []
    for j in range(start, start + count):
        rng = np.random.default_rng([int(np.uint64(seed)), j])
        cols.append(rng.integers(0, 2, size=n, dtype=np.int8))
    z = np.stack(cols, axis=1).astype(np.float32)
    return 2.0 * z - 1.0


def _sweep_csr(H, plans, k_max, probes, seed, threads=1):
    m = H.matrix
    n = m.shape[0]
    lo, hi = H.spectral_interval()
    c = 0.5 * (hi + lo)
    r = 0.5 * (hi - lo)
    vals = [np.empty(probes) for _ in plans]

    def run_block(start):
        b = min(_BLOCK, probes - start)
        z = _probe_block(seed, start, b, n).astype(np.float64)
        t_prev = z
        t_cur = (m @ z - c * z) / r
        ws = [p[1][0] * z for p in plans]
        for w, p in zip(ws, plans):
            if p[2] >= 1:
                w += p[1][1] * t_cur
        for k in range(2, k_max + 1):
            t_next = 2.0 * ((m @ t_cur - c * t_cur) / r) - t_prev
            t_prev, t_cur = t_cur, t_next
            for w, p in zip(ws, plans):
                if k <= p[2]:
                    w += p[1][k] * t_cur
        for w, out in zip(ws, vals):
            out[start : start + b] = np.einsum("ib,ib->b", w, w)

    _run_blocks(run_block, range(0, probes, _BLOCK), threads)
    return vals


def _sweep_stencil(H, plans, k_max, probes, seed, threads=1):
    step_acc, first, init_w = _stencil_kernels()
    grid = H.grid
    idx, kmin = grid.index_grid()
    nx, ny = idx.shape
    lo, hi = H.spectral_interval()
    c = 0.5 * (hi + lo)
    r = 0.5 * (hi - lo)
    mask = (idx >= 0).astype(np.float32)
    maskp = np.zeros((nx + 2, ny + 2), dtype=np.float32)
    maskp[1:-1, 1:-1] = mask
    diag = np.zeros((nx, ny), dtype=np.float64)
    diag[idx >= 0] = (2.0 * grid.dimension * H.coupling + H.v_diag)[idx[idx >= 0]]
    diagp = np.zeros((nx + 2, ny + 2), dtype=np.float32)
    diagp[1:-1, 1:-1] = ((diag - c) / r).astype(np.float32)
    coup = np.float32(H.coupling / r)
    flat = (grid.lattice[:, 0] - kmin[0] + 1) * (ny + 2) + (
        grid.lattice[:, 1] - kmin[1] + 1
    )

    nt = len(plans)
    # coefficient table padded with zeros beyond each t's own degree
    ck = np.zeros((nt, k_max + 1), dtype=np.float32)
    act = np.zeros((nt, k_max + 1), dtype=np.uint8)
    for it, p in enumerate(plans):
        ck[it, : p[2] + 1] = p[1]
        act[it, : p[2] + 1] = 1

    vals = [np.empty(probes) for _ in plans]
    shape = (nx + 2, ny + 2)

    def run_block(start):
        b = min(_BLOCK, probes - start)
        zcols = _probe_block(seed, start, b, H.n)
        # borders stay zero: the kernels write interior cells only
        t_prev = np.zeros(shape + (b,), dtype=np.float32)
        t_prev.reshape(-1, b)[flat] = zcols
        t_cur = np.zeros_like(t_prev)
        first(t_prev, diagp, maskp, coup, t_cur)
        w = np.empty((nt,) + shape + (b,), dtype=np.float32)
        init_w(t_prev, t_cur, ck[:, 0], ck[:, 1], w)
        t_next = np.zeros_like(t_prev)
        for k in range(2, k_max + 1):
            step_acc(t_cur, t_prev, diagp, maskp, coup, t_next, w, ck[:, k], act[:, k])
            t_prev, t_cur, t_next = t_cur, t_next, t_prev
        for it, out in enumerate(vals):
            w64 = w[it].reshape(-1, b).astype(np.float64)
            out[start : start + b] = np.einsum("ib,ib->b", w64, w64)

    _run_blocks(run_block, range(0, probes, _BLOCK), threads)
    return vals


_KERNELS = None


def _stencil_kernels():
    global _KERNELS
    if _KERNELS is None:
        @njit(fastmath=True, cache=True, nogil=True)
        def first(u, diag, mask, coup, out):
            n0, n1, nb = u.shape
            for i in range(1, n0 - 1):
                for j in range(1, n1 - 1):
                    if mask[i, j] == 0.0:
                        for bb in range(nb):
                            out[i, j, bb] = 0.0
                    else:
                        d = diag[i, j]
                        for bb in range(nb):
                            out[i, j, bb] = d * u[i, j, bb] - coup * (
                                u[i - 1, j, bb]
                                + u[i + 1, j, bb]
                                + u[i, j - 1, bb]
                                + u[i, j + 1, bb]
                            )

        @njit(fastmath=True, cache=True, nogil=True)
        def init_w(t0, t1, c0, c1, w):
            nt = w.shape[0]
            n0, n1, nb = t0.shape
            for it in range(nt):
                a = c0[it]
                b = c1[it]
                for i in range(n0):
                    for j in range(n1):
                        for bb in range(nb):
                            w[it, i, j, bb] = a * t0[i, j, bb] + b * t1[i, j, bb]

        @njit(fastmath=True, cache=True, nogil=True)
        def step_acc(u, prev, diag, mask, coup, out, w, ck, act):
            n0, n1, nb = u.shape
            nt = w.shape[0]
            for i in range(1, n0 - 1):
                for j in range(1, n1 - 1):
                    if mask[i, j] == 0.0:
                        for bb in range(nb):
                            out[i, j, bb] = 0.0
                    else:
                        d = diag[i, j]
                        for bb in range(nb):
                            out[i, j, bb] = (
                                2.0
                                * (
                                    d * u[i, j, bb]
                                    - coup
                                    * (
                                        u[i - 1, j, bb]
                                        + u[i + 1, j, bb]
                                        + u[i, j - 1, bb]
                                        + u[i, j + 1, bb]
                                    )
                                )
                                - prev[i, j, bb]
                            )
                        for it in range(nt):
                            if act[it] != 0:
                                c = ck[it]
                                for bb in range(nb):
                                    w[it, i, j, bb] += c * out[i, j, bb]

        _KERNELS = (step_acc, first, init_w)
    return _KERNELS
