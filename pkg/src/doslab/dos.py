"""Density of states of Dirichlet Schrodinger operators on growing domains.

The object of study is the volume-normalized heat trace

    L(t) = (1/|R Omega|) Tr exp(-t (-Laplace + V))

on the dilated domain R*Omega with Dirichlet boundary conditions.  For
radially homogeneous V a change of variables turns the large-R limit
into a semiclassical one: the same trace equals
(hbar^d / |Omega|) Tr exp(-t (-hbar^2 Laplace + V)) on the fixed domain
with hbar = 1/R, which is what the sweep actually computes.  The limit
value is (4 pi t)^(-d/2) (1/|Omega|) int_Omega exp(-t V), implemented
exactly by quadrature in :func:`oracle_laplace`.

The integrated density of states N(lambda) is handled three ways:
counting eigenvalues of a moderate-size discretization, the closed form
for constant potentials, and boundary averages of that closed form.
Everything here reports enough metadata to recompute its own error
columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from . import geometry
from .discretize import assemble, build_grid
from .errors import DoslabError, NumericalError, PreconditionError
from .potential import (
    CONSTANT,
    constant_potential,
    evaluate_many,
    exp_integral,
    is_homogeneous,
)
from .spectral import (
    DENSE_CAP,
    HeatTraceEstimate,
    eigen_dense,
    heat_trace_stochastic_batch,
    stochastic_kernel_tag,
)

DEFAULT_TS = (0.25, 0.5, 1.0, 2.0)
DEFAULT_HBARS = (0.2, 0.1, 0.05)
DEFAULT_ETA = 0.1


@dataclass(frozen=True)
class TracePolicy:
    """How heat traces are computed inside sweeps.

    method "auto" takes the dense route for operators up to dense_cap
    nodes and the stochastic route above; "dense" and "stochastic"
    force one route.  degree, when set, fixes the Chebyshev degree of
    the stochastic estimator (and must reach tol).
    """

    method: str = "auto"
    dense_cap: int = DENSE_CAP
    probes: int = 256
    tol: float = 1e-7
    degree: int | None = None
    threads: int = 1

    def __post_init__(self):
        if self.method not in ("auto", "dense", "stochastic"):
            raise PreconditionError(f"unknown trace method {self.method!r}")
        if self.probes < 8:
            raise PreconditionError("policy needs at least 8 probes")

    def resolve(self, n: int) -> str:
        if self.method == "auto":
            return "dense" if n <= self.dense_cap else "stochastic"
        return self.method


def column_seed(seed: int, column: int) -> int:
    """Decorrelated per-column seed; deterministic in (seed, column)."""
    ss = np.random.SeedSequence([int(np.uint64(seed)), int(column)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _trace_key(domain, potential, hbar, t, h, method, seed, degree, probes, tol, kernel):
    return {
        "schema": "trace-v1",
        "domain": domain.descriptor(),
        "potential": potential.descriptor(),
        "hbar": float(hbar),
        "t": float(t),
        "h": float(h),
        "method": method,
        "seed": int(seed),
        "degree": -1 if degree is None else int(degree),
        "probes": int(probes),
        "tol": float(tol),
        "kernel": kernel,
    }


def column_traces(H, ts, policy, seed, cache=None, domain=None, potential=None):
    """Heat traces of one operator at several t, cache-aware.

    Returns a list of HeatTraceEstimate.  The dense route decomposes
    once and reuses the spectrum for every t; the stochastic route runs
    one shared probe sweep (bitwise equal to separate single-t calls).
    """
    ts = [float(t) for t in ts]
    method = policy.resolve(H.n)
    keyed = cache is not None and domain is not None and potential is not None
    if method == "dense":
        kernel = "dense"
        s_eff, deg, prb = 0, 0, 0
    else:
        kernel = stochastic_kernel_tag(H)
        s_eff, deg, prb = int(seed), policy.degree, policy.probes

    keys = {}
    out = {}
    if keyed:
        for t in ts:
            k = _trace_key(
                domain, potential, H.hbar, t, H.h, method, s_eff, deg, prb,
                policy.tol, kernel,
            )
            keys[t] = k
            hit = cache.get(k)
            if hit is not None:
                out[t] = hit
    missing = [t for t in ts if t not in out]

    if missing and method == "dense":
        if H.n > policy.dense_cap:
            raise PreconditionError(
                f"dense method forced on {H.n} nodes, cap is {policy.dense_cap}"
            )
        lam = eigen_dense(H)
        for t in missing:
            out[t] = HeatTraceEstimate(
                t=t, value=float(np.sum(np.exp(-t * lam))), method="dense"
            )
    elif missing:
        ests = heat_trace_stochastic_batch(
            H,
            missing,
            probes=policy.probes,
            seed=seed,
            degree=policy.degree,
            tol=policy.tol,
            threads=policy.threads,
        )
        for t, est in zip(missing, ests):
            out[t] = est
    if keyed:
        for t in missing:
            cache.put(keys[t], out[t])
    return [out[t] for t in ts]


def oracle_laplace(potential, domain, t: float, tol: float = 1e-9) -> float:
    """(4 pi t)^(-d/2) (1/|Omega|) int_Omega exp(-t V), by quadrature."""
    if t <= 0:
        raise PreconditionError("t must be positive")
    d = domain.dimension
    if potential.kind == CONSTANT:
        # skip the volume round trip so the value is bitwise shape-independent
        return (4.0 * math.pi * t) ** (-d / 2.0) * math.exp(-t * potential.value)
    vol = geometry.volume(domain)
    return (4.0 * math.pi * t) ** (-d / 2.0) * exp_integral(
        potential, domain, t, tol=tol * vol
    ) / vol


def finite_volume_laplace(
    domain,
    potential,
    R: float,
    t: float,
    policy: TracePolicy | None = None,
    eta: float = DEFAULT_ETA,
    seed: int = 0,
    cache=None,
) -> float:
    """Normalized heat trace on the dilated domain R*Omega.

    Homogeneous potentials go through the rescaled form on Omega with
    hbar = 1/R and spacing h = hbar*eta; general potentials are
    assembled directly on R*Omega with spacing eta (the same lattice).
    """
    if R <= 0:
        raise PreconditionError("R must be positive")
    policy = policy or TracePolicy()
    hbar = 1.0 / R
    if is_homogeneous(potential):
        grid = build_grid(domain, hbar * eta)
        H = assemble(grid, potential, hbar)
        est = column_traces(H, [t], policy, seed, cache, domain, potential)[0]
        return hbar**domain.dimension / geometry.volume(domain) * est.value
    scaled = geometry.scale(domain, R)
    grid = build_grid(scaled, eta)
    H = assemble(grid, potential, 1.0)
    est = column_traces(H, [t], policy, seed, cache, scaled, potential)[0]
    return est.value / geometry.volume(scaled)


@dataclass
class DOSReport:
    """Sweep result: normalized traces over a (t, hbar) table.

    ``L_columns[j][i]`` is the normalized trace at (ts[i], hbars[j]);
    arrays are stored one column per hbar.  A cell that failed holds
    None and its error string lives in the matching ``cells`` record.
    ``extrapolated`` is the hbar -> 0 Richardson value from the last
    two columns (None when ``raw``).
    """

    domain: dict
    potential: dict
    ts: list
    hbars: list
    eta: float
    volume: float
    seed: int
    method: str
    L_columns: list
    oracle: list
    extrapolated: list | None
    raw: bool
    cells: list = field(default_factory=list)

    def abs_discrepancy(self):
        """|L - oracle| per cell, same column layout; None where failed."""
        return [
            [None if v is None else abs(v - o) for v, o in zip(col, self.oracle)]
            for col in self.L_columns
        ]

    def rel_discrepancy(self):
        return [
            [None if v is None else abs(v - o) / o for v, o in zip(col, self.oracle)]
            for col in self.L_columns
        ]

    def extrapolated_rel_discrepancy(self):
        if self.extrapolated is None:
            return None
        return [
            None if v is None else abs(v - o) / o
            for v, o in zip(self.extrapolated, self.oracle)
        ]

    def json_obj(self, timestamp: str | None = None) -> dict:
        meta = {
            "kind": "dos-sweep",
            "domain": self.domain,
            "potential": self.potential,
            "eta": self.eta,
            "volume": self.volume,
            "seed": self.seed,
            "method": self.method,
            "raw": self.raw,
        }
        if timestamp is not None:
            meta["timestamp"] = timestamp
        return {
            "meta": meta,
            "arrays": {
                "t": list(self.ts),
                "hbar": list(self.hbars),
                "L_columns": self.L_columns,
                "oracle": self.oracle,
                "extrapolated": self.extrapolated,
                "abs_discrepancy_columns": self.abs_discrepancy(),
                "rel_discrepancy_columns": self.rel_discrepancy(),
                "extrapolated_rel_discrepancy": self.extrapolated_rel_discrepancy(),
            },
            "cells": self.cells,
        }

    def csv_rows(self):
        """One row per (t, hbar) cell, row-major in t."""
        rows = []
        rel = self.rel_discrepancy()
        for j, hb in enumerate(self.hbars):
            for i, t in enumerate(self.ts):
                cell = self.cells[j * len(self.ts) + i]
                rows.append(
                    {
                        "t": t,
                        "hbar": hb,
                        "h": cell.get("h"),
                        "n_nodes": cell.get("n_nodes"),
                        "method": cell.get("method"),
                        "L": self.L_columns[j][i],
                        "oracle": self.oracle[i],
                        "rel_discrepancy": rel[j][i],
                        "trace": cell.get("trace"),
                        "stderr": cell.get("stderr"),
                        "truncation_bound": cell.get("truncation_bound"),
                        "probes": cell.get("probes"),
                        "degree": cell.get("degree"),
                        "seed": cell.get("seed"),
                        "error": cell.get("error"),
                    }
                )
        return rows


CSV_COLUMNS = [
    "t", "hbar", "h", "n_nodes", "method", "L", "oracle", "rel_discrepancy",
    "trace", "stderr", "truncation_bound", "probes", "degree", "seed", "error",
]


def sweep(
    domain,
    potential,
    ts=DEFAULT_TS,
    hbars=DEFAULT_HBARS,
    eta: float = DEFAULT_ETA,
    policy: TracePolicy | None = None,
    seed: int = 0,
    cache=None,
    oracle_tol: float = 1e-9,
) -> DOSReport:
    """Normalized traces over a (t, hbar) table with oracle columns.

    hbars must be strictly descending; eta is the lattice-resolution
    ratio h/hbar, fixed across the sweep.  Cell failures are recorded
    per cell and the sweep continues.  Extrapolation assumes a leading
    O(hbar) error and uses the last two columns.
    """
    ts = [float(t) for t in ts]
    hbars = [float(h) for h in hbars]
    if not ts or not hbars:
        raise PreconditionError("t and hbar lists must be nonempty")
    if any(hbars[k + 1] >= hbars[k] for k in range(len(hbars) - 1)):
        raise PreconditionError("hbar list must be strictly descending")
    policy = policy or TracePolicy()
    vol = geometry.volume(domain)
    d = domain.dimension

    oracle = [oracle_laplace(potential, domain, t, tol=oracle_tol) for t in ts]

    L_columns = []
    cells = []
    for j, hb in enumerate(hbars):
        cseed = column_seed(seed, j)
        norm = hb**d / vol
        try:
            grid = build_grid(domain, hb * eta)
            H = assemble(grid, potential, hb)
            ests = column_traces(H, ts, policy, cseed, cache, domain, potential)
            col = [norm * e.value for e in ests]
            for t, e in zip(ts, ests):
                cells.append(
                    {
                        "t": t,
                        "hbar": hb,
                        "h": H.h,
                        "n_nodes": H.n,
                        "method": e.method,
                        "trace": e.value,
                        "stderr": e.stderr,
                        "truncation_bound": e.truncation_bound,
                        "probes": e.probes,
                        "degree": e.degree,
                        "seed": e.seed,
                        "error": None,
                    }
                )
        except DoslabError as exc:
            col = [None] * len(ts)
            for t in ts:
                cells.append(
                    {
                        "t": t,
                        "hbar": hb,
                        "h": hb * eta,
                        "n_nodes": None,
                        "method": None,
                        "trace": None,
                        "stderr": None,
                        "truncation_bound": None,
                        "probes": None,
                        "degree": None,
                        "seed": cseed,
                        "error": str(exc),
                    }
                )
        L_columns.append(col)

    raw = len(hbars) < 2
    extrapolated = None
    if not raw:
        h1, h2 = hbars[-2], hbars[-1]
        extrapolated = []
        for i in range(len(ts)):
            a, b = L_columns[-2][i], L_columns[-1][i]
            if a is None or b is None:
                extrapolated.append(None)
            else:
                extrapolated.append((h1 * b - h2 * a) / (h1 - h2))

    return DOSReport(
        domain=domain.descriptor(),
        potential=potential.descriptor(),
        ts=ts,
        hbars=hbars,
        eta=eta,
        volume=vol,
        seed=int(seed),
        method=policy.method,
        L_columns=L_columns,
        oracle=oracle,
        extrapolated=extrapolated,
        raw=raw,
        cells=cells,
    )


# -- integrated density of states --------------------------------------------


def free_ids(lam, c: float, d: int):
    """(4 pi)^(-d/2) / Gamma(d/2 + 1) * max(lam - c, 0)^(d/2).

    Number of states per unit volume below lam for the constant
    potential c.  Accepts scalars or arrays in lam.
    """
    coef = (4.0 * math.pi) ** (-d / 2.0) / math.gamma(d / 2.0 + 1.0)
    x = np.maximum(np.asarray(lam, dtype=float) - c, 0.0)
    out = coef * x ** (d / 2.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IDSCurve:
    """Nondecreasing state-count curve lambda -> N(lambda).

    provenance is one of "empirical-counting", "surface-average-uniform",
    "surface-average-weighted", "free-constant".  vmin is a lower bound
    of the potential, used for the Laplace tail bound; ``complete``
    marks curves whose grid already contains all spectral mass.
    """

    lambdas: np.ndarray
    values: np.ndarray
    provenance: str
    dimension: int
    vmin: float = 0.0
    complete: bool = False

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        val = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "values", val)
        if lam.ndim != 1 or lam.shape != val.shape or lam.size < 1:
            raise PreconditionError("curve needs matching 1-D lambda/value arrays")
        if np.any(np.diff(lam) < 0):
            raise NumericalError("lambda grid must be ascending")
        if np.any(val < 0) or np.any(np.diff(val) < 0):
            raise NumericalError("curve values must be nonnegative and nondecreasing")

    def csv_text(self) -> str:
        lines = ["lambda,value"]
        for a, b in zip(self.lambdas, self.values):
            lines.append(f"{a:.17g},{b:.17g}")
        return "\n".join(lines) + "\n"


def surface_average_ids(
    potential, domain, lambdas, variant: str = "uniform", resolution: int = 2048
) -> IDSCurve:
    """Boundary average of the constant-potential state count.

    uniform: (1/|bd Omega|) sum w(s) free_ids(lam, V(s), d).
    cone-weighted: (1/|Omega|) sum w(s) (s.n(s)/d) free_ids(lam, V(s), d),
    the weight produced by radial integration over the cone of each
    boundary patch.  The two coincide whenever s.n is constant on the
    boundary (balls, centered boxes).
    """
    if variant not in ("uniform", "cone-weighted"):
        raise PreconditionError(f"unknown variant {variant!r}")
    if not is_homogeneous(potential):
        raise PreconditionError("surface averaging needs a radially homogeneous potential")
    bq = geometry.boundary_quadrature(domain, resolution)
    d = domain.dimension
    cvals = evaluate_many(potential, bq.points)
    if variant == "uniform":
        wts = bq.weights / np.sum(bq.weights)
    else:
        sn = np.sum(bq.points * bq.normals, axis=1)
        wts = bq.weights * sn / (d * geometry.volume(domain))
    lam = np.asarray(lambdas, dtype=float)
    values = np.zeros_like(lam)
    step = max(1, int(2**22 // max(len(cvals), 1)))
    coef = (4.0 * math.pi) ** (-d / 2.0) / math.gamma(d / 2.0 + 1.0)
    for a in range(0, len(lam), step):
        chunk = lam[a : a + step, None] - cvals[None, :]
        np.maximum(chunk, 0.0, out=chunk)
        values[a : a + step] = coef * (chunk ** (d / 2.0)) @ wts
    name = "surface-average-uniform" if variant == "uniform" else "surface-average-weighted"
    return IDSCurve(
        lambdas=lam,
        values=values,
        provenance=name,
        dimension=d,
        vmin=float(np.min(cvals)),
    )


def empirical_ids(domain, potential, R: float, lambdas, spacing: float | None = None) -> IDSCurve:
    """Eigenvalue counting on a discretization of R*Omega.

    The full spectrum is needed, so the grid is kept at or under the
    dense cap; ``spacing`` overrides the automatic choice and must
    still fit the cap.
    """
    scaled = geometry.scale(domain, float(R))
    d = domain.dimension
    if spacing is None:
        h = (geometry.volume(scaled) / DENSE_CAP) ** (1.0 / d)
        while True:
            grid = build_grid(scaled, h)
            if grid.n_nodes <= DENSE_CAP:
                break
            h *= 1.05
    else:
        grid = build_grid(scaled, float(spacing))
        if grid.n_nodes > DENSE_CAP:
            raise PreconditionError(
                f"spacing {spacing} gives {grid.n_nodes} nodes, cap is {DENSE_CAP}"
            )
    H = assemble(grid, potential, 1.0)
    lam_all = eigen_dense(H)
    lam = np.asarray(lambdas, dtype=float)
    counts = np.searchsorted(lam_all, lam, side="right")
    vol = geometry.volume(scaled)
    vmin = float(min(np.min(H.v_diag), 0.0)) if H.n else 0.0
    return IDSCurve(
        lambdas=lam,
        values=counts / vol,
        provenance="empirical-counting",
        dimension=d,
        vmin=vmin,
        complete=bool(lam.size and lam[-1] >= lam_all[-1]),
    )


def free_ids_curve(c: float, d: int, lambdas) -> IDSCurve:
    lam = np.asarray(lambdas, dtype=float)
    return IDSCurve(
        lambdas=lam,
        values=free_ids(lam, c, d),
        provenance="free-constant",
        dimension=d,
        vmin=float(c),
    )


def laplace_tail_bound(curve: IDSCurve, t: float) -> float:
    """Upper bound on the state-count mass ignored beyond the grid.

    Uses the constant-potential envelope N(lam) <= free_ids(lam, vmin, d);
    the neglected integral then has the closed form
    (4 pi t)^(-d/2) e^(-t vmin) Q(d/2, t (lam_max - vmin)) with Q the
    regularized upper incomplete gamma function.
    """
    if curve.complete:
        return 0.0
    d = curve.dimension
    full = (4.0 * math.pi * t) ** (-d / 2.0) * math.exp(-t * curve.vmin)
    x = t * (float(curve.lambdas[-1]) - curve.vmin)
    if x <= 0:
        return full
    return full * float(gammaincc(d / 2.0, x))


def laplace_of_ids(curve: IDSCurve, t: float, tail_tol: float | None = None) -> float:
    """Stieltjes integral int e^(-t lam) dN over the stored curve.

    Increments of N are exact; the exponential is taken at interval
    midpoints, so jumps at repeated grid points are reproduced exactly.
    Mass already present at the first grid point counts as an atom
    there.  The neglected tail is bounded by laplace_tail_bound; pass
    tail_tol to make an excessive tail an error.
    """
    if t <= 0:
        raise PreconditionError("t must be positive")
    lam = curve.lambdas
    val = curve.values
    total = float(val[0]) * math.exp(-t * float(lam[0]))
    if lam.size > 1:
        mids = 0.5 * (lam[1:] + lam[:-1])
        total += float(np.exp(-t * mids) @ np.diff(val))
    tail = laplace_tail_bound(curve, t)
    if tail_tol is not None and tail > tail_tol:
        raise NumericalError(
            f"Laplace tail bound {tail:g} exceeds allowance {tail_tol:g}; "
            "extend the lambda grid"
        )
    return total


# -- mean extraction and the shape comparison --------------------------------


def extract_mean(ts, values, d: int) -> float:
    """Potential mean recovered from small-t heat-trace values.

    g(t) = -log((4 pi t)^(d/2) L(t)) / t tends to the domain mean of V
    as t -> 0 and equals it identically for constant potentials; the
    linear-in-t error term is removed by two-point extrapolation over
    the two smallest t values.
    """
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if ts.size != values.size or ts.size < 1:
        raise PreconditionError("need matching nonempty t and value lists")
    if np.any(values <= 0):
        raise NumericalError("heat-trace values must be positive")
    order = np.argsort(ts)
    t1 = float(ts[order[0]])
    g1 = -math.log((4.0 * math.pi * t1) ** (d / 2.0) * values[order[0]]) / t1
    if ts.size == 1:
        return g1
    t2 = float(ts[order[1]])
    g2 = -math.log((4.0 * math.pi * t2) ** (d / 2.0) * values[order[1]]) / t2
    if t2 <= t1:
        raise PreconditionError("fit needs two distinct t values")
    return (t2 * g1 - t1 * g2) / (t2 - t1)


def _paired_mean(domain, potential, hbar, fit_ts, eta, policy, seed, cache):
    """Mean extraction with the free trace as discrete normalizer.

    The free operator on the same grid replaces (4 pi t)^(d/2):
    g(t) = -log(T_V(t)/T_0(t)) / t.  Lattice and boundary systematics
    common to both traces cancel; for constant V the ratio is exact at
    every t.  Both traces use the same probe streams.
    """
    grid = build_grid(domain, hbar * eta)
    H_v = assemble(grid, potential, hbar)
    H_0 = assemble(grid, constant_potential(0.0), hbar)
    tv = column_traces(H_v, fit_ts, policy, seed, cache, domain, potential)
    t0 = column_traces(H_0, fit_ts, policy, seed, cache, domain, constant_potential(0.0))
    ghat = [
        -math.log(a.value / b.value) / t for t, a, b in zip(fit_ts, tv, t0)
    ]
    t1, t2 = fit_ts
    mean = (t2 * ghat[0] - t1 * ghat[1]) / (t2 - t1)
    detail = {
        "fit_ts": list(fit_ts),
        "ghat": ghat,
        "traces_v": [e.value for e in tv],
        "traces_free": [e.value for e in t0],
        "stderr_v": [e.stderr for e in tv],
        "stderr_free": [e.stderr for e in t0],
        "hbar": hbar,
        "n_nodes": H_v.n,
        "method": tv[0].method,
    }
    return mean, detail


@dataclass
class ComparisonReport:
    """Shape-dependence comparison of two domains under one potential."""

    domain_a: dict
    domain_b: dict
    potential: dict
    ts: list
    hbars: list
    eta: float
    fit_ts: list
    threshold: float
    seed: int
    oracle_laplace_a: list
    oracle_laplace_b: list
    oracle_mean_a: float
    oracle_mean_b: float
    empirical_mean_a: float
    empirical_mean_b: float
    extrapolated_a: list | None
    extrapolated_b: list | None
    sweep_a: DOSReport
    sweep_b: DOSReport
    paired_a: dict
    paired_b: dict

    @property
    def oracle_gap(self) -> float:
        return abs(self.oracle_mean_a - self.oracle_mean_b)

    @property
    def empirical_gap(self) -> float:
        return abs(self.empirical_mean_a - self.empirical_mean_b)

    @property
    def oracle_differ(self) -> bool:
        return self.oracle_gap > self.threshold

    @property
    def empirical_differ(self) -> bool:
        return self.empirical_gap > self.threshold

    def json_obj(self, timestamp: str | None = None) -> dict:
        meta = {
            "kind": "shape-comparison",
            "domain_a": self.domain_a,
            "domain_b": self.domain_b,
            "potential": self.potential,
            "eta": self.eta,
            "seed": self.seed,
            "threshold": self.threshold,
        }
        if timestamp is not None:
            meta["timestamp"] = timestamp
        return {
            "meta": meta,
            "arrays": {
                "t": list(self.ts),
                "hbar": list(self.hbars),
                "fit_t": list(self.fit_ts),
                "oracle_laplace_a": self.oracle_laplace_a,
                "oracle_laplace_b": self.oracle_laplace_b,
                "extrapolated_a": self.extrapolated_a,
                "extrapolated_b": self.extrapolated_b,
            },
            "means": {
                "oracle_a": self.oracle_mean_a,
                "oracle_b": self.oracle_mean_b,
                "oracle_gap": self.oracle_gap,
                "oracle_differ": self.oracle_differ,
                "empirical_a": self.empirical_mean_a,
                "empirical_b": self.empirical_mean_b,
                "empirical_gap": self.empirical_gap,
                "empirical_differ": self.empirical_differ,
            },
            "paired": {"a": self.paired_a, "b": self.paired_b},
            "sweeps": {
                "a": self.sweep_a.json_obj(),
                "b": self.sweep_b.json_obj(),
            },
        }


def counterexample(
    domain_a=None,
    domain_b=None,
    potential=None,
    ts=(0.4, 0.8),
    hbars=(0.1, 0.05),
    eta: float = DEFAULT_ETA,
    policy: TracePolicy | None = None,
    seed: int = 0,
    cache=None,
    fit_ts=(0.05, 0.1),
    threshold: float = 0.014,
) -> ComparisonReport:
    """Box-vs-ball demonstration that the DOS depends on domain shape.

    Oracle side: means extracted from exact quadrature values at
    ``fit_ts``.  Empirical side: sweeps over (ts, hbars) per domain,
    plus a discretized mean extraction at the smallest hbar using the
    two smallest t values with paired free-trace normalization.  The
    ``differ`` flags compare the mean gaps against ``threshold``.
    """
    from .potential import example_potential  # default argument only

    domain_a = domain_a or geometry.box(1.0, dimension=2)
    domain_b = domain_b or geometry.ball(1.0, dimension=2)
    potential = potential or example_potential()
    if domain_a.dimension != domain_b.dimension:
        raise PreconditionError("domains must share a dimension")
    if not is_homogeneous(potential):
        raise PreconditionError("the comparison needs a radially homogeneous potential")
    policy = policy or TracePolicy()
    ts = sorted(float(t) for t in ts)
    if len(ts) < 2:
        raise PreconditionError("comparison needs at least two t values")
    fit_ts = sorted(float(t) for t in fit_ts)
    if len(fit_ts) != 2:
        raise PreconditionError("oracle fit needs exactly two t values")
    d = domain_a.dimension

    oracle_a = [oracle_laplace(potential, domain_a, t) for t in ts]
    oracle_b = [oracle_laplace(potential, domain_b, t) for t in ts]
    fit_a = [oracle_laplace(potential, domain_a, t) for t in fit_ts]
    fit_b = [oracle_laplace(potential, domain_b, t) for t in fit_ts]
    mean_a = extract_mean(fit_ts, fit_a, d)
    mean_b = extract_mean(fit_ts, fit_b, d)

    sweep_a = sweep(domain_a, potential, ts, hbars, eta, policy, seed, cache)
    sweep_b = sweep(domain_b, potential, ts, hbars, eta, policy, seed, cache)

    pair_t = ts[:2]
    hb = hbars[-1]
    emp_a, paired_a = _paired_mean(
        domain_a, potential, hb, pair_t, eta, policy,
        column_seed(seed, len(hbars) - 1), cache,
    )
    emp_b, paired_b = _paired_mean(
        domain_b, potential, hb, pair_t, eta, policy,
        column_seed(seed, len(hbars) - 1), cache,
    )

    return ComparisonReport(
        domain_a=domain_a.descriptor(),
        domain_b=domain_b.descriptor(),
        potential=potential.descriptor(),
        ts=list(ts),
        hbars=[float(h) for h in hbars],
        eta=eta,
        fit_ts=list(fit_ts),
        threshold=float(threshold),
        seed=int(seed),
        oracle_laplace_a=oracle_a,
        oracle_laplace_b=oracle_b,
        oracle_mean_a=mean_a,
        oracle_mean_b=mean_b,
        empirical_mean_a=emp_a,
        empirical_mean_b=emp_b,
        extrapolated_a=sweep_a.extrapolated,
        extrapolated_b=sweep_b.extrapolated,
        sweep_a=sweep_a,
        sweep_b=sweep_b,
        paired_a=paired_a,
        paired_b=paired_b,
    )
