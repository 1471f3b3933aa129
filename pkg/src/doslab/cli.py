"""Command-line front end: experiment configs, result caching, and
bit-stable tabular outputs.

Configs are YAML files; every field has a default, so all commands also
run without one.  Reports are written with 17 significant digits so a
rerun with the same config and seed is byte-identical except for the
timestamp line in the metadata block.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import dos, geometry
from .discretize import rescaled_pair
from .errors import ConfigError, DoslabError, NumericalError, PreconditionError
from .potential import (
    REGISTRY,
    is_homogeneous,
    mean_over_domain,
)
from .spectral import HeatTraceEstimate, eigen_dense

DEFAULT_OUT = "results"
DEFAULT_CACHE = "cache"


# -- deterministic serialization ----------------------------------------------


def format_float(x: float) -> str:
    """Shortest-of-17-significant-digits rendering; round-trips float64."""
    if math.isnan(x) or math.isinf(x):
        raise NumericalError("non-finite value in output")
    return f"{x:.17g}"


def dumps_stable(obj, indent: int = 2) -> str:
    """JSON with %.17g floats and stable key order (insertion order)."""
    out = []
    _emit(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


def _emit(obj, out, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            if not isinstance(k, str):
                raise ConfigError(f"JSON object keys must be strings, got {k!r}")
            out.append(pad + json.dumps(k) + ": ")
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(close + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(close + "]")
    else:
        raise ConfigError(f"cannot serialize {type(obj).__name__} to JSON")


def canonical_bytes(obj) -> bytes:
    """Compact sorted-key form used for content addressing."""

    def conv(o):
        if isinstance(o, (float, np.floating)):
            return format_float(float(o))
        if isinstance(o, dict):
            return {k: conv(v) for k, v in sorted(o.items())}
        if isinstance(o, (list, tuple)):
            return [conv(v) for v in o]
        return o

    return json.dumps(conv(obj), sort_keys=True, separators=(",", ":")).encode()


def csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _disp(x: float) -> str:
    """Short form for stdout lines; files keep the full 17 digits."""
    return f"{x:.6g}"


def timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# -- result cache -------------------------------------------------------------


@dataclass
class CacheEntry:
    """One stored heat-trace value, addressed by its input hash."""

    key: dict
    estimate: HeatTraceEstimate
    created: str


class Cache:
    """Content-addressed store, one file per entry.

    Entries land under <root>/<first two hex>/<sha256>.json via
    write-to-temp + rename, so concurrent writers never see partial
    files and identical inputs simply overwrite each other with the
    same bytes.  ``manifest.json`` is an index rebuilt by scanning.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def digest(self, key: dict) -> str:
        return hashlib.sha256(canonical_bytes(key)).hexdigest()

    def _path(self, key: dict) -> Path:
        dg = self.digest(key)
        return self.root / dg[:2] / (dg + ".json")

    def get(self, key: dict) -> HeatTraceEstimate | None:
        p = self._path(key)
        try:
            rec = json.loads(p.read_text())
            est = HeatTraceEstimate(**rec["estimate"])
        except FileNotFoundError:
            self.misses += 1
            return None
        except (OSError, ValueError, KeyError, TypeError, DoslabError):
            # unreadable entries count as misses and get rewritten
            self.misses += 1
            return None
        self.hits += 1
        return est

    def put(self, key: dict, est: HeatTraceEstimate) -> None:
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        rec = {
            "key": key,
            "estimate": {
                "t": est.t,
                "value": est.value,
                "method": est.method,
                "stderr": est.stderr,
                "truncation_bound": est.truncation_bound,
                "probes": est.probes,
                "degree": est.degree,
                "seed": est.seed,
            },
            "created": timestamp(),
        }
        write_atomic(p, dumps_stable(rec))

    def entry_files(self):
        if not self.root.is_dir():
            return []
        return sorted(
            p for p in self.root.glob("??/*.json") if not p.name.endswith(".tmp")
        )

    def entries(self):
        out = []
        for p in self.entry_files():
            try:
                rec = json.loads(p.read_text())
                out.append(CacheEntry(rec["key"], HeatTraceEstimate(**rec["estimate"]), rec["created"]))
            except (OSError, ValueError, KeyError, TypeError, DoslabError):
                continue
        return out

    def write_manifest(self) -> None:
        rows = []
        for p in self.entry_files():
            try:
                rec = json.loads(p.read_text())
            except (OSError, ValueError):
                continue
            k = rec.get("key", {})
            rows.append(
                {
                    "digest": p.stem,
                    "t": k.get("t"),
                    "hbar": k.get("hbar"),
                    "method": k.get("method"),
                    "created": rec.get("created"),
                }
            )
        self.root.mkdir(parents=True, exist_ok=True)
        write_atomic(self.root / "manifest.json", dumps_stable({"count": len(rows), "entries": rows}))

    def gc(self, max_age_days: float | None = None):
        """Drop stray temp files and entries older than the cutoff."""
        removed = 0
        kept = 0
        for p in self.root.glob("??/*.tmp.*") if self.root.is_dir() else []:
            p.unlink(missing_ok=True)
        cutoff = None
        if max_age_days is not None:
            cutoff = time.time() - max_age_days * 86400.0
        for p in self.entry_files():
            stale = False
            if cutoff is not None:
                try:
                    rec = json.loads(p.read_text())
                    created = datetime.strptime(
                        rec["created"], "%Y-%m-%dT%H:%M:%SZ"
                    ).replace(tzinfo=timezone.utc)
                    stale = created.timestamp() < cutoff
                except (OSError, ValueError, KeyError):
                    stale = True  # unreadable entries are dead weight
            if stale:
                p.unlink(missing_ok=True)
                removed += 1
            else:
                kept += 1
        self.write_manifest()
        return kept, removed


# -- configuration ------------------------------------------------------------


_POTENTIAL_FIELDS = {
    "example": {"d": int},
    "constant": {"value": (int, float)},
    "angular-step": {"width": (int, float), "height": (int, float)},
}


@dataclass
class ExperimentConfig:
    """Typed view of one experiment file, defaults filled in.

    Deterministic by construction: everything a command computes is a
    function of these fields, so equal configs (and seeds) give
    byte-identical report bodies.
    """

    domain: dict = field(default_factory=lambda: {"kind": "box", "half_width": 1.0, "dimension": 2})
    potential: dict = field(default_factory=lambda: {"kind": "constant", "value": 0.0})
    ts: list = field(default_factory=lambda: list(dos.DEFAULT_TS))
    hbars: list = field(default_factory=lambda: list(dos.DEFAULT_HBARS))
    eta: float = dos.DEFAULT_ETA
    method: str = "auto"
    dense_cap: int = 4000
    probes: int = 256
    degree: int | None = None
    tol: float = 1e-7
    seed: int = 0
    threads: int = 1
    out: str = DEFAULT_OUT
    cache_dir: str | None = DEFAULT_CACHE
    compare: dict = field(default_factory=dict)
    ids: dict = field(default_factory=dict)
    rescale: dict = field(default_factory=dict)

    def build_domain(self, rec=None, path="domain"):
        return _build_domain(self.domain if rec is None else rec, path)

    def build_potential(self):
        return _build_potential(self.potential)

    def build_policy(self) -> dos.TracePolicy:
        return dos.TracePolicy(
            method=self.method,
            dense_cap=self.dense_cap,
            probes=self.probes,
            tol=self.tol,
            degree=self.degree,
            threads=self.threads,
        )

    def open_cache(self) -> Cache | None:
        return None if self.cache_dir is None else Cache(self.cache_dir)


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _take(mapping, path, known):
    if not isinstance(mapping, dict):
        _fail(path, "must be a mapping")
    for k in mapping:
        if k not in known:
            _fail(f"{path}.{k}", f"unknown field (expected one of {sorted(known)})")
    return mapping


def _number(v, path, lo=None, strict=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {type(v).__name__}")
    v = float(v)
    if lo is not None and (v <= lo if strict else v < lo):
        _fail(path, f"must be {'>' if strict else '>='} {lo}")
    return v


def _integer(v, path, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {type(v).__name__}")
    if lo is not None and v < lo:
        _fail(path, f"must be >= {lo}")
    return v


def _number_list(v, path, strict_positive=True):
    if not isinstance(v, list) or not v:
        _fail(path, "expected a nonempty list of numbers")
    return [_number(x, f"{path}[{i}]", lo=0.0, strict=strict_positive) for i, x in enumerate(v)]


def _build_domain(rec, path="domain"):
    if not isinstance(rec, dict):
        _fail(path, "must be a mapping")
    kind = rec.get("kind")
    if kind == "box":
        _take(rec, path, {"kind", "half_width", "dimension"})
        w = _number(rec.get("half_width", 1.0), f"{path}.half_width", lo=0.0, strict=True)
        d = _integer(rec.get("dimension", 2), f"{path}.dimension", lo=1)
        return geometry.box(w, d)
    if kind == "ball":
        _take(rec, path, {"kind", "radius", "dimension"})
        r = _number(rec.get("radius", 1.0), f"{path}.radius", lo=0.0, strict=True)
        d = _integer(rec.get("dimension", 2), f"{path}.dimension", lo=1)
        return geometry.ball(r, d)
    if kind == "star-polygon":
        _take(rec, path, {"kind", "vertices"})
        verts = rec.get("vertices")
        if not isinstance(verts, list) or len(verts) < 3:
            _fail(f"{path}.vertices", "expected a list of at least 3 [x, y] pairs")
        clean = []
        for i, v in enumerate(verts):
            if not isinstance(v, list) or len(v) != 2:
                _fail(f"{path}.vertices[{i}]", "expected an [x, y] pair")
            clean.append((_number(v[0], f"{path}.vertices[{i}][0]"), _number(v[1], f"{path}.vertices[{i}][1]")))
        return geometry.star_polygon(clean)
    _fail(f"{path}.kind", f"unknown domain kind {kind!r} (expected box, ball, or star-polygon)")


def _build_potential(rec, path="potential"):
    if not isinstance(rec, dict):
        _fail(path, "must be a mapping")
    kind = rec.get("kind")
    if kind not in REGISTRY:
        _fail(f"{path}.kind", f"unknown potential kind {kind!r} (expected one of {sorted(REGISTRY)})")
    fields = _POTENTIAL_FIELDS[kind]
    _take(rec, path, {"kind", *fields})
    kwargs = {}
    for name, types in fields.items():
        if name in rec:
            v = rec[name]
            if isinstance(v, bool) or not isinstance(v, types):
                want = "an integer" if types is int else "a number"
                _fail(f"{path}.{name}", f"expected {want}, got {type(v).__name__}")
            kwargs[name] = v
    return REGISTRY[kind](**kwargs)


def parse_config(data: dict) -> ExperimentConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    known = {
        "domain", "potential", "t", "hbar", "eta", "method", "seed",
        "threads", "out", "cache", "compare", "ids", "rescale",
    }
    _take(data, "config", known)
    cfg = ExperimentConfig()

    if "domain" in data:
        cfg.domain = dict(data["domain"]) if isinstance(data["domain"], dict) else data["domain"]
    if "potential" in data:
        cfg.potential = dict(data["potential"]) if isinstance(data["potential"], dict) else data["potential"]
    # build once now so malformed records fail before any computation
    _build_domain(cfg.domain)
    _build_potential(cfg.potential)

    if "t" in data:
        cfg.ts = _number_list(data["t"], "t")
    if "hbar" in data:
        cfg.hbars = _number_list(data["hbar"], "hbar")
        if any(b >= a for a, b in zip(cfg.hbars, cfg.hbars[1:])):
            _fail("hbar", "must be strictly descending")
    if "eta" in data:
        cfg.eta = _number(data["eta"], "eta", lo=0.0, strict=True)

    m = _take(data.get("method", {}), "method", {"policy", "dense_cap", "probes", "degree", "tol"})
    if "policy" in m:
        if m["policy"] not in ("auto", "dense", "stochastic"):
            _fail("method.policy", f"unknown policy {m['policy']!r}")
        cfg.method = m["policy"]
    if "dense_cap" in m:
        cfg.dense_cap = _integer(m["dense_cap"], "method.dense_cap", lo=1)
    if "probes" in m:
        cfg.probes = _integer(m["probes"], "method.probes", lo=8)
    if "degree" in m and m["degree"] is not None:
        cfg.degree = _integer(m["degree"], "method.degree", lo=1)
    if "tol" in m:
        cfg.tol = _number(m["tol"], "method.tol", lo=0.0, strict=True)

    if "seed" in data:
        cfg.seed = _integer(data["seed"], "seed", lo=0)
        if cfg.seed >= 2**64:
            _fail("seed", "must fit in 64 bits")
    if "threads" in data:
        cfg.threads = _integer(data["threads"], "threads", lo=1)
    if "out" in data:
        if not isinstance(data["out"], str):
            _fail("out", "expected a path string")
        cfg.out = data["out"]
    if "cache" in data:
        c = data["cache"]
        if c is None or c is False:
            cfg.cache_dir = None
        elif isinstance(c, str):
            cfg.cache_dir = c
        else:
            _fail("cache", "expected a path string, null, or false")

    cmp_rec = _take(data.get("compare", {}), "compare", {"domain_b", "fit_t", "threshold"})
    if "domain_b" in cmp_rec:
        _build_domain(cmp_rec["domain_b"], "compare.domain_b")
    if "fit_t" in cmp_rec:
        ft = _number_list(cmp_rec["fit_t"], "compare.fit_t")
        if len(ft) != 2:
            _fail("compare.fit_t", "expected exactly two t values")
        cmp_rec = {**cmp_rec, "fit_t": ft}
    if "threshold" in cmp_rec:
        _number(cmp_rec["threshold"], "compare.threshold", lo=0.0, strict=True)
    cfg.compare = dict(cmp_rec)

    ids_rec = _take(data.get("ids", {}), "ids", {"lambda", "R", "resolution", "spacing"})
    if "lambda" in ids_rec:
        lam = ids_rec["lambda"]
        if isinstance(lam, dict):
            _take(lam, "ids.lambda", {"start", "stop", "count"})
            start = _number(lam.get("start", 0.0), "ids.lambda.start")
            stop = _number(lam.get("stop", 60.0), "ids.lambda.stop")
            count = _integer(lam.get("count", 3001), "ids.lambda.count", lo=2)
            if stop <= start:
                _fail("ids.lambda.stop", "must exceed start")
        elif isinstance(lam, list):
            vals = [_number(x, f"ids.lambda[{i}]") for i, x in enumerate(lam)]
            if any(b < a for a, b in zip(vals, vals[1:])):
                _fail("ids.lambda", "must be ascending")
        else:
            _fail("ids.lambda", "expected a list or a start/stop/count mapping")
    if "R" in ids_rec and ids_rec["R"] is not None:
        _number(ids_rec["R"], "ids.R", lo=0.0, strict=True)
    if "resolution" in ids_rec:
        _integer(ids_rec["resolution"], "ids.resolution", lo=8)
    if "spacing" in ids_rec and ids_rec["spacing"] is not None:
        _number(ids_rec["spacing"], "ids.spacing", lo=0.0, strict=True)
    cfg.ids = dict(ids_rec)

    rs = _take(data.get("rescale", {}), "rescale", {"R", "t", "spacing"})
    if "R" in rs:
        rs = {**rs, "R": _number_list(rs["R"], "rescale.R")}
    if "t" in rs:
        rs = {**rs, "t": _number_list(rs["t"], "rescale.t")}
    if "spacing" in rs:
        _number(rs["spacing"], "rescale.spacing", lo=0.0, strict=True)
    cfg.rescale = dict(rs)
    return cfg


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        # the YAML error already carries line/column marks
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    return parse_config(data)


# -- output helpers -----------------------------------------------------------


def _outdir(cfg: ExperimentConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(csv_cell(row.get(c)) for c in columns))
    write_atomic(path, "\n".join(lines) + "\n")


# -- commands -----------------------------------------------------------------


def cmd_oracle(cfg: ExperimentConfig) -> int:
    dom = cfg.build_domain()
    pot = cfg.build_potential()
    vals = [dos.oracle_laplace(pot, dom, t) for t in cfg.ts]
    mean = mean_over_domain(pot, dom)
    out = _outdir(cfg)
    obj = {
        "meta": {
            "kind": "oracle",
            "domain": dom.descriptor(),
            "potential": pot.descriptor(),
            "timestamp": timestamp(),
        },
        "arrays": {"t": cfg.ts, "oracle_laplace": vals},
        "values": {"mean_over_domain": mean},
    }
    write_atomic(out / "report.json", dumps_stable(obj))
    write_csv(
        out / "report.csv",
        ["t", "oracle_laplace"],
        [{"t": t, "oracle_laplace": v} for t, v in zip(cfg.ts, vals)],
    )
    for t, v in zip(cfg.ts, vals):
        print(f"t={_disp(t)} oracle_laplace={format_float(v)}")
    print(f"mean_over_domain={format_float(mean)}")
    return 0


def cmd_sweep(cfg: ExperimentConfig) -> int:
    dom = cfg.build_domain()
    pot = cfg.build_potential()
    cache = cfg.open_cache()
    started = time.perf_counter()
    rep = dos.sweep(
        dom, pot, cfg.ts, cfg.hbars, cfg.eta, cfg.build_policy(), cfg.seed, cache
    )
    elapsed = time.perf_counter() - started
    out = _outdir(cfg)
    write_atomic(out / "report.json", dumps_stable(rep.json_obj(timestamp=timestamp())))
    write_csv(out / "report.csv", dos.CSV_COLUMNS, rep.csv_rows())
    if cache is not None:
        cache.write_manifest()

    failed = [c for c in rep.cells if c["error"]]
    rel = rep.rel_discrepancy()
    for j, hb in enumerate(cfg.hbars):
        good = [r for r in rel[j] if r is not None]
        tag = f"max_rel_discrepancy={_disp(max(good))}" if good else "all cells failed"
        print(f"hbar={_disp(hb)} {tag}")
    if rep.extrapolated is not None:
        for t, v, r in zip(cfg.ts, rep.extrapolated, rep.extrapolated_rel_discrepancy()):
            if v is not None:
                print(f"t={_disp(t)} extrapolated={format_float(v)} rel_discrepancy={_disp(r)}")
    line = f"elapsed={elapsed:.2f}s cells={len(rep.cells)} failed={len(failed)}"
    if cache is not None:
        line += f" cache_hits={cache.hits} cache_misses={cache.misses}"
    print(line)
    if failed and len(failed) == len(rep.cells):
        raise NumericalError("every sweep cell failed")
    return 0


def cmd_compare(cfg: ExperimentConfig) -> int:
    dom_a = cfg.build_domain()
    dom_b = _build_domain(
        cfg.compare.get("domain_b", {"kind": "ball", "radius": 1.0, "dimension": 2}),
        "compare.domain_b",
    )
    pot = cfg.build_potential()
    cache = cfg.open_cache()
    rep = dos.counterexample(
        domain_a=dom_a,
        domain_b=dom_b,
        potential=pot,
        ts=cfg.ts,
        hbars=cfg.hbars,
        eta=cfg.eta,
        policy=cfg.build_policy(),
        seed=cfg.seed,
        cache=cache,
        fit_ts=tuple(cfg.compare.get("fit_t", (0.05, 0.1))),
        threshold=float(cfg.compare.get("threshold", 0.014)),
    )
    out = _outdir(cfg)
    write_atomic(out / "report.json", dumps_stable(rep.json_obj(timestamp=timestamp())))
    rows = []
    for label, oracle, extrap in (
        ("a", rep.oracle_laplace_a, rep.extrapolated_a),
        ("b", rep.oracle_laplace_b, rep.extrapolated_b),
    ):
        for i, t in enumerate(rep.ts):
            rows.append(
                {
                    "domain": label,
                    "t": t,
                    "oracle": oracle[i],
                    "extrapolated": None if extrap is None else extrap[i],
                }
            )
    write_csv(out / "report.csv", ["domain", "t", "oracle", "extrapolated"], rows)
    if cache is not None:
        cache.write_manifest()
    print(
        f"oracle mean a={format_float(rep.oracle_mean_a)} b={format_float(rep.oracle_mean_b)} "
        f"gap={_disp(rep.oracle_gap)} differ={'yes' if rep.oracle_differ else 'no'}"
    )
    print(
        f"empirical mean a={format_float(rep.empirical_mean_a)} b={format_float(rep.empirical_mean_b)} "
        f"gap={_disp(rep.empirical_gap)} differ={'yes' if rep.empirical_differ else 'no'}"
    )
    return 0


def cmd_rescale_check(cfg: ExperimentConfig) -> int:
    dom = cfg.build_domain()
    pot = cfg.build_potential()
    radii = cfg.rescale.get("R", [2.0, 3.0])
    trace_ts = cfg.rescale.get("t", [0.5, 1.0])
    spacing = float(cfg.rescale.get("spacing", 0.1))
    entry_tol = 1e-15
    trace_tol = 1e-10

    checks = []
    ok = True
    for R in radii:
        H_grown, H_semi = rescaled_pair(dom, pot, R, spacing)
        delta = H_grown.matrix - H_semi.matrix
        max_entry = float(np.max(np.abs(delta.toarray()))) if H_grown.n else 0.0
        lam_g = eigen_dense(H_grown)
        lam_s = eigen_dense(H_semi)
        trace_rel = {}
        worst = 0.0
        for t in trace_ts:
            tg = float(np.sum(np.exp(-t * lam_g)))
            ts_ = float(np.sum(np.exp(-t * lam_s)))
            r = abs(tg - ts_) / ts_
            trace_rel[format_float(float(t))] = r
            worst = max(worst, r)
        passed = max_entry <= entry_tol and worst <= trace_tol
        ok = ok and passed
        checks.append(
            {
                "R": float(R),
                "n_nodes": H_semi.n,
                "max_entry_delta": max_entry,
                "trace_rel": trace_rel,
                "pass": passed,
            }
        )
        print(
            f"R={_disp(float(R))} max_entry_delta={_disp(max_entry)} "
            f"trace_rel_max={_disp(worst)} {'PASS' if passed else 'FAIL'}"
        )

    out = _outdir(cfg)
    obj = {
        "meta": {
            "kind": "rescale-check",
            "domain": dom.descriptor(),
            "potential": pot.descriptor(),
            "spacing": spacing,
            "entry_tolerance": entry_tol,
            "trace_tolerance": trace_tol,
            "timestamp": timestamp(),
        },
        "checks": checks,
        "pass": ok,
    }
    write_atomic(out / "report.json", dumps_stable(obj))
    print("PASS" if ok else "FAIL")
    if not ok:
        raise NumericalError("rescaling identity violated beyond tolerance")
    return 0


def _ids_lambdas(cfg: ExperimentConfig) -> np.ndarray:
    lam = cfg.ids.get("lambda", {"start": 0.0, "stop": 60.0, "count": 3001})
    if isinstance(lam, list):
        return np.asarray(lam, dtype=float)
    return np.linspace(
        float(lam.get("start", 0.0)), float(lam.get("stop", 60.0)), int(lam.get("count", 3001))
    )


def cmd_ids(cfg: ExperimentConfig) -> int:
    dom = cfg.build_domain()
    pot = cfg.build_potential()
    lam = _ids_lambdas(cfg)
    resolution = int(cfg.ids.get("resolution", 2048))
    curves = []
    if is_homogeneous(pot):
        curves.append(dos.surface_average_ids(pot, dom, lam, "uniform", resolution))
        curves.append(dos.surface_average_ids(pot, dom, lam, "cone-weighted", resolution))
    if pot.kind == "constant":
        curves.append(dos.free_ids_curve(pot.value, dom.dimension, lam))
    R = cfg.ids.get("R")
    if R is not None:
        curves.append(dos.empirical_ids(dom, pot, float(R), lam, spacing=cfg.ids.get("spacing")))

    out = _outdir(cfg)
    summary = []
    for curve in curves:
        name = f"curve_{curve.provenance}.csv"
        write_atomic(out / name, curve.csv_text())
        summary.append(
            {
                "variant": curve.provenance,
                "file": name,
                "points": int(curve.lambdas.size),
                "lambda_min": float(curve.lambdas[0]),
                "lambda_max": float(curve.lambdas[-1]),
                "vmin": curve.vmin,
                "complete": curve.complete,
            }
        )
        print(f"{name} points={curve.lambdas.size}")
    obj = {
        "meta": {
            "kind": "ids",
            "domain": dom.descriptor(),
            "potential": pot.descriptor(),
            "timestamp": timestamp(),
        },
        "curves": summary,
    }
    write_atomic(out / "report.json", dumps_stable(obj))
    return 0


def cmd_cache_gc(cfg: ExperimentConfig, max_age_days: float | None) -> int:
    if cfg.cache_dir is None:
        raise ConfigError("cache gc needs a cache directory (cache disabled)")
    cache = Cache(cfg.cache_dir)
    kept, removed = cache.gc(max_age_days)
    print(f"cache gc: kept={kept} removed={removed}")
    return 0


# -- entry point --------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="experiment config file (YAML)")
    p.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    p.add_argument("--out", metavar="DIR", help="override the output directory")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads for probe sweeps")
    p.add_argument("--no-cache", action="store_true", help="bypass the result cache")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doslab",
        description="Density of states of Dirichlet Schrodinger operators on growing domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("oracle", "exact Laplace-transform and mean values by quadrature"),
        ("sweep", "normalized heat traces over a (t, hbar) table"),
        ("compare", "box-vs-ball shape comparison"),
        ("rescale-check", "verify growth equals semiclassical rescaling"),
        ("ids", "integrated density of states curves"),
    ):
        _add_common(sub.add_parser(name, help=help_text))
    cache_p = sub.add_parser("cache", help="cache maintenance")
    cache_sub = cache_p.add_subparsers(dest="cache_command", required=True)
    gc_p = cache_sub.add_parser("gc", help="drop stale entries, rebuild the manifest")
    _add_common(gc_p)
    gc_p.add_argument("--max-age-days", type=float, metavar="D", help="drop entries older than D days")
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = load_config(ns.config)
        if ns.seed is not None:
            if not 0 <= ns.seed < 2**64:
                raise ConfigError("--seed must fit in 64 bits")
            cfg.seed = ns.seed
        if ns.out is not None:
            cfg.out = ns.out
        if ns.threads is not None:
            if ns.threads < 1:
                raise ConfigError("--threads must be >= 1")
            cfg.threads = ns.threads
        if ns.no_cache:
            cfg.cache_dir = None
        if ns.command == "oracle":
            return cmd_oracle(cfg)
        if ns.command == "sweep":
            return cmd_sweep(cfg)
        if ns.command == "compare":
            return cmd_compare(cfg)
        if ns.command == "rescale-check":
            return cmd_rescale_check(cfg)
        if ns.command == "ids":
            return cmd_ids(cfg)
        return cmd_cache_gc(cfg, ns.max_age_days)
    except DoslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
