"""Command-line harness: ``potcap <experiment> --config FILE --out DIR``.

Each run writes ``<out>/trace.csv`` (fixed columns per experiment, see
``COLUMNS``) and ``<out>/report.json``.  The output directory defaults to
``$POTCAP_OUT/<experiment>`` (``./potcap-out/<experiment>`` when unset).

Exit status: 0 for a completed run whatever the verdict, 2 for an invalid
config (nothing is written), 3 when a solve fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from importlib import metadata

import numpy as np

from .capacity import (
    candidate,
    decay_rates,
    density_approximation,
    estimate_capacity,
    family_samples,
    _equivalence_bound,
    union_bounds,
)
from .config import EXPERIMENTS, ConfigError, default_config, load_config
from .experiments import dichotomy_experiment, removability_check
from .fields import CompactBump, RadialPolynomial, ZeroField
from .geometry import CompactSetSpec, Domain, Grid, clearance
from .potential import PotentialSpec
from .rearrange import membership_diagnosis
from .solver import (
    MeasureData,
    RadialMesh,
    SolveError,
    TransportField,
    kato_check,
    laplacian_operator,
)

__all__ = ["COLUMNS", "CRITERIA", "main", "run", "validate"]

OUT_ENV = "POTCAP_OUT"

COLUMNS = {
    "capacity": ["j", "l1", "grad_term", "lap_term", "total"],
    "rates": ["j", "grad_term", "lap_term"],
    "lorentz": ["level", "scale", "value"],
    "dichotomy": ["j", "l1", "potential_mass", "apriori_ratio", "cauchy_gap", "weak_residual", "weak_grad_proxy"],
    "removable": ["probe", "j", "off_residual", "bridge_bound"],
    "kato": ["pair", "worst_violation", "pair_residual"],
    "density": ["j", "mu", "potential_residual", "gradient_residual", "laplacian_residual"],
}

CRITERIA = {
    1: "Lorentz criterion",
    2: "decay rates",
    3: "zero-capacity detection",
    4: "positive-floor detection",
    5: "capacity properties",
    6: "union theorem",
    7: "discrete Kato",
    8: "a-priori bound",
    9: "existence/non-existence dichotomy",
    10: "weak-strong density",
    11: "solver verification",
}


def _criterion(k):
    return {"id": k, "name": CRITERIA[k]}


# ---------------------------------------------------------------------------
# building objects from settings


def _float(x):
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(x)


def build_domain(d):
    kind = d.get("kind")
    if kind == "ball":
        return Domain.ball(d["center"], _float(d["radius"]))
    if kind == "box":
        return Domain.box(d["lo"], d["hi"])
    raise ValueError(f"unknown domain kind {kind!r}")


def build_set(s):
    kind = s.get("kind")
    if kind == "point":
        return CompactSetSpec.point(s["point"])
    if kind == "points":
        return CompactSetSpec.from_points(s["points"])
    if kind == "sphere":
        return CompactSetSpec.sphere(s["center"], _float(s["radius"]))
    if kind == "union":
        members = s.get("members") or []
        if not members:
            raise ValueError("a union needs members")
        return CompactSetSpec.union(*[build_set(m) for m in members])
    if kind == "empty":
        return CompactSetSpec.empty()
    raise ValueError(f"unknown set kind {kind!r}")


def build_potential(p, K):
    terms = p.get("terms") or []
    if not terms:
        raise ValueError("potential needs at least one term")
    V = None
    for t in terms:
        A = build_set(t["set"]) if isinstance(t.get("set"), dict) else K
        Vi = PotentialSpec.distance_power(A, _float(t.get("m", 0.0)), _float(t.get("b", 1.0)))
        V = Vi if V is None else V + Vi
    return V


# ---------------------------------------------------------------------------
# validation


def _schedule(cfg, diags, key="schedule.j"):
    js = cfg.get(key)
    if not isinstance(js, list) or not js:
        diags.append(f"{cfg.where(key)}: {key}: schedule must be a nonempty list")
        return None
    try:
        vals = [_float(j) for j in js]
    except (TypeError, ValueError):
        diags.append(f"{cfg.where(key)}: {key}: schedule entries must be numbers")
        return None
    if any(v <= 0 for v in vals):
        diags.append(f"{cfg.where(key)}: {key}: schedule entries must be positive")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        diags.append(f"{cfg.where(key)}: {key}: schedule must be strictly increasing")
    return vals


def validate(cfg):
    """All problems found in ``cfg`` as ``path:line: key: message`` strings."""
    diags = []
    exp = cfg.experiment
    try:
        domain = build_domain(cfg.get("domain"))
    except (KeyError, TypeError, ValueError) as e:
        diags.append(f"{cfg.where('domain')}: domain: {e}")
        return diags
    h = cfg.get("domain.h")
    try:
        h = _float(h)
        if h <= 0:
            raise ValueError
    except (TypeError, ValueError):
        diags.append(f"{cfg.where('domain.h')}: domain.h: grid spacing must be a positive number")
        h = None
    n = domain.dimension

    K = None
    if exp != "kato":
        try:
            K = build_set(cfg.get("set"))
        except (KeyError, TypeError, ValueError) as e:
            diags.append(f"{cfg.where('set')}: set: {e}")
        if K is not None and not K.is_empty:
            dims = {len(np.atleast_1d(p.points[0] if p.kind == "points" else p.center)) for p in K.primitives()}
            if dims != {n}:
                diags.append(f"{cfg.where('set')}: set: dimension does not match the domain (n={n})")
                K = None
        if K is not None and not K.is_empty:
            cl = clearance(K, domain)
            if not cl > 0:
                diags.append(f"{cfg.where('set')}: set: clearance {cl:.6g} <= 0, the set touches or leaves the domain")
                K = None
        V = None
        if K is not None:
            try:
                V = build_potential(cfg.get("potential", {}), K)
            except (KeyError, TypeError, ValueError) as e:
                diags.append(f"{cfg.where('potential')}: potential: {e}")

    tol = cfg.get("tolerance")
    if tol is not None:
        try:
            tol = _float(tol)
        except (TypeError, ValueError):
            diags.append(f"{cfg.where('tolerance')}: tolerance: must be a number")
            tol = None

    def bad_tol(msg):
        diags.append(f"{cfg.where('tolerance')}: tolerance: {msg}")

    if exp in ("capacity", "rates", "removable", "density", "dichotomy"):
        js = _schedule(cfg, diags)
    else:
        js = None

    if exp in ("capacity", "rates", "density") and K is not None and js and not K.is_empty:
        cl = clearance(K, domain)
        if 2.0 * _equivalence_bound(K) / js[0] >= cl:
            diags.append(f"{cfg.where('schedule.j')}: schedule.j: first level {js[0]:g} too small, "
                         f"the cutoff support reaches the boundary (clearance {cl:.6g})")
        mus = cfg.get("schedule.mu")
        if mus is not None:
            mus = mus if isinstance(mus, list) else [mus]
            for mu in mus:
                if not 3.0 * _float(mu) < cl:
                    diags.append(f"{cfg.where('schedule.mu')}: schedule.mu: 3*mu_j = {3 * _float(mu):.6g} "
                                 f"must stay below dist(K; boundary) = {cl:.6g}")
                    break
        if h is not None and K.kind != "field":
            if h >= cl / 8:
                diags.append(f"{cfg.where('domain.h')}: domain.h: spacing {h:g} does not resolve the set "
                             f"(needs h < clearance/8 = {cl / 8:.6g})")
    if exp == "capacity" and tol is not None and not 0 < tol < 1:
        bad_tol("zero-detection tolerance must lie in (0, 1)")
    if exp == "rates":
        if js and js[-1] / js[0] < 100:
            diags.append(f"{cfg.where('schedule.j')}: schedule.j: must span at least two decades")
        if V is not None and not all(t.exponent > 2 for t in V.terms):
            diags.append(f"{cfg.where('potential')}: potential: decay rates need exponents m > 2")
    if exp == "lorentz":
        lv = cfg.get("schedule.levels")
        if not isinstance(lv, int) or lv < 3:
            diags.append(f"{cfg.where('schedule.levels')}: schedule.levels: need an integer >= 3")
        try:
            p, q = _float(cfg.get("lorentz.p")), _float(cfg.get("lorentz.q"))
            if not (1 <= p <= math.inf and 0 < q <= math.inf):
                raise ValueError
        except (TypeError, ValueError):
            diags.append(f"{cfg.where('lorentz')}: lorentz: need 1 <= p <= inf and 0 < q <= inf")
        if tol is not None and not tol > 1:
            bad_tol("the decay threshold must exceed 1")
    if exp == "dichotomy":
        if js and js[-1] / js[0] < 1000:
            diags.append(f"{cfg.where('schedule.j')}: schedule.j: must span at least three decades")
        if js and len(js) < 3:
            diags.append(f"{cfg.where('schedule.j')}: schedule.j: need at least 3 levels")
        mode = cfg.get("solver.mode")
        data = cfg.get("data", {})
        if data.get("kind") != "dirac":
            diags.append(f"{cfg.where('data.kind')}: data.kind: only dirac data is configurable")
        elif len(data.get("point", [])) != n:
            diags.append(f"{cfg.where('data.point')}: data.point: dimension does not match the domain")
        elif not domain.contains(np.atleast_2d(data["point"]))[0]:
            diags.append(f"{cfg.where('data.point')}: data.point: must lie inside the domain")
        if mode == "radial":
            cells = cfg.get("solver.cells")
            if not isinstance(cells, int) or cells < 512:
                diags.append(f"{cfg.where('solver.cells')}: solver.cells: radial runs need at least 512 cells")
            if domain.kind != "ball" or np.any(domain.center != 0):
                diags.append(f"{cfg.where('domain')}: domain: radial runs need a ball centred at the origin")
            if any(x != 0 for x in data.get("point", [])):
                diags.append(f"{cfg.where('data.point')}: data.point: radial runs put the mass at the origin")
            if n < 2:
                diags.append(f"{cfg.where('domain')}: domain: radial runs need n >= 2")
        elif mode == "grid":
            if n == 2 and h is not None and h > 1 / 128:
                diags.append(f"{cfg.where('domain.h')}: domain.h: 2-D grid runs need h <= 1/128")
            tk = cfg.get("transport.kind")
            if tk not in ("none", "rotation", "cellular"):
                diags.append(f"{cfg.where('transport.kind')}: transport.kind: expected none, rotation or cellular")
        else:
            diags.append(f"{cfg.where('solver.mode')}: solver.mode: expected radial or grid")
    if exp == "removable":
        ck = cfg.get("candidate.kind")
        if ck not in ("zero", "bump"):
            diags.append(f"{cfg.where('candidate.kind')}: candidate.kind: expected zero or bump")
        if tol is not None and not 0 < tol < 1:
            bad_tol("zero-detection tolerance must lie in (0, 1)")
    if exp == "kato":
        pairs = cfg.get("kato.pairs")
        if not isinstance(pairs, int) or pairs < 1:
            diags.append(f"{cfg.where('kato.pairs')}: kato.pairs: need a positive integer")
        if tol is not None and tol < 0:
            bad_tol("the violation tolerance must be nonnegative")
    if exp == "density":
        if V is not None and not all(t.exponent > 2 for t in V.terms):
            diags.append(f"{cfg.where('potential')}: potential: the density instance needs m > 2")
        if tol is not None and not 0 < tol < 1:
            bad_tol("the residual reduction target must lie in (0, 1)")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        diags.append(f"{cfg.where('seed')}: seed: must be an integer")
    return diags


# ---------------------------------------------------------------------------
# experiment runners: each returns (rows, report fields)


def _setup(cfg):
    domain = build_domain(cfg.get("domain"))
    grid = Grid(domain, _float(cfg.get("domain.h")))
    K = build_set(cfg.get("set")) if cfg.get("set") else None
    V = build_potential(cfg.get("potential"), K) if K is not None else None
    return grid, K, V


def _run_capacity(cfg, threads):
    grid, K, V = _setup(cfg)
    js = [int(j) for j in cfg.get("schedule.j")]
    tol = _float(cfg.get("tolerance"))
    est = estimate_capacity(K, V, grid, js, tol, workers=threads)
    rows = [(j, *nv.as_row()) for j, nv in est.family_trace]
    verdicts = [{
        "name": "capacity",
        "value": est.verdict,
        "criterion": _criterion(3 if est.verdict == "zero_detected" else 4),
        "trace": "trace.csv",
    }]
    records = {"upper_bound": est.upper_bound}
    if K.kind == "union":
        checks = []
        for j in js:
            Phi = candidate(K, j, family_samples(K, grid, j))
            b = union_bounds(Phi, Phi.meta["member_fields"], V)
            checks.append({"j": j, **b})
        holds = all(c["holds"] for c in checks)
        records["union_bounds"] = checks
        verdicts.append({"name": "union_bounds", "value": "hold" if holds else "violated",
                         "criterion": _criterion(6), "trace": "report.json:records.union_bounds"})
    summary = {"verdict": est.verdict, "upper_bound": est.upper_bound, "final_total": rows[-1][-1]}
    return rows, {"records": records, "verdicts": verdicts, "summary": summary}


def _run_rates(cfg, threads):
    grid, K, V = _setup(cfg)
    js = [int(j) for j in cfg.get("schedule.j")]
    r = decay_rates(K, V, grid, js)
    m = V.terms[0].exponent
    rows = list(zip(js, r.grad_terms, r.lap_terms))
    expected = {"grad_slope": -(m / 2 - 1), "lap_slope": -(m - 2)}
    within = all(abs(getattr(r, k) - v) <= 0.1 * abs(v) for k, v in expected.items())
    summary = {"grad_slope": r.grad_slope, "lap_slope": r.lap_slope,
               "expected_grad_slope": expected["grad_slope"], "expected_lap_slope": expected["lap_slope"]}
    verdicts = [{"name": "decay_rates", "value": "match" if within else "mismatch",
                 "criterion": _criterion(2), "trace": "trace.csv"}]
    return rows, {"records": dict(summary), "verdicts": verdicts, "summary": summary}


def _run_lorentz(cfg, threads):
    grid, K, V = _setup(cfg)
    p, q = _float(cfg.get("lorentz.p")), _float(cfg.get("lorentz.q"))
    levels = int(cfg.get("schedule.levels"))
    d = membership_diagnosis(V, grid, p, q, levels, decay_threshold=_float(cfg.get("tolerance")))
    rows = [(i, s, v) for i, (s, v) in enumerate(zip(d.scales, d.values))]
    summary = {"classification": d.classification, "growth_exponent": d.growth_exponent,
               "increment_ratio": d.increment_ratio}
    verdicts = [{"name": "lorentz_membership", "value": d.classification,
                 "criterion": _criterion(1), "trace": "trace.csv"}]
    return rows, {"records": dict(summary), "verdicts": verdicts, "summary": summary}


def _run_dichotomy(cfg, threads):
    domain = build_domain(cfg.get("domain"))
    K = build_set(cfg.get("set"))
    V = build_potential(cfg.get("potential"), K)
    data = cfg.get("data")
    f = MeasureData.dirac(data["point"], _float(data.get("mass", 1.0)))
    js = [_float(j) for j in cfg.get("schedule.j")]
    U = None
    if cfg.get("solver.mode") == "radial":
        mesh = RadialMesh(domain.dimension, domain.radius, int(cfg.get("solver.cells")), _float(cfg.get("solver.r_min")))
    else:
        mesh = Grid(domain, _float(cfg.get("domain.h")))
        tk = cfg.get("transport.kind")
        kappa = _float(cfg.get("transport.kappa", 1.0))
        if tk == "rotation":
            U = TransportField.rotation(mesh, kappa)
        elif tk == "cellular":
            U = TransportField.cellular(mesh, kappa)
    rep = dichotomy_experiment(V, f, mesh, js, U=U, workers=threads)
    rows = rep.rows()
    summary = {"verdict": rep.verdict, "c0": rep.c0, "ratio_spread": rep.ratio_spread,
               "initial_l1": rep.l1_trace[0], "final_l1": rep.l1_trace[-1]}
    verdicts = [
        {"name": "dichotomy", "value": rep.verdict, "criterion": _criterion(9), "trace": "trace.csv"},
        {"name": "apriori_bound", "value": "stable" if rep.ratio_spread < 2 else "unstable",
         "criterion": _criterion(8), "trace": "trace.csv"},
    ]
    return rows, {"records": dict(summary), "verdicts": verdicts, "summary": summary,
                  "constants": {"c0": rep.c0}}


def _run_removable(cfg, threads):
    grid, K, V = _setup(cfg)
    c = cfg.get("candidate")
    if c["kind"] == "bump":
        bump = CompactBump(c["center"], _float(c["radius"]), _float(c["epsilon"]))
        w = lambda x, b=bump: b.evaluate(x)[0]  # noqa: E731
    else:
        zero = ZeroField()
        w = lambda x, z=zero: z.evaluate(x)[0]  # noqa: E731
    d = grid.domain
    center = d.center if d.kind == "ball" else 0.5 * (d.lo + d.hi)
    if d.kind != "ball":
        raise ValueError("removability probes are defined on ball domains")
    probes = [RadialPolynomial.bump(center, d.radius, 2), RadialPolynomial.bump(center, d.radius, 3)]
    js = [int(j) for j in cfg.get("schedule.j")]
    rep = removability_check(V, K, w, grid, probes, j_schedule=js, tolerance=_float(cfg.get("tolerance")))
    rows = [(i, j, o, b) for i in range(len(probes)) for j, o, b in zip(js, rep.off_residuals[i], rep.bridge_bounds[i])]
    summary = {"worst_full_residual": rep.worst_full_residual, "w_l1": rep.w_l1}
    verdicts = [{"name": "removability", "value": "residuals_vanish" if rep.worst_full_residual <= 1e-12 else "residual_detected",
                 "criterion": _criterion(9), "trace": "trace.csv"}]
    return rows, {"records": {**summary, "full_residuals": rep.full_residuals}, "verdicts": verdicts, "summary": summary}


def _run_kato(cfg, threads, seed):
    domain = build_domain(cfg.get("domain"))
    grid = Grid(domain, _float(cfg.get("domain.h")))
    L = laplacian_operator(grid)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(int(cfg.get("kato.pairs"))):
        w = rng.normal(size=grid.size) * 10.0 ** rng.integers(-3, 4)
        w[rng.random(grid.size) < 0.2] = 0.0
        rep = kato_check(w, L.apply(w), grid)
        rows.append((i, rep.worst_violation, rep.pair_residual))
    # weak maximum principle on a nonpositive source
    from scipy.sparse.linalg import spsolve

    rhs = -rng.random(grid.size)
    wmp = spsolve(L.to_sparse().tocsc(), rhs)
    mp = kato_check(wmp, L.apply(wmp), grid)
    worst = max(r[1] for r in rows)
    tol = _float(cfg.get("tolerance"))
    summary = {"worst_violation": worst, "max_principle_max_w": mp.max_w_under_nonpositive_rhs}
    verdicts = [
        {"name": "kato", "value": "holds" if worst <= tol else "violated", "criterion": _criterion(7), "trace": "trace.csv"},
        {"name": "weak_maximum_principle", "value": "holds" if mp.max_principle_holds else "violated",
         "criterion": _criterion(7), "trace": "report.json:summary.max_principle_max_w"},
    ]
    return rows, {"records": dict(summary), "verdicts": verdicts, "summary": summary}


def density_instance(K, domain):
    """The documented instance: ``Phi = (1 - |x|^2/R^2)^2``, ``g = min(1, d^3)(1 - |x|/R)``."""
    if domain.kind != "ball":
        raise ValueError("the density instance is defined on ball domains")
    c, R = domain.center, domain.radius
    Phi = RadialPolynomial.bump(c, R, 2)
    from .geometry import distance_to_set

    def g(x):
        r = np.linalg.norm(np.atleast_2d(x) - c, axis=1)
        return np.minimum(1.0, distance_to_set(x, K) ** 3) * (1.0 - r / R)

    return Phi, g


def _run_density(cfg, threads):
    grid, K, V = _setup(cfg)
    Phi, g = density_instance(K, grid.domain)
    js = [int(j) for j in cfg.get("schedule.j")]
    steps = density_approximation(Phi, K, V, g, grid, js)
    rows = [(s.j, s.mu, s.potential_residual, s.gradient_residual, s.laplacian_residual) for s in steps]
    tol = _float(cfg.get("tolerance"))
    arr = np.array([[s.potential_residual, s.gradient_residual, s.laplacian_residual] for s in steps])
    mono = bool(np.all(np.diff(arr[1:], axis=0) < 0)) if len(arr) > 2 else False
    small = bool(np.all(arr[-1] < tol * arr[0]))
    summary = {"final_over_initial": (arr[-1] / arr[0]).tolist(), "monotone_after_first": mono,
               "collar_max": max(s.collar_max for s in steps)}
    verdicts = [{"name": "density", "value": "converges" if (mono and small) else "stalls",
                 "criterion": _criterion(10), "trace": "trace.csv"}]
    return rows, {"records": dict(summary), "verdicts": verdicts, "summary": summary}


# ---------------------------------------------------------------------------
# outputs


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x.is_integer() and abs(x) < 2**53:
            return str(int(x))
        return "%.17g" % x
    return str(x)


def csv_text(columns, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def run(cfg, out_dir, threads=1):
    """Validate and run ``cfg``; write ``trace.csv`` and ``report.json`` into ``out_dir``.

    Raises :class:`ConfigError` (nothing written) when validation fails.
    Returns the report dictionary.
    """
    diags = validate(cfg)
    if diags:
        raise ConfigError(diags)
    exp = cfg.experiment
    seed = int(cfg.get("seed", 0))
    t0 = time.perf_counter()
    runners = {
        "capacity": _run_capacity,
        "rates": _run_rates,
        "lorentz": _run_lorentz,
        "dichotomy": _run_dichotomy,
        "removable": _run_removable,
        "density": _run_density,
    }
    if exp == "kato":
        rows, fields = _run_kato(cfg, threads, seed)
    else:
        rows, fields = runners[exp](cfg, threads)
    report = {
        "experiment": exp,
        "config": cfg.echo(),
        "columns": COLUMNS[exp],
        "records": fields.get("records", {}),
        "verdicts": fields["verdicts"],
        "constants": fields.get("constants", {}),
        "summary": fields["summary"],
        "seed": seed,
        "threads": threads,
        "wall_clock_s": time.perf_counter() - t0,
        "version": _version(),
    }
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "trace.csv"), csv_text(COLUMNS[exp], rows))
    _atomic_write(os.path.join(out_dir, "report.json"), json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return report


def _summary_lines(report):
    lines = [f"{report['experiment']}:"]
    for k, v in report["summary"].items():
        lines.append(f"  {k} = {_fmt(v) if not isinstance(v, list) else [_fmt(x) for x in v]}")
    for v in report["verdicts"]:
        lines.append(f"  verdict {v['name']}: {v['value']} (criterion {v['criterion']['id']}: {v['criterion']['name']})")
    return lines


def _parser():
    ap = argparse.ArgumentParser(prog="potcap", description="Potential-capacity experiments.")
    ap.add_argument("command", choices=EXPERIMENTS + ("validate",))
    ap.add_argument("--config", help="experiment config file (key = value lines)")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<experiment>)")
    ap.add_argument("--threads", type=int, default=1, help="concurrent schedule entries")
    ap.add_argument("--tolerance", type=float, help="override the experiment tolerance")
    return ap


def _load(args, default_experiment):
    cfg = load_config(args.config) if args.config else default_config(default_experiment)
    if args.tolerance is not None:
        cfg = cfg.with_override("tolerance", args.tolerance)
    return cfg


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return 2
    try:
        if args.command == "validate":
            if not args.config:
                print("validate needs --config", file=sys.stderr)
                return 2
            cfg = _load(args, None)
            diags = validate(cfg)
            for d in diags:
                print(d)
            return 0 if not diags else 1
        cfg = _load(args, args.command)
        if cfg.experiment != args.command:
            print(f"{cfg.path}: config is for {cfg.experiment!r}, not {args.command!r}", file=sys.stderr)
            return 2
        out = args.out or os.path.join(os.environ.get(OUT_ENV, "potcap-out"), args.command)
        report = run(cfg, out, threads=args.threads)
    except ConfigError as e:
        for m in e.messages:
            print(m, file=sys.stderr)
        return 2
    except (SolveError, np.linalg.LinAlgError) as e:
        print(f"solve failed: {e}", file=sys.stderr)
        return 3
    print("\n".join(_summary_lines(report)))
    print(f"  outputs: {out}/trace.csv, {out}/report.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
