"""Config-driven experiment plumbing: graph specs, scaling fits, audit registry.

Config files are plain ``key = value`` text with sections (stdlib configparser
syntax); every key can be overridden by a CLI flag of the same name.  All
randomness descends from one 64-bit root seed that is recorded in every
output header.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import coupling, curvature, graphs, green, tails, walks
from .errors import BudgetExceededError, DomainError
from .graphs import Graph
from .report import AuditCheck

DEFAULT_SEED = 20240801


@dataclass
class ExperimentConfig:
    graph_spec: str = ""
    n: int = 10
    lam: float | None = None
    calib_c: float | None = None
    seeds: int = 50
    seed: int = DEFAULT_SEED
    out: str | None = None
    format: str = "csv"
    transitive_pair: tuple[int, int] | None = None
    budget: int | None = None
    audits: list[str] | None = None  # None -> default suite; [] -> run nothing

    def validate(self):
        if not self.graph_spec:
            raise DomainError("a graph spec is required (e.g. torus:16,16)")
        if self.n < 1:
            raise DomainError("horizon n must be >= 1")
        if self.seeds < 1:
            raise DomainError("seed count must be >= 1")
        if self.format not in ("csv", "json"):
            raise DomainError(f"unknown output format {self.format!r}")
        return self


_CONFIG_KEYS = {
    # key -> (section, parser)
    "graph": ("graph", str),
    "transitive_pair": ("graph", str),
    "n": ("run", int),
    "lambda": ("run", float),
    "calib_c": ("run", float),
    "seeds": ("run", int),
    "seed": ("run", int),
    "budget": ("run", int),
    "out": ("output", str),
    "format": ("output", str),
    "audits": ("audit", str),
}


def parse_pair(text: str) -> tuple[int, int]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise DomainError(f"expected 'u,v', got {text!r}")
    return int(parts[0]), int(parts[1])


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    """Read a sectioned key=value file, then apply non-None CLI overrides."""
    raw: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise DomainError(f"config file {path} not found")
        for key, (section, conv) in _CONFIG_KEYS.items():
            if parser.has_option(section, key):
                raw[key] = conv(parser.get(section, key))
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    cfg = ExperimentConfig()
    if "graph" in raw:
        cfg.graph_spec = raw["graph"]
    if "transitive_pair" in raw:
        tp = raw["transitive_pair"]
        cfg.transitive_pair = parse_pair(tp) if isinstance(tp, str) else tp
    if "n" in raw:
        cfg.n = int(raw["n"])
    if "lambda" in raw:
        cfg.lam = float(raw["lambda"])
    if "calib_c" in raw:
        cfg.calib_c = float(raw["calib_c"])
    if "seeds" in raw:
        cfg.seeds = int(raw["seeds"])
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    if "budget" in raw:
        cfg.budget = int(raw["budget"])
    if "out" in raw:
        cfg.out = raw["out"]
    if "format" in raw:
        cfg.format = raw["format"]
    if "audits" in raw:
        names = raw["audits"]
        cfg.audits = [a.strip() for a in names.split(",") if a.strip()] \
            if isinstance(names, str) else list(names)
    return cfg


def build_graph(spec: str, *, seed: int = DEFAULT_SEED,
                transitive_pair: tuple[int, int] | None = None) -> Graph:
    """Instantiate a graph from a 'name:params' spec string."""
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "torus":
            g = graphs.torus([int(s) for s in arg.split(",")])
        elif name == "cycle":
            g = graphs.cycle(int(arg))
        elif name == "hypercube":
            g = graphs.hypercube(int(arg))
        elif name == "lamplighter":
            g = graphs.lamplighter_cycle(int(arg))
        elif name == "complete":
            g = graphs.complete(int(arg))
        elif name in ("random-regular", "random_regular"):
            n_str, d_str = arg.split(",")
            g = graphs.random_regular(int(n_str), int(d_str), seed=seed)
        elif name == "edgelist":
            with open(arg) as fh:
                g = graphs.load_edge_list(fh.read())
        else:
            raise DomainError(f"unknown generator {name!r}")
    except ValueError as exc:
        raise DomainError(f"bad parameters for {name!r}: {arg!r}") from exc
    if transitive_pair is not None:
        # an explicit pair is the caller's transitivity assertion
        g.vertex_transitive = True
    return g


@dataclass
class ScalingFit:
    """Least-squares exponent of value ~ n^alpha on log-log axes."""

    horizons: list[int]
    values: list[float]
    exponent: float
    intercept: float
    residual: float

    def to_json(self) -> dict:
        return {
            "horizons": self.horizons,
            "values": self.values,
            "exponent": self.exponent,
            "intercept": self.intercept,
            "residual": self.residual,
        }


def fit_power_law(horizons, values) -> ScalingFit:
    pairs = [(int(n), float(v)) for n, v in zip(horizons, values) if v > 0]
    if len(pairs) < 5:
        raise DomainError(f"need >= 5 positive points for a fit, got {len(pairs)}")
    xs = np.log([n for n, _ in pairs])
    ys = np.log([v for _, v in pairs])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    if not math.isfinite(slope):
        raise DomainError("degenerate series; exponent not finite")
    return ScalingFit([n for n, _ in pairs], [v for _, v in pairs],
                      float(slope), float(intercept),
                      float(np.sqrt(np.mean(resid**2))))


def dyadic_horizons(n_min: int, n_max: int) -> list[int]:
    out = []
    h = n_min
    while h <= n_max:
        out.append(h)
        h *= 2
    return out


def default_hint(g: Graph) -> tuple[int, int] | None:
    if g.vertex_transitive:
        return (0, int(g.neighbors(0)[0]))
    return None


def run_scaling(cfg: ExperimentConfig) -> dict:
    """Profile values at dyadic horizons with power-law fits (TV, D*, H*)."""
    g = build_graph(cfg.graph_spec, seed=cfg.seed, transitive_pair=cfg.transitive_pair)
    hint = cfg.transitive_pair or default_hint(g)
    if hint is None:
        raise DomainError("scaling runs need a vertex-transitive graph or a hint pair")
    horizons = dyadic_horizons(4, cfg.n)
    if len(horizons) < 5:
        raise DomainError("horizon too small: need at least 5 dyadic points from 4")
    prof = walks.full_profile(g, horizons[-1], transitive_hint=hint, sources=[hint[0]])
    fits = {}
    for column in ("tv", "dstar", "hstar"):
        series = getattr(prof, column)
        fits[column] = fit_power_law(horizons, [series[m] for m in horizons]).to_json()
    return {
        "root_seed": cfg.seed,
        "graph": cfg.graph_spec,
        "transitive_pair": list(hint),
        "fits": fits,
    }


# ---------------------------------------------------------------------------
# audit registry

def _metric_pair(g):
    yield tails.MetricTable.graph_metric(g)
    yield tails.MetricTable.green_metric(g, 4.0)


def _audit_tv_monotone(g, cfg):
    prof = walks.tv_profile(g, cfg.n, transitive_hint=default_hint(g)
                            if g.vertex_count > walks.ALL_PAIRS_TV_MAX_VERTICES else None)
    diffs = np.diff(prof.tv)
    return [AuditCheck("tv_monotone", {"n": cfg.n}, float(diffs.max()), 1e-12,
                       passed=bool(np.all(diffs <= 1e-12)))]


def _audit_profile_bounds(g, cfg):
    prof = walks.full_profile(g, cfg.n, want_tv=False)
    n = cfg.n
    return [
        AuditCheck("dstar_leq_n", {"n": n}, float(prof.dstar[n]), n,
                   passed=float(prof.dstar[n]) <= n),
        AuditCheck("hstar_leq_nlog2M", {"n": n}, float(prof.hstar[n]),
                   n * math.log(2 * g.max_degree),
                   passed=float(prof.hstar[n]) <= n * math.log(2 * g.max_degree) + 1e-9),
    ]


def _audit_curvature(g, cfg):
    rep = curvature.curvature_report(g)
    return [AuditCheck("curvature_nonneg_flag", {"edges": g.edge_count},
                       float(rep.min_curvature), 0,
                       passed=None,
                       witness={"min": str(rep.min_curvature),
                                "mean": str(rep.mean_curvature),
                                "nonneg": rep.nonnegative})]


def _audit_ms_bound(g, cfg):
    return curvature.audit_tv_decay_bound(g, cfg.n)


def _audit_green_supermult(g, cfg):
    if g.vertex_count > 40:
        raise BudgetExceededError("supermultiplicativity audit limited to 40 vertices")
    checks = []
    for t in (2.0, 4.0, 8.0):
        kernel = green.green_kernel(g, t)
        worst = green.supermultiplicativity_violation(kernel)
        checks.append(AuditCheck("green_supermultiplicative", {"t": t}, worst, 1e-10,
                                 passed=worst <= 1e-10))
    return checks


def _audit_info_green(g, cfg):
    if g.vertex_count > 64:
        raise BudgetExceededError("info/green audit limited to 64 vertices")
    checks = []
    for t in (2.0, 4.0, 8.0):
        kernel = green.green_kernel(g, t)
        for n in range(min(cfg.n, 10) + 1):
            rows = walks.row_matrix(g, n)
            for x in range(g.vertex_count):
                checks.extend(green.audit_info_green(g, x, n, t, kernel=kernel, rows=rows))
    return checks


def _audit_green_tail(g, cfg):
    if g.vertex_count > 64:
        raise BudgetExceededError("green tail audit limited to 64 vertices")
    n = min(cfg.n, 8)
    kernel = green.green_kernel(g, max(n, 1))
    checks = []
    for m in range(n + 1):
        rows = walks.row_matrix(g, m)
        for mu in (1.0, 2.0, 4.0):
            checks.append(green.audit_tail_info_vs_green(
                g, 0, m, n, mu, kernel=kernel, rows=rows))
    return checks


def _audit_max_disp_tail(g, cfg):
    if g.vertex_count > 25:
        raise BudgetExceededError("exact DP tail audit limited to 25 vertices")
    n = min(cfg.n, 10)
    checks = []
    for metric in _metric_pair(g):
        dps = [tails.max_disp_dp(g, metric, y, n) for y in range(g.vertex_count)]
        checks.extend(tails.audit_max_displacement_tail(g, metric, n, [1, 3, 6, 10, 15], dps=dps))
    return checks


def _audit_triangle(g, cfg):
    if g.vertex_count > 25:
        raise BudgetExceededError("running-max halving audit limited to 25 vertices")
    n = min(cfg.n, 10)
    metric = tails.MetricTable.graph_metric(g)
    return tails.audit_running_max_halving(g, metric, n, [1, 2, 3])


def _audit_expectation_median(g, cfg):
    if g.vertex_count > 64:
        raise BudgetExceededError("expectation/median audit limited to 64 vertices")
    metric = tails.MetricTable.graph_metric(g)
    return [tails.audit_expectation_median(g, metric, min(cfg.n, 20))]


def _audit_tv_conditioning(g, cfg):
    rng = np.random.default_rng((cfg.seed, 900))
    nverts = g.vertex_count
    checks = []
    for _ in range(100):
        pw = rng.integers(0, 10, size=nverts)
        qw = rng.integers(0, 10, size=nverts)
        if pw.sum() == 0 or qw.sum() == 0:
            continue
        p = [Fraction(int(w), int(pw.sum())) for w in pw]
        q = [Fraction(int(w), int(qw.sum())) for w in qw]
        A = [i for i in range(nverts) if p[i] > 0 and rng.random() < 0.7]
        B = [i for i in range(nverts) if q[i] > 0 and rng.random() < 0.7]
        if not A:
            A = [int(np.argmax(pw))]
        if not B:
            B = [int(np.argmax(qw))]
        checks.append(coupling.tv_conditioning_audit(p, q, A, B))
    return checks


def _audit_endpoint_tails(g, cfg):
    if g.vertex_count > 4096:
        raise BudgetExceededError("endpoint tail audit limited to 4096 vertices")
    return tails.audit_endpoint_tails(g, 0, cfg.n, [1, 2, 4])


def _audit_curvature_isoperimetry(g, cfg):
    rep = curvature.curvature_report(g)
    if not rep.nonnegative:
        return [AuditCheck("curvature_isoperimetry_skipped",
                           {"reason": "graph has a negative-curvature edge"},
                           None, None, passed=None)]
    points = []
    if g.vertex_count <= 16:
        profile = graphs.isoperimetric_profile_bruteforce(
            g, g.total_volume(), budget=cfg.budget or 2_000_000)
        points = [(n, float(r)) for n, r in profile.items() if r is not None and n >= 2]
    cert = coupling.partition_certificate(g, cfg.n, calibration_c=cfg.calib_c,
                                         n_seeds=min(cfg.seeds, 20), root_seed=cfg.seed)
    if cert.cell is not None:
        ratio = Fraction(cert.cell["ratio"]["num"], cert.cell["ratio"]["den"])
        points.append((cert.cell["volume"], float(ratio)))
    return [curvature.audit_curvature_isoperimetry(g, points,
                                                   calibration_c=cfg.calib_c)]


def _audit_tvtilde(g, cfg):
    prof = walks.full_profile(g, cfg.n, keep_final_rows=True)
    rows = prof.meta["final_rows"]["matrix"]
    lam = cfg.lam if cfg.lam is not None else 2.0
    fam = coupling.law_family(g, cfg.n, lam, prof, rows)
    return [coupling.audit_tvtilde(fam, float(prof.tv[cfg.n]))]


def _audit_mtp(g, cfg):
    prof = walks.full_profile(g, cfg.n, keep_final_rows=True)
    rows = prof.meta["final_rows"]["matrix"]
    lam = cfg.lam if cfg.lam is not None else 2.0
    fam = coupling.law_family(g, cfg.n, lam, prof, rows)
    return [coupling.mtp_ensemble(g, fam, n_seeds=min(cfg.seeds, 200),
                                  root_seed=cfg.seed)]


AUDITS = {
    "tv-monotone": _audit_tv_monotone,
    "profile-bounds": _audit_profile_bounds,
    "curvature": _audit_curvature,
    "curvature-isoperimetry": _audit_curvature_isoperimetry,
    "tv-decay-bound": _audit_ms_bound,
    "green-supermult": _audit_green_supermult,
    "info-green": _audit_info_green,
    "green-tail": _audit_green_tail,
    "max-displacement-tail": _audit_max_disp_tail,
    "running-max-halving": _audit_triangle,
    "expectation-median": _audit_expectation_median,
    "tv-conditioning": _audit_tv_conditioning,
    "endpoint-tails": _audit_endpoint_tails,
    "tvtilde": _audit_tvtilde,
    "mtp": _audit_mtp,
}

DEFAULT_AUDITS = [
    "tv-monotone", "profile-bounds", "green-supermult", "info-green",
    "green-tail", "running-max-halving", "expectation-median", "tv-conditioning",
    "endpoint-tails", "tvtilde",
]


def run_audits(cfg: ExperimentConfig) -> dict:
    """Run the selected audits; budget overruns become recorded skips."""
    g = build_graph(cfg.graph_spec, seed=cfg.seed, transitive_pair=cfg.transitive_pair)
    names = cfg.audits if cfg.audits is not None else DEFAULT_AUDITS
    results = {}
    all_pass = True
    for name in sorted(names):
        if name not in AUDITS:
            raise DomainError(f"unknown audit {name!r} (have: {', '.join(sorted(AUDITS))})")
        try:
            checks = AUDITS[name](g, cfg)
            failed = [c for c in checks if c.passed is False]
            results[name] = {
                "checks": len(checks),
                "failed": len(failed),
                "skipped": False,
                "details": [c.to_json() for c in (failed or checks[:3])],
            }
            if failed:
                all_pass = False
        except BudgetExceededError as exc:
            results[name] = {"skipped": True, "reason": str(exc)}
    return {
        "root_seed": cfg.seed,
        "graph": cfg.graph_spec,
        "n": cfg.n,
        "audits": results,
        "pass": all_pass,
    }
