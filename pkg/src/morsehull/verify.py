"""Scenario harness: named inequality checks over (group, subgroup,
radius) triples.

Each check compares one measured quantity against a bound instantiated
with measured gauges, and reports the worst offending instance.  The
``equivalence`` check spans all configured radii and decides which
branch of the stability dichotomy the finite-scale evidence supports;
its verdict is always phrased as "consistent with" — a ball of radius R
never proves the infinite statement.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import hull as _hull
from . import orbit as _orbit
from . import presentation as pres
from .cayley import Ball, DEFAULT_MAX_VERTICES, build_ball
from .errors import BaselineMissing, Drift, TooFewVertices, ValidationError
from .morse import (
    DEFAULT_BUDGET,
    DEFAULT_GRID,
    MANDATORY_ENTRIES,
    GaugeTable,
    QGridEntry,
    estimate_gauge,
    merge_tables,
)

CHECK_NAMES = (
    "hausdorff_close",
    "delta_slim",
    "strata_hyperbolic",
    "limit_triangle_slim",
    "rays_asymptotic",
    "hull_spread",
    "stability_profile",
    "cocompactness",
    "equivalence",
)

BASELINE_HEADER = "# morsehull-baseline v1"


@dataclass
class Scenario:
    """One configured experiment: which subgroup, which radii, which
    checks, and the resource knobs that keep every search finite."""

    group: pres.GroupSpec
    subgroup: pres.SubgroupSpec
    radii: Tuple[int, ...]
    grid: Tuple[QGridEntry, ...] = DEFAULT_GRID
    checks: Tuple[str, ...] = CHECK_NAMES
    name: str = "scenario"
    max_vertices: int = DEFAULT_MAX_VERTICES
    budget: int = DEFAULT_BUDGET
    cutoff: Fraction = Fraction(9, 10)
    max_directions: Optional[int] = None
    pairs_per_class: int = 16
    profile_points: Optional[int] = None
    gauge_segments: int = 8
    geodesic_limit: int = 16
    sample_rays: int = 6
    triangle_directions: int = 4

    def __post_init__(self):
        self.radii = tuple(self.radii)
        self.grid = tuple(self.grid)
        self.checks = tuple(self.checks)
        if self.subgroup.ambient != self.group:
            raise ValidationError("subgroup is over a different group")
        if not self.radii:
            raise ValidationError("radii must be nonempty")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValidationError("radii must be strictly increasing")
        if any(r < 1 for r in self.radii):
            raise ValidationError("radii must be positive")
        for e in MANDATORY_ENTRIES:
            if e not in self.grid:
                raise ValidationError("grid must contain %s" % str(e))
        for c in self.checks:
            if c not in CHECK_NAMES:
                raise ValidationError("unknown check %r" % c)
        if self.max_vertices <= 0 or self.budget <= 0:
            raise ValidationError("resource caps must be positive")


@dataclass
class CheckResult:
    """One measured-vs-bound verdict.  ``passed`` iff measured <= bound;
    ``witness`` identifies the worst instance and is present iff the
    check failed; ``note`` carries human-readable context."""

    check: str
    radius: int
    measured: Fraction
    bound: Fraction
    passed: bool
    witness: Optional[tuple] = None
    note: str = ""


def _result(check: str, radius: int, measured, bound,
            witness=None, note: str = "") -> CheckResult:
    measured, bound = Fraction(measured), Fraction(bound)
    passed = measured <= bound
    return CheckResult(check, radius, measured, bound, passed,
                       witness if not passed else None, note)


def _path_hausdorff(b: Ball, p: Sequence[int], q: Sequence[int]) -> int:
    """Hausdorff distance between two paths in the exact group metric
    (not the in-ball metric, which can overshoot near the shell)."""
    d = b.group_distance
    ab = max(min(d(x, y) for y in q) for x in p)
    ba = max(min(d(x, y) for y in p) for x in q)
    return max(ab, ba)


class _RadiusContext:
    """Lazily built shared state for one scenario radius: the ball, the
    orbit, limit directions, the pooled direction gauge, the weak hull,
    and the stability profile."""

    def __init__(self, s: Scenario, radius: int):
        self.s = s
        self.radius = radius
        self._cache: Dict[str, object] = {}

    def _get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    @property
    def ball(self) -> Ball:
        return self._get("ball", lambda: build_ball(
            self.s.group, self.radius, max_vertices=self.s.max_vertices))

    @property
    def orbit(self) -> _orbit.OrbitData:
        return self._get("orbit", lambda: _orbit.compute_orbit(
            self.ball, self.s.subgroup))

    @property
    def directions(self) -> List[_orbit.LimitDirection]:
        return self._get("directions", lambda: _orbit.limit_directions(
            self.ball, self.orbit, gauge_grid=self.s.grid,
            cutoff=self.s.cutoff, budget=self.s.budget,
            max_directions=self.s.max_directions))

    @property
    def pooled_gauge(self) -> GaugeTable:
        return self._get("pooled", lambda: merge_tables(
            [d.gauge for d in self.directions]))

    @property
    def hull(self) -> _hull.HullApprox:
        return self._get("hull", lambda: _hull.build_weak_hull(
            self.ball, self.directions, grid=self.s.grid,
            budget=self.s.budget, gauge_segments=self.s.gauge_segments))

    @property
    def profile(self) -> Dict[int, GaugeTable]:
        return self._get("profile", lambda: _orbit.stability_profile(
            self.ball, self.orbit, grid=self.s.grid, budget=self.s.budget,
            pairs_per_class=self.s.pairs_per_class,
            max_points=self.s.profile_points))

    @property
    def qi(self) -> _orbit.QIResult:
        return self._get("qi", lambda: _orbit.qi_constants(self.orbit))

    @property
    def cocompactness(self) -> int:
        return self._get("cocomp", lambda: _hull.cocompactness_radius(
            self.ball, self.hull, self.orbit))


def _profile_spread(ctx: _RadiusContext) -> int:
    vals = [t.value(3, 0) for t in ctx.profile.values()]
    if len(vals) < 2:
        return 0
    return max(vals) - min(vals)


def _check_hausdorff_close(ctx: _RadiusContext) -> CheckResult:
    s, b = ctx.s, ctx.ball
    worst = (Fraction(0), Fraction(0), None)  # (measured, bound, witness)
    best_excess = None
    for d in ctx.directions[:s.sample_rays]:
        gamma = d.ray
        if len(d.members) == 1:
            table = d.gauge
        else:
            # Merged gauges mix witnesses from several member rays;
            # re-measure on the representative so witness and segment
            # match.
            table = estimate_gauge(b, gamma, s.grid, s.budget)
        for e, n in sorted(table.entries.items()):
            w = table.witnesses.get(e)
            if not w:
                continue
            measured = Fraction(_path_hausdorff(b, w, gamma))
            bound = Fraction(2 * n)
            excess = measured - bound
            if best_excess is None or excess > best_excess:
                best_excess = excess
                worst = (measured, bound, tuple(w))
    measured, bound, witness = worst
    return _result("hausdorff_close", ctx.radius, measured, bound, witness,
                   note="worst witness-path distance vs 2N(K,C)")


def _four_point_delta_or_zero(b: Ball, verts) -> Fraction:
    try:
        return b.four_point_delta(verts)
    except TooFewVertices:
        return Fraction(0)


def _check_delta_slim(ctx: _RadiusContext) -> CheckResult:
    measured = _four_point_delta_or_zero(ctx.ball, ctx.orbit.points)
    bound = 8 * ctx.pooled_gauge.value(3, 0)
    return _result("delta_slim", ctx.radius, measured, bound,
                   witness=("orbit",),
                   note="orbit four-point delta vs 8N(3,0)")


def _check_strata_hyperbolic(ctx: _RadiusContext) -> CheckResult:
    pooled = ctx.pooled_gauge
    gauge = GaugeTable(pooled.segment_length)
    for e in MANDATORY_ENTRIES:
        gauge.set(e, pooled.value(e.K, e.C), True)
    stratum = _hull.stratum_vertices(ctx.ball, gauge, budget=ctx.s.budget)
    measured = _four_point_delta_or_zero(ctx.ball, stratum)
    bound = 8 * pooled.value(3, 0)
    return _result("strata_hyperbolic", ctx.radius, measured, bound,
                   witness=("stratum", len(stratum)),
                   note="stratum of %d vertices vs 8N(3,0)" % len(stratum))


def _check_limit_triangle_slim(ctx: _RadiusContext) -> CheckResult:
    dirs = ctx.directions[:ctx.s.triangle_directions]
    worst = (Fraction(0), Fraction(0), None)
    best_excess = None
    for i in range(len(dirs)):
        for j in range(i + 1, len(dirs)):
            tri = _hull.build_limit_triangle(ctx.ball, dirs[i], dirs[j])
            legs = max(dirs[i].gauge.value(3, 0), dirs[j].gauge.value(3, 0))
            measured, bound = Fraction(tri.slimness), Fraction(4 * legs)
            excess = measured - bound
            if best_excess is None or excess > best_excess:
                best_excess = excess
                worst = (measured, bound,
                         (dirs[i].endpoint, dirs[j].endpoint))
    measured, bound, witness = worst
    return _result("limit_triangle_slim", ctx.radius, measured, bound,
                   witness, note="worst triangle slimness vs 4N_legs(3,0)")


def _check_rays_asymptotic(ctx: _RadiusContext) -> CheckResult:
    b = ctx.ball
    worst = (Fraction(0), Fraction(14 * ctx.pooled_gauge.value(3, 0)), None)
    best_excess = None
    for d in ctx.directions:
        if len(d.members) < 2:
            continue
        rays = [b.first_geodesic(d.ray[0], m, relaxed=True)
                for m in d.members]
        bound = Fraction(14 * d.gauge.value(3, 0))
        for i in range(len(rays)):
            for j in range(i + 1, len(rays)):
                measured = Fraction(_path_hausdorff(b, rays[i], rays[j]))
                excess = measured - bound
                if best_excess is None or excess > best_excess:
                    best_excess = excess
                    worst = (measured, bound,
                             (d.members[i], d.members[j]))
    measured, bound, witness = worst
    return _result("rays_asymptotic", ctx.radius, measured, bound, witness,
                   note="merged-member ray separation vs 14N(3,0)")


def _check_hull_spread(ctx: _RadiusContext) -> CheckResult:
    dirs = ctx.directions[:ctx.s.triangle_directions]
    h = ctx.hull
    measured = Fraction(0)
    witness = None
    for i in range(len(dirs)):
        for j in range(i + 1, len(dirs)):
            spread = _hull.pairwise_hull_geodesic_spread(
                ctx.ball, h, dirs[i], dirs[j], limit=ctx.s.geodesic_limit)
            if spread > measured:
                measured = Fraction(spread)
                witness = (dirs[i].endpoint, dirs[j].endpoint)
    bound = _hull.hull_constant_k2(h.gauge)
    return _result("hull_spread", ctx.radius, measured, bound, witness,
                   note="pairwise hull-geodesic Hausdorff spread vs K2")


def _check_stability_profile(ctx: _RadiusContext) -> CheckResult:
    prof = ctx.profile
    vals = {d: t.value(3, 0) for d, t in prof.items()}
    measured = Fraction(_profile_spread(ctx))
    witness = None
    if vals:
        lo = min(vals, key=lambda d: (vals[d], d))
        hi = max(vals, key=lambda d: (vals[d], -d))
        witness = (lo, hi)
    return _result("stability_profile", ctx.radius, measured, 0, witness,
                   note="spread of the (3,0) profile entry across "
                        "distance classes")


def _check_cocompactness(ctx: _RadiusContext) -> CheckResult:
    qi = ctx.qi
    entry = QGridEntry(qi.K, 2 * qi.C + qi.K)
    _hull.ensure_gauge_entry(ctx.ball, ctx.hull, entry, budget=ctx.s.budget)
    measured = Fraction(ctx.cocompactness)
    bound = _hull.cocompactness_bound(ctx.hull.gauge, qi.K, qi.C)
    witness = None
    if measured > bound:
        dist = ctx.ball.multi_source_distance(ctx.orbit.points)
        witness = (max(ctx.hull.vertices, key=lambda v: int(dist[v])),)
    return _result("cocompactness", ctx.radius, measured, bound, witness,
                   note="hull-to-orbit radius vs 4N(3,0)+1+2N(K,2C+K)"
                        "+(K+C)/2 at (K,C)=(%s,%s)" % (qi.K, qi.C))


_PER_RADIUS = {
    "hausdorff_close": _check_hausdorff_close,
    "delta_slim": _check_delta_slim,
    "strata_hyperbolic": _check_strata_hyperbolic,
    "limit_triangle_slim": _check_limit_triangle_slim,
    "rays_asymptotic": _check_rays_asymptotic,
    "hull_spread": _check_hull_spread,
    "stability_profile": _check_stability_profile,
    "cocompactness": _check_cocompactness,
}


def _check_equivalence(s: Scenario,
                       ctxs: Dict[int, _RadiusContext]) -> CheckResult:
    spreads = {r: _profile_spread(ctxs[r]) for r in s.radii}
    gauges = [ctxs[r].pooled_gauge.value(3, 0) for r in s.radii]
    radius = s.radii[-1]
    if all(v == 0 for v in spreads.values()):
        # Branch (i): constant profile must come with a common bounded
        # direction gauge and a cocompactness radius within the bound.
        ok = gauges[-1] <= gauges[0]
        failing = None
        if ok:
            for r in s.radii:
                ctx = ctxs[r]
                qi = ctx.qi
                entry = QGridEntry(qi.K, 2 * qi.C + qi.K)
                _hull.ensure_gauge_entry(ctx.ball, ctx.hull, entry,
                                         budget=s.budget)
                bound = _hull.cocompactness_bound(ctx.hull.gauge,
                                                  qi.K, qi.C)
                if ctx.cocompactness > bound:
                    ok = False
                    failing = ("cocompactness", r)
                    break
        else:
            failing = ("gauge_growth", tuple(gauges))
        return _result(
            "equivalence", radius, 0 if ok else 1, 0,
            witness=failing,
            note="branch (i): consistent with stable at finite scale"
            if ok else "branch (i) expected but evidence inconsistent")
    # Branch (ii): a growing profile must come with growing direction
    # gauges or a growing cocompactness radius.
    gauges_grow = all(a < b for a, b in zip(gauges, gauges[1:]))
    ok = gauges_grow
    if not ok:
        cocomp = [ctxs[r].cocompactness for r in s.radii]
        ok = all(a < b for a, b in zip(cocomp, cocomp[1:]))
    return _result(
        "equivalence", radius, 0 if ok else 1, 0,
        witness=("no_growth", tuple(gauges)),
        note="branch (ii): consistent with non-stable at finite scale"
        if ok else "branch (ii) expected but no growth detected")


def run_scenario(s: Scenario, workers: int = 1) -> List[CheckResult]:
    """Run the scenario's checks in declared order, each per-radius
    check at every radius in increasing order; the equivalence check
    spans all radii and is reported once.  ``workers`` > 1 runs the
    radii of one check concurrently (distinct radii share no state);
    the result order is identical either way."""
    return run_scenario_with_constants(s, workers)[0]


def run_scenario_with_constants(
        s: Scenario, workers: int = 1
) -> Tuple[List[CheckResult], Dict[int, Dict[str, str]]]:
    """run_scenario plus a per-radius table of the measured constants
    the checks happened to compute (orbit size, direction count, pooled
    gauge entries, qi constants, cocompactness radius)."""
    ctxs = {r: _RadiusContext(s, r) for r in s.radii}
    results: List[CheckResult] = []
    for check in s.checks:
        if check == "equivalence":
            results.append(_check_equivalence(s, ctxs))
        elif workers > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=workers) as ex:
                results.extend(ex.map(
                    lambda r: _PER_RADIUS[check](ctxs[r]), s.radii))
        else:
            for r in s.radii:
                results.append(_PER_RADIUS[check](ctxs[r]))
    constants = {r: _constants_table(ctxs[r]) for r in s.radii}
    return results, constants


def _constants_table(ctx: _RadiusContext) -> Dict[str, str]:
    """Measured constants already computed for this radius (nothing is
    recomputed here, so the table reflects the checks actually run)."""
    out: Dict[str, str] = {}
    cache = ctx._cache
    if "orbit" in cache:
        out["orbit_points"] = str(len(ctx.orbit))
    if "directions" in cache:
        out["directions"] = str(len(ctx.directions))
        pooled = ctx.pooled_gauge
        for e in sorted(pooled.entries):
            out["N(%s,%s)" % (e.K, e.C)] = str(pooled.entries[e])
    if "qi" in cache:
        out["qi_K"] = str(ctx.qi.K)
        out["qi_C"] = str(ctx.qi.C)
    if "cocomp" in cache:
        out["cocompactness_radius"] = str(ctx.cocompactness)
    return out


def results_to_rows(results: Sequence[CheckResult]) -> List[str]:
    rows = []
    for r in results:
        rows.append("%s,%d,%s,%s,%s" % (
            r.check, r.radius, r.measured, r.bound,
            "pass" if r.passed else "fail"))
    return rows


def write_baseline(results: Sequence[CheckResult], path: str) -> None:
    lines = [BASELINE_HEADER, "check,radius,measured,bound,status"]
    lines.extend(results_to_rows(results))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def regression_compare(results: Sequence[CheckResult],
                       path: str) -> List[str]:
    """Exact comparison against a stored baseline.  Returns the empty
    diff on agreement; raises Drift carrying per-row differences
    otherwise (the pipeline is deterministic, so any drift is an
    error)."""
    if not os.path.exists(path):
        raise BaselineMissing("no baseline at %s" % path)
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or lines[0] != BASELINE_HEADER:
        raise Drift(["unrecognized baseline header in %s" % path])
    old = lines[2:] if len(lines) > 1 else []
    old = [ln for ln in old if ln]
    new = results_to_rows(results)

    def key(row):
        check, radius, _ = row.split(",", 2)
        return (check, int(radius))

    old_map = {key(r): r for r in old}
    new_map = {key(r): r for r in new}
    diffs = []
    for k in sorted(set(old_map) | set(new_map)):
        a, b = old_map.get(k), new_map.get(k)
        if a == b:
            continue
        if a is None:
            diffs.append("new row: %s" % b)
        elif b is None:
            diffs.append("missing row: %s" % a)
        else:
            fields = ("check", "radius", "measured", "bound", "status")
            pa, pb = a.split(","), b.split(",")
            for name, va, vb in zip(fields, pa, pb):
                if va != vb:
                    diffs.append("%s,%d: %s %s -> %s"
                                 % (k[0], k[1], name, va, vb))
    if diffs:
        raise Drift(diffs)
    return []
