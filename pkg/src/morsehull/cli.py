"""Command-line front end.

Reads a strict key = value config with bracketed sections, runs the
scenario harness, and writes deterministic artifacts: report.json,
tables/*.csv, plotdata/*.dat, ball edge lists, gauge tables, and
regression baselines.  There is no randomness anywhere; two runs of
the same config produce byte-identical output.

Exit codes: 0 all checks pass, 1 check failures or baseline drift,
2 usage/config errors, 3 resource limits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import __version__
from . import presentation as pres
from . import verify as _verify
from .cayley import DEFAULT_MAX_VERTICES, build_ball
from .errors import (
    BaselineMissing,
    Drift,
    MorsehullError,
    ParseError,
    ResourceLimit,
    ValidationError,
)
from .morse import (
    DEFAULT_BUDGET,
    DEFAULT_GRID,
    estimate_gauge,
    grid_to_str,
    parse_grid,
)

# section -> key -> (attribute, parser); every key not listed here is a
# fatal config error (strict mode).
_SCENARIO_KEYS = {
    "name": ("name", str),
    "group": ("group_text", str),
    "subgroup": ("subgroup_text", str),
    "radii": ("radii_text", str),
    "grid": ("grid_text", str),
    "checks": ("checks_text", str),
    "cutoff": ("cutoff_text", str),
}
_LIMIT_KEYS = {
    "max_vertices": "max_vertices",
    "budget": "budget",
    "max_directions": "max_directions",
    "pairs_per_class": "pairs_per_class",
    "profile_points": "profile_points",
    "gauge_segments": "gauge_segments",
    "geodesic_limit": "geodesic_limit",
    "sample_rays": "sample_rays",
    "triangle_directions": "triangle_directions",
}
_OUTPUT_KEYS = {"dir": "output_dir"}


@dataclass
class Config:
    """Parsed and validated configuration; ``scenario`` carries the
    semantic payload, the *_text fields preserve the exact input for
    round-tripping."""

    scenario: _verify.Scenario
    output_dir: str
    raw: Dict[str, Dict[str, str]] = field(default_factory=dict)

    def emit(self) -> str:
        lines = []
        for section in ("scenario", "limits", "output"):
            body = self.raw.get(section)
            if not body:
                continue
            lines.append("[%s]" % section)
            for k in body:
                lines.append("%s = %s" % (k, body[k]))
            lines.append("")
        return "\n".join(lines)


def _parse_sections(text: str) -> Dict[str, Dict[str, str]]:
    sections: Dict[str, Dict[str, str]] = {}
    current: Optional[str] = None
    for lineno, rawline in enumerate(text.splitlines(), 1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in ("scenario", "limits", "output"):
                raise ParseError("unknown section %r" % current, line=lineno)
            if current in sections:
                raise ParseError("duplicate section %r" % current,
                                 line=lineno)
            sections[current] = {}
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected key = value, got %r" % line,
                             line=lineno)
        if current is None:
            raise ParseError("key outside any [section]", line=lineno)
        key, value = key.strip(), value.strip()
        known = {"scenario": _SCENARIO_KEYS, "limits": _LIMIT_KEYS,
                 "output": _OUTPUT_KEYS}[current]
        if key not in known:
            raise ParseError("unknown key %r in [%s]" % (key, current),
                             line=lineno)
        if key in sections[current]:
            raise ParseError("duplicate key %r" % key, line=lineno)
        sections[current][key] = value
    return sections


def _int_field(name: str, value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise ValidationError("%s must be an integer, got %r"
                              % (name, value))
    if n <= 0:
        raise ValidationError("%s must be positive" % name)
    return n


def parse_config(text: str) -> Config:
    """Strict parse: unknown sections/keys are fatal, every field is
    validated, and emit() -> parse_config() round-trips."""
    sections = _parse_sections(text)
    sc = sections.get("scenario", {})
    for required in ("group", "subgroup", "radii"):
        if required not in sc:
            raise ValidationError("missing required key %r in [scenario]"
                                  % required)
    group = pres.parse_group(sc["group"])
    sub_words = []
    for w in sc["subgroup"].split(","):
        w = w.strip()
        if not w:
            raise ValidationError("empty subgroup generator word")
        sub_words.append(pres.parse_word(group, w))
    subgroup = pres.SubgroupSpec(group, tuple(sub_words))
    try:
        radii = tuple(int(r) for r in sc["radii"].split(","))
    except ValueError:
        raise ValidationError("radii must be comma-separated integers")
    grid = DEFAULT_GRID
    if "grid" in sc:
        try:
            grid = parse_grid(sc["grid"])
        except ValueError as e:
            raise ValidationError("bad grid: %s" % e)
    checks = _verify.CHECK_NAMES
    if "checks" in sc:
        checks = tuple(c.strip() for c in sc["checks"].split(",")
                       if c.strip())
    kwargs = {}
    if "cutoff" in sc:
        try:
            kwargs["cutoff"] = Fraction(sc["cutoff"])
        except (ValueError, ZeroDivisionError):
            raise ValidationError("cutoff must be a fraction")
    lim = sections.get("limits", {})
    for key, attr in _LIMIT_KEYS.items():
        if key in lim:
            kwargs[attr] = _int_field(key, lim[key])
    scenario = _verify.Scenario(
        group=group, subgroup=subgroup, radii=radii, grid=grid,
        checks=checks, name=sc.get("name", "scenario"), **kwargs)
    output_dir = sections.get("output", {}).get("dir", "out")
    return Config(scenario=scenario, output_dir=output_dir, raw=sections)


def load_config(path: str) -> Config:
    with open(path) as f:
        return parse_config(f.read())


def _json_value(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, tuple):
        return [_json_value(v) for v in x]
    return x


def _report_dict(cfg: Config, results, constants) -> dict:
    s = cfg.scenario
    return {
        "tool": "morsehull %s" % __version__,
        "scenario": {
            "name": s.name,
            "group": cfg.raw["scenario"]["group"],
            "subgroup": cfg.raw["scenario"]["subgroup"],
            "radii": list(s.radii),
            "grid": grid_to_str(s.grid),
            "checks": list(s.checks),
            "cutoff": str(s.cutoff),
            "max_vertices": s.max_vertices,
            "budget": s.budget,
        },
        "results": [
            {
                "check": r.check,
                "radius": r.radius,
                "measured": str(r.measured),
                "bound": str(r.bound),
                "passed": r.passed,
                "witness": _json_value(r.witness),
                "note": r.note,
            }
            for r in results
        ],
        "constants": {str(r): constants[r] for r in sorted(constants)},
    }


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        f.write(text)


def _write_run_outputs(cfg: Config, results, constants) -> None:
    out = cfg.output_dir
    report = _report_dict(cfg, results, constants)
    _write_text(os.path.join(out, "report.json"),
                json.dumps(report, indent=2, sort_keys=True) + "\n")
    rows = ["check,radius,measured,bound,status"]
    rows.extend(_verify.results_to_rows(results))
    _write_text(os.path.join(out, "tables", "results.csv"),
                "\n".join(rows) + "\n")
    crows = ["radius,constant,value"]
    for r in sorted(constants):
        for k in sorted(constants[r]):
            crows.append("%d,%s,%s" % (r, k, constants[r][k]))
    _write_text(os.path.join(out, "tables", "constants.csv"),
                "\n".join(crows) + "\n")
    by_check: Dict[str, List] = {}
    for r in results:
        by_check.setdefault(r.check, []).append(r)
    for check, rs in by_check.items():
        lines = [
            "# %s: measured value per ball radius" % check,
            "# radius\tmeasured",
        ]
        for r in rs:
            lines.append("%d\t%s" % (r.radius, r.measured))
        _write_text(os.path.join(cfg.output_dir, "plotdata",
                                 "%s.dat" % check),
                    "\n".join(lines) + "\n")


def _print_summary(results) -> None:
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print("%-4s %-20s R=%d  measured %s  bound %s%s"
              % (status, r.check, r.radius, r.measured, r.bound,
                 "  (%s)" % r.note if r.note else ""))


def _cmd_run(cfg: Config, args) -> int:
    results, constants = _verify.run_scenario_with_constants(
        cfg.scenario, workers=args.workers)
    _write_run_outputs(cfg, results, constants)
    _print_summary(results)
    failures = sum(1 for r in results if not r.passed)
    print("%d check(s), %d failure(s); report in %s"
          % (len(results), failures, cfg.output_dir))
    return 0 if failures == 0 else 1


def _cmd_ball(cfg: Config, args) -> int:
    s = cfg.scenario
    for radius in s.radii:
        b = build_ball(s.group, radius, max_vertices=s.max_vertices)
        path = os.path.join(cfg.output_dir, "ball_r%d.txt" % radius)
        _write_text(path, b.edge_list_text())
        print("wrote %s (%d vertices)" % (path, b.n))
    return 0


def _cmd_gauge(cfg: Config, args) -> int:
    s = cfg.scenario
    radius = s.radii[-1]
    b = build_ball(s.group, radius, max_vertices=s.max_vertices)
    w = pres.parse_word(s.group, args.word)
    v = b.index_of(w)
    gamma = b.first_geodesic(0, v)
    table = estimate_gauge(b, gamma, s.grid, s.budget)
    sys.stdout.write(table.to_csv())
    return 0


def _cmd_baseline(cfg: Config, args) -> int:
    path = os.path.join(cfg.output_dir, "baseline.csv")
    results = _verify.run_scenario(cfg.scenario, workers=args.workers)
    if args.write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        _verify.write_baseline(results, path)
        print("wrote %s" % path)
        return 0
    try:
        _verify.regression_compare(results, path)
    except Drift as d:
        for diff in d.diffs:
            print("drift: %s" % diff)
        return 1
    print("baseline check passed (%d rows)" % len(results))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="morsehull",
        description="Finite-scale Morse gauge and weak hull "
                    "measurements on Cayley balls.")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="worker pool size for independent sub-tasks")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("run", "run the configured scenario and write reports"),
            ("ball", "export ball edge lists for the configured radii"),
            ("gauge", "gauge table of the canonical geodesic to a word"),
            ("baseline", "write or check the regression baseline")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="path to the scenario config")
        if name == "gauge":
            sp.add_argument("--word", required=True,
                            help="target word, e.g. 'a a b^-1'")
        if name == "baseline":
            mode = sp.add_mutually_exclusive_group(required=True)
            mode.add_argument("--write", action="store_true")
            mode.add_argument("--check", action="store_true")
    return p


_COMMANDS = {
    "run": _cmd_run,
    "ball": _cmd_ball,
    "gauge": _cmd_gauge,
    "baseline": _cmd_baseline,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
    except OSError as e:
        print("error: cannot read config: %s" % e, file=sys.stderr)
        return 2
    except (ParseError, ValidationError, MorsehullError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg, args)
    except ResourceLimit as e:
        print("error: resource limit: %s" % e, file=sys.stderr)
        return 3
    except BaselineMissing as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except MorsehullError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
