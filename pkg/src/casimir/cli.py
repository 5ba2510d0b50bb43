"""Command-line front end: every computation as a subcommand.

The eight subcommands map onto the library layers. `eps` tabulates
imaginary-frequency permittivities, `force` and `equilibria` evaluate a
single geometry, `scan` and `fold` follow equilibria across a parameter
family, and `suspend`, `pair`, `dicluster` wrap the gravity-balance
solvers. Each command reads an optional TOML run config, applies flag
overrides on top, and emits CSV or JSON with a provenance comment line,
so rerunning a fixed config is byte-identical.

Working units at the boundary are nanometers for lengths, 2 pi c/um for
imaginary frequencies, and piconewtons for forces (planar pressures in
pN/um^2, numerically equal to Pa). JSON output carries SI values
alongside. Exit codes: 0 success (including physically infeasible
designs), 1 usage or config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constants import G_STANDARD, NM, PICONEWTON, XI_UNIT
from .equilibria import _effective_count, find_equilibria, find_fold, scan_parameter
from .materials import (
    MaterialDb,
    MaterialLookupError,
    MaterialParseError,
    MaterialValidationError,
    find_crossings,
    load_materials,
)
from .numerics import BracketError, ConvergenceError, QuadratureError
from .planar import (
    DenominatorError,
    Layer,
    LayerStack,
    PlanarGap,
    _default_rules,
    lifshitz_pressure,
    normalized_pressure,
)
from .scattering import (
    AccuracyError,
    EvaluationError,
    PlateSphereGeometry,
    SphereBody,
    SphereSphereGeometry,
    WaveBasis,
    _default_xi_rule,
    casimir_force,
    normalized_force,
)
from .suspension import (
    ConfigurationError,
    PairingRangeError,
    SuspendedSphere,
    _auto_basis,
    design_dicluster,
    height_curve,
    pair_radii,
    solve_heights,
)

DEFAULT_LMAX = 20
DEFAULT_QUAD_N = 40


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class ConfigError(Exception):
    """Bad or incomplete run config; maps to exit code 1."""


_NUMERICAL_ERRORS = (
    BracketError,
    ConvergenceError,
    QuadratureError,
    AccuracyError,
    EvaluationError,
    DenominatorError,
    FloatingPointError,
    OverflowError,
    ZeroDivisionError,
)

_CONFIG_ERRORS = (
    ConfigError,
    ConfigurationError,
    MaterialLookupError,
    MaterialParseError,
    MaterialValidationError,
    OSError,
    ValueError,
)


# ---------------------------------------------------------------------------
# formatting


def _f(v: float) -> str:
    return f"{float(v):.9e}"


def _rounded(v: float) -> float:
    return float(_f(v))


def _is_nan(v) -> bool:
    return isinstance(v, float) and math.isnan(v)


@dataclass(frozen=True)
class Column:
    """One output column: paper-unit name, SI name, SI-to-paper divisor."""

    name: str
    si_name: str | None = None
    scale: float = 1.0


def _csv_cell(v, scale: float) -> str:
    if v is None or _is_nan(v):
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _f(v / scale)
    if isinstance(v, (list, tuple)):
        return ";".join(_f(float(x) / scale) for x in v)
    return str(v)


def _json_cell(v, scale: float):
    if v is None or _is_nan(v):
        return None
    if isinstance(v, (bool, int)):
        return v
    if isinstance(v, float):
        return _rounded(v / scale)
    if isinstance(v, (list, tuple)):
        return [_rounded(float(x) / scale) for x in v]
    return str(v)


@dataclass
class Table:
    """Rows of raw SI cells plus the column spec used to render them."""

    columns: list
    rows: list

    def csv_lines(self) -> list:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([c.name for c in self.columns])
        for row in self.rows:
            writer.writerow(
                [_csv_cell(v, c.scale) for c, v in zip(self.columns, row)]
            )
        return buf.getvalue().splitlines()

    def json_obj(self) -> dict:
        return {
            "columns": [c.name for c in self.columns],
            "columns_si": [c.si_name or c.name for c in self.columns],
            "rows": [
                [_json_cell(v, c.scale) for c, v in zip(self.columns, row)]
                for row in self.rows
            ],
            "rows_si": [
                [_json_cell(v, 1.0) for v in row] for row in self.rows
            ],
        }


def _config_hash(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _render(command: str, digest: str, prov: dict, tables: list,
            footers: list, extras: dict, fmt: str) -> str:
    """Assemble the final output text for either format.

    ``tables`` is a list of (label, Table); a lone table may use label
    "table". Footers become CSV comment lines and JSON stays structured.
    """
    if fmt == "json":
        doc = {
            "command": command,
            "provenance": {"config_sha256": digest, **prov},
        }
        for label, table in tables:
            doc[label] = table.json_obj()
        doc.update(extras)
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"

    lines = [
        f"# casimir {command} config={digest} "
        f"lmax={prov['lmax']} n={prov['quad_n']}"
    ]
    for label, table in tables:
        if len(tables) > 1:
            lines.append(f"# {label}")
        lines.extend(table.csv_lines())
    lines.extend(footers)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# config plumbing


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _as_number(value, where: str, *, positive: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    v = float(value)
    if positive and v <= 0.0:
        raise ConfigError(f"{where}: must be positive, got {v}")
    return v


def _as_int(value, where: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{where}: must be at least {minimum}, got {value}")
    return value


def _need(sec: dict, key: str, where: str):
    if key not in sec:
        raise ConfigError(f"{where}: missing required key '{key}'")
    return sec[key]


def _triple(text: str, what: str) -> tuple:
    """Parse 'lo:hi:count' into two floats and an int."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{what}: expected LO:HI:COUNT, got '{text}'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise UsageError(f"{what}: expected LO:HI:COUNT, got '{text}'") from None
    if not (0.0 < lo < hi) or count < 2:
        raise UsageError(f"{what}: need 0 < LO < HI and COUNT >= 2")
    return lo, hi, count


def _colon_pair(text: str, what: str, *, positive: bool = True) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"{what}: expected LO:HI, got '{text}'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"{what}: expected LO:HI, got '{text}'") from None
    if hi <= lo or (positive and lo <= 0.0):
        raise UsageError(f"{what}: need LO < HI{' and LO > 0' if positive else ''}")
    return lo, hi


def _comma_floats(text: str, what: str) -> list:
    try:
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers") from None
    if not vals:
        raise UsageError(f"{what}: empty list")
    return vals


def _length_grid(sec: dict, where: str, lo_nm: float, hi_nm: float,
                 points: int) -> np.ndarray:
    """Length grid in meters from explicit values or a spanned range."""
    if "values_nm" in sec:
        raw = sec["values_nm"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{where}.values_nm: expected a non-empty list")
        vals = [_as_number(v, f"{where}.values_nm") * NM for v in raw]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError(f"{where}.values_nm: must increase strictly")
        return np.array(vals)
    lo = _as_number(sec.get("min_nm", lo_nm), f"{where}.min_nm") * NM
    hi = _as_number(sec.get("max_nm", hi_nm), f"{where}.max_nm") * NM
    if hi <= lo:
        raise ConfigError(f"{where}: max_nm must exceed min_nm")
    n = _as_int(sec.get("points", points), f"{where}.points", minimum=2)
    spacing = sec.get("spacing", "log")
    if spacing == "log":
        return np.geomspace(lo, hi, n)
    if spacing == "linear":
        return np.linspace(lo, hi, n)
    raise ConfigError(f"{where}.spacing: expected 'log' or 'linear'")


def _wall(value, where: str) -> LayerStack:
    """A wall spec: a material name, or a list of layer tables."""
    if isinstance(value, str):
        return LayerStack.half_space(value)
    if isinstance(value, list):
        layers = []
        for i, item in enumerate(value):
            if not isinstance(item, dict):
                raise ConfigError(f"{where}[{i}]: expected a layer table")
            material = _need(item, "material", f"{where}[{i}]")
            if "thickness_nm" in item:
                t = _as_number(item["thickness_nm"], f"{where}[{i}].thickness_nm")
                layers.append(Layer(str(material), t * NM))
            else:
                layers.append(Layer(str(material)))
        try:
            return LayerStack(tuple(layers))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: expected a material name or a layer list")


def _geometry_section(cfg: dict) -> dict:
    geo = cfg.get("geometry", {})
    if not isinstance(geo, dict):
        raise ConfigError("[geometry]: expected a table")
    return geo


def _base_resolved(ns, cfg: dict, command: str, materials_path: str | None):
    """Shared resolution: numerics, format, geometry echo for hashing."""
    numerics = cfg.get("numerics", {})
    if not isinstance(numerics, dict):
        raise ConfigError("[numerics]: expected a table")
    lmax = ns.lmax if ns.lmax is not None else numerics.get("lmax")
    if lmax is not None:
        lmax = _as_int(lmax, "numerics.lmax")
    quad_n = ns.quad_n if ns.quad_n is not None else numerics.get("quad_n", DEFAULT_QUAD_N)
    quad_n = _as_int(quad_n, "numerics.quad_n", minimum=2)

    out_sec = cfg.get("output", {})
    if not isinstance(out_sec, dict):
        raise ConfigError("[output]: expected a table")
    fmt = ns.format or out_sec.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format: expected 'csv' or 'json', got '{fmt}'")

    # the hash identifies the computation, so the output format stays out
    resolved = {
        "command": command,
        "materials": materials_path or "",
        "geometry": _geometry_section(cfg),
        "numerics": {"lmax": lmax, "quad_n": quad_n},
    }
    return resolved, lmax, quad_n, fmt


def _map_jobs(fn, values, jobs: int):
    values = list(values)
    if jobs > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, values))
    return [fn(v) for v in values]


# ---------------------------------------------------------------------------
# geometry -> force closures


def _planar_parts(geo: dict, db: MaterialDb):
    wall_a = _wall(_need(geo, "wall_a", "geometry"), "geometry.wall_a")
    wall_b = _wall(_need(geo, "wall_b", "geometry"), "geometry.wall_b")
    fluid = str(geo.get("fluid", "ethanol"))
    for lay in wall_a.layers + wall_b.layers:
        db.get(lay.material)
    db.get(fluid)
    return wall_a, wall_b, fluid


def _plate_sphere_parts(geo: dict, db: MaterialDb):
    stack = _wall(_need(geo, "wall", "geometry"), "geometry.wall")
    material = str(_need(geo, "sphere_material", "geometry"))
    radius = _as_number(_need(geo, "radius_nm", "geometry"), "geometry.radius_nm") * NM
    fluid = str(geo.get("fluid", "ethanol"))
    for lay in stack.layers:
        db.get(lay.material)
    db.get(material)
    db.get(fluid)
    return stack, SphereBody(radius, material), fluid


def _sphere_sphere_parts(geo: dict, db: MaterialDb):
    mat_a = str(_need(geo, "material_a", "geometry"))
    mat_b = str(_need(geo, "material_b", "geometry"))
    r_a = _as_number(_need(geo, "radius_a_nm", "geometry"), "geometry.radius_a_nm") * NM
    r_b = _as_number(_need(geo, "radius_b_nm", "geometry"), "geometry.radius_b_nm") * NM
    fluid = str(geo.get("fluid", "ethanol"))
    db.get(mat_a)
    db.get(mat_b)
    db.get(fluid)
    return SphereBody(r_a, mat_a), SphereBody(r_b, mat_b), fluid


def _force_closures(kind: str, geo: dict, db: MaterialDb, lmax: int,
                    quad_n: int):
    """(force(d), normalized(d), force column, normalized column)."""
    if kind == "slab-slab":
        wall_a, wall_b, fluid = _planar_parts(geo, db)

        def force(d: float) -> float:
            gap = PlanarGap(wall_a, wall_b, fluid, d)
            return lifshitz_pressure(gap, db, *_default_rules(d, quad_n, quad_n))

        def norm(d: float) -> float:
            gap = PlanarGap(wall_a, wall_b, fluid, d)
            return normalized_pressure(gap, db, *_default_rules(d, quad_n, quad_n))

        fcol = Column("pressure_pN_um2", "pressure_Pa", 1.0)
        ncol = Column("p_over_ideal")
        return force, norm, fcol, ncol

    if kind == "plate-sphere":
        stack, sphere, fluid = _plate_sphere_parts(geo, db)
        basis = WaveBasis(lmax)

        def force(d: float) -> float:
            geom = PlateSphereGeometry(stack, sphere, fluid, d)
            return casimir_force(geom, basis, _default_xi_rule(d, quad_n), db)

        def norm(d: float) -> float:
            geom = PlateSphereGeometry(stack, sphere, fluid, d)
            return normalized_force(geom, basis, _default_xi_rule(d, quad_n), db)

    elif kind == "sphere-sphere":
        body_a, body_b, fluid = _sphere_sphere_parts(geo, db)
        basis = WaveBasis(lmax)

        def force(d: float) -> float:
            geom = SphereSphereGeometry(body_a, body_b, fluid, d)
            return casimir_force(geom, basis, _default_xi_rule(d, quad_n), db)

        def norm(d: float) -> float:
            geom = SphereSphereGeometry(body_a, body_b, fluid, d)
            return normalized_force(geom, basis, _default_xi_rule(d, quad_n), db)

    else:
        raise ConfigError(
            f"geometry.kind '{kind}' does not define a force curve; expected "
            "slab-slab, plate-sphere, or sphere-sphere"
        )
    fcol = Column("force_pN", "force_N", PICONEWTON)
    ncol = Column("f_x720d3_hbar_c_pi3")
    return force, norm, fcol, ncol


def _family_builder(geo: dict, db: MaterialDb, parameter: str, swap: bool,
                    lmax: int, quad_n: int):
    """Force family over a control parameter, optionally material-swapped.

    'radius' varies the sphere radius of a plate-sphere geometry;
    'thickness' varies the first-layer thickness of wall_a in a
    slab-slab geometry. Swapping exchanges the two gap-facing solid
    materials before the family is built.
    """
    kind = str(_need(geo, "kind", "geometry"))
    if parameter == "radius":
        if kind != "plate-sphere":
            raise ConfigError("a radius scan needs geometry.kind = 'plate-sphere'")
        stack, sphere, fluid = _plate_sphere_parts(geo, db)
        if swap:
            first = stack.layers[0]
            swapped = (Layer(sphere.material, first.thickness),) + stack.layers[1:]
            sphere = SphereBody(sphere.radius, first.material)
            stack = LayerStack(swapped)
        basis = WaveBasis(lmax)

        def family(radius: float):
            body = SphereBody(radius, sphere.material)

            def force(d: float) -> float:
                geom = PlateSphereGeometry(stack, body, fluid, d)
                return casimir_force(geom, basis, _default_xi_rule(d, quad_n), db)

            return force

        return family

    if parameter == "thickness":
        if kind != "slab-slab":
            raise ConfigError("a thickness scan needs geometry.kind = 'slab-slab'")
        wall_a, wall_b, fluid = _planar_parts(geo, db)
        if len(wall_a.layers) < 2:
            raise ConfigError(
                "a thickness scan varies wall_a's first layer, so wall_a "
                "needs a finite first layer over a backing"
            )
        if swap:
            a0, b0 = wall_a.layers[0], wall_b.layers[0]
            wall_a = LayerStack((Layer(b0.material, a0.thickness),) + wall_a.layers[1:])
            wall_b = LayerStack((Layer(a0.material, b0.thickness),) + wall_b.layers[1:])

        def family(thickness: float):
            first = wall_a.layers[0]
            varied = LayerStack((Layer(first.material, thickness),) + wall_a.layers[1:])

            def force(d: float) -> float:
                gap = PlanarGap(varied, wall_b, fluid, d)
                return lifshitz_pressure(gap, db, *_default_rules(d, quad_n, quad_n))

            return force

        return family

    raise ConfigError(f"scan.parameter: expected 'radius' or 'thickness', got '{parameter}'")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_eps(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "eps", materials_path)
    sec = cfg.get("eps", {})
    names_text = ns.materials or sec.get("materials")
    if not names_text:
        raise UsageError("eps: --materials NAME[,NAME...] is required")
    if isinstance(names_text, str):
        names = [n.strip() for n in names_text.split(",") if n.strip()]
    else:
        names = [str(n) for n in names_text]
    if not names:
        raise UsageError("eps: --materials NAME[,NAME...] is required")
    xi_text = ns.xi or sec.get("xi", "0.1:100:200")
    lo_u, hi_u, count = _triple(str(xi_text), "eps --xi")
    crossings = bool(ns.crossings or sec.get("crossings", False))

    for name in names:
        db.get(name)

    resolved["eps"] = {"materials": names, "xi": [lo_u, hi_u, count],
                       "crossings": crossings}
    digest = _config_hash(resolved)

    grid = np.geomspace(lo_u * XI_UNIT, hi_u * XI_UNIT, count)
    columns = [Column("xi_2pic_um", "xi_rad_s", XI_UNIT)]
    columns += [Column(f"eps_{name}") for name in names]
    rows = [[float(xi)] + [float(db.permittivity(name, float(xi))) for name in names]
            for xi in grid]
    tables = [("table", Table(columns, rows))]

    footers = []
    extras = {}
    if crossings:
        found = []
        for a, b in itertools.combinations(names, 2):
            xs = find_crossings(db.get(a).model, db.get(b).model,
                                (lo_u * XI_UNIT, hi_u * XI_UNIT))
            in_units = [_rounded(x / XI_UNIT) for x in xs]
            listed = ";".join(_f(x / XI_UNIT) for x in xs) if xs else "none"
            footers.append(f"# crossings {a}/{b} (2pic_um): {listed}")
            found.append({"pair": [a, b], "xi_2pic_um": in_units,
                          "xi_rad_s": [_rounded(x) for x in xs]})
        extras["crossings"] = found

    prov = {"lmax": lmax if lmax is not None else DEFAULT_LMAX, "quad_n": quad_n}
    return _render("eps", digest, prov, tables, footers, extras, fmt)


def _cmd_force(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "force", materials_path)
    geo = resolved["geometry"]
    kind = str(_need(geo, "kind", "geometry"))
    sec = dict(cfg.get("separations", {}))
    if ns.d:
        lo, hi, count = _triple(ns.d, "force --d")
        sec.update({"min_nm": lo, "max_nm": hi, "points": count})
    if ns.spacing:
        sec["spacing"] = ns.spacing
    grid = _length_grid(sec, "separations", 10.0, 500.0, 60)

    lmax_eff = lmax if lmax is not None else DEFAULT_LMAX
    resolved["separations"] = {"grid_m": [repr(float(v)) for v in grid]}
    digest = _config_hash(resolved)

    force, norm, fcol, ncol = _force_closures(kind, geo, db, lmax_eff, quad_n)

    def one(d: float):
        return [float(d), force(float(d)), norm(float(d))]

    rows = _map_jobs(one, grid, ns.jobs)
    table = Table([Column("d_nm", "d_m", NM), fcol, ncol], rows)
    prov = {"lmax": lmax_eff, "quad_n": quad_n}
    return _render("force", digest, prov, [("table", table)], [], {}, fmt)


def _equilibria_window(ns, cfg: dict):
    sec = dict(cfg.get("separations", {}))
    if ns.d:
        lo, hi, count = _triple(ns.d, "--d")
        sec.update({"min_nm": lo, "max_nm": hi, "points": count})
    lo = _as_number(sec.get("min_nm", 10.0), "separations.min_nm") * NM
    hi = _as_number(sec.get("max_nm", 500.0), "separations.max_nm") * NM
    if hi <= lo:
        raise ConfigError("separations: max_nm must exceed min_nm")
    points = _as_int(sec.get("points", 60), "separations.points", minimum=2)
    return (lo, hi), points


def _cmd_equilibria(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "equilibria", materials_path)
    geo = resolved["geometry"]
    kind = str(_need(geo, "kind", "geometry"))
    d_range, grid_points = _equilibria_window(ns, cfg)

    lmax_eff = lmax if lmax is not None else DEFAULT_LMAX
    resolved["separations"] = {"range_m": [d_range[0], d_range[1]],
                               "points": grid_points}
    digest = _config_hash(resolved)

    force, _, fcol, _ = _force_closures(kind, geo, db, lmax_eff, quad_n)
    points = find_equilibria(force, d_range, grid_points)

    residual_col = Column(f"residual_{fcol.name.split('_', 1)[1]}",
                          f"residual_{fcol.si_name.split('_', 1)[1]}",
                          fcol.scale)
    columns = [Column("d_nm", "d_m", NM), Column("kind"),
               Column("slope_sign"), residual_col, Column("flags")]
    rows = [[p.separation, p.kind, p.slope_sign, p.residual,
             "near_fold" if p.near_fold else ""] for p in points]
    prov = {"lmax": lmax_eff, "quad_n": quad_n}
    return _render("equilibria", digest, prov,
                   [("table", Table(columns, rows))], [], {}, fmt)


def _scan_values(ns, cfg: dict) -> tuple:
    sec = dict(cfg.get("scan", {}))
    if ns.parameter:
        sec["parameter"] = ns.parameter
    if getattr(ns, "values", None):
        sec["values_nm"] = _comma_floats(ns.values, "scan --values")
    if getattr(ns, "range", None):
        lo, hi, count = _triple(ns.range, "scan --range")
        sec.update({"min_nm": lo, "max_nm": hi, "points": count})
        sec.pop("values_nm", None)
    parameter = sec.get("parameter")
    if parameter not in ("radius", "thickness"):
        raise ConfigError("scan.parameter: expected 'radius' or 'thickness'")
    if "values_nm" not in sec and not ("min_nm" in sec and "max_nm" in sec):
        raise ConfigError("scan: needs values_nm or both min_nm and max_nm")
    values = _length_grid(sec, "scan", 0.0, 0.0, 12)
    swap = bool(ns.swap or sec.get("swap", False))
    return parameter, values, swap


def _cmd_scan(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "scan", materials_path)
    geo = resolved["geometry"]
    parameter, values, swap = _scan_values(ns, cfg)
    d_range, grid_points = _equilibria_window(ns, cfg)

    lmax_eff = lmax if lmax is not None else DEFAULT_LMAX
    resolved["scan"] = {"parameter": parameter, "swap": swap,
                        "values_m": [repr(float(v)) for v in values],
                        "range_m": [d_range[0], d_range[1]],
                        "points": grid_points}
    digest = _config_hash(resolved)

    family = _family_builder(geo, db, parameter, swap, lmax_eff, quad_n)
    scan = scan_parameter(family, values, d_range, parameter=parameter,
                          grid_points=grid_points, jobs=ns.jobs)

    columns = [Column(f"{parameter}_nm", f"{parameter}_m", NM),
               Column("d_stable_nm", "d_stable_m", NM),
               Column("d_unstable_nm", "d_unstable_m", NM),
               Column("flags")]
    rows = []
    for value, points, error in zip(scan.values, scan.results, scan.errors):
        if points is None:
            rows.append([value, None, None, f"error: {error}"])
            continue
        stable = [p.separation for p in points if p.kind == "stable"]
        unstable = [p.separation for p in points if p.kind == "unstable"]
        flags = "near_fold" if any(p.near_fold for p in points) else ""
        rows.append([value, stable or None, unstable or None, flags])

    # annotate folds: refine wherever the equilibrium count steps by two
    counts = [None if r is None else _effective_count(r) for r in scan.results]
    for i in range(len(counts) - 1):
        a, b = counts[i], counts[i + 1]
        if a is None or b is None or abs(a - b) != 2:
            continue
        bracket = (float(scan.values[i]), float(scan.values[i + 1]))
        try:
            fold = find_fold(family, bracket, d_range, grid_points=grid_points)
            rows.append([fold.parameter_value, None, [fold.separation], "fold"])
        except _NUMERICAL_ERRORS as err:
            rows.append([0.5 * (bracket[0] + bracket[1]), None, None,
                         f"fold-refine-failed: {type(err).__name__}"])

    prov = {"lmax": lmax_eff, "quad_n": quad_n}
    return _render("scan", digest, prov, [("table", Table(columns, rows))],
                   [], {}, fmt)


def _cmd_fold(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "fold", materials_path)
    sec = dict(cfg.get("scan", {}))
    family_kind = ns.family or sec.get("family", "config")

    if family_kind == "synthetic":
        bracket = _colon_pair(ns.bracket, "fold --bracket", positive=False) \
            if ns.bracket else (-0.2, 0.2)
        d_range = _colon_pair(ns.d_range, "fold --d-range") if ns.d_range else (0.5, 2.0)
        ptol = ns.ptol if ns.ptol is not None else 1e-4
        resolved["fold"] = {"family": "synthetic", "bracket": list(bracket),
                            "d_range": list(d_range), "ptol": ptol}
        digest = _config_hash(resolved)

        def family(mu: float):
            def force(d: float) -> float:
                return (d - 1.0) ** 2 - mu

            return force

        fold = find_fold(family, bracket, d_range, grid_points=60, ptol=ptol)
        table = Table([Column("mu"), Column("d")],
                      [[fold.parameter_value, fold.separation]])
        prov = {"lmax": lmax if lmax is not None else DEFAULT_LMAX,
                "quad_n": quad_n}
        return _render("fold", digest, prov, [("table", table)], [], {}, fmt)

    geo = resolved["geometry"]
    parameter = ns.parameter or sec.get("parameter")
    if parameter not in ("radius", "thickness"):
        raise ConfigError("fold: needs scan.parameter 'radius' or 'thickness'")
    if ns.bracket:
        lo, hi = _colon_pair(ns.bracket, "fold --bracket")
    elif "bracket_nm" in sec:
        raw = sec["bracket_nm"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise ConfigError("scan.bracket_nm: expected [lo, hi]")
        lo = _as_number(raw[0], "scan.bracket_nm")
        hi = _as_number(raw[1], "scan.bracket_nm")
    else:
        raise ConfigError("fold: needs --bracket LO:HI or scan.bracket_nm")
    swap = bool(ns.swap or sec.get("swap", False))
    d_range, grid_points = _equilibria_window(ns, cfg)
    ptol = (ns.ptol if ns.ptol is not None else 0.5) * NM

    lmax_eff = lmax if lmax is not None else DEFAULT_LMAX
    resolved["fold"] = {"family": parameter, "swap": swap,
                        "bracket_m": [lo * NM, hi * NM],
                        "range_m": [d_range[0], d_range[1]],
                        "points": grid_points, "ptol_m": ptol}
    digest = _config_hash(resolved)

    family = _family_builder(geo, db, parameter, swap, lmax_eff, quad_n)
    fold = find_fold(family, (lo * NM, hi * NM), d_range,
                     grid_points=grid_points, ptol=ptol)
    table = Table([Column(f"{parameter}_nm", f"{parameter}_m", NM),
                   Column("d_nm", "d_m", NM)],
                  [[fold.parameter_value, fold.separation]])
    prov = {"lmax": lmax_eff, "quad_n": quad_n}
    return _render("fold", digest, prov, [("table", table)], [], {}, fmt)


def _suspension_inputs(ns, cfg: dict, db: MaterialDb):
    geo = _geometry_section(cfg)
    slab = _wall(_need(geo, "wall", "geometry"), "geometry.wall")
    fluid = str(geo.get("fluid", "ethanol"))
    for lay in slab.layers:
        db.get(lay.material)
    db.get(fluid)

    sec = dict(cfg.get("suspension", {}))
    if getattr(ns, "h_range", None):
        lo, hi = _colon_pair(ns.h_range, "--h-range")
        sec.update({"h_min_nm": lo, "h_max_nm": hi})
    if getattr(ns, "h_points", None):
        sec["points"] = ns.h_points
    h_lo = _as_number(sec.get("h_min_nm", 50.0), "suspension.h_min_nm") * NM
    h_hi = _as_number(sec.get("h_max_nm", 3000.0), "suspension.h_max_nm") * NM
    if h_hi <= h_lo:
        raise ConfigError("suspension: h_max_nm must exceed h_min_nm")
    points = _as_int(sec.get("points", 24), "suspension.points", minimum=2)
    g = _as_number(sec.get("g", G_STANDARD), "suspension.g")
    buoyancy = sec.get("buoyancy", True)
    if not isinstance(buoyancy, bool):
        raise ConfigError("suspension.buoyancy: expected true or false")
    return slab, fluid, sec, (h_lo, h_hi), points, g, buoyancy


def _cmd_suspend(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "suspend", materials_path)
    geo = resolved["geometry"]
    slab, fluid, sec, h_range, points, g, buoyancy = _suspension_inputs(ns, cfg, db)
    material = str(_need(geo, "sphere_material", "geometry"))
    db.get(material)
    if ns.radii:
        sec["radii_nm"] = _comma_floats(ns.radii, "suspend --radii")
    if "radii_nm" not in sec and not ("min_nm" in sec and "max_nm" in sec):
        raise ConfigError(
            "suspend: needs suspension.radii_nm or both min_nm and max_nm")
    if "radii_nm" in sec:
        sec = dict(sec)
        sec["values_nm"] = sec["radii_nm"]
    radii = _length_grid(sec, "suspension", 0.0, 0.0, 12)

    resolved["suspension"] = {"radii_m": [repr(float(r)) for r in radii],
                              "h_range_m": [h_range[0], h_range[1]],
                              "points": points, "g": g, "buoyancy": buoyancy}
    digest = _config_hash(resolved)

    curve = height_curve(material, slab, radii, h_range, fluid, g=g,
                         buoyancy=buoyancy, grid_points=points, jobs=ns.jobs,
                         db=db)
    columns = [Column("radius_nm", "radius_m", NM),
               Column("h_stable_nm", "h_stable_m", NM),
               Column("L_center_nm", "L_center_m", NM),
               Column("h_unstable_nm", "h_unstable_m", NM)]
    rows = [[r, hs, lc, hu] for r, hs, lc, hu in
            zip(curve.radii, curve.stable, curve.center, curve.unstable)]
    prov = {"lmax": lmax if lmax is not None else "auto", "quad_n": quad_n}
    return _render("suspend", digest, prov, [("table", Table(columns, rows))],
                   [], {}, fmt)


def _cmd_pair(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "pair", materials_path)
    slab, fluid, _, h_range, points, g, buoyancy = _suspension_inputs(ns, cfg, db)

    sec = dict(cfg.get("pair", {}))
    if ns.mode:
        sec["mode"] = ns.mode
    if ns.target is not None:
        sec["target_nm"] = ns.target
    mode = sec.get("mode", "match_h")
    if mode not in ("match_h", "match_L"):
        raise ConfigError("pair.mode: expected 'match_h' or 'match_L'")
    target = _as_number(_need(sec, "target_nm", "pair"), "pair.target_nm") * NM
    mat_a = str(_need(sec, "material_a", "pair"))
    mat_b = str(_need(sec, "material_b", "pair"))
    db.get(mat_a)
    db.get(mat_b)
    r_lo = _as_number(sec.get("radius_min_nm", 20.0), "pair.radius_min_nm") * NM
    r_hi = _as_number(sec.get("radius_max_nm", 400.0), "pair.radius_max_nm") * NM
    if r_hi <= r_lo:
        raise ConfigError("pair: radius_max_nm must exceed radius_min_nm")
    grid = _as_int(sec.get("grid", 12), "pair.grid", minimum=2)
    tol = _as_number(sec.get("height_tol_nm", 0.5), "pair.height_tol_nm") * NM

    resolved["pair"] = {"mode": mode, "target_m": target,
                        "materials": [mat_a, mat_b],
                        "radius_range_m": [r_lo, r_hi], "grid": grid,
                        "h_range_m": [h_range[0], h_range[1]],
                        "points": points, "tol_m": tol, "g": g,
                        "buoyancy": buoyancy}
    digest = _config_hash(resolved)

    columns = [Column("radius_a_nm", "radius_a_m", NM),
               Column("radius_b_nm", "radius_b_m", NM),
               Column("achieved_a_nm", "achieved_a_m", NM),
               Column("achieved_b_nm", "achieved_b_m", NM),
               Column("mode"), Column("target_nm", "target_m", NM),
               Column("flags")]
    prov = {"lmax": lmax if lmax is not None else "auto", "quad_n": quad_n}

    try:
        r_a, r_b = pair_radii(mat_a, mat_b, slab, fluid, mode, target,
                              radius_range=(r_lo, r_hi), grid=grid,
                              h_range=h_range, grid_points=points,
                              jobs=ns.jobs, height_tol=tol, g=g,
                              buoyancy=buoyancy, db=db)
    except PairingRangeError as err:
        rows = [[None, None, None, None, mode, target, f"infeasible: {err}"]]
        return _render("pair", digest, prov, [("table", Table(columns, rows))],
                       [], {}, fmt)

    def achieved(radius: float, material: str) -> float:
        cfg_s = SuspendedSphere(SphereBody(radius, material), slab, fluid,
                                g=g, buoyancy=buoyancy)
        res = solve_heights(cfg_s, h_range, grid_points=points, db=db)
        if not res.suspendable:
            return float("nan")
        return res.stable_height if mode == "match_h" else res.center_height

    val_a = achieved(r_a, mat_a)
    val_b = val_a if (mat_a == mat_b and r_a == r_b) else achieved(r_b, mat_b)
    rows = [[r_a, r_b, val_a, val_b, mode, target, ""]]
    return _render("pair", digest, prov, [("table", Table(columns, rows))],
                   [], {}, fmt)


def _cmd_dicluster(ns, cfg: dict, db: MaterialDb, materials_path):
    resolved, lmax, quad_n, fmt = _base_resolved(ns, cfg, "dicluster", materials_path)
    geo = resolved["geometry"]
    fluid = str(geo.get("fluid", "ethanol"))
    db.get(fluid)

    sec = dict(cfg.get("dicluster", {}))
    if ns.radii:
        vals = _comma_floats(ns.radii, "dicluster --radii")
        if len(vals) != 2:
            raise UsageError("dicluster --radii: expected exactly two values")
        sec["radius_a_nm"], sec["radius_b_nm"] = vals
    r_a = _as_number(_need(sec, "radius_a_nm", "dicluster"), "dicluster.radius_a_nm") * NM
    r_b = _as_number(_need(sec, "radius_b_nm", "dicluster"), "dicluster.radius_b_nm") * NM
    mat_a = str(sec.get("material_a", "si"))
    mat_b = str(sec.get("material_b", "teflon"))
    db.get(mat_a)
    db.get(mat_b)
    d_lo = _as_number(sec.get("d_min_nm", 40.0), "dicluster.d_min_nm") * NM
    d_hi = _as_number(sec.get("d_max_nm", 400.0), "dicluster.d_max_nm") * NM
    if d_hi <= d_lo:
        raise ConfigError("dicluster: d_max_nm must exceed d_min_nm")
    points = _as_int(sec.get("points", 24), "dicluster.points", minimum=2)
    curve_points = _as_int(
        ns.curve_points if ns.curve_points is not None
        else sec.get("curve_points", 25),
        "dicluster.curve_points", minimum=2)

    resolved["dicluster"] = {"radii_m": [r_a, r_b], "materials": [mat_a, mat_b],
                             "d_range_m": [d_lo, d_hi], "points": points,
                             "curve_points": curve_points}
    digest = _config_hash(resolved)

    basis = WaveBasis(lmax) if lmax is not None else None
    design = design_dicluster(r_a, r_b, fluid, material_a=mat_a,
                              material_b=mat_b, d_range=(d_lo, d_hi),
                              grid_points=points, basis=basis, db=db)

    body_a = SphereBody(r_a, mat_a)
    body_b = SphereBody(r_b, mat_b)
    grid = np.geomspace(d_lo, d_hi, curve_points)
    curve_basis = basis or _auto_basis(max(r_a, r_b), d_lo)

    def one(d: float) -> list:
        geom = SphereSphereGeometry(body_a, body_b, fluid, float(d))
        return [float(d), casimir_force(geom, curve_basis, db=db)]

    try:
        curve_rows = _map_jobs(one, grid, ns.jobs)
    except AccuracyError as err:
        if err.advised_lmax is None or err.advised_lmax <= curve_basis.lmax:
            raise
        curve_basis = WaveBasis(err.advised_lmax + 2)
        curve_rows = _map_jobs(one, grid, ns.jobs)

    design_table = Table(
        [Column("radius_a_nm", "radius_a_m", NM),
         Column("radius_b_nm", "radius_b_m", NM),
         Column("material_a"), Column("material_b"),
         Column("gap_nm", "gap_m", NM), Column("feasible")],
        [[r_a, r_b, mat_a, mat_b, design.gap, design.feasible]])
    curve_table = Table(
        [Column("d_nm", "d_m", NM), Column("force_pN", "force_N", PICONEWTON)],
        curve_rows)

    footers = ["# pair force computed alone; the supporting wall's feedback "
               "on the pair is neglected"]
    extras = {"additive_approx": design.additive_approx}
    prov = {"lmax": lmax if lmax is not None else "auto", "quad_n": quad_n}
    return _render("dicluster", digest, prov,
                   [("design", design_table), ("curve", curve_table)],
                   footers, extras, fmt)


# ---------------------------------------------------------------------------
# argument parsing and dispatch


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML run config")
    common.add_argument("--materials-file",
                        help="materials TOML (default: $CASIMIR_MATERIALS, "
                             "else built-ins)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--jobs", type=int,
                        default=max(1, os.cpu_count() or 1),
                        help="parallel evaluations over grid points")
    common.add_argument("--lmax", type=int, help="spherical-wave cutoff")
    common.add_argument("--quad-n", type=int, dest="quad_n",
                        help="quadrature nodes per semi-infinite integral")

    parser = _Parser(prog="casimir",
                     description="Fluctuation forces, equilibria, and "
                                 "suspension designs for bodies in a fluid")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("eps", parents=[common],
                       help="permittivity table on an imaginary-frequency grid")
    p.add_argument("--materials", help="comma-separated material names")
    p.add_argument("--xi", help="grid LO:HI:COUNT in 2 pi c/um")
    p.add_argument("--crossings", action="store_true",
                   help="annotate pairwise permittivity crossings")

    p = sub.add_parser("force", parents=[common],
                       help="force or pressure curve for one geometry")
    p.add_argument("--d", help="separation grid LO:HI:COUNT in nm")
    p.add_argument("--spacing", choices=("log", "linear"))

    p = sub.add_parser("equilibria", parents=[common],
                       help="zero crossings of the force with stability")
    p.add_argument("--d", help="search window LO:HI:COUNT in nm")

    p = sub.add_parser("scan", parents=[common],
                       help="equilibria across a radius or thickness grid")
    p.add_argument("--parameter", choices=("radius", "thickness"))
    p.add_argument("--values", help="comma-separated parameter values in nm")
    p.add_argument("--range", help="parameter grid LO:HI:COUNT in nm")
    p.add_argument("--swap", action="store_true",
                   help="exchange the two gap-facing solid materials")
    p.add_argument("--d", help="root search window LO:HI:COUNT in nm")

    p = sub.add_parser("fold", parents=[common],
                       help="bisect the parameter where two equilibria merge")
    p.add_argument("--family", choices=("synthetic", "config"),
                   help="'synthetic' runs the built-in quadratic family")
    p.add_argument("--parameter", choices=("radius", "thickness"))
    p.add_argument("--bracket", help="parameter bracket LO:HI (nm; raw for "
                                     "the synthetic family)")
    p.add_argument("--d-range", dest="d_range",
                   help="synthetic-family separation window LO:HI")
    p.add_argument("--ptol", type=float,
                   help="parameter tolerance (nm; raw for synthetic)")
    p.add_argument("--swap", action="store_true")
    p.add_argument("--d", help="root search window LO:HI:COUNT in nm")

    p = sub.add_parser("suspend", parents=[common],
                       help="gravity-balanced heights across a radius grid")
    p.add_argument("--radii", help="comma-separated sphere radii in nm")
    p.add_argument("--h-range", dest="h_range", help="height window LO:HI in nm")
    p.add_argument("--h-points", dest="h_points", type=int,
                   help="height grid points per radius")

    p = sub.add_parser("pair", parents=[common],
                       help="radii of two materials that float at one height")
    p.add_argument("--mode", choices=("match_h", "match_L"))
    p.add_argument("--target", type=float, help="matched height in nm")
    p.add_argument("--h-range", dest="h_range", help="height window LO:HI in nm")
    p.add_argument("--h-points", dest="h_points", type=int)

    p = sub.add_parser("dicluster", parents=[common],
                       help="stable mutual gap of a two-sphere design")
    p.add_argument("--radii", help="the two sphere radii in nm, e.g. 368,177")
    p.add_argument("--curve-points", dest="curve_points", type=int,
                   help="rows in the force-versus-gap table")

    return parser


_COMMANDS = {
    "eps": _cmd_eps,
    "force": _cmd_force,
    "equilibria": _cmd_equilibria,
    "scan": _cmd_scan,
    "fold": _cmd_fold,
    "suspend": _cmd_suspend,
    "pair": _cmd_pair,
    "dicluster": _cmd_dicluster,
}


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        cfg = _load_toml(ns.config) if ns.config else {}
        if not isinstance(cfg, dict):
            raise ConfigError(f"{ns.config}: expected a TOML document")
        materials_path = (ns.materials_file or cfg.get("materials")
                          or os.environ.get("CASIMIR_MATERIALS"))
        db = load_materials(materials_path) if materials_path else MaterialDb.builtin()
        if ns.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        text = _COMMANDS[ns.command](ns, cfg, db, materials_path)
        destination = ns.out or cfg.get("output", {}).get("destination")
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    except _CONFIG_ERRORS as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1

    if destination:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main_entry() -> None:
    raise SystemExit(main())
