"""Dielectric permittivities on the imaginary-frequency axis.

Every model evaluates eps(i*xi), the permittivity at imaginary frequency
omega = i*xi with xi > 0 in rad/s. On this axis permittivities of passive
media are real, >= 1 and monotone nonincreasing, which is what makes
fluctuation-force integrands smooth and sign-definite per frequency.

The module also owns the material database (built-ins plus TOML parameter
files), the permittivity-crossing finder, and the three-medium repulsion
criterion eps_inner < eps_fluid < eps_outer that controls the sign of the
force contribution at each frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .constants import EV, XI_UNIT


class MaterialLookupError(KeyError):
    """Requested material name is not in the database."""


class MaterialValidationError(Exception):
    """Material parameters violate a model invariant."""


class MaterialParseError(Exception):
    """Material parameter file could not be parsed."""


# --------------------------------------------------------------------------
# dielectric models


@dataclass(frozen=True)
class Constant:
    """Frequency-independent permittivity (vacuum, idealized media)."""

    eps0: float

    def __post_init__(self):
        if self.eps0 < 1.0:
            raise MaterialValidationError("constant permittivity must be >= 1")


@dataclass(frozen=True)
class Drude:
    """Metallic response eps = 1 + omega_p^2 / (xi^2 + gamma*xi).

    Diverges as xi -> 0+, so xi = 0 is outside the domain.
    """

    omega_p: float  # rad/s
    gamma: float  # rad/s

    def __post_init__(self):
        if self.omega_p <= 0.0 or self.gamma < 0.0:
            raise MaterialValidationError("Drude parameters must be positive")


@dataclass(frozen=True)
class OscillatorSum:
    """Lorentz-oscillator sum on the imaginary axis.

    eps(i*xi) = eps_inf + sum_j C_j * omega_j^2 / (omega_j^2 + xi^2 + gamma_j*xi)

    with dimensionless strengths C_j >= 0 and omega_j, gamma_j in rad/s.
    """

    eps_inf: float = 1.0
    terms: tuple = ()  # tuple of (C, omega, gamma)

    def __post_init__(self):
        if self.eps_inf < 1.0:
            raise MaterialValidationError("eps_inf must be >= 1")
        for j, (c, w, g) in enumerate(self.terms):
            if c < 0.0:
                raise MaterialValidationError(f"oscillator {j}: negative strength")
            if w <= 0.0 or g < 0.0:
                raise MaterialValidationError(f"oscillator {j}: bad frequencies")


@dataclass(frozen=True)
class Tabulated:
    """Sampled eps(i*xi), log-log interpolated inside the table.

    Outside the table: constant continuation below the first node and a
    1 + A/xi^2 decay above the last node with A = (eps_N - 1) * xi_N^2,
    the universal large-frequency tail of any oscillator model.
    """

    xi: tuple  # strictly increasing, rad/s
    eps: tuple

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        if xi.ndim != 1 or xi.size < 2 or eps.shape != xi.shape:
            raise MaterialValidationError("table needs matching xi/eps arrays")
        if np.any(np.diff(xi) <= 0.0) or xi[0] <= 0.0:
            raise MaterialValidationError("table frequencies must be positive increasing")
        if np.any(eps < 1.0):
            raise MaterialValidationError("table permittivities must be >= 1")


class PerfectMetal:
    """Marker model for idealized mirrors.

    Has no permittivity; planar and scattering treat it via fixed
    reflection coefficients (r_TE = -1, r_TM = +1) and the corresponding
    scattering-amplitude limits, avoiding a divergent eps.
    """

    def __repr__(self):
        return "PerfectMetal()"


PERFECT_METAL = PerfectMetal()


def permittivity_at(model, xi):
    """Evaluate eps(i*xi) for a dielectric model.

    xi may be a scalar or an ndarray of frequencies in rad/s; the result
    matches its shape. xi must be > 0 (xi = 0 is allowed for every
    variant except Drude, whose response diverges there).
    """
    scalar = np.isscalar(xi)
    x = np.asarray(xi, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("imaginary frequency must be nonnegative")

    if isinstance(model, Constant):
        out = np.full_like(x, model.eps0)
    elif isinstance(model, Drude):
        if np.any(x == 0.0):
            raise ValueError("Drude permittivity diverges at xi = 0")
        out = 1.0 + model.omega_p**2 / (x * (x + model.gamma))
    elif isinstance(model, OscillatorSum):
        out = np.full_like(x, model.eps_inf)
        x2 = x * x
        for c, w, g in model.terms:
            out = out + c * w * w / (w * w + x2 + g * x)
    elif isinstance(model, Tabulated):
        out = _tabulated_eval(model, x)
    elif isinstance(model, PerfectMetal):
        raise ValueError(
            "perfect-metal has no permittivity; it is handled via fixed "
            "reflection coefficients"
        )
    else:
        raise TypeError(f"not a dielectric model: {model!r}")
    return float(out) if scalar else out


def _tabulated_eval(model: Tabulated, x: np.ndarray) -> np.ndarray:
    xi_t = np.asarray(model.xi, dtype=float)
    eps_t = np.asarray(model.eps, dtype=float)
    out = np.empty_like(x)

    below = x <= xi_t[0]
    above = x >= xi_t[-1]
    inside = ~(below | above)

    out[below] = eps_t[0]
    a_tail = (eps_t[-1] - 1.0) * xi_t[-1] ** 2
    with np.errstate(divide="ignore"):
        out[above] = 1.0 + a_tail / x[above] ** 2
    if np.any(inside):
        out[inside] = np.exp(
            np.interp(np.log(x[inside]), np.log(xi_t), np.log(eps_t))
        )
    return out


# --------------------------------------------------------------------------
# crossings and the repulsion criterion


def find_crossings(m1, m2, xi_range, grid_points: int = 400) -> list:
    """Frequencies where eps_1(i*xi) - eps_2(i*xi) changes sign.

    Scans a log-spaced grid of `grid_points` frequencies across xi_range
    (rad/s) and refines each sign change by bisection to a relative
    tolerance of 1e-9. Returns the crossings sorted ascending; an empty
    list when the curves never cross on the grid.
    """
    lo, hi = float(xi_range[0]), float(xi_range[1])
    if lo <= 0.0 or hi <= lo:
        raise ValueError("xi_range must be positive and ordered")
    if grid_points < 2:
        raise ValueError("need at least 2 grid points")

    grid = np.geomspace(lo, hi, grid_points)
    diff = permittivity_at(m1, grid) - permittivity_at(m2, grid)

    crossings = []
    for i in range(grid_points - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0.0:
            if i == 0:
                crossings.append(grid[0])
            continue
        if d1 == 0.0 or np.sign(d0) != np.sign(d1):
            a, b = grid[i], grid[i + 1]
            fa = d0
            while (b - a) > 1e-9 * 0.5 * (a + b):
                mid = 0.5 * (a + b)
                fm = permittivity_at(m1, mid) - permittivity_at(m2, mid)
                if fm == 0.0:
                    a = b = mid
                    break
                if np.sign(fm) == np.sign(fa):
                    a, fa = mid, fm
                else:
                    b = mid
            crossings.append(0.5 * (a + b))
    return [float(c) for c in crossings]


def repulsion_criterion(inner, fluid, outer, xi: float) -> bool:
    """True iff eps_inner(i*xi) < eps_fluid(i*xi) < eps_outer(i*xi) strictly.

    A fluid whose permittivity lies between the two wall materials at a
    frequency makes that frequency's force contribution repulsive.
    """
    e_in = permittivity_at(inner, xi)
    e_f = permittivity_at(fluid, xi)
    e_out = permittivity_at(outer, xi)
    return bool(e_in < e_f < e_out)


# --------------------------------------------------------------------------
# materials and the database


@dataclass(frozen=True)
class Material:
    """A named material: dispersion model plus optional mass density."""

    name: str
    model: object
    mass_density: float | None = None  # kg/m^3
    source: str = ""

    def __post_init__(self):
        if self.mass_density is not None and self.mass_density <= 0.0:
            raise MaterialValidationError(
                f"material '{self.name}': mass density must be positive"
            )


def _osc(eps_inf, terms_ev):
    """OscillatorSum from (C, omega_eV, gamma_eV) triples."""
    return OscillatorSum(
        eps_inf=eps_inf,
        terms=tuple((c, w * EV, g * EV) for c, w, g in terms_ev),
    )


# Built-in dispersion fits. Si, teflon and gold follow standard
# Lorentz/Drude parameterizations of the imaginary-axis response; the
# ethanol and SiO2 entries are effective fits: their electronic terms are
# literature-anchored, while the infrared/mid strengths were calibrated
# against the benchmark observables documented in the README (permittivity
# crossings at 2.6 and 26.4 * 2pi c/um, slab equilibria near 120 nm and
# 29/90 nm, sphere equilibria near 105/78 nm at R = 200 nm). See
# tools/calibrate_materials.py for the calibration driver.
_BUILTINS = (
    Material(
        "vacuum",
        Constant(1.0),
        mass_density=None,
        source="vacuum",
    ),
    Material(
        "perfect-metal",
        PERFECT_METAL,
        mass_density=None,
        source="idealized mirror; unit-magnitude reflection at all frequencies",
    ),
    Material(
        "si",
        _osc(1.035, [(10.835, 4.345, 0.0)]),
        mass_density=2330.0,
        source="intrinsic silicon single-oscillator imaginary-axis fit "
        "(Lorentz form, UV resonance 4.35 eV)",
    ),
    Material(
        "sio2",
        _osc(1.0, [(1.70, 0.124, 0.0), (0.60, 8.0, 0.0),
                   (0.85, 13.38, 0.0), (0.08, 35.0, 0.0)]),
        mass_density=2200.0,
        source="fused silica: IR band 0.124 eV and 13.4 eV UV term per "
        "standard oscillator fits; 8 eV and deep-UV strengths are "
        "effective, set by the benchmark calibration",
    ),
    Material(
        "teflon",
        _osc(1.0, [(0.13, 0.15, 0.0), (0.93, 6.3, 0.0)]),
        mass_density=2200.0,
        source="PTFE two-oscillator fit (IR 0.15 eV, UV 6.3 eV), "
        "visible index n ~ 1.34",
    ),
    Material(
        "ethanol",
        _osc(1.0, [(60.6, 0.10, 0.0), (3.86, 1.0, 0.0),
                   (0.85, 13.38, 0.0), (0.114, 40.0, 0.0)]),
        mass_density=789.0,
        source="effective four-oscillator fit: librational/IR and 1 eV "
        "strengths calibrated to the benchmark equilibria and "
        "crossings; electronic terms anchored near standard fits",
    ),
    Material(
        "gold",
        Drude(omega_p=1.37e16, gamma=5.3e13),
        mass_density=19300.0,
        source="gold Drude parameters omega_p = 1.37e16 rad/s (9.0 eV), "
        "gamma = 5.3e13 rad/s",
    ),
)


@dataclass(frozen=True)
class MaterialDb:
    """Immutable name -> Material mapping (built-ins plus file entries)."""

    entries: dict = field(default_factory=dict)

    @classmethod
    def builtin(cls) -> "MaterialDb":
        return cls(entries={m.name: m for m in _BUILTINS})

    def get(self, name: str) -> Material:
        key = name.strip().lower()
        try:
            return self.entries[key]
        except KeyError:
            known = ", ".join(sorted(self.entries))
            raise MaterialLookupError(
                f"unknown material '{name}' (known: {known})"
            ) from None

    def __contains__(self, name: str) -> bool:
        return name.strip().lower() in self.entries

    def names(self) -> list:
        return sorted(self.entries)

    def permittivity(self, name: str, xi):
        return permittivity_at(self.get(name).model, xi)


def _parse_terms(raw, scale: float, entry: str):
    terms = []
    for j, t in enumerate(raw):
        if len(t) != 3:
            raise MaterialParseError(
                f"[{entry}] terms[{j}]: expected [C, omega, gamma]"
            )
        c, w, g = (float(v) for v in t)
        terms.append((c, w * scale, g * scale))
    return tuple(terms)


def _material_from_section(name: str, sec: dict) -> Material:
    variant = sec.get("variant")
    if variant is None:
        raise MaterialParseError(f"[{name}]: missing 'variant'")
    unit = sec.get("unit", "si")
    if unit not in ("si", "2pic_um"):
        raise MaterialParseError(f"[{name}]: unknown unit '{unit}'")
    scale = XI_UNIT if unit == "2pic_um" else 1.0

    try:
        if variant == "constant":
            model = Constant(float(sec["eps0"]))
        elif variant == "drude":
            model = Drude(float(sec["omega_p"]) * scale, float(sec["gamma"]) * scale)
        elif variant == "oscillators":
            model = OscillatorSum(
                eps_inf=float(sec.get("eps_inf", 1.0)),
                terms=_parse_terms(sec.get("terms", []), scale, name),
            )
        elif variant == "table":
            model = Tabulated(
                xi=tuple(float(v) * scale for v in sec["xi"]),
                eps=tuple(float(v) for v in sec["eps"]),
            )
        else:
            raise MaterialParseError(f"[{name}]: unknown variant '{variant}'")
    except KeyError as exc:
        raise MaterialParseError(f"[{name}]: missing field {exc}") from None
    except MaterialValidationError as exc:
        raise MaterialValidationError(f"[{name}]: {exc}") from None

    density = sec.get("density_kg_m3")
    try:
        return Material(
            name=name.strip().lower(),
            model=model,
            mass_density=None if density is None else float(density),
            source=str(sec.get("source", "")),
        )
    except MaterialValidationError as exc:
        raise MaterialValidationError(f"[{name}]: {exc}") from None


def load_materials(path) -> MaterialDb:
    """Database from a TOML parameter file, merged over the built-ins.

    One section per material; file entries override built-ins of the same
    name. See the repository README for the schema and an example file.
    """
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise MaterialParseError(f"{path}: {exc}") from None

    entries = {m.name: m for m in _BUILTINS}
    for name, sec in doc.items():
        if not isinstance(sec, dict):
            raise MaterialParseError(
                f"{path}: top-level key '{name}' is not a material section"
            )
        mat = _material_from_section(name, sec)
        entries[mat.name] = mat
    return MaterialDb(entries=entries)
