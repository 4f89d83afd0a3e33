"""Scenario files: a sectioned key-value text format describing one experiment.

Sections (all optional unless a CLI command needs them):

    [coframe]      h11..h33      triad entries, quoted expressions; default identity
    [gauge]        g11..g33      gauge matrix entries, quoted expressions
    [defects]      b1..b3, omega1..omega3, m1..m3  quoted expressions (orthonormal
                   components of the Burgers/Frank/point covectors), rho expression
    [deformation]  kind = inverse|forward (default inverse), X1..X3 quoted expressions
    [material]     lambda, mu, kappa, G, nu, R_outer, r_core   numbers
    [couplings]    kappa1..kappa7   numbers
    [numerics]     fd_step, tolerance, grid_min, grid_max   numbers; grid_n integer

Expressions are always double-quoted; numbers and the kind word are bare.
Lines starting with '#' are comments.  Duplicated sections or keys and
unknown names raise ScenarioError carrying the offending line number(s).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .defects import DefectFields
from .elasticity import DeformationMap, MaterialConstants
from .energy import Couplings
from .errors import ParseError, ScenarioError
from .expressions import parse_expr
from .fields import FormField, SymbolicFormField, zero_field
from .forms import FRAME_INDICES
from .geometry import CoFrame, GaugeField

_SECTION_RE = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_]*)\]$")
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)$")

_MATRIX_KEYS = {f"{p}{i}{j}" for p in "hg" for i in (1, 2, 3) for j in (1, 2, 3)}

_SCHEMA = {
    "coframe": {f"h{i}{j}": "expr" for i in (1, 2, 3) for j in (1, 2, 3)},
    "gauge": {f"g{i}{j}": "expr" for i in (1, 2, 3) for j in (1, 2, 3)},
    "defects": {
        **{f"b{i}": "expr" for i in (1, 2, 3)},
        **{f"omega{i}": "expr" for i in (1, 2, 3)},
        **{f"m{i}": "expr" for i in (1, 2, 3)},
        "rho": "expr",
    },
    "deformation": {"kind": "word", "X1": "expr", "X2": "expr", "X3": "expr"},
    "material": {
        "lambda": "number",
        "mu": "number",
        "kappa": "number",
        "G": "number",
        "nu": "number",
        "R_outer": "number",
        "r_core": "number",
    },
    "couplings": {f"kappa{i}": "number" for i in range(1, 8)},
    "numerics": {
        "fd_step": "number",
        "tolerance": "number",
        "grid_min": "number",
        "grid_max": "number",
        "grid_n": "number",
    },
}

DEFAULT_FD_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-6
DEFAULT_GRID = (-1.0, 1.0, 9)


@dataclass(frozen=True)
class Numerics:
    fd_step: float = DEFAULT_FD_STEP
    tolerance: float = DEFAULT_TOLERANCE
    grid_min: float = DEFAULT_GRID[0]
    grid_max: float = DEFAULT_GRID[1]
    grid_n: int = DEFAULT_GRID[2]


@dataclass(frozen=True)
class Scenario:
    """A parsed experiment description with defaults applied."""

    coframe: CoFrame
    gauge: GaugeField | None
    defects: DefectFields
    deformation: DeformationMap | None
    material: MaterialConstants | None
    couplings: Couplings
    numerics: Numerics
    sections: frozenset = field(default_factory=frozenset)

    def has(self, section: str) -> bool:
        return section in self.sections

    def require(self, *names):
        missing = [n for n in names if n not in self.sections]
        if missing:
            raise ScenarioError(f"missing required section(s): {', '.join(missing)}")


def _parse_value(section, key, raw, line_no):
    kind = _SCHEMA[section][key]
    raw = raw.strip()
    if kind == "expr":
        if not (len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"'):
            raise ScenarioError(
                f"key {key!r} in [{section}] must be a double-quoted expression", [line_no]
            )
        text = raw[1:-1]
        try:
            return parse_expr(text)
        except ParseError as exc:
            raise ScenarioError(
                f"bad expression for {key!r} in [{section}]: {exc}", [line_no]
            ) from exc
    if kind == "number":
        try:
            return float(raw)
        except ValueError:
            raise ScenarioError(
                f"key {key!r} in [{section}] must be a number, got {raw!r}", [line_no]
            ) from None
    if raw.startswith('"') or any(ch.isspace() for ch in raw):
        raise ScenarioError(f"key {key!r} in [{section}] must be a bare word", [line_no])
    return raw


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; unknown/duplicate names fail with line numbers."""
    sections: dict[str, dict] = {}
    section_lines: dict[str, int] = {}
    key_lines: dict[tuple, int] = {}
    current = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1)
            if name not in _SCHEMA:
                raise ScenarioError(f"unknown section [{name}]", [line_no])
            if name in sections:
                raise ScenarioError(
                    f"section [{name}] appears twice", [section_lines[name], line_no]
                )
            sections[name] = {}
            section_lines[name] = line_no
            current = name
            continue
        m = _KEY_RE.match(line)
        if m:
            if current is None:
                raise ScenarioError("key outside of any section", [line_no])
            key, raw = m.group(1), m.group(2)
            comment = raw.find("#")
            if comment >= 0 and '"' not in raw[:comment]:
                raw = raw[:comment]
            if key not in _SCHEMA[current]:
                raise ScenarioError(f"unknown key {key!r} in [{current}]", [line_no])
            if (current, key) in key_lines:
                raise ScenarioError(
                    f"key {key!r} in [{current}] appears twice",
                    [key_lines[(current, key)], line_no],
                )
            key_lines[(current, key)] = line_no
            sections[current][key] = _parse_value(current, key, raw, line_no)
            continue
        raise ScenarioError(f"cannot parse line: {raw_line.strip()!r}", [line_no])

    return _assemble(sections, key_lines)


def parse_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _expr_or(section: dict, key, default):
    return section.get(key, parse_expr(default))


def _assemble(sections, key_lines) -> Scenario:
    cof = sections.get("coframe", {})
    triad = [
        [_expr_or(cof, f"h{i}{j}", "1" if i == j else "0") for j in (1, 2, 3)]
        for i in (1, 2, 3)
    ]
    coframe = CoFrame(triad)

    gauge = None
    if "gauge" in sections:
        g = sections["gauge"]
        gauge = GaugeField(
            [[_expr_or(g, f"g{i}{j}", "1" if i == j else "0") for j in (1, 2, 3)] for i in (1, 2, 3)]
        )

    dfs = sections.get("defects", {})
    defects = DefectFields(
        burgers=_covector(dfs, "b", coframe),
        frank=_covector(dfs, "omega", coframe),
        point=_covector(dfs, "m", coframe),
        scalar=SymbolicFormField(0, [dfs.get("rho", parse_expr("0"))]),
    )

    deformation = None
    if "deformation" in sections:
        dmap = sections["deformation"]
        kind = dmap.get("kind", "inverse")
        if kind not in ("inverse", "forward"):
            raise ScenarioError(
                f"deformation kind must be 'inverse' or 'forward', got {kind!r}",
                [key_lines.get(("deformation", "kind"), 0)],
            )
        missing = [k for k in ("X1", "X2", "X3") if k not in dmap]
        if missing:
            raise ScenarioError(
                f"[deformation] is missing {', '.join(missing)}"
            )
        deformation = DeformationMap(
            tuple(SymbolicFormField(0, [dmap[k]]) for k in ("X1", "X2", "X3")), kind=kind
        )

    material = None
    if "material" in sections:
        mt = sections["material"]
        material = MaterialConstants(
            lam=mt.get("lambda"),
            mu=mt.get("mu"),
            kappa=mt.get("kappa", 0.0),
            shear_modulus=mt.get("G"),
            poisson=mt.get("nu"),
            r_outer=mt.get("R_outer"),
            r_core=mt.get("r_core"),
        )

    cpl = sections.get("couplings", {})
    couplings = Couplings(**{f"kappa{i}": cpl.get(f"kappa{i}", 0.0) for i in range(1, 8)})

    num = sections.get("numerics", {})
    numerics = Numerics(
        fd_step=num.get("fd_step", DEFAULT_FD_STEP),
        tolerance=num.get("tolerance", DEFAULT_TOLERANCE),
        grid_min=num.get("grid_min", DEFAULT_GRID[0]),
        grid_max=num.get("grid_max", DEFAULT_GRID[1]),
        grid_n=int(num.get("grid_n", DEFAULT_GRID[2])),
    )
    if numerics.fd_step <= 0:
        raise ScenarioError("fd_step must be positive")
    if numerics.grid_n < 2:
        raise ScenarioError("grid_n must be at least 2")
    if not numerics.grid_min < numerics.grid_max:
        raise ScenarioError("grid_min must be below grid_max")

    return Scenario(
        coframe=coframe,
        gauge=gauge,
        defects=defects,
        deformation=deformation,
        material=material,
        couplings=couplings,
        numerics=numerics,
        sections=frozenset(sections),
    )


def _covector(section: dict, stem: str, coframe: CoFrame) -> FormField:
    """1-form with quoted orthonormal components against the scenario coframe."""
    comps = [section.get(f"{stem}{i}", parse_expr("0")) for i in (1, 2, 3)]
    if coframe.is_identity:
        return SymbolicFormField(1, comps)
    acc = zero_field(1)
    for a, comp in zip(FRAME_INDICES, comps):
        acc = acc + SymbolicFormField(0, [comp]) * coframe.e(a)
    return acc
