"""Irreducible decomposition of torsion and non-metricity and the defect densities.

Identifications used throughout the package:

* Burgers covector  b  = torsion trace 1-form       -> dislocations
* Frank covector    O  = second-kind trace P of the
                         traceless non-metricity    -> disclinations
* point covector    m  = non-metricity trace        -> point defects / extra matter
* scalar density  rho  = coefficient of the totally
                         antisymmetric torsion part S = rho * vol
* generalized Burgers B = b + c1 O + c2 m, default c1 = -3, c2 = 2/3.

Extraction of the Frank covector divides the raw second-kind trace by
FRANK_SCALE (the exact factor produced by feeding the restricted
reconstruction ansatz back through the trace; measured and frozen in
`calibration`), so extract_defects inverts the reconstruction by default.
Pass frank_mode="raw" to keep the undivided trace.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .fields import FormField, scalar_field, wedge, zero_field
from .forms import FRAME_INDICES
from .geometry import CoFrame, ConnectionField, TensorFormField, nonmetricity, torsion

#: exact factor between the raw second-kind trace and the Frank covector it
#: encodes; see calibration.measure_frank_scale for the oracle that pins it.
FRANK_SCALE = 3.0

#: generalized-Burgers combination constants
GENERALIZED_BURGERS_C1 = -3.0
GENERALIZED_BURGERS_C2 = 2.0 / 3.0


@dataclass(frozen=True)
class DefectFields:
    """The physical defect densities of one configuration."""

    burgers: FormField  # 1-form
    frank: FormField  # 1-form
    point: FormField  # 1-form
    scalar: FormField  # 0-form
    c1: float = GENERALIZED_BURGERS_C1
    c2: float = GENERALIZED_BURGERS_C2

    def __post_init__(self):
        for name, deg in (("burgers", 1), ("frank", 1), ("point", 1), ("scalar", 0)):
            f = getattr(self, name)
            if f.degree != deg:
                raise ValueError(f"{name} must be a degree-{deg} field, got {f.degree}")

    @property
    def generalized_burgers(self) -> FormField:
        return self.burgers + self.frank * self.c1 + self.point * self.c2

    @classmethod
    def zero(cls):
        z1 = zero_field(1)
        return cls(z1, z1, z1, zero_field(0))

    def __add__(self, other):
        if (self.c1, self.c2) != (other.c1, other.c2):
            raise ValueError("cannot add defect fields with different B-combination constants")
        return replace(
            self,
            burgers=self.burgers + other.burgers,
            frank=self.frank + other.frank,
            point=self.point + other.point,
            scalar=self.scalar + other.scalar,
        )

    def __sub__(self, other):
        return self + (other * -1.0)

    def __mul__(self, factor):
        return replace(
            self,
            burgers=self.burgers * factor,
            frank=self.frank * factor,
            point=self.point * factor,
            scalar=self.scalar * factor,
        )

    __rmul__ = __mul__


@dataclass(frozen=True)
class TorsionPieces:
    """Irreducible torsion split: tensor piece, trace piece, totally antisymmetric piece."""

    piece1: TensorFormField
    piece2: TensorFormField
    piece3: TensorFormField
    trace: FormField  # 1-form
    scalar_part: FormField  # 3-form


@dataclass(frozen=True)
class NonmetricityPieces:
    """Irreducible non-metricity split plus the traces feeding it."""

    piece1: TensorFormField
    piece2: TensorFormField
    piece3: TensorFormField
    piece4: TensorFormField
    trace: FormField  # first-kind trace, 1-form
    second_trace: FormField  # P, 1-form
    flux: TensorFormField  # N_a, 2-forms, one lower slot


# ---- torsion -------------------------------------------------------------------


def torsion_traces(T: TensorFormField, e: CoFrame | None = None):
    """(trace 1-form i_a T^a, totally antisymmetric 3-form e_a ^ T^a)."""
    e = e or CoFrame.identity()
    trace = zero_field(1)
    scalar_part = zero_field(3)
    for a in FRAME_INDICES:
        trace = trace + e.interior(a, T.entry(a))
        scalar_part = scalar_part + wedge(e.e(a), T.entry(a))
    return trace, scalar_part


def torsion_pieces(T: TensorFormField, e: CoFrame | None = None) -> TorsionPieces:
    e = e or CoFrame.identity()
    trace, scalar_part = torsion_traces(T, e)
    piece2 = TensorFormField.build(("u",), 2, lambda a: wedge(e.e(a), trace) * 0.5)
    piece3 = TensorFormField.build(("u",), 2, lambda a: e.interior(a, scalar_part) * (1.0 / 3.0))
    piece1 = TensorFormField.build(
        ("u",), 2, lambda a: T.entry(a) - piece2.entry(a) - piece3.entry(a)
    )
    return TorsionPieces(piece1, piece2, piece3, trace, scalar_part)


def reconstruct_torsion(burgers: FormField, scalar, e: CoFrame | None = None) -> TensorFormField:
    """Torsion carrying only trace and scalar parts:

    T^a = (1/2) e^a ^ b + (rho/3) *e^a
    """
    e = e or CoFrame.identity()
    rho = scalar if isinstance(scalar, FormField) else scalar_field(scalar)

    def entry(a):
        return wedge(e.e(a), burgers) * 0.5 + (rho * e.hodge(e.e(a))) * (1.0 / 3.0)

    return TensorFormField.build(("u",), 2, entry)


# ---- non-metricity ---------------------------------------------------------------


def nonmetricity_trace(Q: TensorFormField) -> FormField:
    acc = zero_field(1)
    for a in FRAME_INDICES:
        acc = acc + Q.entry(a, a)
    return acc


def _traceless_part(Q: TensorFormField, trace: FormField) -> TensorFormField:
    third = trace * (1.0 / 3.0)
    return TensorFormField.build(
        ("d", "d"), 1, lambda a, b: Q.entry(a, b) - (third if a == b else zero_field(1))
    )


def nonmetricity_second_trace(Q: TensorFormField, e: CoFrame | None = None):
    """(P, N_a): the second-kind trace 1-form and the flux 2-forms of Q-bar."""
    e = e or CoFrame.identity()
    trace = nonmetricity_trace(Q)
    Qbar = _traceless_part(Q, trace)
    flux = TensorFormField.build(
        ("d",),
        2,
        lambda a: _sum(wedge(Qbar.entry(a, b), e.e(b)) for b in FRAME_INDICES),
    )
    P = zero_field(1)
    for b in FRAME_INDICES:
        coeff = _sum(e.interior(a, Qbar.entry(a, b)) for a in FRAME_INDICES)
        P = P + wedge(coeff, e.e(b))
    return P, flux


def _sum(items):
    acc = None
    for f in items:
        acc = f if acc is None else acc + f
    return acc


def nonmetricity_pieces(Q: TensorFormField, e: CoFrame | None = None) -> NonmetricityPieces:
    e = e or CoFrame.identity()
    trace = nonmetricity_trace(Q)
    P, flux = nonmetricity_second_trace(Q, e)

    def piece2_entry(a, b):
        acc = e.interior(a, flux.entry(b)) + e.interior(b, flux.entry(a))
        if a == b:
            acc = acc - P * (2.0 / 3.0)
        return acc * (-1.0 / 3.0)

    def piece3_entry(a, b):
        acc = wedge(e.interior(a, P), e.e(b)) + wedge(e.interior(b, P), e.e(a))
        if a == b:
            acc = acc - P * (2.0 / 3.0)
        return acc * (2.0 / 15.0)

    piece2 = TensorFormField.build(("d", "d"), 1, piece2_entry)
    piece3 = TensorFormField.build(("d", "d"), 1, piece3_entry)
    piece4 = TensorFormField.build(
        ("d", "d"), 1, lambda a, b: trace * (1.0 / 3.0) if a == b else zero_field(1)
    )
    piece1 = TensorFormField.build(
        ("d", "d"),
        1,
        lambda a, b: Q.entry(a, b) - piece2.entry(a, b) - piece3.entry(a, b) - piece4.entry(a, b),
    )
    return NonmetricityPieces(piece1, piece2, piece3, piece4, trace, P, flux)


def reconstruct_nonmetricity(frank: FormField, point: FormField, e: CoFrame | None = None) -> TensorFormField:
    """Non-metricity carrying only the second-kind and first-kind traces:

    Q_ab = (9/10) (O_a e_b + O_b e_a - (2/3) delta_ab O) + (1/3) delta_ab m
    """
    e = e or CoFrame.identity()

    def entry(a, b):
        Oa = e.interior(a, frank)
        Ob = e.interior(b, frank)
        acc = wedge(Oa, e.e(b)) + wedge(Ob, e.e(a))
        if a == b:
            acc = acc - frank * (2.0 / 3.0)
        acc = acc * (9.0 / 10.0)
        if a == b:
            acc = acc + point * (1.0 / 3.0)
        return acc

    return TensorFormField.build(("d", "d"), 1, entry)


def reconstruct_defect_geometry(d: DefectFields, e: CoFrame | None = None):
    """(T, Q) of the restricted form carrying exactly the given defect densities."""
    e = e or CoFrame.identity()
    T = reconstruct_torsion(d.burgers, d.scalar, e)
    Q = reconstruct_nonmetricity(d.frank, d.point, e)
    return T, Q


# ---- extraction ------------------------------------------------------------------


def extract_from_tensors(
    T: TensorFormField,
    Q: TensorFormField,
    e: CoFrame | None = None,
    frank_mode: str = "identity",
    c1: float = GENERALIZED_BURGERS_C1,
    c2: float = GENERALIZED_BURGERS_C2,
) -> DefectFields:
    """Defect densities from arbitrary torsion and non-metricity tensors.

    frank_mode="identity" divides the second-kind trace by FRANK_SCALE so
    that extraction inverts `reconstruct_nonmetricity`; "raw" keeps the
    undivided trace.
    """
    if frank_mode not in ("identity", "raw"):
        raise ValueError(f"frank_mode must be 'identity' or 'raw', got {frank_mode!r}")
    e = e or CoFrame.identity()
    burgers, scalar_part = torsion_traces(T, e)
    rho = e.hodge(scalar_part)
    point = nonmetricity_trace(Q)
    P, _ = nonmetricity_second_trace(Q, e)
    frank = P * (1.0 / FRANK_SCALE) if frank_mode == "identity" else P
    return DefectFields(burgers, frank, point, rho, c1=c1, c2=c2)


def extract_defects(
    e: CoFrame,
    omega: ConnectionField,
    frank_mode: str = "identity",
    c1: float = GENERALIZED_BURGERS_C1,
    c2: float = GENERALIZED_BURGERS_C2,
) -> DefectFields:
    """Defect densities of a coframe/connection pair."""
    T = torsion(e, omega)
    Q = nonmetricity(omega)
    return extract_from_tensors(T, Q, e, frank_mode=frank_mode, c1=c1, c2=c2)
