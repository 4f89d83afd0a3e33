"""Fields of forms over R^3 (optionally time dependent).

A FormField evaluates to a KForm of fixed degree at every Point.  Two
concrete kinds exist:

* SymbolicFormField - components are expression ASTs; exterior and time
  derivatives differentiate the ASTs exactly, so identities such as
  d(d(alpha)) = 0 hold to rounding error at any nesting depth.
* NumericFormField - components come from an opaque callable; derivatives
  either use a caller-supplied exact derivative field or second-order
  central differences with step `fd_step`.  Finite differencing nests at a
  geometric cost per level and is capped at depth 3.

Components are stored against the fixed Cartesian coordinate coframe
dx^1, dx^2, dx^3, which doubles as the global orthonormal basis of the
ambient Euclidean space.  Position-dependent orthonormal coframes are
handled by the geometry module on top of this one.

All algebra (wedge, Hodge, interior product, Lie derivative, the vector
calculus isomorphisms) stays symbolic whenever every operand is symbolic
and otherwise falls back to pointwise closures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expressions as ex
from .errors import DerivativeDepthExceeded
from .forms import (
    BASIS,
    COMPONENT_COUNTS,
    FRAME_INDICES,
    HODGE_TERMS,
    INTERIOR_TERMS,
    WEDGE_TERMS,
    KForm,
)
from .forms import hodge as kform_hodge
from .forms import interior as kform_interior
from .forms import wedge as kform_wedge

#: default finite-difference step: balances h^2 truncation against eps/h round-off
DEFAULT_FD_STEP = 1e-4

#: nesting cap for finite-difference derivatives (cost grows like 6^depth)
MAX_FD_DEPTH = 3


@dataclass(frozen=True)
class Point:
    """Eulerian coordinates on the spatial manifold, plus time."""

    x: float
    y: float
    z: float
    t: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.x, self.y, self.z, self.t)):
            raise ValueError(f"point coordinates must be finite, got {self!r}")

    def shifted(self, dx=0.0, dy=0.0, dz=0.0, dt=0.0):
        return Point(self.x + dx, self.y + dy, self.z + dz, self.t + dt)


ORIGIN = Point(0.0, 0.0, 0.0)


def _as_expr(value):
    if isinstance(value, ex.Expr):
        return value
    if isinstance(value, str):
        return ex.parse_expr(value)
    if isinstance(value, (int, float, np.floating)):
        return ex.Num(float(value))
    raise TypeError(f"cannot interpret {value!r} as an expression")


class FormField:
    """Base class; see SymbolicFormField and NumericFormField."""

    degree: int

    # -- linear structure ------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, FormField):
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError(f"cannot add degree {self.degree} and degree {other.degree} fields")
        if isinstance(self, SymbolicFormField) and isinstance(other, SymbolicFormField):
            return SymbolicFormField(
                self.degree, [ex.add(a, b) for a, b in zip(self.comps, other.comps)]
            )
        return _combine(self.degree, (self, other), lambda a, b: a + b)

    def __sub__(self, other):
        if not isinstance(other, FormField):
            return NotImplemented
        if other.degree != self.degree:
            raise ValueError(f"cannot subtract degree {other.degree} from degree {self.degree} fields")
        if isinstance(self, SymbolicFormField) and isinstance(other, SymbolicFormField):
            return SymbolicFormField(
                self.degree, [ex.sub(a, b) for a, b in zip(self.comps, other.comps)]
            )
        return _combine(self.degree, (self, other), lambda a, b: a - b)

    def __neg__(self):
        if isinstance(self, SymbolicFormField):
            return SymbolicFormField(self.degree, [ex.neg(a) for a in self.comps])
        return _combine(self.degree, (self,), lambda a: -a)

    def __mul__(self, factor):
        """Multiply by a number, an expression, or a 0-form field."""
        if isinstance(factor, FormField):
            if factor.degree == 0:
                return wedge(factor, self)
            if self.degree == 0:
                return wedge(self, factor)
            raise ValueError("one factor must be a scalar (degree-0) field; use wedge")
        f = _as_expr(factor)
        if isinstance(self, SymbolicFormField):
            return SymbolicFormField(self.degree, [ex.mul(f, a) for a in self.comps])
        return wedge(SymbolicFormField(0, [f]), self)

    __rmul__ = __mul__

    # -- evaluation --------------------------------------------------------

    def evaluate(self, point: Point) -> KForm:
        raise NotImplementedError

    def evaluate_batch(self, xs, ys, zs, ts=0.0) -> KForm:
        """Evaluate on aligned coordinate arrays; returns a KForm with array components."""
        raise NotImplementedError

    def __call__(self, point: Point) -> KForm:
        return self.evaluate(point)


class SymbolicFormField(FormField):
    def __init__(self, degree, comps):
        comps = tuple(_as_expr(c) for c in comps)
        if len(comps) != COMPONENT_COUNTS[degree]:
            raise ValueError(
                f"degree-{degree} field needs {COMPONENT_COUNTS[degree]} components, got {len(comps)}"
            )
        self.degree = degree
        self.comps = comps

    def evaluate(self, point):
        cache = {}
        vals = [ex.evaluate(c, point.x, point.y, point.z, point.t, cache=cache) for c in self.comps]
        return KForm(self.degree, np.asarray(vals, dtype=float))

    def evaluate_batch(self, xs, ys, zs, ts=0.0):
        xs = np.asarray(xs, dtype=float)
        shape = xs.shape
        cache = {}
        vals = [
            np.broadcast_to(
                np.asarray(ex.evaluate(c, xs, ys, zs, ts, cache=cache), dtype=float), shape
            )
            for c in self.comps
        ]
        return KForm(self.degree, np.stack(vals))

    def __repr__(self):
        return f"SymbolicFormField({self.degree}, [{', '.join(map(str, self.comps))}])"


class NumericFormField(FormField):
    def __init__(self, degree, func, fd_step=DEFAULT_FD_STEP, fd_depth=0, d_field=None, dt_field=None):
        if fd_step <= 0.0:
            raise ValueError("finite-difference step must be positive")
        self.degree = degree
        self.func = func
        self.fd_step = fd_step
        self.fd_depth = fd_depth
        #: exact exterior derivative supplied by the caller, if any
        self.d_field = d_field
        #: exact time derivative supplied by the caller, if any
        self.dt_field = dt_field

    def evaluate(self, point):
        value = self.func(point)
        if not isinstance(value, KForm):
            raise TypeError(f"evaluator returned {type(value).__name__}, expected KForm")
        if value.degree != self.degree:
            raise ValueError(f"evaluator returned degree {value.degree}, declared {self.degree}")
        return value

    def evaluate_batch(self, xs, ys, zs, ts=0.0):
        from .sampling import map_points

        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        zs = np.asarray(zs, dtype=float)
        ts = np.broadcast_to(np.asarray(ts, dtype=float), xs.shape)
        points = [
            Point(float(x), float(y), float(z), float(t))
            for x, y, z, t in zip(xs.ravel(), ys.ravel(), zs.ravel(), ts.ravel())
        ]
        flat = [v.components for v in map_points(self.evaluate, points)]
        stacked = np.stack(flat, axis=-1).reshape((COMPONENT_COUNTS[self.degree],) + xs.shape)
        return KForm(self.degree, stacked)


def constant_field(kform: KForm) -> SymbolicFormField:
    return SymbolicFormField(kform.degree, [ex.Num(float(c)) for c in kform.components])


def zero_field(degree: int) -> SymbolicFormField:
    return SymbolicFormField(degree, [ex.ZERO] * COMPONENT_COUNTS[degree])


def symbolic(degree: int, *comps) -> SymbolicFormField:
    """Build a symbolic field from expression strings or ASTs, e.g. symbolic(1, "y", "0", "x*z")."""
    return SymbolicFormField(degree, comps)


def scalar_field(value) -> SymbolicFormField:
    return SymbolicFormField(0, [value])


def coordinate_coframe():
    """The constant identity coframe dx^1, dx^2, dx^3."""
    return tuple(constant_field(KForm.basis(a)) for a in FRAME_INDICES)


def _numeric_operands(fields):
    return [f for f in fields if isinstance(f, NumericFormField)]


def _combined_meta(fields):
    numeric = _numeric_operands(fields)
    depth = max((f.fd_depth for f in numeric), default=0)
    step = min((f.fd_step for f in numeric), default=DEFAULT_FD_STEP)
    return depth, step


def _combine(degree, fields, op):
    depth, step = _combined_meta(fields)

    def func(point):
        return op(*(f.evaluate(point) for f in fields))

    return NumericFormField(degree, func, fd_step=step, fd_depth=depth)


# ---- exterior algebra on fields ---------------------------------------------


def wedge(alpha: FormField, beta: FormField) -> FormField:
    p, q = alpha.degree, beta.degree
    if p + q > 3:
        # fail fast with the pointwise error message
        kform_wedge(KForm.zero(p), KForm.zero(q))
    if isinstance(alpha, SymbolicFormField) and isinstance(beta, SymbolicFormField):
        out = [ex.ZERO] * COMPONENT_COUNTS[p + q]
        for i, j, k, sign in WEDGE_TERMS[(p, q)]:
            term = ex.mul(alpha.comps[i], beta.comps[j])
            if sign < 0:
                term = ex.neg(term)
            out[k] = ex.add(out[k], term)
        return SymbolicFormField(p + q, out)
    return _combine(p + q, (alpha, beta), kform_wedge)


def hodge(alpha: FormField) -> FormField:
    """Hodge dual against the fixed Cartesian orthonormal background."""
    p = alpha.degree
    if isinstance(alpha, SymbolicFormField):
        out = [ex.ZERO] * COMPONENT_COUNTS[3 - p]
        for i, k, sign in HODGE_TERMS[p]:
            out[k] = ex.neg(alpha.comps[i]) if sign < 0 else alpha.comps[i]
        return SymbolicFormField(3 - p, out)
    return _combine(3 - p, (alpha,), kform_hodge)


def interior(index: int, alpha: FormField) -> FormField:
    """Contraction with the fixed Cartesian frame vector `index` (1..3)."""
    if index not in FRAME_INDICES:
        raise ValueError(f"frame index must be 1, 2 or 3, got {index}")
    p = alpha.degree
    if p == 0:
        return zero_field(0)
    if isinstance(alpha, SymbolicFormField):
        out = [ex.ZERO] * COMPONENT_COUNTS[p - 1]
        for i, k, sign in INTERIOR_TERMS[index][p]:
            term = ex.neg(alpha.comps[i]) if sign < 0 else alpha.comps[i]
            out[k] = ex.add(out[k], term)
        return SymbolicFormField(p - 1, out)
    return _combine(p - 1, (alpha,), lambda a: kform_interior(index, a))


# ---- derivatives -------------------------------------------------------------


def exterior_derivative(alpha: FormField) -> FormField:
    """d(alpha).  A 3-form input returns the zero field of degree 3.

    Many generic tensor loops legitimately apply d to top-degree forms, so
    that case degenerates silently instead of raising.
    """
    p = alpha.degree
    if p == 3:
        return zero_field(3)
    if isinstance(alpha, SymbolicFormField):
        out = [ex.ZERO] * COMPONENT_COUNTS[p + 1]
        for a, var in zip(FRAME_INDICES, ("x", "y", "z")):
            for i, j, k, sign in WEDGE_TERMS[(1, p)]:
                if i != a - 1:
                    continue
                term = ex.differentiate(alpha.comps[j], var)
                if sign < 0:
                    term = ex.neg(term)
                out[k] = ex.add(out[k], term)
        return SymbolicFormField(p + 1, out)
    if alpha.d_field is not None:
        return alpha.d_field
    if alpha.fd_depth >= MAX_FD_DEPTH:
        raise DerivativeDepthExceeded(
            f"finite-difference derivatives nest at most {MAX_FD_DEPTH} deep"
        )
    h = alpha.fd_step

    def func(point):
        acc = KForm.zero(p + 1)
        for a, axis in zip(FRAME_INDICES, ("dx", "dy", "dz")):
            plus = alpha.evaluate(point.shifted(**{axis: +h}))
            minus = alpha.evaluate(point.shifted(**{axis: -h}))
            partial = (plus - minus) * (0.5 / h)
            acc = acc + kform_wedge(KForm.basis(a), partial)
        return acc

    return NumericFormField(p + 1, func, fd_step=h, fd_depth=alpha.fd_depth + 1)


def time_derivative(alpha: FormField) -> FormField:
    """Componentwise d/dt; structurally time-independent symbolic fields give exact zero."""
    if isinstance(alpha, SymbolicFormField):
        return SymbolicFormField(alpha.degree, [ex.differentiate(c, "t") for c in alpha.comps])
    if alpha.dt_field is not None:
        return alpha.dt_field
    if alpha.fd_depth >= MAX_FD_DEPTH:
        raise DerivativeDepthExceeded(
            f"finite-difference derivatives nest at most {MAX_FD_DEPTH} deep"
        )
    h = alpha.fd_step

    def func(point):
        plus = alpha.evaluate(point.shifted(dt=+h))
        minus = alpha.evaluate(point.shifted(dt=-h))
        return (plus - minus) * (0.5 / h)

    return NumericFormField(alpha.degree, func, fd_step=h, fd_depth=alpha.fd_depth + 1)


# ---- vector fields and the vector-calculus isomorphisms ----------------------


@dataclass(frozen=True)
class VectorField:
    """Three scalar component fields v^1, v^2, v^3 in the orthonormal frame."""

    comps: tuple

    def __post_init__(self):
        if len(self.comps) != 3:
            raise ValueError("a vector field needs exactly 3 components")
        object.__setattr__(
            self, "comps", tuple(c if isinstance(c, FormField) else scalar_field(c) for c in self.comps)
        )

    @classmethod
    def of(cls, c1, c2, c3):
        return cls((c1, c2, c3))

    @classmethod
    def zero(cls):
        return cls((zero_field(0), zero_field(0), zero_field(0)))

    def component(self, index):
        return self.comps[index - 1]

    def evaluate(self, point):
        return np.asarray([c.evaluate(point).components[0] for c in self.comps])

    def as_one_form(self) -> FormField:
        """The 1-form with the same orthonormal components."""
        if all(isinstance(c, SymbolicFormField) for c in self.comps):
            return SymbolicFormField(1, [c.comps[0] for c in self.comps])
        return _combine(1, tuple(self.comps), lambda a, b, c: KForm(
            1, np.stack([a.components[0], b.components[0], c.components[0]])
        ))

    def __add__(self, other):
        return VectorField(tuple(a + b for a, b in zip(self.comps, other.comps)))

    def __sub__(self, other):
        return VectorField(tuple(a - b for a, b in zip(self.comps, other.comps)))

    def __neg__(self):
        return VectorField(tuple(-a for a in self.comps))

    def __mul__(self, factor):
        return VectorField(tuple(c * factor for c in self.comps))

    __rmul__ = __mul__

    def dot(self, other) -> FormField:
        acc = zero_field(0)
        for a, b in zip(self.comps, other.comps):
            acc = acc + a * b
        return acc

    def cross(self, other) -> "VectorField":
        a1, a2, a3 = self.comps
        b1, b2, b3 = other.comps
        return VectorField.of(a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1)


def one_form_to_vector(alpha: FormField) -> VectorField:
    """Inverse of VectorField.as_one_form (orthonormal components coincide)."""
    if alpha.degree != 1:
        raise ValueError("expected a 1-form field")
    return VectorField.of(*(_component_field(alpha, i) for i in range(3)))


def _component_field(alpha: FormField, slot: int) -> FormField:
    if isinstance(alpha, SymbolicFormField):
        return SymbolicFormField(0, [alpha.comps[slot]])
    return _combine(0, (alpha,), lambda a: KForm(0, a.components[slot: slot + 1]))


def component_field(alpha: FormField, *indices) -> FormField:
    """Scalar field of one component, addressed by basis index tuple, e.g. (1,3)."""
    slot = BASIS[alpha.degree].index(tuple(indices))
    return _component_field(alpha, slot)


def interior_with_vector(v: VectorField, alpha: FormField) -> FormField:
    """iota_v = sum_a v^a iota_a against the fixed Cartesian frame."""
    if alpha.degree == 0:
        return zero_field(0)
    acc = zero_field(alpha.degree - 1)
    for a in FRAME_INDICES:
        acc = acc + v.component(a) * interior(a, alpha)
    return acc


def lie_derivative(v: VectorField, alpha: FormField) -> FormField:
    """Cartan formula: L_v alpha = iota_v d(alpha) + d(iota_v alpha)."""
    first = interior_with_vector(v, exterior_derivative(alpha))
    if alpha.degree == 0:
        return first
    return first + exterior_derivative(interior_with_vector(v, alpha))


def grad(f: FormField) -> VectorField:
    """Gradient of a scalar field via df."""
    return one_form_to_vector(exterior_derivative(f))


def curl(v: VectorField) -> VectorField:
    """Curl via *(d v-flat)."""
    return one_form_to_vector(hodge(exterior_derivative(v.as_one_form())))


def divergence(v: VectorField) -> FormField:
    """Divergence via *(d * v-flat); returns a scalar field."""
    return hodge(exterior_derivative(hodge(v.as_one_form())))


# ---- scalar 3x3 matrix helpers ------------------------------------------------


def matrix_of_scalar_fields(entries):
    """Normalise a 3x3 of expressions/strings/numbers/fields to 0-form fields."""
    out = []
    for row in entries:
        cells = list(row)
        if len(cells) != 3:
            raise ValueError("expected a 3x3 matrix")
        out.append([c if isinstance(c, FormField) else scalar_field(c) for c in cells])
    if len(out) != 3:
        raise ValueError("expected a 3x3 matrix")
    return out


def _all_symbolic(matrix):
    return all(isinstance(c, SymbolicFormField) for row in matrix for c in row)


def matrix_determinant(matrix):
    """Determinant of a 3x3 of 0-form fields, as a 0-form field."""
    m = matrix
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def matrix_inverse(matrix):
    """Pointwise inverse of a 3x3 of 0-form fields (adjugate over determinant)."""
    m = matrix
    det = matrix_determinant(m)
    if _all_symbolic(m):
        det_expr = det.comps[0]
        out = []
        for i in range(3):
            row = []
            for j in range(3):
                # adjugate: cofactor of (j, i)
                r = [k for k in range(3) if k != j]
                c = [k for k in range(3) if k != i]
                minor = ex.sub(
                    ex.mul(m[r[0]][c[0]].comps[0], m[r[1]][c[1]].comps[0]),
                    ex.mul(m[r[0]][c[1]].comps[0], m[r[1]][c[0]].comps[0]),
                )
                cof = minor if (i + j) % 2 == 0 else ex.neg(minor)
                row.append(SymbolicFormField(0, [ex.div(cof, det_expr)]))
            out.append(row)
        return out

    depth, step = _combined_meta([c for row in m for c in row])

    def entry(i, j):
        def func(point):
            vals = np.array([[m[r][c].evaluate(point).components[0] for c in range(3)] for r in range(3)])
            return KForm(0, np.asarray([np.linalg.inv(vals)[i][j]]))

        return NumericFormField(0, func, fd_step=step, fd_depth=depth)

    return [[entry(i, j) for j in range(3)] for i in range(3)]


def matrix_multiply(a, b):
    """Product of two 3x3s of 0-form fields."""
    return [
        [a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j] for j in range(3)]
        for i in range(3)
    ]


def identity_matrix_fields():
    one = scalar_field(1.0)
    zero = zero_field(0)
    return [[one if i == j else zero for j in range(3)] for i in range(3)]


def substitute_basis(alpha: FormField, matrix) -> FormField:
    """Re-express `alpha` after replacing each basis covector.

    `matrix[j][a]` (0-form fields, 0-based) is the coefficient of the new
    basis covector `a` in the expansion of the old covector `j`; the field
    analogue of KForm.substitute.
    """
    p = alpha.degree
    if p == 0:
        return alpha
    m = matrix
    if isinstance(alpha, SymbolicFormField) and _all_symbolic(m):
        a_expr = [[m[i][j].comps[0] for j in range(3)] for i in range(3)]
        c = alpha.comps
        if p == 1:
            out = []
            for col in range(3):
                acc = ex.ZERO
                for j in range(3):
                    acc = ex.add(acc, ex.mul(c[j], a_expr[j][col]))
                out.append(acc)
            return SymbolicFormField(1, out)
        if p == 2:
            out = []
            for (a, b) in BASIS[2]:
                acc = ex.ZERO
                for i, (j, k) in enumerate(BASIS[2]):
                    minor = ex.sub(
                        ex.mul(a_expr[j - 1][a - 1], a_expr[k - 1][b - 1]),
                        ex.mul(a_expr[j - 1][b - 1], a_expr[k - 1][a - 1]),
                    )
                    acc = ex.add(acc, ex.mul(c[i], minor))
                out.append(acc)
            return SymbolicFormField(2, out)
        det = matrix_determinant(matrix_of_scalar_fields(m))
        return SymbolicFormField(3, [ex.mul(c[0], det.comps[0])])

    depth, step = _combined_meta([alpha] + [cell for row in m for cell in row])

    def func(point):
        vals = [[m[i][j].evaluate(point).components[0] for j in range(3)] for i in range(3)]
        return alpha.evaluate(point).substitute(vals)

    return NumericFormField(p, func, fd_step=step, fd_depth=depth)
