"""Shared generators and independent oracles for the test-suite.

Oracles here deliberately avoid the library code paths they check: the
wedge oracle expands basis products with its own permutation-sign routine,
derivatives are checked against plain central differences, and transport
derivatives against explicit flow integration.
"""


import numpy as np

from defectgeo.defects import DefectFields
from defectgeo.fields import Point, symbolic
from defectgeo.forms import BASIS, COMPONENT_COUNTS, KForm
from defectgeo.geometry import CoFrame, TensorFormField


def random_points(rng, count, lo=-1.0, hi=1.0, t=0.0):
    pts = rng.uniform(lo, hi, size=(count, 3))
    return [Point(float(p[0]), float(p[1]), float(p[2]), t) for p in pts]


def poly_text(rng, degree=2, amplitude=1.0):
    """Random polynomial in x, y, z up to the given total degree."""
    monomials = ["1", "x", "y", "z"]
    if degree >= 2:
        monomials += ["x*y", "y*z", "x*z", "x^2", "y^2", "z^2"]
    terms = []
    for m in monomials:
        c = rng.uniform(-amplitude, amplitude)
        terms.append(f"({c:.8f})*{m}" if m != "1" else f"({c:.8f})")
    return "+".join(terms)


def random_scalar_field(rng, degree=2, amplitude=1.0):
    return symbolic(0, poly_text(rng, degree, amplitude))


def random_form_field(rng, form_degree, poly_degree=2, amplitude=1.0):
    return symbolic(
        form_degree,
        *(poly_text(rng, poly_degree, amplitude) for _ in range(COMPONENT_COUNTS[form_degree])),
    )


def random_defects(rng, amplitude=0.6):
    return DefectFields(
        burgers=random_form_field(rng, 1, 2, amplitude),
        frank=random_form_field(rng, 1, 2, amplitude),
        point=random_form_field(rng, 1, 2, amplitude),
        scalar=random_scalar_field(rng, 2, amplitude),
    )


def random_triad(rng, amplitude=0.2):
    """Identity plus a small linear perturbation; determinant stays near 1."""
    entries = []
    for i in range(3):
        row = []
        for j in range(3):
            base = "1" if i == j else "0"
            c = rng.uniform(-amplitude, amplitude, 3)
            row.append(f"{base}+({c[0]:.8f})*x+({c[1]:.8f})*y+({c[2]:.8f})*z")
        entries.append(row)
    return entries


def random_coframe(rng, amplitude=0.2):
    return CoFrame(random_triad(rng, amplitude))


def random_symmetric_tensor(rng, degree=1, poly_degree=2, amplitude=0.8):
    comps = {}
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            if (b, a) in comps:
                comps[(a, b)] = comps[(b, a)]
            else:
                comps[(a, b)] = random_form_field(rng, degree, poly_degree, amplitude)
    return TensorFormField(("d", "d"), degree, comps)


# ---- independent oracles ------------------------------------------------------


def permutation_sign(seq):
    sign = 1
    items = list(seq)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i] > items[j]:
                sign = -sign
    return sign


def oracle_wedge(alpha: KForm, beta: KForm) -> KForm:
    """Wedge by brute-force expansion over all basis index pairs."""
    p, q = alpha.degree, beta.degree
    out = np.zeros(COMPONENT_COUNTS[p + q])
    for i, idx_a in enumerate(BASIS[p]):
        for j, idx_b in enumerate(BASIS[q]):
            merged = idx_a + idx_b
            if len(set(merged)) != len(merged):
                continue
            sign = permutation_sign(merged)
            slot = BASIS[p + q].index(tuple(sorted(merged)))
            out[slot] += sign * alpha.components[i] * beta.components[j]
    return KForm(p + q, out)


def fd_partial(fn, point: Point, var: str, h=1e-5):
    """Central difference of a scalar function of a Point."""
    deltas = {"x": (h, 0, 0, 0), "y": (0, h, 0, 0), "z": (0, 0, h, 0), "t": (0, 0, 0, h)}[var]
    plus = fn(Point(point.x + deltas[0], point.y + deltas[1], point.z + deltas[2], point.t + deltas[3]))
    minus = fn(Point(point.x - deltas[0], point.y - deltas[1], point.z - deltas[2], point.t - deltas[3]))
    return (plus - minus) / (2.0 * h)


def flow_map(v, point: Point, eps: float, steps=1):
    """Integrate dx/ds = v(x) for time eps with RK4."""
    y = np.array([point.x, point.y, point.z])
    h = eps / steps

    def rhs(p):
        return v.evaluate(Point(p[0], p[1], p[2], point.t))

    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return Point(float(y[0]), float(y[1]), float(y[2]), point.t)


def flow_jacobian(v, point: Point, eps: float, h=1e-5):
    """d(flow)/d(start point) by central differences."""
    jac = np.zeros((3, 3))
    for col, delta in enumerate(((h, 0, 0), (0, h, 0), (0, 0, h))):
        plus = flow_map(v, Point(point.x + delta[0], point.y + delta[1], point.z + delta[2], point.t), eps)
        minus = flow_map(v, Point(point.x - delta[0], point.y - delta[1], point.z - delta[2], point.t), eps)
        jac[:, col] = (
            np.array([plus.x, plus.y, plus.z]) - np.array([minus.x, minus.y, minus.z])
        ) / (2.0 * h)
    return jac


def lie_derivative_oracle(v, alpha, point: Point, eps=1e-5):
    """Transport derivative: central difference of the pulled-back form along the flow."""

    def pullback(sign):
        target = flow_map(v, point, sign * eps)
        jac = flow_jacobian(v, point, sign * eps)
        value = alpha.evaluate(target)
        if alpha.degree == 0:
            return value
        # new-basis coefficients: dPhi^j = sum_a J[j][a] dx^a
        return value.substitute(jac)

    plus = pullback(+1.0)
    minus = pullback(-1.0)
    return (plus - minus) * (0.5 / eps)


def max_abs_at(fields, points):
    return max(f.evaluate(p).max_abs() for f in fields for p in points)


def random_expr(rng, depth=4):
    """Random domain-safe expression tree (for parser/derivative oracles).

    ln and sqrt only see manifestly positive arguments, divisions only
    denominators bounded away from zero on [-1, 1]^3.
    """
    if depth == 0:
        leaf = rng.integers(0, 4)
        if leaf == 0:
            return f"{rng.uniform(-2, 2):.6f}"
        return str(rng.choice(["x", "y", "z"]))
    kind = rng.integers(0, 8)
    a = random_expr(rng, depth - 1)
    b = random_expr(rng, depth - 1)
    if kind == 0:
        return f"({a}+{b})"
    if kind == 1:
        return f"({a}-{b})"
    if kind == 2:
        return f"({a})*({b})"
    if kind == 3:
        return f"({a})/(4+({b})^2)"
    if kind == 4:
        return f"sin({a})"
    if kind == 5:
        return f"cos({a})"
    if kind == 6:
        return f"ln(2+({a})^2)"
    return f"sqrt(1+({a})^2)"
