"""Field calculus: exterior/Lie/time derivatives and the vector isomorphisms."""

import numpy as np
import pytest

from defectgeo import fields as ff
from defectgeo.errors import DerivativeDepthExceeded
from defectgeo.fields import (
    NumericFormField,
    Point,
    VectorField,
    curl,
    divergence,
    exterior_derivative,
    grad,
    hodge,
    lie_derivative,
    symbolic,
    time_derivative,
    wedge,
    zero_field,
)
from defectgeo.forms import KForm

from util import (
    fd_partial,
    lie_derivative_oracle,
    random_form_field,
    random_points,
    random_scalar_field,
)

rng = np.random.default_rng(314)


def numeric_from(field, fd_step=1e-4):
    """Wrap a symbolic field as an opaque finite-difference evaluator."""
    return NumericFormField(field.degree, field.evaluate, fd_step=fd_step)


def test_d_of_coordinate():
    d = exterior_derivative(symbolic(0, "x"))
    assert d.evaluate(Point(0.3, -0.7, 0.1)).allclose(KForm.basis(1))


def test_d_product_rule_on_basis():
    d = exterior_derivative(symbolic(1, "0", "x", "0"))
    assert d.evaluate(Point(5.0, 2.0, -1.0)).allclose(KForm.basis(1, 2))


def test_dd_zero_symbolic():
    pts = random_points(rng, 100)
    worst = 0.0
    for _ in range(100):
        field = random_scalar_field(rng) if rng.uniform() < 0.5 else random_form_field(rng, 1)
        dd = exterior_derivative(exterior_derivative(field))
        for p in pts[:3]:
            worst = max(worst, dd.evaluate(p).max_abs())
    assert worst <= 1e-9


def test_dd_zero_finite_difference():
    pts = random_points(rng, 20)
    worst = 0.0
    for _ in range(5):
        field = numeric_from(random_scalar_field(rng), fd_step=1e-4)
        dd = exterior_derivative(exterior_derivative(field))
        for p in pts[:4]:
            worst = max(worst, dd.evaluate(p).max_abs())
    assert worst <= 1e-5


def test_dd_zero_on_explicit_example():
    field = symbolic(0, "sin(x*y)")
    dd = exterior_derivative(exterior_derivative(field))
    for p in random_points(rng, 100):
        assert dd.evaluate(p).max_abs() <= 1e-9


def test_d_top_degree_is_silent_zero():
    top = symbolic(3, "x*y*z")
    d = exterior_derivative(top)
    assert d.degree == 3
    assert d.evaluate(Point(1.0, 2.0, 3.0)).max_abs() == 0.0


def test_d_leibniz_rule():
    pts = random_points(rng, 10)
    for _ in range(5):
        alpha = random_form_field(rng, 1)
        beta = random_form_field(rng, 1)
        lhs = exterior_derivative(wedge(alpha, beta))
        rhs = wedge(exterior_derivative(alpha), beta) - wedge(alpha, exterior_derivative(beta))
        for p in pts:
            assert (lhs.evaluate(p) - rhs.evaluate(p)).max_abs() <= 1e-10


def test_finite_difference_depth_cap():
    field = numeric_from(symbolic(0, "sin(x)"))
    d1 = exterior_derivative(field)
    d2 = exterior_derivative(hodge(d1))
    d3 = exterior_derivative(hodge(d2))
    assert d3.fd_depth == 3
    with pytest.raises(DerivativeDepthExceeded):
        exterior_derivative(d3)


def test_exact_user_supplied_derivative():
    base = symbolic(0, "x*x")
    exact = symbolic(1, "2*x", "0", "0")
    field = NumericFormField(0, base.evaluate, d_field=exact)
    d = exterior_derivative(field)
    assert d is exact
    # exact path does not consume finite-difference depth
    assert exterior_derivative(exterior_derivative(d)).degree == 3


def test_time_derivative_structural_zero():
    static = symbolic(1, "x*y", "z", "1")
    dt = time_derivative(static)
    assert all(c is not None for c in dt.comps)
    assert dt.evaluate(Point(0.5, 0.5, 0.5, 2.0)).max_abs() == 0.0
    moving = symbolic(0, "t*x")
    assert time_derivative(moving).evaluate(Point(2.0, 0, 0, 9.0)).components[0] == 2.0


def test_lie_derivative_directional():
    v = VectorField.of(symbolic(0, "1"), symbolic(0, "0"), symbolic(0, "0"))
    alpha = symbolic(0, "x")
    out = lie_derivative(v, alpha)
    assert out.evaluate(Point(0.2, 0.3, 0.4)).allclose(KForm.scalar(1.0))


def test_lie_derivative_constant_form_constant_field():
    v = VectorField.of(symbolic(0, "1"), symbolic(0, "0"), symbolic(0, "0"))
    alpha = symbolic(1, "0", "1", "0")
    out = lie_derivative(v, alpha)
    assert out.evaluate(Point(0.2, 0.3, 0.4)).max_abs() == 0.0


def test_lie_derivative_flow_transport_oracle():
    pts = random_points(rng, 5, lo=-0.5, hi=0.5)
    for _ in range(3):
        v = VectorField.of(
            random_scalar_field(rng, amplitude=0.5),
            random_scalar_field(rng, amplitude=0.5),
            random_scalar_field(rng, amplitude=0.5),
        )
        for degree in (0, 1, 2):
            alpha = random_form_field(rng, degree)
            lied = lie_derivative(v, alpha)
            for p in pts:
                got = lied.evaluate(p)
                want = lie_derivative_oracle(v, alpha, p)
                scale = max(1.0, want.max_abs())
                assert (got - want).max_abs() / scale <= 1e-3


def test_grad_example():
    g = grad(symbolic(0, "x^2+y"))
    vals = g.evaluate(Point(1.5, 2.0, -3.0))
    assert np.allclose(vals, [3.0, 1.0, 0.0])


def test_curl_of_gradient_vanishes():
    phi = symbolic(0, "ln(1+x^2)")
    cg = curl(grad(phi))
    for p in random_points(rng, 100):
        assert max(abs(c.evaluate(p).components[0]) for c in cg.comps) <= 1e-12


def test_curl_beltrami_field():
    k = 2.0
    w = VectorField.of(symbolic(0, "sin(2*z)"), symbolic(0, "cos(2*z)"), symbolic(0, "0"))
    cw = curl(w)
    for p in random_points(rng, 20):
        got = cw.evaluate(p)
        want = k * w.evaluate(p)
        assert np.max(np.abs(got - want)) <= 1e-12


def test_vector_operators_match_stencils():
    pts = random_points(rng, 10)
    f = random_scalar_field(rng)
    w = VectorField.of(
        random_scalar_field(rng), random_scalar_field(rng), random_scalar_field(rng)
    )
    g = grad(f)
    c = curl(w)
    dv = divergence(w)
    for p in pts:
        fd_grad = [fd_partial(lambda q, v=var: f.evaluate(q).components[0], p, var) for var in "xyz"]
        assert np.max(np.abs(g.evaluate(p) - fd_grad)) <= 1e-6

        def comp(q, i):
            return w.comps[i].evaluate(q).components[0]

        fd_curl = [
            fd_partial(lambda q: comp(q, 2), p, "y") - fd_partial(lambda q: comp(q, 1), p, "z"),
            fd_partial(lambda q: comp(q, 0), p, "z") - fd_partial(lambda q: comp(q, 2), p, "x"),
            fd_partial(lambda q: comp(q, 1), p, "x") - fd_partial(lambda q: comp(q, 0), p, "y"),
        ]
        assert np.max(np.abs(c.evaluate(p) - fd_curl)) <= 1e-6
        fd_div = sum(fd_partial(lambda q, i=i, var=var: comp(q, i), p, var) for i, var in enumerate("xyz"))
        assert abs(dv.evaluate(p).components[0] - fd_div) <= 1e-6


def test_symbolic_numeric_mixing():
    sym = symbolic(1, "x", "0", "0")
    num = numeric_from(symbolic(1, "0", "y", "0"))
    total = sym + num
    assert isinstance(total, NumericFormField)
    v = total.evaluate(Point(2.0, 3.0, 4.0))
    assert np.allclose(v.components, [2.0, 3.0, 0.0])


def test_batch_matches_pointwise():
    field = random_form_field(rng, 2)
    pts = random_points(rng, 17)
    xs = np.array([p.x for p in pts])
    ys = np.array([p.y for p in pts])
    zs = np.array([p.z for p in pts])
    batch = field.evaluate_batch(xs, ys, zs).components
    for i, p in enumerate(pts):
        assert np.allclose(batch[:, i], field.evaluate(p).components)


def test_wedge_rejects_overflow_at_field_level():
    from defectgeo.errors import DegreeOverflow

    with pytest.raises(DegreeOverflow):
        wedge(symbolic(2, "1", "0", "0"), symbolic(2, "0", "1", "0"))


def test_interior_with_vector_weights():
    v = VectorField.of(symbolic(0, "2"), symbolic(0, "0"), symbolic(0, "0"))
    alpha = symbolic(1, "x", "y", "z")
    out = ff.interior_with_vector(v, alpha)
    assert out.evaluate(Point(3.0, 1.0, 1.0)).allclose(KForm.scalar(6.0))


def test_zero_field_and_constant_field():
    z = zero_field(2)
    assert z.evaluate(Point(1, 2, 3)).max_abs() == 0.0
    c = ff.constant_field(KForm.basis(1, 3) * 4.0)
    assert c.evaluate(Point(9, 9, 9)).allclose(4.0 * KForm.basis(1, 3))
