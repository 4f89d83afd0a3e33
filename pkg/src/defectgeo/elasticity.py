"""Riemannian elastic pipeline: deformation gradients, Euler strain, isotropic
stress, and the balance-law residuals.

The description is Eulerian: scenarios supply the inverse map X^A(x) whose
direct derivative is the push-forward F^A_a; forward maps are supported
through damped per-point Newton inversion.  The body manifold is taken in
Cartesian orthonormal coordinates (its triad is the identity), so with an
identity spatial coframe the coordinate and orthonormal deformation
gradients coincide; a non-identity spatial triad h enters via the sandwich
F^A_a(orth) = F^A_b (h^-1)^b_a.

Strain and stress:

    e_ab    = (1/2)(delta_ab - F^A_a F^A_b)
    sigma   = 2 mu e + lambda tr(e) delta        (isotropic Hooke law)
    tau^a   = sigma^ab *e_b                      (Cauchy stress 2-form)

and the balance laws evaluated as residual fields:

    mass:    d(rho_m)/dt + div(rho_m v)
    Cauchy:  m (dv^a/dt + i_v D v^a) - m f^a - D tau^a,   m = rho_m *1

with D the Levi-Civita covariant exterior derivative of the coframe.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import expressions as ex
from .errors import (
    AnisotropyNotSupported,
    InvalidMaterial,
    NewtonFailure,
    SingularDeformation,
)
from .fields import (
    FormField,
    NumericFormField,
    Point,
    SymbolicFormField,
    VectorField,
    component_field,
    divergence,
    exterior_derivative,
    matrix_determinant,
    matrix_inverse,
    matrix_multiply,
    matrix_of_scalar_fields,
    scalar_field,
    time_derivative,
    wedge,
    zero_field,
)
from .forms import FRAME_INDICES
from .geometry import CoFrame, levi_civita_connection

_DET_FLOOR = 1e-8
_NEWTON_MAX_ITER = 50
_NEWTON_TOL = 1e-12


@dataclass(frozen=True)
class MaterialConstants:
    """Isotropic elastic moduli plus the dislocation-energy geometry factors.

    Unused entries may stay None; provided values are range-checked.
    """

    lam: float | None = None
    mu: float | None = None
    kappa: float = 0.0
    shear_modulus: float | None = None
    poisson: float | None = None
    r_outer: float | None = None
    r_core: float | None = None

    def __post_init__(self):
        if self.mu is not None and self.mu <= 0.0:
            raise InvalidMaterial(f"shear Lame constant must be positive, got {self.mu}")
        if self.poisson is not None and not (0.0 < self.poisson < 0.5):
            raise InvalidMaterial(f"Poisson ratio must lie in (0, 0.5), got {self.poisson}")
        if self.r_outer is not None or self.r_core is not None:
            if self.r_outer is None or self.r_core is None:
                raise InvalidMaterial("outer and core radii must be given together")
            if not (self.r_outer > self.r_core > 0.0):
                raise InvalidMaterial(
                    f"radii must satisfy r_outer > r_core > 0, got {self.r_outer}, {self.r_core}"
                )


@dataclass(frozen=True)
class DeformationMap:
    """Eulerian deformation data: the inverse map X^A(x), or a forward map.

    `maps` holds three scalar fields; with kind="inverse" they are X^A as
    functions of the spatial point, with kind="forward" they are x^a as
    functions of the body point and are inverted numerically per evaluation.
    """

    maps: tuple
    kind: str = "inverse"
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("inverse", "forward"):
            raise ValueError(f"kind must be 'inverse' or 'forward', got {self.kind!r}")
        if len(self.maps) != 3:
            raise ValueError("a deformation map needs exactly 3 components")
        object.__setattr__(
            self,
            "maps",
            tuple(m if isinstance(m, FormField) else scalar_field(m) for m in self.maps),
        )

    @classmethod
    def identity(cls):
        return cls((scalar_field("x"), scalar_field("y"), scalar_field("z")))

    def inverse_fields(self):
        """The three scalar fields X^A(x, y, z, t)."""
        if self.kind == "inverse":
            return list(self.maps)
        return [self._newton_component(A) for A in range(3)]

    def _forward_value(self, X, t):
        return np.asarray(
            [m.evaluate(Point(X[0], X[1], X[2], t)).components[0] for m in self.maps]
        )

    def _forward_jacobian(self, X, t):
        jac = np.empty((3, 3))
        if all(isinstance(m, SymbolicFormField) for m in self.maps):
            for A in range(3):
                for var_idx, var in enumerate(("x", "y", "z")):
                    d = ex.differentiate(self.maps[A].comps[0], var)
                    jac[A, var_idx] = float(ex.evaluate(d, X[0], X[1], X[2], t))
            return jac
        h = self.fd_step
        for var_idx in range(3):
            dX = np.zeros(3)
            dX[var_idx] = h
            jac[:, var_idx] = (
                self._forward_value(X + dX, t) - self._forward_value(X - dX, t)
            ) / (2.0 * h)
        return jac

    def _invert_at(self, point: Point):
        """Solve forward(X) = point by damped Newton from X = point."""
        target = np.asarray([point.x, point.y, point.z])
        X = target.copy()
        err = self._forward_value(X, point.t) - target
        norm = float(np.linalg.norm(err))
        for _ in range(_NEWTON_MAX_ITER):
            if norm <= _NEWTON_TOL:
                return X
            jac = self._forward_jacobian(X, point.t)
            try:
                step = np.linalg.solve(jac, err)
            except np.linalg.LinAlgError as exc:
                raise SingularDeformation(f"singular forward-map Jacobian at {point}") from exc
            damping = 1.0
            for _ in range(30):
                trial = X - damping * step
                trial_err = self._forward_value(trial, point.t) - target
                trial_norm = float(np.linalg.norm(trial_err))
                if trial_norm < norm:
                    break
                damping *= 0.5
            X, err, norm = trial, trial_err, trial_norm
        if norm <= _NEWTON_TOL:
            return X
        raise NewtonFailure(
            f"forward-map inversion stalled at residual {norm:.3e} after {_NEWTON_MAX_ITER} iterations at {point}"
        )

    def _newton_component(self, A):
        def func(point):
            from .forms import KForm

            return KForm(0, np.asarray([self._invert_at(point)[A]]))

        return NumericFormField(0, func, fd_step=self.fd_step)


def _partial(f: FormField, axis: int) -> FormField:
    """d f / d x^axis for a scalar field, axis in 1..3."""
    return component_field(exterior_derivative(f), axis)


def deformation_gradients(dm: DeformationMap, e: CoFrame | None = None):
    """(pull-back F^a_A, push-forward F^A_a) as 3x3 matrices of scalar fields.

    Rows of the push-forward are body indices A, columns spatial indices a.
    With an identity spatial coframe both coincide with the coordinate
    gradients of the inverse map and its matrix inverse.
    """
    X = dm.inverse_fields()
    push_coord = [[_partial(X[A], a) for a in FRAME_INDICES] for A in range(3)]
    if e is not None and not e.is_identity:
        hinv = [[e.inverse_matrix[i][j] for j in range(3)] for i in range(3)]
        push = matrix_multiply(push_coord, hinv)
    else:
        push = push_coord
    pull = matrix_inverse(matrix_of_scalar_fields(push))
    return pull, push


def check_invertible(dm: DeformationMap, points, e: CoFrame | None = None):
    """Raise SingularDeformation when |det F^A_a| < 1e-8 at a sampled point."""
    _, push = deformation_gradients(dm, e)
    det = matrix_determinant(matrix_of_scalar_fields(push))
    from .sampling import batch_components

    vals = batch_components([det], points)[0]
    worst = int(np.argmin(np.abs(vals)))
    if abs(vals[worst]) < _DET_FLOOR:
        raise SingularDeformation(
            f"deformation-gradient determinant {vals[worst]:.3e} below {_DET_FLOOR} at {points[worst]}"
        )


@dataclass(frozen=True)
class StrainState:
    """Euler strain (and optionally its transport rate), symmetric 3x3 scalar fields."""

    strain: list
    rate: list | None = None

    def entry(self, a, b):
        return self.strain[a - 1][b - 1]


@dataclass(frozen=True)
class StressState:
    """Cauchy stress components sigma^ab and the stress 2-forms tau^a = sigma^ab *e_b."""

    sigma: list
    tau: list

    def entry(self, a, b):
        return self.sigma[a - 1][b - 1]


def euler_strain(dm: DeformationMap, e: CoFrame | None = None) -> StrainState:
    """e_ab = (1/2)(delta_ab - F^A_a F^A_b); symmetric by construction."""
    _, push = deformation_gradients(dm, e)
    half = 0.5

    def entry(a, b):
        acc = scalar_field(half if a == b else 0.0)
        for A in range(3):
            acc = acc - push[A][a - 1] * push[A][b - 1] * half
        return acc

    cache = {}
    out = []
    for a in FRAME_INDICES:
        row = []
        for b in FRAME_INDICES:
            key = (min(a, b), max(a, b))
            if key not in cache:
                cache[key] = entry(*key)
            row.append(cache[key])
        out.append(row)
    return StrainState(out)


def strain_trace(strain: StrainState) -> FormField:
    acc = zero_field(0)
    for a in FRAME_INDICES:
        acc = acc + strain.entry(a, a)
    return acc


def isotropic_stress(strain: StrainState, mat: MaterialConstants, e: CoFrame | None = None) -> StressState:
    """sigma^ab = 2 mu e^ab + lambda tr(e) delta^ab; requires kappa = 0."""
    if mat.kappa != 0.0:
        raise AnisotropyNotSupported(
            f"the isotropic constitutive law requires kappa = 0, got {mat.kappa}"
        )
    if mat.lam is None or mat.mu is None:
        raise InvalidMaterial("isotropic stress needs both Lame constants")
    e = e or CoFrame.identity()
    tr = strain_trace(strain)
    sigma = [
        [
            strain.entry(a, b) * (2.0 * mat.mu) + (tr * mat.lam if a == b else zero_field(0))
            for b in FRAME_INDICES
        ]
        for a in FRAME_INDICES
    ]
    tau = [_stress_two_form(sigma, a, e) for a in FRAME_INDICES]
    return StressState(sigma, tau)


def _stress_two_form(sigma, a, e: CoFrame):
    acc = zero_field(2)
    for b in FRAME_INDICES:
        acc = acc + sigma[a - 1][b - 1] * e.hodge(e.e(b))
    return acc


def elasticity_tensor(mat: MaterialConstants):
    """C_abcd = lam d_ab d_cd + mu (d_ac d_bd + d_ad d_bc) + kappa (d_ac d_bd - d_ad d_bc)."""
    if mat.lam is None or mat.mu is None:
        raise InvalidMaterial("the elasticity tensor needs both Lame constants")

    def delta(i, j):
        return 1.0 if i == j else 0.0

    def C(a, b, c, d):
        return (
            mat.lam * delta(a, b) * delta(c, d)
            + mat.mu * (delta(a, c) * delta(b, d) + delta(a, d) * delta(b, c))
            + mat.kappa * (delta(a, c) * delta(b, d) - delta(a, d) * delta(b, c))
        )

    return C


def stress_from_elasticity_tensor(strain: StrainState, mat: MaterialConstants, e: CoFrame | None = None) -> StressState:
    """Full C_abcd contraction; agrees with isotropic_stress whenever kappa = 0."""
    e = e or CoFrame.identity()
    C = elasticity_tensor(mat)
    sigma = []
    for a in FRAME_INDICES:
        row = []
        for b in FRAME_INDICES:
            acc = zero_field(0)
            for c in FRAME_INDICES:
                for d in FRAME_INDICES:
                    coeff = C(a, b, c, d)
                    if coeff != 0.0:
                        acc = acc + strain.entry(c, d) * coeff
            row.append(acc)
        sigma.append(row)
    tau = [_stress_two_form(sigma, a, e) for a in FRAME_INDICES]
    return StressState(sigma, tau)


# ---- balance laws ---------------------------------------------------------------


def mass_conservation_residual(rho_m: FormField, v: VectorField) -> FormField:
    """d(rho_m)/dt + div(rho_m v), a scalar residual field."""
    return time_derivative(rho_m) + divergence(v * rho_m)


def cauchy_motion_residual(
    rho_m: FormField,
    v: VectorField,
    f: VectorField,
    stress: StressState,
    e: CoFrame | None = None,
):
    """Residual 3-forms m (dv^a/dt + i_v D v^a) - m f^a - D tau^a per index.

    The mass 3-form m multiplies the scalar acceleration; D is the
    Levi-Civita covariant exterior derivative of the supplied coframe.
    """
    e = e or CoFrame.identity()
    gamma = levi_civita_connection(e)
    vol = e.volume()
    mass = rho_m * vol

    def Dv(a):
        acc = exterior_derivative(v.component(a))
        for b in FRAME_INDICES:
            acc = acc + gamma.entry(a, b) * v.component(b)
        return acc

    def Dtau(a):
        acc = exterior_derivative(stress.tau[a - 1])
        for b in FRAME_INDICES:
            acc = acc + wedge(gamma.entry(a, b), stress.tau[b - 1])
        return acc

    out = []
    for a in FRAME_INDICES:
        accel = time_derivative(v.component(a))
        Dva = Dv(a)
        for b in FRAME_INDICES:
            accel = accel + v.component(b) * e.interior(b, Dva)
        residual = mass * accel - mass * f.component(a) - Dtau(a)
        out.append(residual)
    return out


def volume_relation_residual(dm: DeformationMap, e: CoFrame | None = None) -> FormField:
    """det(F^a_A) minus the ratio of the spatial to pulled-back body volume forms."""
    e = e or CoFrame.identity()
    pull, push = deformation_gradients(dm, e)
    det_pull = matrix_determinant(matrix_of_scalar_fields(pull))
    X = dm.inverse_fields()
    push_coord = [[_partial(X[A], a) for a in FRAME_INDICES] for A in range(3)]
    det_push_coord = matrix_determinant(matrix_of_scalar_fields(push_coord))
    vol_coeff = component_field(e.volume(), 1, 2, 3)
    if isinstance(vol_coeff, SymbolicFormField) and isinstance(det_push_coord, SymbolicFormField):
        ratio = SymbolicFormField(0, [ex.div(vol_coeff.comps[0], det_push_coord.comps[0])])
    else:
        from .fields import _combine
        from .forms import KForm

        ratio = _combine(
            0,
            (vol_coeff, det_push_coord),
            lambda n, d: KForm(0, n.components / d.components),
        )
    return det_pull - ratio


def deformation_rate(strain: StrainState, v: VectorField) -> list:
    """Transport rate of the Euler strain treated as a (0,2) tensor:

    d_ab = (d/dt + v . grad) e_ab + e_cb dv^c/dx^a + e_ac dv^c/dx^b
    """
    dv = [[_partial(v.component(c), a) for a in FRAME_INDICES] for c in FRAME_INDICES]

    def entry(a, b):
        acc = time_derivative(strain.entry(a, b))
        for c in FRAME_INDICES:
            acc = acc + v.component(c) * _partial(strain.entry(a, b), c)
            acc = acc + strain.entry(c, b) * dv[c - 1][a - 1]
            acc = acc + strain.entry(a, c) * dv[c - 1][b - 1]
        return acc

    return [[entry(a, b) for b in FRAME_INDICES] for a in FRAME_INDICES]


def with_rate(strain: StrainState, v: VectorField) -> StrainState:
    return replace(strain, rate=deformation_rate(strain, v))
