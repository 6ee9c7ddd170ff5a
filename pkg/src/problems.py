"""Model problems: manufactured solutions, boundary data and rigid-motion adjustment."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .dofmap import Formulation
from .exceptions import InvalidArgumentError, QuadratureError
from .local_operators import SpaceKind
from .quadrature import integrate_segment, rectangle_quadrature

logger = logging.getLogger("polyvem.problems")

PI = np.pi

# f(x, y) -> (q, 2); grad(x, y) -> (q, 2, 2) with [:, c, d] = d u_c / d x_d
VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
GradientField = Callable[[np.ndarray, np.ndarray], np.ndarray]


class BuiltinExample(Enum):
    """Manufactured solutions shipped with the solver."""
    EXAMPLE1 = "Example1"
    EXAMPLE2 = "Example2DivFree"
    EXAMPLE3 = "Example3Mixed"
    LINEAR_PATCH = "LinearPatch"

    @classmethod
    def parse(cls, value) -> 'BuiltinExample':
        if isinstance(value, BuiltinExample):
            return value
        text = str(value).lower()
        for kind in cls:
            if text in (kind.value.lower(), kind.name.lower()):
                return kind
        raise InvalidArgumentError(f"Unknown example '{value}' (expected one of {[k.value for k in cls]})")


@dataclass(frozen=True)
class RigidMotionAdjustment:
    """p = c0 (1, 0) + c1 (0, 1) + c2 (-y, x)."""
    c0: float
    c1: float
    c2: float
    mode: str = 'boundary'

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.stack([self.c0 - self.c2 * y, self.c1 + self.c2 * x], axis=-1)

    def gradient(self) -> np.ndarray:
        return np.array([[0.0, -self.c2], [self.c2, 0.0]])


def _square_sides(bbox: Tuple[float, float, float, float]):
    x0, x1, y0, y1 = bbox
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    return [(corners[i], corners[(i + 1) % 4]) for i in range(4)]


def _boundary_integral(func, bbox, panels: int) -> np.ndarray:
    return sum(integrate_segment(func, a, b, n=3, panels=panels) for a, b in _square_sides(bbox))


def rigid_motion_coefficients(u: VectorField, grad_u: Optional[GradientField] = None,
                              mode: str = 'boundary',
                              bbox: Tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0),
                              panels: int = 16, tol: float = 1e-8) -> RigidMotionAdjustment:
    """
    Rigid motion p making u - p satisfy the pure-traction constraints.

    c2 = 1/2 int rot u (unit area). In 'boundary' mode the boundary mean of u - p vanishes,
    in 'domain' mode (enhanced spaces) its domain mean does.

    Args:
        u: Exact displacement
        grad_u: Exact gradient; rot u is integrated along the boundary when omitted
        mode: 'boundary' or 'domain'
        bbox: Rectangle (x0, x1, y0, y1)
        panels: Composite panels per side/direction
        tol: Residual tolerance of the constraint check

    Returns:
        RigidMotionAdjustment

    Raises:
        QuadratureError: If the adjusted field misses a constraint by more than tol
    """
    if mode not in ('boundary', 'domain'):
        raise InvalidArgumentError(f"Unknown adjustment mode '{mode}' (expected 'boundary' or 'domain')")
    x0, x1, y0, y1 = bbox
    area = (x1 - x0) * (y1 - y0)
    points, weights = rectangle_quadrature(x0, x1, y0, y1, panels=panels, order=3)
    px, py = points[:, 0], points[:, 1]

    if grad_u is not None:
        g = np.asarray(grad_u(px, py), dtype=float)
        rot_integral = float(weights @ (g[:, 1, 0] - g[:, 0, 1]))
    else:
        def tangential(x, y, t):
            return np.asarray(u(x, y), dtype=float) @ t
        rot_integral = 0.0
        for a, b in _square_sides(bbox):
            t = (b - a) / np.linalg.norm(b - a)
            rot_integral += float(integrate_segment(lambda x, y: tangential(x, y, t), a, b, n=3, panels=panels))
    c2 = 0.5 * rot_integral / area

    if mode == 'boundary':
        measure = 2.0 * ((x1 - x0) + (y1 - y0))
        u_int = _boundary_integral(lambda x, y: u(x, y), bbox, panels)
        x_int = float(_boundary_integral(lambda x, y: x, bbox, panels))
        y_int = float(_boundary_integral(lambda x, y: y, bbox, panels))
    else:
        measure = area
        u_int = weights @ np.asarray(u(px, py), dtype=float)
        x_int = float(weights @ px)
        y_int = float(weights @ py)

    c1 = (float(u_int[1]) - c2 * x_int) / measure
    c0 = (float(u_int[0]) + c2 * y_int) / measure
    adjustment = RigidMotionAdjustment(c0=c0, c1=c1, c2=c2, mode=mode)

    # Residual check of the adjusted field
    if mode == 'boundary':
        mean_residual = _boundary_integral(lambda x, y: u(x, y) - adjustment(x, y), bbox, panels)
    else:
        mean_residual = weights @ (np.asarray(u(px, py), dtype=float) - adjustment(px, py))
    rot_residual = rot_integral - 2.0 * c2 * area
    residual = max(float(np.abs(mean_residual).max()), abs(rot_residual))
    if residual > tol:
        raise QuadratureError(f"Rigid-motion adjustment residual {residual:.3e} exceeds {tol:.1e}")

    logger.debug(f"Rigid motion ({mode}): c0={c0:.6e} c1={c1:.6e} c2={c2:.6e}")
    return adjustment


@dataclass
class ModelProblem:
    """
    Linear elasticity problem -div sigma(u) = f on the unit square.

    When an exact solution is given, the traction is sigma(u) n and the
    displacement data is the (rigid-motion adjusted) exact solution.
    """
    name: str
    lam: float
    mu: float
    body_force: VectorField
    formulation: Formulation
    exact: Optional[VectorField] = None
    exact_gradient: Optional[GradientField] = None
    dirichlet_sides: Tuple[str, ...] = ()
    adjustment: Optional[RigidMotionAdjustment] = None
    traction_data: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = field(default=None, repr=False)
    displacement_data: Optional[VectorField] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.mu > 0.0:
            raise InvalidArgumentError(f"mu must be > 0, got {self.mu}")
        if not self.lam >= 0.0:
            raise InvalidArgumentError(f"lambda must be >= 0, got {self.lam}")

    @property
    def has_exact(self) -> bool:
        return self.exact is not None

    def reference_solution(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Exact solution minus the rigid-motion adjustment."""
        if self.exact is None:
            raise InvalidArgumentError(f"Problem '{self.name}' has no exact solution")
        u = np.asarray(self.exact(x, y), dtype=float)
        if self.adjustment is not None:
            u = u - self.adjustment(x, y)
        return u

    def reference_gradient(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.exact_gradient is None:
            raise InvalidArgumentError(f"Problem '{self.name}' has no exact gradient")
        g = np.asarray(self.exact_gradient(x, y), dtype=float)
        if self.adjustment is not None:
            g = g - self.adjustment.gradient()[None, :, :]
        return g

    def displacement(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Dirichlet data g2."""
        if self.displacement_data is not None:
            return np.asarray(self.displacement_data(x, y), dtype=float)
        return self.reference_solution(x, y)

    def stress(self, grad: np.ndarray) -> np.ndarray:
        """sigma = 2 mu eps + lambda div I for gradients (q, 2, 2)."""
        eps = 0.5 * (grad + np.swapaxes(grad, 1, 2))
        div = grad[:, 0, 0] + grad[:, 1, 1]
        return 2.0 * self.mu * eps + self.lam * div[:, None, None] * np.eye(2)[None, :, :]

    def traction(self, x: np.ndarray, y: np.ndarray, normal: np.ndarray) -> np.ndarray:
        """Neumann data g1 = sigma(u) n at points sharing one outward normal."""
        if self.traction_data is not None:
            return np.asarray(self.traction_data(x, y, normal), dtype=float)
        if self.exact_gradient is None:
            raise InvalidArgumentError(f"Problem '{self.name}' has neither traction data nor an exact gradient")
        sigma = self.stress(np.asarray(self.exact_gradient(x, y), dtype=float))
        return sigma @ np.asarray(normal, dtype=float)


# ------------------------------------------------------------------ fields

def _example1_fields(lam: float, mu: float):
    scale = 1.0 / (1.0 + lam)

    def u(x, y):
        s = scale * np.sin(PI * x) * np.sin(PI * y)
        u1 = (np.cos(2 * PI * x) - 1.0) * np.sin(2 * PI * y) + s
        u2 = (1.0 - np.cos(2 * PI * y)) * np.sin(2 * PI * x) + s
        return np.stack([u1, u2], axis=-1)

    def grad(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sx = scale * PI * np.cos(PI * x) * np.sin(PI * y)
        sy = scale * PI * np.sin(PI * x) * np.cos(PI * y)
        g = np.empty(x.shape + (2, 2))
        g[..., 0, 0] = -2 * PI * np.sin(2 * PI * x) * np.sin(2 * PI * y) + sx
        g[..., 0, 1] = 2 * PI * (np.cos(2 * PI * x) - 1.0) * np.cos(2 * PI * y) + sy
        g[..., 1, 0] = 2 * PI * (1.0 - np.cos(2 * PI * y)) * np.cos(2 * PI * x) + sx
        g[..., 1, 1] = 2 * PI * np.sin(2 * PI * y) * np.sin(2 * PI * x) + sy
        return g

    def f(x, y):
        s = scale * np.sin(PI * x) * np.sin(PI * y)
        grad_div = (mu + lam) * PI ** 2 * scale * np.cos(PI * (x + y))
        f1 = 4 * PI ** 2 * mu * np.sin(2 * PI * y) * (2 * np.cos(2 * PI * x) - 1.0) + 2 * PI ** 2 * mu * s - grad_div
        f2 = -4 * PI ** 2 * mu * np.sin(2 * PI * x) * (2 * np.cos(2 * PI * y) - 1.0) + 2 * PI ** 2 * mu * s - grad_div
        return np.stack([f1, f2], axis=-1)

    return u, grad, f


def _example2_fields(mu: float):
    def u(x, y):
        a, b = np.sin(PI * x), np.sin(PI * y)
        ca, cb = np.cos(PI * x), np.cos(PI * y)
        return np.stack([-2.0 * a ** 3 * b ** 2 * cb, 2.0 * a ** 2 * ca * b ** 3], axis=-1)

    def grad(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a, b = np.sin(PI * x), np.sin(PI * y)
        ca, cb = np.cos(PI * x), np.cos(PI * y)
        g = np.empty(x.shape + (2, 2))
        g[..., 0, 0] = -6 * PI * a ** 2 * ca * b ** 2 * cb
        g[..., 0, 1] = -2 * PI * a ** 3 * (2 * b * cb ** 2 - b ** 3)
        g[..., 1, 0] = 2 * PI * (2 * a * ca ** 2 - a ** 3) * b ** 3
        g[..., 1, 1] = 6 * PI * a ** 2 * ca * b ** 2 * cb
        return g

    def f(x, y):
        a, b = np.sin(PI * x), np.sin(PI * y)
        ca, cb = np.cos(PI * x), np.cos(PI * y)
        lap1 = -2.0 * (3 * PI ** 2 * a * (2 * ca ** 2 - a ** 2) * b ** 2 * cb
                       + a ** 3 * (2 * PI ** 2 * cb ** 3 - 7 * PI ** 2 * b ** 2 * cb))
        lap2 = 2.0 * ((2 * PI ** 2 * ca ** 3 - 7 * PI ** 2 * a ** 2 * ca) * b ** 3
                      + a ** 2 * ca * 3 * PI ** 2 * b * (2 * cb ** 2 - b ** 2))
        # div u = 0, so -div sigma = -mu lap u
        return np.stack([-mu * lap1, -mu * lap2], axis=-1)

    return u, grad, f


# u = LINEAR_COEFFS[:, 0] + LINEAR_COEFFS[:, 1] x + LINEAR_COEFFS[:, 2] y
LINEAR_COEFFS = np.array([[0.25, 1.0, 0.5],
                          [-0.5, -0.75, 2.0]])


def _linear_fields():
    def u(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = LINEAR_COEFFS
        return np.stack([c[0, 0] + c[0, 1] * x + c[0, 2] * y,
                         c[1, 0] + c[1, 1] * x + c[1, 2] * y], axis=-1)

    def grad(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(LINEAR_COEFFS[:, 1:], x.shape + (2, 2)).copy()

    def f(x, y):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (2,))

    return u, grad, f


DEFAULT_FORMULATION = {
    BuiltinExample.EXAMPLE1: Formulation.PURE_TRACTION,
    BuiltinExample.EXAMPLE2: Formulation.PURE_TRACTION,
    BuiltinExample.EXAMPLE3: Formulation.MIXED,
    BuiltinExample.LINEAR_PATCH: Formulation.PURE_DISPLACEMENT,
}


def builtin_problem(example, lam: float, mu: float = 1.0, formulation=None,
                    dirichlet_sides: Optional[Sequence[str]] = None,
                    space=SpaceKind.NC_ORIGINAL) -> ModelProblem:
    """
    Build one of the manufactured problems.

    Args:
        example: BuiltinExample or its name
        lam: Lame constant lambda (>= 0)
        mu: Lame constant mu (> 0)
        formulation: Override of the example's boundary setting
        dirichlet_sides: Dirichlet sides for Mixed (default ('bottom',))
        space: Space the problem is solved in; enhanced spaces use the
               domain-mean rigid-motion adjustment under PureTraction

    Returns:
        ModelProblem
    """
    example = BuiltinExample.parse(example)
    space = SpaceKind.parse(space)
    formulation = Formulation.parse(formulation) if formulation is not None else DEFAULT_FORMULATION[example]

    if example == BuiltinExample.EXAMPLE1:
        u, grad, f = _example1_fields(lam, mu)
    elif example == BuiltinExample.LINEAR_PATCH:
        u, grad, f = _linear_fields()
    else:
        u, grad, f = _example2_fields(mu)

    sides: Tuple[str, ...] = ()
    if formulation == Formulation.MIXED:
        sides = tuple(dirichlet_sides) if dirichlet_sides else ('bottom',)

    adjustment = None
    if formulation == Formulation.PURE_TRACTION:
        mode = 'domain' if space.is_enhanced else 'boundary'
        adjustment = rigid_motion_coefficients(u, grad, mode=mode)

    problem = ModelProblem(name=example.value, lam=float(lam), mu=float(mu), body_force=f,
                           formulation=formulation, exact=u, exact_gradient=grad,
                           dirichlet_sides=sides, adjustment=adjustment)
    logger.debug(f"Built {example.value}: lambda={lam:g}, mu={mu:g}, {formulation.value}")
    return problem
