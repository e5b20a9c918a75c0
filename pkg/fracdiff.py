"""
Integrated time-fractional diffusion on (0, 1) with homogeneous Dirichlet boundaries:

    u(x, t) = phi(x) + int_0^t (f(x, s) + u_xx(x, s)) (t - s)^(alpha-1)/Gamma(alpha) ds

Space uses a fourth-order Laplacian; time uses the composite weights on the L u part.
Power-law sources f = g(x) sum c_i t^(e_i) are convolved with the kernel exactly
(source_quadrature='exact'), so each step solves

    (I - w~_n L) u^n = phi + F^n + sum_{k<n} w~_k L u^k,   F^n = (K * f)(t_n).

With source_quadrature='sampled' the source joins the composite sum instead:
(I - w~_n L) u^n = phi + sum_{k<n} w~_k (f^k + L u^k) + w~_n f^n.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special
from scipy.linalg import solve_banded

from errors import InvalidArgumentError, NonInvertibleStepError
from kernel import Kernel, caputo, monomial_convolution
from mesh import Mesh, uniform_mesh
from stencil import SchemeOrder
from weights import WeightAssembler

logger = logging.getLogger(__name__)

MIN_POINTS = 5
BANDS = (4, 4)

CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])
# one-sided closure on (v_0 = 0, v_1, ..., v_5), exact through degree 5
CLOSURE = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0])

SOURCE_QUADRATURES = ('exact', 'sampled')


@dataclass(frozen=True)
class Grid1D:
    M: int

    def __post_init__(self):
        if self.M < MIN_POINTS:
            raise InvalidArgumentError(f"Grid needs at least {MIN_POINTS} interior points, got {self.M}")

    @property
    def h(self) -> float:
        return 1.0 / (self.M + 1)

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(1, self.M + 1)


@dataclass(frozen=True, eq=False)
class PowerSource:
    """f(x, t) = shape(x) * sum_i coef_i t^(exponent_i)."""
    shape: Callable
    terms: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        for _, exponent in self.terms:
            if exponent <= -1:
                raise InvalidArgumentError(f"Source exponent {exponent} is not integrable")

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide='ignore'):
            time_part = sum(c * np.power(float(t), e) for c, e in self.terms)
        return self.shape(x) * time_part

    def convolved(self, K: Kernel, x, t_n: float) -> np.ndarray:
        """(K * f)(x, t_n), term by term through the Beta identity."""
        time_part = sum(c * float(monomial_convolution(K, e, t_n)) for c, e in self.terms)
        return self.shape(np.asarray(x, dtype=float)) * time_part


@dataclass(frozen=True, eq=False)
class FracDiffProblem:
    grid: Grid1D
    phi: Callable
    source: Callable
    alpha: float
    mesh: Mesh
    order: SchemeOrder
    exact: Optional[Callable] = None
    source_quadrature: str = 'exact'

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.source_quadrature not in SOURCE_QUADRATURES:
            raise InvalidArgumentError(
                f"source_quadrature must be one of {SOURCE_QUADRATURES}, got {self.source_quadrature!r}"
            )
        if self.source_quadrature == 'exact' and not isinstance(self.source, PowerSource):
            raise InvalidArgumentError("Exact source quadrature needs a PowerSource; use 'sampled'")
        boundary = np.asarray(self.phi(np.array([0.0, 1.0])), dtype=float)
        if np.any(np.abs(boundary) > 1e-12):
            raise InvalidArgumentError("Initial field must vanish on the boundary")


@dataclass(frozen=True, eq=False)
class FracDiffSolution:
    nodes: np.ndarray
    x: np.ndarray
    history: np.ndarray
    exact: Optional[np.ndarray] = None

    @property
    def error(self) -> Optional[float]:
        if self.exact is None:
            return None
        return field_error(self.history, self.exact)


def laplacian4_matrix(M: int, h: float) -> np.ndarray:
    """Dense M x M fourth-order Laplacian with zero Dirichlet data folded in."""
    if M < MIN_POINTS:
        raise InvalidArgumentError(f"Fourth-order Laplacian needs M >= {MIN_POINTS}, got {M}")
    L = np.zeros((M, M))
    for i in range(1, M - 1):
        for offset, c in zip(range(-2, 3), CENTRAL):
            j = i + offset
            if 0 <= j < M:
                L[i, j] = c
    L[0, :5] = CLOSURE[1:]
    L[-1, -5:] = CLOSURE[1:][::-1]
    return L / (12.0 * h * h)


def laplacian4_banded(M: int, h: float) -> np.ndarray:
    """Laplacian in the (l, u) = (4, 4) diagonal-ordered storage of solve_banded."""
    return _to_banded(laplacian4_matrix(M, h))


def _to_banded(A: np.ndarray) -> np.ndarray:
    lower, upper = BANDS
    M = A.shape[0]
    ab = np.zeros((lower + upper + 1, M))
    for i in range(M):
        for j in range(max(0, i - lower), min(M, i + upper + 1)):
            ab[upper + i - j, j] = A[i, j]
    return ab


def laplacian4(field, h: float) -> np.ndarray:
    """
    Fourth-order approximation of v'' at the interior points.

    Args:
        field: Values v_1..v_M at interior points; boundary values are zero
        h: Grid spacing

    Returns:
        Vector of M second-derivative approximations
    """
    v = np.asarray(field, dtype=float)
    if v.ndim != 1 or len(v) < MIN_POINTS:
        raise InvalidArgumentError(f"Fourth-order Laplacian needs at least {MIN_POINTS} points")
    return laplacian4_matrix(len(v), h) @ v


def manufacture_source(rho: float, alpha: float) -> PowerSource:
    """
    Source f(x, t) for the exact solution sin(pi x) t^rho with phi = 0:
    f = sin(pi x) [Gamma(rho+1)/Gamma(rho+1-alpha) t^(rho-alpha) + pi^2 t^rho].
    """
    if not rho > 0:
        raise InvalidArgumentError(f"Solution exponent rho must be positive, got {rho}")
    if rho - alpha <= -1:
        raise InvalidArgumentError(
            f"Source exponent rho - alpha = {rho - alpha} is not integrable"
        )
    ratio = special.gamma(rho + 1) / special.gamma(rho + 1 - alpha)
    return PowerSource(
        shape=lambda x: np.sin(np.pi * x),
        terms=((ratio, rho - alpha), (np.pi ** 2, rho)),
    )


def solve_fracdiff(problem: FracDiffProblem) -> FracDiffSolution:
    """
    Forward sweep over the time mesh.

    Returns:
        FracDiffSolution whose history[n] is the field at t_n

    Raises:
        NonInvertibleStepError: when the step matrix is singular
    """
    grid, mesh = problem.grid, problem.mesh
    x, M = grid.x, grid.M
    L = laplacian4_matrix(M, grid.h)
    identity_band = np.zeros((sum(BANDS) + 1, M))
    identity_band[BANDS[1]] = 1.0
    L_band = _to_banded(L)

    phi = np.asarray(problem.phi(x), dtype=float)
    K = caputo(problem.alpha)
    exact_source = problem.source_quadrature == 'exact'
    if exact_source:
        # f enters only through F^n; the composite sum carries L u alone
        sources = np.zeros((mesh.N + 1, M))
        convolved = [problem.source.convolved(K, x, t) for t in mesh.nodes[1:]]
    else:
        sources = np.array([problem.source(x, t) for t in mesh.nodes])
    history = np.zeros((mesh.N + 1, M))
    history[0] = phi
    # integrand samples f^k + L u^k, filled as the sweep advances
    integrand = np.zeros_like(history)
    integrand[0] = sources[0] + L @ phi

    assembler = WeightAssembler(mesh, K, problem.order)
    for table in assembler.tables():
        n, w = table.n, table.collapsed
        active = np.flatnonzero(w[:n] != 0)
        if not np.all(np.isfinite(integrand[active])):
            raise InvalidArgumentError(
                f"Non-finite source values enter step n={n} with nonzero weight"
            )
        if w[n] != 0 and not np.all(np.isfinite(sources[n])):
            raise InvalidArgumentError(f"Non-finite source at t_{n}")

        rhs = phi + w[active] @ integrand[active]
        if exact_source:
            rhs = rhs + convolved[n - 1]
        elif w[n] != 0:
            rhs = rhs + w[n] * sources[n]
        try:
            u = solve_banded(BANDS, identity_band - w[n] * L_band, rhs)
        except np.linalg.LinAlgError as e:
            raise NonInvertibleStepError(n, str(e))

        history[n] = u
        integrand[n] = sources[n] + L @ u

    exact = None
    if problem.exact is not None:
        exact = np.array([problem.exact(x, t) for t in mesh.nodes])
    return FracDiffSolution(mesh.nodes.copy(), x, history, exact)


def field_error(history: np.ndarray, exact: np.ndarray) -> float:
    """Max over all space-time nodes of |u - u_exact|."""
    return float(np.max(np.abs(np.asarray(history) - np.asarray(exact))))


RHO_MODES = {
    'alpha': lambda alpha: alpha,
    'one-minus-alpha': lambda alpha: 1.0 - alpha,
}


def example3_problem(alpha: float, rho_mode: str = 'alpha', M: int = 25, N: int = 160,
                     T: float = 1.0, order: Optional[SchemeOrder] = None,
                     source_quadrature: str = 'exact') -> FracDiffProblem:
    """Exact solution sin(pi x) t^rho with rho = alpha or 1 - alpha; alpha-order scheme by default."""
    if rho_mode not in RHO_MODES:
        raise InvalidArgumentError(f"rho mode must be one of {sorted(RHO_MODES)}, got {rho_mode!r}")
    rho = RHO_MODES[rho_mode](alpha)
    return FracDiffProblem(
        grid=Grid1D(M),
        phi=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        source=manufacture_source(rho, alpha),
        alpha=alpha,
        mesh=uniform_mesh(T, N),
        order=order or SchemeOrder.fractional(alpha),
        exact=lambda x, t: np.sin(np.pi * np.asarray(x)) * t ** rho,
        source_quadrature=source_quadrature,
    )


def laplacian_error(M: int) -> float:
    """Max error of laplacian4 on sin(pi x) against -pi^2 sin(pi x)."""
    grid = Grid1D(M)
    v = np.sin(np.pi * grid.x)
    return float(np.max(np.abs(laplacian4(v, grid.h) + np.pi ** 2 * v)))


def spatial_order(M_coarse: int, M_fine: int) -> float:
    """Observed order of laplacian4 between two grids: log(e_coarse/e_fine) / log(h_coarse/h_fine)."""
    h_coarse, h_fine = Grid1D(M_coarse).h, Grid1D(M_fine).h
    return math.log(laplacian_error(M_coarse) / laplacian_error(M_fine)) / math.log(h_coarse / h_fine)
