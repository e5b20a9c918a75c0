"""
Volterra equations of the second kind u(t) = f(t) + int_0^t K(t - s) u(s) ds.

Forward sweep with u(t_0) = 0:
    (1 - w~_n) u(t_n) = f(t_n) + sum_{k<n} w~_k u(t_k)
using the collapsed weights targeted at each t_n.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from errors import InvalidArgumentError, NonInvertibleStepError, UnsupportedSolutionError
from kernel import Kernel, make_kernel, monomial_convolution, power, power_singular
from mesh import Mesh, uniform_mesh
from quadrature import Monomial, max_error
from stencil import SchemeOrder
from weights import WeightAssembler

logger = logging.getLogger(__name__)

SINGULAR_STEP_TOL = 1e-12
NEAR_SINGULAR_STEP_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class VolterraProblem:
    forcing: Callable
    kernel: Kernel
    mesh: Mesh
    order: SchemeOrder
    exact: Optional[Callable] = None


@dataclass(frozen=True, eq=False)
class VolterraSolution:
    nodes: np.ndarray
    u: np.ndarray
    diagonal: np.ndarray
    exact: Optional[np.ndarray] = None

    @property
    def error(self) -> Optional[float]:
        if self.exact is None:
            return None
        return max_error(self.u, self.exact)

    def to_dict(self) -> dict:
        data = {'nodes': self.nodes.tolist(), 'u': self.u.tolist()}
        if self.exact is not None:
            data['exact'] = self.exact.tolist()
            data['E_inf'] = self.error
        return data


def step_solve(problem: VolterraProblem) -> VolterraSolution:
    """
    Solve by the forward recurrence; no damping is applied.

    Raises:
        NonInvertibleStepError: when |1 - w~_n| < 1e-12 at some step n
    """
    mesh = problem.mesh
    f = mesh.sample(problem.forcing)
    assembler = WeightAssembler(mesh, problem.kernel, problem.order)

    u = np.zeros(mesh.N + 1)
    diagonal = np.zeros(mesh.N + 1)
    for table in assembler.tables():
        n, w = table.n, table.collapsed
        denom = 1.0 - w[n]
        diagonal[n] = w[n]
        if abs(denom) < SINGULAR_STEP_TOL:
            raise NonInvertibleStepError(n, f"w~_n = {w[n]:.15g}")
        if abs(denom) < NEAR_SINGULAR_STEP_TOL:
            logger.warning(f"Step n={n} is nearly singular: 1 - w~_n = {denom:.3e}")
        u[n] = (f[n] + np.dot(w[:n], u[:n])) / denom

    exact = mesh.sample(problem.exact) if problem.exact is not None else None
    return VolterraSolution(mesh.nodes.copy(), u, diagonal, exact)


def recurrence_residual(solution: VolterraSolution, problem: VolterraProblem) -> float:
    """max_n |u_n - sum_{k<=n} w~_k u_k - f_n|; zero up to roundoff for any step_solve output."""
    f = problem.mesh.sample(problem.forcing)
    assembler = WeightAssembler(problem.mesh, problem.kernel, problem.order)
    worst = 0.0
    for table in assembler.tables():
        n = table.n
        residual = solution.u[n] - np.dot(table.collapsed, solution.u[: n + 1]) - f[n]
        worst = max(worst, abs(residual))
    return float(worst)


def manufacture_forcing(exact: Monomial, K: Kernel) -> Callable:
    """
    Forcing f = u - K*u for a monomial exact solution u = t^m.

    Raises:
        UnsupportedSolutionError: for non-monomial solutions or custom kernels
    """
    if not isinstance(exact, Monomial):
        raise UnsupportedSolutionError(
            f"Forcing can only be manufactured for monomial solutions, got {exact!r}"
        )
    if K.customs:
        raise UnsupportedSolutionError(f"Kernel {K.name} has no closed-form convolution")

    def forcing(t):
        return exact(t) - monomial_convolution(K, exact.m, t)

    return forcing


EXAMPLES = {
    1: {'kernel': power, 'exact': 3.0},
    2: {'kernel': power_singular, 'exact': 6.0},
}


def example_problem(example: Union[int, str], alpha: float, order: SchemeOrder,
                    N: int, T: float = 1.0, kernel: Optional[str] = None,
                    exact_power: Optional[float] = None) -> VolterraProblem:
    """
    Example 1: K = t^alpha, u = t^3.  Example 2: K = t^(alpha-1), u = t^6.
    'custom' takes a built-in kernel name and the exact monomial power.
    """
    mesh = uniform_mesh(T, N)
    if str(example) == 'custom':
        if kernel is None or exact_power is None:
            raise InvalidArgumentError("Custom problems need a kernel name and an exact power")
        K = make_kernel(kernel, alpha)
        u = Monomial(float(exact_power))
    else:
        try:
            spec = EXAMPLES[int(example)]
        except (KeyError, ValueError):
            raise InvalidArgumentError(f"Unknown Volterra example {example!r}")
        K = spec['kernel'](alpha)
        u = Monomial(spec['exact'])
    return VolterraProblem(manufacture_forcing(u, K), K, mesh, order, exact=u)
