"""
Apply collapsed weights to integrand samples:
int_0^{t_n} K(t_n - s) f(s) ds ~ sum_k w~_k f(t_k).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from errors import InvalidArgumentError, UnsupportedSolutionError
from kernel import Kernel, monomial_convolution
from mesh import Mesh
from stencil import SchemeOrder
from weights import WeightAssembler, WeightTable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Monomial:
    """f(t) = t^m."""
    m: float

    def __call__(self, t):
        return np.power(np.asarray(t, dtype=float), self.m)

    @property
    def name(self) -> str:
        return f"t^{self.m:g}"


INTEGRANDS: Dict[str, Callable[[Optional[float]], Monomial]] = {
    'one': lambda alpha=None: Monomial(0.0),
    't': lambda alpha=None: Monomial(1.0),
    't2': lambda alpha=None: Monomial(2.0),
    't3': lambda alpha=None: Monomial(3.0),
    't6': lambda alpha=None: Monomial(6.0),
    'talpha': lambda alpha=None: Monomial(float(alpha)),
}


def named_integrand(name: str, alpha: Optional[float] = None) -> Monomial:
    if name not in INTEGRANDS:
        raise InvalidArgumentError(f"Unknown integrand {name!r}; choose from {sorted(INTEGRANDS)}")
    if name == 'talpha' and alpha is None:
        raise InvalidArgumentError("Integrand 'talpha' needs an alpha value")
    return INTEGRANDS[name](alpha)


def convolve(f_samples, table: WeightTable) -> float:
    samples = np.asarray(f_samples, dtype=float)
    if samples.shape != (table.n + 1,):
        raise InvalidArgumentError(
            f"Expected {table.n + 1} samples for target n={table.n}, got {samples.shape[0] if samples.ndim else 0}"
        )
    return float(np.dot(table.collapsed, samples))


def convolve_series(f: Callable, mesh: Mesh, K: Kernel, order: SchemeOrder) -> np.ndarray:
    """
    Running integral at every node.

    Returns:
        Array of N values; entry n-1 approximates int_0^{t_n} K(t_n - s) f(s) ds
    """
    samples = mesh.sample(f)
    assembler = WeightAssembler(mesh, K, order)
    return np.array([convolve(samples[: table.n + 1], table) for table in assembler.tables()])


def exact_convolution(K: Kernel, name: str, t, alpha: Optional[float] = None) -> np.ndarray:
    integrand = named_integrand(name, alpha)
    return monomial_convolution(K, integrand.m, t)


def max_error(approx, exact) -> float:
    """E_inf: largest absolute deviation over the mesh."""
    return float(np.max(np.abs(np.asarray(approx) - np.asarray(exact))))


def integrate(K: Kernel, order: SchemeOrder, mesh: Mesh, f_name: str,
              alpha: Optional[float] = None) -> dict:
    """Running integral of a named integrand, with the exact values when known."""
    integrand = named_integrand(f_name, alpha)
    values = convolve_series(integrand, mesh, K, order)
    result = {
        'nodes': mesh.nodes[1:].tolist(),
        'values': values.tolist(),
        'kernel': K.describe(),
        'order': order.label,
        'f': f_name,
    }
    try:
        exact = monomial_convolution(K, integrand.m, mesh.nodes[1:])
    except UnsupportedSolutionError:
        logger.info(f"No exact values for kernel {K.name}; reporting approximations only")
        return result

    result['exact'] = exact.tolist()
    result['error'] = max_error(values, exact)
    return result
