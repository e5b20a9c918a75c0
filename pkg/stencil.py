"""
Backward interpolation stencils c_j^k(s) for the order-gamma composite schemes.

Coefficients are polynomials in the local variable sigma = (s - t_k)/tau_k, so on a
uniform mesh the same stencil serves every subinterval. Integer orders come from the
transposed Vandermonde system on the backward abscissae 0, -tau, ..., -(n-1)tau,
inverted exactly in rational arithmetic with sympy; the fractional order uses c_0 = 1.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import prod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from numpy.polynomial import polynomial as P
from sympy.calculus.finite_diff import finite_diff_weights

from errors import InsufficientHistoryError, InvalidArgumentError, UnsupportedOrderError

logger = logging.getLogger(__name__)

MAX_STABLE_ORDER = 5
MAX_ANALYSIS_ORDER = 7


@dataclass(frozen=True)
class SchemeOrder:
    kind: str
    value: float
    allow_unstable: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.kind == 'integer':
            limit = MAX_ANALYSIS_ORDER if self.allow_unstable else MAX_STABLE_ORDER
            if float(self.value) != int(self.value) or not 1 <= self.value <= limit:
                raise UnsupportedOrderError(
                    self.value, f"Integer order must be in 1..{limit}, got {self.value}"
                )
            object.__setattr__(self, 'value', int(self.value))
        elif self.kind == 'fractional':
            if not 0.0 < self.value < 1.0:
                raise UnsupportedOrderError(
                    self.value, f"Fractional order must lie in (0, 1), got {self.value}"
                )
            object.__setattr__(self, 'value', float(self.value))
        else:
            raise InvalidArgumentError(f"Unknown order kind {self.kind!r}")

    @classmethod
    def integer(cls, gamma: int, allow_unstable: bool = False) -> "SchemeOrder":
        """
        Integer order 1..5; 6 and 7 only with allow_unstable (stability analysis).
        """
        return cls('integer', gamma, allow_unstable)

    @classmethod
    def fractional(cls, alpha: float) -> "SchemeOrder":
        return cls('fractional', float(alpha))

    @classmethod
    def parse(cls, text, alpha: Optional[float] = None) -> "SchemeOrder":
        """Parse CLI/API order strings: '1'..'5', 'alpha' (needs alpha), or a fraction like '0.4'."""
        if isinstance(text, SchemeOrder):
            return text
        raw = str(text).strip().lower()
        if raw in ('alpha', 'a', 'fractional'):
            if alpha is None:
                raise InvalidArgumentError("Order 'alpha' needs an alpha value")
            return cls.fractional(alpha)
        try:
            value = float(raw)
        except ValueError:
            raise InvalidArgumentError(f"Cannot parse scheme order {text!r}")
        if value.is_integer():
            return cls.integer(int(value))
        return cls.fractional(value)

    @property
    def is_fractional(self) -> bool:
        return self.kind == 'fractional'

    @property
    def span(self) -> int:
        return 1 if self.is_fractional else int(self.value)

    @property
    def label(self) -> str:
        return f"alpha={self.value:g}" if self.is_fractional else str(self.value)


@dataclass(frozen=True, eq=False)
class StencilSet:
    order: SchemeOrder
    k: int
    polys: np.ndarray
    span: int
    abscissae: Tuple[float, ...] = field(default=())

    @property
    def degree(self) -> int:
        return self.span - 1


@dataclass(frozen=True)
class VandermondeSystem:
    """
    Transposed Vandermonde system V^T c = y on abscissae x_m = -(m-1)tau, m = 1..n.

    Row i of the matrix holds x_m^i; the right-hand side y_i = (s - t_k)^i stays symbolic
    in sigma, one coefficient column per power.
    """
    n: int
    tau: float

    @property
    def abscissae(self) -> np.ndarray:
        return -np.arange(self.n, dtype=float) * self.tau

    @property
    def matrix(self) -> np.ndarray:
        x = self.abscissae
        return np.vander(x, self.n, increasing=True).T

    @property
    def determinant(self) -> float:
        x = self.abscissae
        return float(prod(x[j] - x[i] for i, j in combinations(range(self.n), 2)))


@dataclass(frozen=True)
class VandermondeInverse:
    """Entries v_ij = rational[i][j] * tau**(-j) of (V^T)^{-1}."""
    rational: Tuple[Tuple[sp.Rational, ...], ...]
    tau: float

    def numeric(self) -> np.ndarray:
        n = len(self.rational)
        scale = self.tau ** -np.arange(n, dtype=float)
        return np.array([[float(v) for v in row] for row in self.rational]) * scale


@lru_cache(maxsize=None)
def lagrange_table(n: int) -> Tuple[Tuple[sp.Rational, ...], ...]:
    """
    Rational coefficients of the Lagrange basis on xi_m = -m, m = 0..n-1.

    Row j, column p is the sigma^p coefficient of c_j, i.e. c_j^(p)(0) / p!,
    read off the exact finite-difference weights at sigma = 0.
    """
    grid = [sp.Integer(-m) for m in range(n)]
    derivatives = finite_diff_weights(n - 1, grid, sp.Integer(0))
    return tuple(
        tuple(sp.Rational(derivatives[p][n - 1][j]) / sp.factorial(p) for p in range(n))
        for j in range(n)
    )


def vandermonde_inverse_entries(n: int, tau: float) -> VandermondeInverse:
    if n < 1:
        raise InvalidArgumentError(f"Vandermonde size must be at least 1, got {n}")
    if not tau > 0:
        raise InvalidArgumentError(f"Step tau must be positive, got {tau}")
    return VandermondeInverse(lagrange_table(n), float(tau))


@lru_cache(maxsize=None)
def _coefficients(n: int) -> np.ndarray:
    table = np.array([[float(v) for v in row] for row in lagrange_table(n)])
    table.setflags(write=False)
    return table


def build_stencil(order: SchemeOrder, tau: float, k: int = 0) -> StencilSet:
    """
    Build the stencil for one subinterval.

    Args:
        order: Scheme order; integer orders above 5 need SchemeOrder.integer(..., allow_unstable=True)
        tau: Local step tau_k
        k: Subinterval index, carried for bookkeeping only

    Returns:
        StencilSet whose polys[j, p] is the sigma^p coefficient of c_j
    """
    if not tau > 0:
        raise InvalidArgumentError(f"Step tau must be positive, got {tau}")
    if not isinstance(order, SchemeOrder):
        raise InvalidArgumentError(f"Expected a SchemeOrder, got {order!r}")

    if order.is_fractional:
        return StencilSet(order, k, np.ones((1, 1)), 1, (0.0,))

    n = order.span
    return StencilSet(order, k, _coefficients(n), n, tuple(-float(m) for m in range(n)))


def nodes_stencil(order: SchemeOrder, nodes: Sequence[float], k: int) -> StencilSet:
    """
    Stencil on the true backward nodes t_k, t_{k-1}, ..., t_{k-n+1}.

    Abscissae are normalised by tau_k, so a uniform mesh gives the same stencil as
    build_stencil.
    """
    n = order.span
    if k - n + 1 < 0:
        raise InsufficientHistoryError(n, k + 1)
    t = np.asarray(nodes, dtype=float)
    tau_k = t[k] - t[k - 1]
    xi = (t[k - np.arange(n)] - t[k]) / tau_k

    polys = np.zeros((n, n))
    for j in range(n):
        others = np.delete(xi, j)
        numerator = P.polyfromroots(others) if len(others) else np.ones(1)
        polys[j, : len(numerator)] = numerator / np.prod(xi[j] - others)
    return StencilSet(order, k, polys, n, tuple(float(x) for x in xi))


def ramp_order(order: SchemeOrder, k: int) -> SchemeOrder:
    """Order used on subinterval k = [t_{k-1}, t_k]: the full order once k >= gamma - 1."""
    if order.is_fractional or k >= order.span - 1:
        return order
    return SchemeOrder('integer', min(order.span, k + 1), order.allow_unstable)


def evaluate_stencil(st: StencilSet, s: float, t_k: float, tau_k: float) -> np.ndarray:
    if not tau_k > 0:
        raise InvalidArgumentError(f"Step tau_k must be positive, got {tau_k}")
    sigma = (s - t_k) / tau_k
    if sigma < -1.0 - 1e-12 or sigma > 1e-12:
        logger.warning(
            f"Evaluating stencil of order {st.order.label} at sigma={sigma:.6g}, "
            f"outside [t_(k-1), t_k]; sign pattern not guaranteed"
        )
    return P.polyval(sigma, st.polys.T)


def interpolate(st: StencilSet, samples: Sequence[float], s: float, t_k: float, tau_k: float) -> float:
    """
    Stencil combination sum_j c_j(s) f(t_{k-j}).

    Args:
        samples: f(t_k), f(t_{k-1}), ... newest first
    """
    values = np.asarray(samples, dtype=float)
    if len(values) < st.span:
        raise InsufficientHistoryError(st.span, len(values))
    return float(np.dot(evaluate_stencil(st, s, t_k, tau_k), values[: st.span]))


def sign_pattern_holds(st: StencilSet, samples: int = 1000) -> bool:
    """Odd-index coefficients positive and even-index (j >= 2) negative on (-1, 0)."""
    sigma = np.linspace(-1.0, 0.0, samples + 2)[1:-1]
    values = P.polyval(sigma, st.polys.T)
    for j in range(1, st.span):
        row = values[j]
        if j % 2 and not np.all(row > 0):
            return False
        if not j % 2 and not np.all(row < 0):
            return False
    return True


def closed_form_stencil(gamma: int) -> List[Callable[[float], float]]:
    """
    Printed closed forms for orders 1..4, written in d = (t_k - s)/tau_k = -sigma.
    """
    forms = {
        1: [lambda d: 1.0 + 0.0 * d],
        2: [lambda d: 1 - d,
            lambda d: d],
        3: [lambda d: (1 - d) * (2 - d) / 2,
            lambda d: d * (2 - d),
            lambda d: -d * (1 - d) / 2],
        4: [lambda d: (1 - d) * (2 - d) * (3 - d) / 6,
            lambda d: d * (2 - d) * (3 - d) / 2,
            lambda d: -d * (1 - d) * (3 - d) / 2,
            lambda d: d * (1 - d) * (2 - d) / 6],
    }
    if gamma not in forms:
        raise UnsupportedOrderError(gamma, f"Closed forms exist for orders 1..4, got {gamma}")
    return [lambda sigma, c=c: c(-np.asarray(sigma, dtype=float)) for c in forms[gamma]]
