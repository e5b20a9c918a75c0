"""
Stability checks for the composite schemes.

- negative_sum_min: minimum over the local interval of the even-index stencil
  coefficients; interior collapsed weights stay nonnegative for positive
  nonincreasing kernels while that minimum is >= -1.
- weight_positivity_audit: direct check of the collapsed weights, with violations at
  the truncated edge k > n - gamma reported apart from interior ones.
- schur_test: the sufficient Schur bound on the stability polynomial, plus its roots.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import sympy as sp

from errors import InvalidArgumentError
from kernel import Kernel, constant
from mesh import Mesh
from stencil import MAX_ANALYSIS_ORDER, SchemeOrder, lagrange_table
from weights import WeightAssembler

logger = logging.getLogger(__name__)

SIGMA = sp.Symbol('sigma')
ROOT_EPS = sp.Rational(1, 10 ** 12)
NEGATIVE_TOL = 1e-12
MAX_ROOT_DEGREE = 64


def sturm_sequence(p: sp.Poly) -> List[sp.Poly]:
    """Sturm chain p, p', -rem(p, p'), ..."""
    return sp.sturm(p)


def count_sign_changes(seq: List[sp.Poly], x) -> int:
    signs = [v for v in (q.eval(x) for q in seq) if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u < 0) != (v < 0))


def real_roots(p: sp.Poly, lo, hi, eps=ROOT_EPS) -> List[sp.Rational]:
    """Distinct real roots in [lo, hi], each isolated to width eps; the midpoint is returned."""
    if p.degree() < 1:
        return []
    intervals = p.intervals(inf=sp.Rational(lo), sup=sp.Rational(hi), eps=eps)
    return [(a + b) / 2 for (a, b), _ in intervals]


def even_coefficient_sum(gamma: int) -> sp.Poly:
    """sum_{j even, 2 <= j <= gamma-1} c_j(sigma) as an exact polynomial in sigma."""
    table = lagrange_table(gamma)
    total = sp.Poly(0, SIGMA, domain='QQ')
    for j in range(2, gamma, 2):
        total += sp.Poly(list(reversed(table[j])), SIGMA, domain='QQ')
    return total


# closed forms for the orders where the minimum has a radical expression
CLOSED_FORMS = {
    4: {
        'minimum': '(20 - 14*sqrt(7))/54',
        'sigma_star': '(-4 + sqrt(7))/3',
        'values': ((20 - 14 * math.sqrt(7)) / 54, (-4 + math.sqrt(7)) / 3),
    },
}


@dataclass(frozen=True)
class StabilityMargin:
    order: int
    sigma_star: float
    minimum: float
    stable: bool
    closed_form: Optional[dict] = None

    def to_dict(self) -> dict:
        data = {
            'order': self.order,
            'sigma_star': self.sigma_star,
            'minimum': self.minimum,
            'stable': self.stable,
        }
        if self.closed_form:
            data['closed_form'] = {k: v for k, v in self.closed_form.items() if k != 'values'}
        return data


def negative_sum_min(gamma: int) -> StabilityMargin:
    """
    Minimise the even-index coefficient sum over sigma in [-1, 0].

    Args:
        gamma: Integer order, 3..7 (orders above 5 only to exhibit the failure)

    Returns:
        StabilityMargin with verdict stable iff the minimum is >= -1
    """
    if int(gamma) != gamma or not 3 <= gamma <= MAX_ANALYSIS_ORDER:
        raise InvalidArgumentError(f"negative_sum_min needs 3 <= gamma <= {MAX_ANALYSIS_ORDER}, got {gamma}")
    gamma = int(gamma)

    poly = even_coefficient_sum(gamma)
    lo, hi = sp.Integer(-1), sp.Integer(0)
    candidates = [lo, hi] + real_roots(poly.diff(SIGMA), lo, hi)
    values = [(poly.eval(x), x) for x in candidates]
    best_value, best_sigma = min(values)
    minimum, sigma_star = float(best_value), float(best_sigma)

    closed = CLOSED_FORMS.get(gamma)
    if closed:
        exact_min, exact_sigma = closed['values']
        if abs(exact_min - minimum) > 1e-9:
            logger.warning(f"Order {gamma}: minimum {minimum} disagrees with closed form {exact_min}")
        minimum, sigma_star = exact_min, exact_sigma

    margin = StabilityMargin(gamma, sigma_star, minimum, minimum >= -1.0, closed)
    logger.debug(f"Order {gamma}: min {minimum:.6f} at sigma={sigma_star:.6f}, stable={margin.stable}")
    return margin


def margin_table(orders: Sequence[int] = (3, 4, 5, 6, 7)) -> pd.DataFrame:
    rows = [negative_sum_min(g).to_dict() for g in orders]
    return pd.DataFrame(rows, columns=['order', 'sigma_star', 'minimum', 'stable'])


@dataclass
class PositivityAudit:
    """
    violations are interior nodes k <= n - gamma, where the sufficient condition
    applies; edge_violations sit at the truncated edge k > n - gamma, where the
    collapse drops the positive partners of the last raw weights.
    """
    order: str
    kernel: str
    targets: List[int]
    violations: List[Tuple[int, int, float]] = field(default_factory=list)
    edge_violations: List[Tuple[int, int, float]] = field(default_factory=list)
    worst_margin: float = math.inf
    worst_index: Optional[Tuple[int, int]] = None
    sufficient_condition: bool = True

    @property
    def empty(self) -> bool:
        return not self.violations

    @property
    def clean(self) -> bool:
        return not self.violations and not self.edge_violations

    def to_dict(self) -> dict:
        return {
            'order': self.order,
            'kernel': self.kernel,
            'targets': len(self.targets),
            'violations': [{'n': n, 'k': k, 'value': v} for n, k, v in self.violations],
            'edge_violations': [{'n': n, 'k': k, 'value': v} for n, k, v in self.edge_violations],
            'worst_margin': self.worst_margin,
            'worst_index': list(self.worst_index) if self.worst_index else None,
            'sufficient_condition': self.sufficient_condition,
        }


def sufficient_condition_holds(order: SchemeOrder, K: Kernel) -> bool:
    """Positive kernel and order <= 2, or positive nonincreasing kernel with margin >= -1."""
    if not K.flags.positive:
        return False
    if order.is_fractional or order.span <= 2:
        return True
    return K.flags.nonincreasing and negative_sum_min(order.span).stable


def is_edge(order: SchemeOrder, n: int, k: int) -> bool:
    """Node k of target n lies on the truncated edge; fractional orders have none."""
    return not order.is_fractional and k > n - order.span


def weight_positivity_audit(mesh: Mesh, K: Kernel, order: SchemeOrder,
                            n: Optional[int] = None) -> PositivityAudit:
    """
    Check w~_k >= -1e-12 for target n, or for every target when n is None.

    The audit records the actual violations, split into interior and edge, and
    whether the sufficient condition holds; the two can disagree for orders >= 6.
    """
    assembler = WeightAssembler(mesh, K, order)
    targets = list(range(1, mesh.N + 1)) if n is None else [n]
    audit = PositivityAudit(
        order=order.label,
        kernel=K.name,
        targets=targets,
        sufficient_condition=sufficient_condition_holds(order, K),
    )

    for target in targets:
        w = assembler.table(target).collapsed
        k = int(np.argmin(w))
        if w[k] < audit.worst_margin:
            audit.worst_margin = float(w[k])
            audit.worst_index = (target, k)
        for idx in np.flatnonzero(w < -NEGATIVE_TOL):
            entry = (target, int(idx), float(w[idx]))
            if is_edge(order, target, int(idx)):
                audit.edge_violations.append(entry)
            else:
                audit.violations.append(entry)

    if audit.violations:
        logger.warning(
            f"Order {order.label}, kernel {K.name}: {len(audit.violations)} negative interior weights, "
            f"worst {audit.worst_margin:.3e} at (n, k)={audit.worst_index}"
        )
    if audit.edge_violations:
        logger.info(
            f"Order {order.label}, kernel {K.name}: {len(audit.edge_violations)} negative weights "
            f"on the truncated edge k > n - {order.span}"
        )
    return audit


@dataclass(frozen=True, eq=False)
class StabilityPolynomial:
    """
    Sigma(mu) = (1 - lam tau w_0 K(0)) mu^N - lam tau w_1 K(tau) mu^(N-1) - ... - lam tau w_N K(N tau).

    coefficients are highest degree first, as numpy.roots expects.
    """
    coefficients: np.ndarray
    terms: np.ndarray
    lam: float
    tau: float

    @property
    def N(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> float:
        return float(self.coefficients[0])

    @classmethod
    def build(cls, weights: Sequence[float], K: Kernel, lam: float, tau: float) -> "StabilityPolynomial":
        """
        Args:
            weights: Kernel-free rule weights by lag, w_j pairing with K(j tau)
            K: Kernel; K(0) is taken as 0 for singular kernels
            lam: Problem parameter lambda
            tau: Uniform step
        """
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) < 1:
            raise InvalidArgumentError("Stability polynomial needs at least one weight")
        if not tau > 0:
            raise InvalidArgumentError(f"Step tau must be positive, got {tau}")

        kvals = np.zeros(len(w))
        if len(w) > 1:
            kvals[1:] = K.eval(tau * np.arange(1, len(w)))
        # singular kernels have no K(0); the lag-0 term is dropped
        if w[0] != 0 and not K.is_singular:
            kvals[0] = K.eval(0.0)

        terms = w * kvals
        coefficients = -lam * tau * terms
        coefficients[0] = 1.0 - lam * tau * terms[0]
        return cls(coefficients, terms, float(lam), float(tau))


@dataclass(frozen=True)
class SchurReport:
    sufficient_bound: float
    is_schur_by_bound: bool
    max_root_modulus: Optional[float]

    def to_dict(self) -> dict:
        return {
            'sufficient_bound': self.sufficient_bound,
            'is_schur_by_bound': self.is_schur_by_bound,
            'max_root_modulus': self.max_root_modulus,
        }


def schur_test(poly: StabilityPolynomial) -> SchurReport:
    """Sufficient bound |lam tau| sum |w_k K(k tau)| < 1, and root moduli when N <= 64."""
    bound = abs(poly.lam * poly.tau) * float(np.sum(np.abs(poly.terms)))
    modulus = None
    if poly.N <= MAX_ROOT_DEGREE:
        roots = np.roots(poly.coefficients)
        modulus = float(np.max(np.abs(roots))) if len(roots) else 0.0
    else:
        logger.info(f"Degree {poly.N} exceeds {MAX_ROOT_DEGREE}; reporting the bound only")
    return SchurReport(bound, bound < 1.0, modulus)


def kernel_free_weights(mesh: Mesh, order: SchemeOrder) -> np.ndarray:
    """
    Rule weights w_j of int_0^{t_N} g(s) ds ~ tau sum_j w_j g(t_N - j tau), by lag j.

    They are the collapsed weights for K = 1 divided by tau and read from t_N backwards.
    """
    if not mesh.is_uniform():
        raise InvalidArgumentError("Kernel-free weights need a uniform mesh")
    w = WeightAssembler(mesh, constant(), order).table(mesh.N).collapsed
    return w[::-1] / mesh.tau(1)


def scheme_stability_polynomial(mesh: Mesh, K: Kernel, order: SchemeOrder,
                                lam: float) -> StabilityPolynomial:
    """Stability polynomial of u = f + lam (K * u) discretised by the order's rule on a uniform mesh."""
    return StabilityPolynomial.build(kernel_free_weights(mesh, order), K, lam, mesh.tau(1))
