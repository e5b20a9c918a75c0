"""
Convolution kernels K(t) and their moment integrals.

Weight assembly never samples K near the singular endpoint s = t_n; it consumes the
moments m_p = int_a^b (s - c)^p K(t_n - s) ds, which stay finite for weakly singular
kernels. Power-law terms c * t^beta have closed-form moments; user-supplied evaluators
go through adaptive quadrature (scipy.integrate.quad).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from config import get_settings
from errors import (
    AccuracyError,
    InvalidArgumentError,
    InvalidKernelError,
    SingularEvaluationError,
    UnsupportedSolutionError,
)

logger = logging.getLogger(__name__)

MAX_MOMENT_POWER = 7
# r = (t_n - b)/(b - a) above which the binomial closed form gives way to Gauss-Legendre
FAR_FIELD_RATIO = 0.5
GEOMETRIC_LEVELS = 20
TINY = 1e-300


@dataclass(frozen=True)
class KernelFlags:
    positive: bool = True
    nonincreasing: bool = True
    integrable: bool = True

    def __and__(self, other: "KernelFlags") -> "KernelFlags":
        return KernelFlags(
            self.positive and other.positive,
            self.nonincreasing and other.nonincreasing,
            self.integrable and other.integrable,
        )


@dataclass(frozen=True)
class PowerTerm:
    coef: float
    exponent: float

    def __post_init__(self):
        if not self.exponent > -1.0:
            raise InvalidKernelError(
                f"t^{self.exponent} is not integrable at 0 (exponent must exceed -1)"
            )

    @property
    def singular(self) -> bool:
        return self.exponent < 0


@dataclass(frozen=True)
class CustomTerm:
    """User evaluator; singular_exponent declares K(t) ~ t^beta as t -> 0."""
    fn: Callable[[float], float]
    coef: float = 1.0
    singular_exponent: Optional[float] = None

    def __post_init__(self):
        if not callable(self.fn):
            raise InvalidKernelError("Custom kernel evaluator must be callable")
        if self.singular_exponent is not None and not self.singular_exponent > -1.0:
            raise InvalidKernelError(
                f"Declared singular exponent {self.singular_exponent} is not integrable"
            )

    @property
    def singular(self) -> bool:
        return self.singular_exponent is not None and self.singular_exponent < 0

    def __call__(self, t):
        return self.coef * self.fn(t)


@dataclass(frozen=True)
class MomentRequest:
    a: float
    b: float
    t_n: float
    center: float
    p_max: int

    def __post_init__(self):
        if not 0.0 <= self.a < self.b:
            raise InvalidArgumentError(f"Moment interval needs 0 <= a < b, got [{self.a}, {self.b}]")
        if self.b > self.t_n * (1 + 1e-14):
            raise InvalidArgumentError(f"Moment interval end {self.b} exceeds target {self.t_n}")
        if not 0 <= self.p_max <= MAX_MOMENT_POWER:
            raise InvalidArgumentError(f"Moment power must be in 0..{MAX_MOMENT_POWER}, got {self.p_max}")


@dataclass(frozen=True, eq=False)
class Kernel:
    name: str
    terms: Tuple[PowerTerm, ...] = ()
    customs: Tuple[CustomTerm, ...] = ()
    flags: KernelFlags = field(default_factory=KernelFlags)
    alpha: Optional[float] = None

    @property
    def is_singular(self) -> bool:
        return any(term.singular for term in self.terms + self.customs)

    @property
    def is_power_law(self) -> bool:
        return not self.customs

    def eval(self, t):
        """Pointwise K(t); raises SingularEvaluationError at t = 0 for singular terms."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise InvalidArgumentError("Kernel argument must be nonnegative")
        if self.is_singular and np.any(t_arr == 0):
            raise SingularEvaluationError(
                f"Kernel {self.name} is singular at t=0; use moments instead"
            )
        total = np.zeros_like(t_arr)
        for term in self.terms:
            total = total + term.coef * np.power(t_arr, term.exponent)
        for term in self.customs:
            total = total + np.vectorize(term, otypes=[float])(t_arr)
        return float(total) if total.ndim == 0 else total

    __call__ = eval

    def __add__(self, other: "Kernel") -> "Kernel":
        if not isinstance(other, Kernel):
            return NotImplemented
        return Kernel(
            name=f"{self.name}+{other.name}",
            terms=self.terms + other.terms,
            customs=self.customs + other.customs,
            flags=self.flags & other.flags,
            alpha=self.alpha if self.alpha == other.alpha else None,
        )

    def __mul__(self, c: float) -> "Kernel":
        c = float(c)
        if c == 0:
            raise InvalidKernelError("Scaling a kernel by zero")
        flags = self.flags if c > 0 else KernelFlags(False, False, self.flags.integrable)
        return replace(
            self,
            name=f"{c:g}*{self.name}",
            terms=tuple(PowerTerm(c * t.coef, t.exponent) for t in self.terms),
            customs=tuple(replace(t, coef=c * t.coef) for t in self.customs),
            flags=flags,
        )

    __rmul__ = __mul__

    def describe(self) -> dict:
        return {
            'name': self.name,
            'alpha': self.alpha,
            'terms': [{'coef': t.coef, 'exponent': t.exponent} for t in self.terms],
            'custom_terms': len(self.customs),
            'positive': self.flags.positive,
            'nonincreasing': self.flags.nonincreasing,
        }

    def local_moments(self, a, b, t_n: float, p_max: int) -> np.ndarray:
        """
        Moments centred at the right end b, vectorised over intervals.

        Args:
            a, b: Arrays of interval ends with a < b <= t_n
            t_n: Target node
            p_max: Highest power

        Returns:
            Array of shape (len(a), p_max + 1); entry [i, p] = int_{a_i}^{b_i} (s - b_i)^p K(t_n - s) ds
        """
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        out = np.zeros((len(a), p_max + 1))
        for term in self.terms:
            out += term.coef * _power_moments(a, b, t_n, term.exponent, p_max)
        for term in self.customs:
            for i in range(len(a)):
                out[i] += _adaptive_moments(term, a[i], b[i], t_n, b[i], p_max)
        return out

    def moments(self, req: MomentRequest) -> np.ndarray:
        """m_p = int_a^b (s - center)^p K(t_n - s) ds for p = 0..p_max."""
        local = self.local_moments([req.a], [req.b], req.t_n, req.p_max)[0]
        return _recenter(local, req.b - req.center)

    def adaptive_moments(self, req: MomentRequest) -> np.ndarray:
        """Same moments, every term through adaptive quadrature."""
        total = np.zeros(req.p_max + 1)
        for term in self.terms:
            as_custom = CustomTerm(
                lambda t, e=term.exponent: np.power(t, e),
                coef=term.coef,
                singular_exponent=term.exponent if term.singular else None,
            )
            total += _adaptive_moments(as_custom, req.a, req.b, req.t_n, req.center, req.p_max)
        for term in self.customs:
            total += _adaptive_moments(term, req.a, req.b, req.t_n, req.center, req.p_max)
        return total


def _recenter(local: np.ndarray, shift: float) -> np.ndarray:
    """Moments about b to moments about c, with shift = b - c."""
    p_max = len(local) - 1
    out = np.zeros_like(local)
    for p in range(p_max + 1):
        q = np.arange(p + 1)
        out[p] = np.sum(special.comb(p, q) * shift ** (p - q) * local[q])
    return out


@dataclass(frozen=True)
class _GaussRule:
    nodes: np.ndarray
    weights: np.ndarray


_gauss_cache = {}


def _gauss_rule(n: int) -> _GaussRule:
    if n not in _gauss_cache:
        x, w = np.polynomial.legendre.leggauss(n)
        _gauss_cache[n] = _GaussRule((x + 1) / 2, w / 2)
    return _gauss_cache[n]


def _power_moments(a: np.ndarray, b: np.ndarray, t_n: float, beta: float, p_max: int) -> np.ndarray:
    """
    Closed-form moments of (t_n - s)^beta centred at b.

    With s = b - L v and r = (t_n - b)/L:
    m_p = (-1)^p L^(p+1+beta) J_p(r),  J_p(r) = int_0^1 v^p (r + v)^beta dv.
    Near the singularity (r < FAR_FIELD_RATIO) J_p uses the binomial expansion; further
    away the integrand is analytic on [0, 1] and Gauss-Legendre is exact to roundoff.
    """
    L = b - a
    r = np.maximum(t_n - b, 0.0) / L
    J = np.zeros((len(a), p_max + 1))

    near = r < FAR_FIELD_RATIO
    if np.any(near):
        rn = r[near]
        for p in range(p_max + 1):
            acc = np.zeros(rn.shape[0])
            for q in range(p + 1):
                e = beta + q + 1
                acc += (special.comb(p, q) * np.power(-rn, p - q)
                        * (np.power(1 + rn, e) - np.power(rn, e)) / e)
            J[near, p] = acc

    far = ~near
    if np.any(far):
        rule = _gauss_rule(get_settings().gauss_nodes)
        rf = r[far][:, None]
        base = np.power(rf + rule.nodes[None, :], beta) * rule.weights[None, :]
        for p in range(p_max + 1):
            J[far, p] = base @ np.power(rule.nodes, p)

    p = np.arange(p_max + 1)
    scale = np.power(-1.0, p)[None, :] * np.power(L[:, None], p[None, :] + 1 + beta)
    return scale * J


def _quad(fn, lo: float, hi: float, **kwargs) -> Tuple[float, float]:
    settings = get_settings()
    result = integrate.quad(
        fn, lo, hi,
        epsabs=settings.moment_epsabs,
        epsrel=settings.moment_epsrel,
        limit=settings.moment_limit,
        full_output=1,
        **kwargs,
    )
    if len(result) > 3:
        raise AccuracyError(
            f"Adaptive moment quadrature on [{lo:.6g}, {hi:.6g}] failed: {result[3]}",
            float(result[1]),
        )
    return float(result[0]), float(result[1])


def _adaptive_moments(term: CustomTerm, a: float, b: float, t_n: float,
                      center: float, p_max: int) -> np.ndarray:
    out = np.zeros(p_max + 1)
    touches_singularity = abs(t_n - b) <= 1e-14 * max(1.0, t_n)

    for p in range(p_max + 1):
        if touches_singularity and term.singular:
            beta = term.singular_exponent
            # algebraic weight (t_n - s)^beta handled by QAWS
            def regular(s, p=p, beta=beta):
                u = max(t_n - s, TINY)
                return (s - center) ** p * term(u) / u ** beta
            value, _ = _quad(regular, a, b, weight='alg', wvar=(0.0, beta))
        elif touches_singularity:
            integrand = lambda s, p=p: (s - center) ** p * term(t_n - s)  # noqa: E731
            try:
                value, _ = _quad(integrand, a, b)
            except AccuracyError as e:
                logger.debug(f"Falling back to geometric refinement toward t_n={t_n}: {e}")
                value = _geometric_quad(integrand, a, b)
        else:
            value, _ = _quad(lambda s, p=p: (s - center) ** p * term(t_n - s), a, b)
        out[p] = value
    return out


def _geometric_quad(fn, a: float, b: float) -> float:
    """Integrate toward the endpoint b on geometrically shrinking pieces."""
    L = b - a
    edges = [a] + [b - L * 0.5 ** i for i in range(1, GEOMETRIC_LEVELS + 1)] + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, _ = _quad(fn, lo, hi)
        total += value
    return total


def power_singular(alpha: float) -> Kernel:
    """K(t) = t^(alpha - 1), weakly singular for 0 < alpha < 1."""
    if not alpha > 0:
        raise InvalidKernelError(f"t^(alpha-1) needs alpha > 0, got {alpha}")
    nonincreasing = alpha <= 1
    return Kernel(
        name='power-singular',
        terms=(PowerTerm(1.0, alpha - 1.0),),
        flags=KernelFlags(True, nonincreasing, True),
        alpha=float(alpha),
    )


def power(alpha: float) -> Kernel:
    """K(t) = t^alpha, bounded and nondecreasing for alpha >= 0."""
    return Kernel(
        name='power',
        terms=(PowerTerm(1.0, float(alpha)),),
        flags=KernelFlags(True, alpha <= 0, True),
        alpha=float(alpha),
    )


def constant(c: float = 1.0) -> Kernel:
    return Kernel(
        name='const',
        terms=(PowerTerm(float(c), 0.0),),
        flags=KernelFlags(c > 0, True, True),
    )


def caputo(alpha: float) -> Kernel:
    """Riemann-Liouville/Caputo integral kernel t^(alpha - 1)/Gamma(alpha)."""
    if not alpha > 0:
        raise InvalidKernelError(f"Caputo kernel needs alpha > 0, got {alpha}")
    return Kernel(
        name='caputo',
        terms=(PowerTerm(1.0 / special.gamma(alpha), alpha - 1.0),),
        flags=KernelFlags(True, alpha <= 1, True),
        alpha=float(alpha),
    )


def custom(fn: Callable[[float], float], flags: KernelFlags, name: str = 'custom',
           singular_exponent: Optional[float] = None) -> Kernel:
    return Kernel(
        name=name,
        customs=(CustomTerm(fn, 1.0, singular_exponent),),
        flags=flags,
    )


def exponential_kernel(rate: float) -> Kernel:
    """K(t) = exp(-rate t); positive and nonincreasing for rate >= 0."""
    if rate < 0:
        raise InvalidKernelError(f"Exponential kernel rate must be nonnegative, got {rate}")
    return custom(lambda t: np.exp(-rate * t), KernelFlags(True, True, True), name=f'exp{rate:g}')


KERNELS = {
    'power-singular': power_singular,
    'power': power,
    'const': lambda alpha=None: constant(1.0),
    'caputo': caputo,
}


def make_kernel(name: str, alpha: Optional[float] = None) -> Kernel:
    """Built-in kernel by CLI name."""
    if name not in KERNELS:
        raise InvalidKernelError(f"Unknown kernel {name!r}; choose from {sorted(KERNELS)}")
    if name != 'const' and alpha is None:
        raise InvalidKernelError(f"Kernel {name!r} needs an alpha value")
    return KERNELS[name](alpha)


def kernel_mass(K: Kernel, t_n: float) -> float:
    """int_0^{t_n} K(t_n - s) ds."""
    if not t_n > 0:
        raise InvalidArgumentError(f"Target time must be positive, got {t_n}")
    total = sum(t.coef * t_n ** (t.exponent + 1) / (t.exponent + 1) for t in K.terms)
    for term in K.customs:
        total += _adaptive_moments(term, 0.0, t_n, t_n, t_n, 0)[0]
    return float(total)


def monomial_convolution(K: Kernel, m: float, t) -> np.ndarray:
    """
    Exact (K * s^m)(t) = sum_terms coef B(m+1, beta+1) t^(m+beta+1).

    Raises:
        UnsupportedSolutionError: for kernels with custom evaluators
    """
    if K.customs:
        raise UnsupportedSolutionError(
            f"No closed-form convolution of t^{m} against custom kernel {K.name}"
        )
    t_arr = np.asarray(t, dtype=float)
    total = np.zeros_like(t_arr)
    for term in K.terms:
        total = total + term.coef * special.beta(m + 1, term.exponent + 1) * np.power(
            t_arr, m + term.exponent + 1
        )
    return total


def random_positive_kernels(count: int, seed: int = 0) -> Sequence[Kernel]:
    """Mixtures c1 t^(alpha-1) + c2 exp(-lambda t) with positive coefficients."""
    rng = np.random.default_rng(seed)
    kernels = []
    for _ in range(count):
        alpha = rng.uniform(0.1, 0.95)
        mix = power_singular(alpha) * rng.uniform(0.2, 2.0)
        if rng.random() < 0.5:
            mix = mix + exponential_kernel(rng.uniform(0.0, 5.0)) * rng.uniform(0.1, 1.0)
        kernels.append(mix)
    return kernels
