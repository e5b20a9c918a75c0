"""
Raw weights w_j^k = int_{t_{k-1}}^{t_k} c_j^k(s) K(t_n - s) ds and the collapsed node
weights w~_k = w_0^k + w_1^{k+1} + ... + w_{g-1}^{k+g-1} for one target node t_n.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
import pandas as pd

from config import get_settings
from errors import InvalidArgumentError
from kernel import Kernel, kernel_mass
from mesh import Mesh
from stencil import SchemeOrder, build_stencil, nodes_stencil, ramp_order

logger = logging.getLogger(__name__)

CONSISTENCY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class WeightTable:
    n: int
    order: SchemeOrder
    raw: np.ndarray
    collapsed: np.ndarray
    mass: float
    t_n: float

    @property
    def span(self) -> int:
        return self.raw.shape[1]


@dataclass(frozen=True)
class ConsistencyReport:
    sum: float
    mass: float
    defect: float
    consistent: bool

    def to_dict(self) -> dict:
        return {
            'sum': self.sum,
            'mass': self.mass,
            'defect': self.defect,
            'consistent': self.consistent,
        }


class WeightAssembler:
    """
    Builds WeightTables for every target node of one (mesh, kernel, order) triple.

    Stencil coefficients are laid out once as a tensor coeffs[k-1, j, p] (the sigma^p
    coefficient of c_j on subinterval k, zero-padded where the startup ramp uses fewer
    points), so each target costs one vectorised moment evaluation.
    """

    def __init__(self, mesh: Mesh, kernel: Kernel, order: SchemeOrder,
                 abscissae: Optional[str] = None):
        """
        Args:
            mesh: Time partition
            kernel: Convolution kernel
            order: Scheme order
            abscissae: 'equispaced' or 'nodes'; defaults to QUAD_ABSCISSAE
        """
        self.mesh = mesh
        self.kernel = kernel
        self.order = order
        self.abscissae = abscissae or get_settings().abscissae
        if self.abscissae not in ('equispaced', 'nodes'):
            raise InvalidArgumentError(f"Unknown abscissae mode {self.abscissae!r}")

        self.span = order.span
        self.tau = mesh.steps
        self.coeffs = self._stencil_tensor()
        logger.debug(
            f"Weight assembler ready: kernel={kernel.name}, order={order.label}, "
            f"N={mesh.N}, abscissae={self.abscissae}"
        )

    def _stencil_tensor(self) -> np.ndarray:
        N, g = self.mesh.N, self.span
        coeffs = np.zeros((N, g, g))
        true_nodes = self.abscissae == 'nodes' and not self.mesh.is_uniform()
        for k in range(1, N + 1):
            local = ramp_order(self.order, k)
            if true_nodes:
                st = nodes_stencil(local, self.mesh.nodes, k)
            else:
                st = build_stencil(local, float(self.tau[k - 1]), k)
            coeffs[k - 1, : st.span, : st.span] = st.polys
        return coeffs

    def raw(self, n: int) -> np.ndarray:
        if not 1 <= n <= self.mesh.N:
            raise InvalidArgumentError(f"Target index n={n} outside 1..{self.mesh.N}")
        nodes = self.mesh.nodes
        t_n = float(nodes[n])
        moments = self.kernel.local_moments(nodes[:n], nodes[1: n + 1], t_n, self.span - 1)
        p = np.arange(self.span)
        scaled = moments * np.power(self.tau[:n, None], -p[None, :])
        return np.einsum('kjp,kp->kj', self.coeffs[:n], scaled)

    def table(self, n: int) -> WeightTable:
        raw = self.raw(n)
        t_n = float(self.mesh.nodes[n])
        return WeightTable(
            n=n,
            order=self.order,
            raw=raw,
            collapsed=collapse(raw, self.order, n),
            mass=kernel_mass(self.kernel, t_n),
            t_n=t_n,
        )

    def tables(self) -> Iterator[WeightTable]:
        for n in range(1, self.mesh.N + 1):
            yield self.table(n)


def raw_weights(mesh: Mesh, K: Kernel, order: SchemeOrder, n: int) -> np.ndarray:
    """Raw weights for target n; row k-1 holds w_0^k .. w_{g-1}^k."""
    return WeightAssembler(mesh, K, order).raw(n)


def collapse(raw: np.ndarray, order: SchemeOrder, n: int) -> np.ndarray:
    """
    Regroup raw weights by node: w~_i = sum_j w_j^{i+j}, terms past t_n dropped.

    Returns:
        Vector of n+1 collapsed weights indexed by node 0..n
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape[0] != n:
        raise InvalidArgumentError(f"Raw weights have {raw.shape[0]} rows, expected {n}")

    collapsed = np.zeros(n + 1)
    for j in range(min(order.span, raw.shape[1])):
        ks = np.arange(max(1, j), n + 1)
        collapsed[ks - j] += raw[ks - 1, j]
    return collapsed


def weight_table(mesh: Mesh, K: Kernel, order: SchemeOrder, n: Optional[int] = None) -> WeightTable:
    return WeightAssembler(mesh, K, order).table(mesh.N if n is None else n)


def consistency_report(table: WeightTable) -> ConsistencyReport:
    total = float(np.sum(table.collapsed))
    defect = abs(total - table.mass)
    return ConsistencyReport(
        sum=total,
        mass=table.mass,
        defect=defect,
        consistent=defect <= CONSISTENCY_RTOL * (1 + abs(table.mass)),
    )


def weights_frame(table: WeightTable, include_raw: bool = False) -> pd.DataFrame:
    frame = pd.DataFrame({'k': np.arange(table.n + 1), 'w_tilde': table.collapsed})
    if include_raw:
        for j in range(table.span):
            column = np.full(table.n + 1, np.nan)
            column[1:] = table.raw[:, j]
            frame[f'w_{j}'] = column
    return frame
