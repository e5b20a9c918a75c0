"""
Time partitions 0 = t_0 < t_1 < ... < t_N = T of [0, T].
Nodes are stored explicitly so nonuniform meshes work the same way as uniform ones.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from errors import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, 'nodes', nodes)

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        """Steps tau_k = t_k - t_{k-1}; entry k-1 holds tau_k."""
        return np.diff(self.nodes)

    @property
    def max_step(self) -> float:
        return float(self.steps.max())

    def tau(self, k: int) -> float:
        return float(self.nodes[k] - self.nodes[k - 1])

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        steps = self.steps
        return bool(np.all(np.abs(steps - steps[0]) <= rtol * steps[0]))

    def sample(self, f: Callable) -> np.ndarray:
        """Evaluate f at every node; f may be scalar or vectorised."""
        try:
            values = f(self.nodes)
        except TypeError:
            values = None
        if values is None or np.ndim(values) == 0:
            values = np.array([f(t) for t in self.nodes], dtype=float)
        return np.asarray(values, dtype=float)

    def sub(self, n: int) -> "Mesh":
        if not 1 <= n <= self.N:
            raise InvalidArgumentError(f"Sub-mesh index {n} outside 1..{self.N}")
        return Mesh(self.nodes[: n + 1])

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other) -> bool:
        return isinstance(other, Mesh) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self) -> int:
        return hash(self.nodes.tobytes())


def uniform_mesh(T: float, N: int) -> Mesh:
    """
    Uniform partition t_k = kT/N.

    Args:
        T: Horizon, must be positive
        N: Number of subintervals, at least 1

    Returns:
        Mesh with N+1 nodes whose last node is exactly T
    """
    if not np.isfinite(T) or T <= 0:
        raise InvalidArgumentError(f"Horizon T must be positive, got {T}")
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"Subinterval count N must be a positive integer, got {N}")

    N = int(N)
    nodes = np.arange(N + 1, dtype=float) * (T / N)
    nodes[-1] = T
    return Mesh(nodes)


def mesh_from_nodes(nodes: Sequence[float]) -> Mesh:
    values = np.asarray(nodes, dtype=float)
    if values.ndim != 1 or len(values) < 2:
        raise InvalidArgumentError("A mesh needs at least two nodes")
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("Mesh nodes must be finite")
    if values[0] != 0.0:
        raise InvalidArgumentError(f"First mesh node must be 0, got {values[0]}")

    steps = np.diff(values)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        k = int(bad[0]) + 1
        raise InvalidArgumentError(
            f"Mesh nodes must be strictly increasing; step tau_{k} = {steps[bad[0]]}"
        )
    return Mesh(values)
