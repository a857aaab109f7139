"""
Tensor-product Gauss-Legendre rules over the free coordinates of a sum-zero worth vector.
"""

import logging

import numpy as np

from ..errors import ConfigurationError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 65536
MAX_GRID_NODES = 50_000_000


def expand_reduced(free, eliminated=None):
    """
    Rebuild full worth vectors from their free coordinates.

    Args:
        free (numpy.ndarray): Shape (..., n - 1)
        eliminated (int, optional): Position of the object fixed by the constraint;
            defaults to the last object

    Returns:
        numpy.ndarray: Shape (..., n), each row summing to zero
    """
    free = np.asarray(free, dtype=float)
    n = free.shape[-1] + 1
    position = n - 1 if eliminated is None else eliminated
    dependent = -free.sum(axis=-1, keepdims=True)
    return np.concatenate([free[..., :position], dependent, free[..., position:]], axis=-1)


def reduce_full(theta, eliminated=None):
    theta = np.asarray(theta, dtype=float)
    position = theta.shape[-1] - 1 if eliminated is None else eliminated
    return np.delete(theta, position, axis=-1)


def expansion_matrix(n, eliminated=None):
    """Linear map A with theta = A @ free, shape (n, n - 1)."""
    return expand_reduced(np.eye(n - 1), eliminated).T


class GaussLegendreGrid:
    """
    Gauss-Legendre tensor grid on an axis-aligned box.

    Axis k covers center[k] ± halfwidths[k] with ``points`` nodes. Nodes are produced
    in fixed row-major chunks so sums over the grid do not depend on how the caller
    schedules work.
    """

    def __init__(self, center, halfwidths, points):
        center = np.asarray(center, dtype=float).reshape(-1)
        halfwidths = np.asarray(halfwidths, dtype=float).reshape(-1)
        if center.shape != halfwidths.shape:
            raise ConfigurationError("grid center and half-widths must have the same length")
        if np.any(~np.isfinite(halfwidths)) or np.any(halfwidths <= 0):
            raise ConfigurationError(f"grid half-widths must be positive and finite, got {halfwidths}")
        if points < 1:
            raise ConfigurationError(f"a grid needs at least one node per axis, got {points}")
        if float(points) ** center.size > MAX_GRID_NODES:
            raise ConfigurationError(
                f"{points}^{center.size} quadrature nodes exceed the limit of {MAX_GRID_NODES}; "
                f"lower the grid points or the number of objects")

        nodes, weights = np.polynomial.legendre.leggauss(points)
        self.points = points
        self.dim = center.size
        self.axes = center[:, None] + halfwidths[:, None] * nodes[None, :]
        self.log_axis_weights = np.log(halfwidths[:, None] * weights[None, :])
        self.shell_width = max(1, points // 16)
        logger.debug(f"Built Gauss-Legendre grid: dim={self.dim}, points={points}")

    @property
    def size(self):
        return self.points ** self.dim

    def chunks(self, chunk_size=DEFAULT_CHUNK_SIZE):
        """
        Yield the grid in row-major order.

        Yields:
            tuple: (nodes (m, dim), log_weights (m,), in_shell (m,) boolean mask of the
            outermost shell)
        """
        if self.dim == 0:
            yield np.zeros((1, 0)), np.zeros(1), np.zeros(1, dtype=bool)
            return

        shape = (self.points,) * self.dim
        for start in range(0, self.size, chunk_size):
            flat = np.arange(start, min(start + chunk_size, self.size))
            index = np.unravel_index(flat, shape)
            nodes = np.empty((flat.size, self.dim))
            log_weights = np.zeros(flat.size)
            in_shell = np.zeros(flat.size, dtype=bool)
            for axis, positions in enumerate(index):
                nodes[:, axis] = self.axes[axis, positions]
                log_weights += self.log_axis_weights[axis, positions]
                in_shell |= (positions < self.shell_width) | (positions >= self.points - self.shell_width)
            yield nodes, log_weights, in_shell
