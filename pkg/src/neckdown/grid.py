"""Uniform-grid fields on [-1, 1]: finite differences, quadrature, norms.

Everything downstream (steady profiles, energy functionals, the implicit
stepper) works on nodal fields living on the grid built here.  The node set
is chosen so that the endpoints and the center node are exact floating-point
values and the nodes are mirror-symmetric to the last bit; several symmetry
diagnostics rely on that.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
import scipy.sparse as sp
from scipy.integrate import simpson

MIN_NODES = 9

# interior half-stencil width per derivative order (second-order centered)
_HALF_WIDTH = {1: 1, 2: 1, 3: 2, 4: 2, 5: 3}


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on [-1, 1] with an odd number of nodes.

    Attributes
    ----------
    n : int
        Number of nodes (odd, >= 9).
    dx : float
        Node spacing 2/(n-1).
    nodes : ndarray
        Node coordinates; nodes[i] = (2*i - (n-1))/(n-1), so nodes[0] = -1,
        nodes[-1] = 1 and nodes[(n-1)//2] = 0 exactly, with exact mirror
        symmetry nodes[n-1-i] == -nodes[i].
    """

    n: int
    dx: float
    nodes: np.ndarray


@dataclass(frozen=True)
class Profile:
    """A nodal height field together with its grid and pressure parameter.

    No admissibility is enforced here: test fields (polynomials, modes) are
    legitimate profiles.  Solver entry points check boundary rows themselves.
    """

    grid: Grid
    values: np.ndarray
    pressure: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"profile has {values.shape} values for a {self.grid.n}-node grid"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def make_grid(n: int) -> Grid:
    """Build the uniform grid with n nodes.

    Parameters
    ----------
    n : int
        Node count; must be odd and at least 9 so that x = 0 is a node and
        all one-sided stencils fit.
    """
    if n < MIN_NODES:
        raise ValueError(f"need at least {MIN_NODES} nodes, got {n}")
    if n % 2 == 0:
        raise ValueError(f"node count must be odd so x=0 is a node, got {n}")
    nodes = (2.0 * np.arange(n) - (n - 1)) / (n - 1)
    nodes.flags.writeable = False
    return Grid(n=n, dx=2.0 / (n - 1), nodes=nodes)


def _fd_weights(offsets: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights on integer offsets for the given derivative.

    Solves the small Vandermonde system sum_i w_i o_i^m = m! delta_{m,order};
    with len(offsets) = order + 2 points the formula is second-order accurate
    at any window position.
    """
    o = np.asarray(offsets, dtype=float)
    m = len(o)
    vand = np.vander(o, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = factorial(order)
    return np.linalg.solve(vand, rhs)


@lru_cache(maxsize=None)
def _derivative_operator(n: int, order: int) -> sp.csr_matrix:
    """Dimensionless k-th difference operator on n nodes (unit spacing).

    Centered second-order stencils in the interior; one-sided second-order
    stencils (order + 2 points) at the boundary-adjacent nodes.  Left and
    right edge rows are exact mirrors of each other, and centered rows are
    symmetrized, so even/odd fields map to exactly odd/even fields.
    """
    half = _HALF_WIDTH[order]
    width = order + 2
    if n < max(width, 2 * half + 1):
        raise ValueError(f"grid too small for order-{order} stencils: n={n}")

    centered_offsets = np.arange(-half, half + 1)
    w_c = _fd_weights(centered_offsets, order)
    sign = -1.0 if order % 2 else 1.0
    w_c = 0.5 * (w_c + sign * w_c[::-1])  # enforce exact (anti)symmetry

    rows, cols, vals = [], [], []
    for i in range(half):
        offs = np.arange(width) - i
        w = _fd_weights(offs, order)
        j = n - 1 - i  # mirrored right-edge row, bit-exact mirror weights
        for w_i, o in zip(w, offs):
            rows.append(i)
            cols.append(i + o)
            vals.append(w_i)
            rows.append(j)
            cols.append(j - o)
            vals.append(sign * w_i)
    for i in range(half, n - half):
        for w_i, o in zip(w_c, centered_offsets):
            rows.append(i)
            cols.append(i + o)
            vals.append(w_i)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def derivative(values: np.ndarray, dx: float, order: int) -> np.ndarray:
    """k-th finite-difference derivative of a nodal field, on all nodes."""
    if order not in _HALF_WIDTH:
        raise ValueError(f"derivative order must be in 1..5, got {order}")
    op = _derivative_operator(len(values), order)
    return (op @ values) / dx**order


def diff(p: Profile, order: int) -> np.ndarray:
    """Second-order finite difference of a profile (orders 1..5).

    Boundary-adjacent nodes use one-sided second-order stencils, so the
    result is defined on every node.
    """
    return derivative(p.values, p.grid.dx, order)


def quadrature(values: np.ndarray, grid: Grid, rule: str = "trapezoid") -> float:
    """Integrate a nodal field over [-1, 1].

    rule is "trapezoid" (default) or "simpson"; the node count is odd so the
    composite Simpson rule always applies.
    """
    if len(values) != grid.n:
        raise ValueError(f"field has {len(values)} values on a {grid.n}-node grid")
    if rule == "trapezoid":
        return grid.dx * (values.sum() - 0.5 * (values[0] + values[-1]))
    if rule == "simpson":
        return float(simpson(values, dx=grid.dx))
    raise ValueError(f"unknown quadrature rule {rule!r}")


def sobolev_norm(p: Profile, order: int, rule: str = "trapezoid") -> float:
    """Discrete H^k norm: sqrt(sum_{j<=k} ||d^j p||_L2^2), j = 0 term included."""
    if order < 0 or order > 5:
        raise ValueError(f"Sobolev order must be in 0..5, got {order}")
    total = quadrature(p.values**2, p.grid, rule)
    for j in range(1, order + 1):
        dj = derivative(p.values, p.grid.dx, j)
        total += quadrature(dj**2, p.grid, rule)
    return float(np.sqrt(total))


def h1_norm(values: np.ndarray, grid: Grid) -> float:
    """Fast H^1 norm of a raw nodal field (used in Picard stopping tests)."""
    d1 = (_derivative_operator(grid.n, 1) @ values) / grid.dx
    return float(np.sqrt(quadrature(values**2, grid) + quadrature(d1**2, grid)))


def min_value(p: Profile) -> tuple[float, float]:
    """Nodal minimum of a profile: returns (x_m, h_m), leftmost node on ties."""
    i = int(np.argmin(p.values))
    return float(p.grid.nodes[i]), float(p.values[i])
