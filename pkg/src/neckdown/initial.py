"""Initial-data families and the boundary-row projection helper.

The stepper requires data satisfying the four discrete boundary rows
(values 1 at the endpoints, one-sided second difference P at both ends).
Analytic perturbation shapes rarely satisfy the curvature rows exactly, so
every family projects its raw profile by adding the quartic of minimal
discrete L2 norm that repairs all four rows.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Grid
from .steady import parabola, steady_profile

# value rows use the nodal values directly; curvature rows this stencil
_CURV = np.array([2.0, -5.0, 4.0, -1.0])


def bc_residuals(values: np.ndarray, grid: Grid, pressure: float) -> np.ndarray:
    """Defects of the four discrete boundary rows: [left value, left curvature,
    right curvature, right value]."""
    dx2 = grid.dx**2
    return np.array(
        [
            values[0] - 1.0,
            _CURV @ values[:4] / dx2 - pressure,
            _CURV @ values[-1:-5:-1] / dx2 - pressure,
            values[-1] - 1.0,
        ]
    )


def project_boundary_rows(values: np.ndarray, grid: Grid, pressure: float) -> np.ndarray:
    """Add the minimal-L2-norm quartic making all four boundary rows exact.

    The constraint system is 4 rows on 5 polynomial coefficients; the free
    direction is resolved by minimizing the quadrature norm of the correction
    itself.  Symmetric defects therefore receive an even correction, so even
    data stays even.
    """
    x = grid.nodes
    vand = np.vander(x, 5, increasing=True)  # columns 1, x, x^2, x^3, x^4
    dx2 = grid.dx**2
    rows = np.vstack(
        [
            vand[0],
            _CURV @ vand[:4] / dx2,
            _CURV @ vand[-1:-5:-1] / dx2,
            vand[-1],
        ]
    )
    target = -bc_residuals(values, grid, pressure)
    # particular solution + 1-dim null space of the constraint rows
    coeff_p, *_ = np.linalg.lstsq(rows, target, rcond=None)
    _, _, vt = np.linalg.svd(rows)
    null = vt[-1]
    # minimize || vand (coeff_p + z null) ||_quadrature over scalar z
    weights = np.full(grid.n, grid.dx)
    weights[0] = weights[-1] = 0.5 * grid.dx
    qp = vand @ coeff_p
    qn = vand @ null
    denom = np.sum(weights * qn * qn)
    z = -np.sum(weights * qp * qn) / denom if denom > 0 else 0.0
    correction = vand @ (coeff_p + z * null)
    return values + correction


def ic_steady(pressure: float, grid: Grid) -> np.ndarray:
    """The steady profile itself (projection is a no-op up to roundoff)."""
    return steady_profile(pressure, grid).profile.values.copy()


def ic_steady_perturbed_poly(
    pressure: float, grid: Grid, amplitude: float
) -> np.ndarray:
    """Parabola base plus amplitude * (1 - x^2)^2, projected onto the BC rows.

    The base (P/2)(x^2-1)+1 is the steady profile for P <= 2; for larger P it
    dips negative and the bump must lift the waist above zero.  Raises if the
    projected profile is not strictly positive.
    """
    x = grid.nodes
    raw = parabola(pressure, grid) + amplitude * (1.0 - x * x) ** 2
    values = project_boundary_rows(raw, grid, pressure)
    if np.min(values) <= 0.0:
        raise ValueError(
            f"perturbed-poly data with amplitude {amplitude} is not positive "
            f"(min {np.min(values):.3e}); increase the amplitude"
        )
    return values


def default_poly_amplitude(pressure: float) -> float:
    """Amplitude keeping the perturbed-poly family positive: 0.05 below the
    two-arc regime, 0.3 P above it."""
    return 0.05 if pressure <= 2.0 else 0.3 * pressure


def ic_steady_perturbed_random(
    pressure: float, grid: Grid, amplitude: float, seed: int
) -> np.ndarray:
    """Parabola base plus a random combination of the 5 lowest sine modes.

    Each mode sin(m pi (x+1)/2) vanishes with its second derivative at the
    endpoints, so the projection only repairs O(dx^2) discrete defects.
    """
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=5)
    x = grid.nodes
    bump = np.zeros(grid.n)
    for m, c in enumerate(coeffs, start=1):
        bump += c * np.sin(m * np.pi * (x + 1.0) / 2.0)
    raw = parabola(pressure, grid) + amplitude * bump
    values = project_boundary_rows(raw, grid, pressure)
    if np.min(values) <= 0.0:
        raise ValueError(
            f"random perturbation (seed {seed}, amplitude {amplitude}) "
            f"is not positive (min {np.min(values):.3e})"
        )
    return values


def ic_from_file(path: str | Path, grid: Grid) -> np.ndarray:
    """Nodal values from a JSON file {"values": [...]} matching the grid."""
    data = json.loads(Path(path).read_text())
    values = np.asarray(data["values"], dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(
            f"file data has {values.shape[0] if values.ndim == 1 else values.shape} "
            f"values, grid has {grid.n} nodes"
        )
    return values


def build_initial_condition(
    spec: str, pressure: float, grid: Grid, seed: int = 0
) -> np.ndarray:
    """Resolve an initial-condition spec string to nodal values.

    Formats: "steady", "steady-perturbed-poly[:amplitude]",
    "steady-perturbed-random[:amplitude]", "file:path".
    """
    name, _, arg = spec.partition(":")
    if name == "steady":
        return ic_steady(pressure, grid)
    if name == "steady-perturbed-poly":
        amp = float(arg) if arg else default_poly_amplitude(pressure)
        return ic_steady_perturbed_poly(pressure, grid, amp)
    if name == "steady-perturbed-random":
        amp = float(arg) if arg else 0.05
        return ic_steady_perturbed_random(pressure, grid, amp, seed)
    if name == "file":
        if not arg:
            raise ValueError("file initial condition needs a path: file:PATH")
        return ic_from_file(arg, grid)
    raise ValueError(f"unknown initial-condition family {name!r}")
