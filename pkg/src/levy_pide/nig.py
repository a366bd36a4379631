"""Discrete NIG jump generator and its time steps.

The generator is the NIG exponent applied to the differentiation operator,
``J = delta (sqrt(alpha^2 - beta^2) I - sqrt(M2))`` with

    M2 = (alpha^2 - beta^2) I - 2 beta D1 - D2,

where ``D1`` is the second-order one-sided first derivative pointing against the
skew (backward for ``beta < 0``, forward otherwise) and ``D2`` the central second
derivative. With that choice ``-J`` is an (eventually) M-matrix and ``expm(dt J)``
is nonnegative on fine enough grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, GridError
from .grid import CompositeGrid, build_stencil
from .matfuncs import expm, sqrtm
from .params import NIGParams, validate


def skew_stencil_kind(skew: float) -> str:
    """One-sided stencil used for the skew term: B2 when negative, F2 otherwise."""
    return "B2" if skew < 0 else "F2"


def build_m2(alpha: float, beta: float, grid: CompositeGrid, boundary: str = "truncate") -> np.ndarray:
    """Dense ``(alpha^2 - beta^2) I - 2 beta D1 - D2`` on ``grid``."""
    if not grid.uniform:
        raise GridError("the NIG/GH operators need a uniform grid")
    n = grid.size
    d1 = build_stencil(skew_stencil_kind(beta), grid, boundary).to_dense()
    d2 = build_stencil("C2", grid, boundary).to_dense()
    return (alpha * alpha - beta * beta) * np.eye(n) - 2.0 * beta * d1 - d2


@dataclass
class NIGGenerator:
    J: np.ndarray
    branch: str  # "backward" or "forward"
    grid: CompositeGrid
    params: NIGParams
    sqrt_m2: np.ndarray = field(repr=False)
    _propagators: dict = field(default_factory=dict, repr=False)

    def propagator(self, dt: float) -> np.ndarray:
        """``expm(dt J)``, computed once per step size."""
        key = float(dt)
        if key not in self._propagators:
            self._propagators[key] = np.eye(self.grid.size) if dt == 0 else expm(dt * self.J)
        return self._propagators[key]


def build_nig_generator(params: NIGParams, grid: CompositeGrid,
                        boundary: str = "truncate") -> NIGGenerator:
    validate(params)
    al, be, de = params.alpha, params.beta, params.delta
    m2 = build_m2(al, be, grid, boundary)
    root = sqrtm(m2)
    J = de * (math.sqrt(al * al - be * be) * np.eye(grid.size) - root)
    return NIGGenerator(J=J, branch="backward" if be < 0 else "forward", grid=grid,
                        params=params, sqrt_m2=root)


def nig_jump_step_expm(gen: NIGGenerator, c_in, dt: float) -> np.ndarray:
    c_in = np.asarray(c_in, dtype=float)
    if c_in.shape != (gen.grid.size,):
        raise GridError(f"vector length {c_in.shape} does not match grid size {gen.grid.size}")
    if dt == 0:
        return c_in.copy()
    return gen.propagator(dt) @ c_in


def nig_jump_step_pade(gen: NIGGenerator, c_in, dt: float, max_iter: int = 100,
                       tol: float = 1e-10) -> np.ndarray:
    """(1,1) Pade step ``(I - dt J/2) c_out = (I + dt J/2) c_in`` by fixed-point iteration.

    The iteration ``c <- rhs + (dt/2) J c`` converges when ``||dt J / 2|| < 1``;
    ``tol`` is measured relative to ``max(1, ||c||_inf)``.
    """
    c_in = np.asarray(c_in, dtype=float)
    if c_in.shape != (gen.grid.size,):
        raise GridError(f"vector length {c_in.shape} does not match grid size {gen.grid.size}")
    half = 0.5 * dt * gen.J
    rhs = c_in + half @ c_in
    c = c_in.copy()
    delta = np.inf
    for k in range(1, max_iter + 1):
        new = rhs + half @ c
        delta = float(np.max(np.abs(new - c)))
        c = new
        if not np.isfinite(delta):
            break
        if delta < tol * max(1.0, float(np.max(np.abs(c)))):
            return c
    raise ConvergenceError(f"Picard iteration stalled after {max_iter} iterations "
                           f"(last update {delta:.3e})", iterations=max_iter, residual=delta)
