"""Meixner jump step.

The Meixner step operator factors into an infinite product over ``n >= 1`` of
``M_n^-kappa`` with ``kappa = 2 d dt`` and

    M_n = I - (a^2 D2 + 2ab D1 + b^2 I) / (4 pi^2 (n - 1/2)^2),

times the scalar ``cos(b/2)^kappa``. Each ``M_n`` is banded, (2,1) when ``b < 0``
and (1,2) otherwise. The product is truncated after ``p`` factors.

Two ways to apply it are provided: raising each dense factor to ``-kappa``
(product path), or computing the actions of ``M^-1`` and ``M^-2`` with banded
solves and interpolating pointwise in ``kappa`` between 0, 1 and 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, GridError
from .grid import BandedLU, BandedMatrix, CompositeGrid, build_stencil
from .matfuncs import powm
from .nig import skew_stencil_kind
from .params import MeixnerParams, validate


@dataclass
class MeixnerFactorSet:
    factors: list  # BandedMatrix per n = 1..p
    p: int
    kappa: float
    cos_half: float  # cos(b/2)
    grid: CompositeGrid = field(repr=False)
    _lu1: list | None = field(default=None, repr=False)
    _lu2: list | None = field(default=None, repr=False)
    _powers: list | None = field(default=None, repr=False)

    @property
    def prefactor(self) -> float:
        return self.cos_half ** self.kappa

    def lu_first(self) -> list:
        if self._lu1 is None:
            self._lu1 = [BandedLU.factor(m) for m in self.factors]
        return self._lu1

    def lu_second(self) -> list:
        if self._lu2 is None:
            self._lu2 = [BandedLU.factor(m.matmul(m)) for m in self.factors]
        return self._lu2

    def dense_powers(self) -> list:
        """``M_n^-kappa`` for every factor (dense)."""
        if self._powers is None:
            self._powers = [powm(m.to_dense(), -self.kappa) for m in self.factors]
        return self._powers


def meixner_factor(params: MeixnerParams, grid: CompositeGrid, n: int,
                   boundary: str = "truncate") -> BandedMatrix:
    a, b = params.a, params.b
    d1 = build_stencil(skew_stencil_kind(b), grid, boundary)
    d2 = build_stencil("C2", grid, boundary)
    scale = 1.0 / (4.0 * math.pi ** 2 * (n - 0.5) ** 2)
    inner = d2.scaled(a * a).plus(d1, 2.0 * a * b)
    ident = BandedMatrix.identity(grid.size)
    # I - scale * (inner + b^2 I)
    return ident.scaled(1.0 - scale * b * b).plus(inner, -scale)


def build_meixner_factors(params: MeixnerParams, grid: CompositeGrid, dt: float, p: int = 10,
                          method: str | None = None, boundary: str = "truncate") -> MeixnerFactorSet:
    validate(params)
    if p < 1:
        raise DomainError("truncation order p must be >= 1")
    if dt < 0:
        raise DomainError("dt must be >= 0")
    if not grid.uniform:
        raise GridError("the Meixner factors need a uniform grid")
    kappa = 2.0 * params.d * dt
    if method == "interp" and kappa > 2.0:
        raise DomainError(f"interpolation in kappa needs 0 <= kappa <= 2, got {kappa}")
    factors = [meixner_factor(params, grid, n, boundary) for n in range(1, p + 1)]
    return MeixnerFactorSet(factors=factors, p=p, kappa=kappa,
                            cos_half=math.cos(params.b / 2.0), grid=grid)


def _check_len(fs: MeixnerFactorSet, c_in) -> np.ndarray:
    c_in = np.asarray(c_in, dtype=float)
    if c_in.shape != (fs.grid.size,):
        raise GridError(f"vector length {c_in.shape} does not match grid size {fs.grid.size}")
    return c_in


def meixner_step_product(fs: MeixnerFactorSet, c_in) -> np.ndarray:
    c = _check_len(fs, c_in)
    if fs.kappa == 0:
        return c.copy()
    for pw in fs.dense_powers():
        c = pw @ c
    return fs.prefactor * c


def interpolation_weights(kappa: float) -> tuple[float, float, float]:
    """Quadratic Lagrange weights for knots 0, 1, 2 evaluated at ``kappa``."""
    return ((kappa - 1.0) * (kappa - 2.0) / 2.0, -kappa * (kappa - 2.0), kappa * (kappa - 1.0) / 2.0)


def kappa_branches(fs: MeixnerFactorSet, c_in):
    """Return the three knot vectors ``(c, cos * M^-1 c, cos^2 * M^-2 c)``."""
    z0 = _check_len(fs, c_in)
    z1 = z0.copy()
    for lu in fs.lu_first():
        z1 = lu.solve(z1)
    z2 = z0.copy()
    for lu in fs.lu_second():
        z2 = lu.solve(z2)
    return z0, fs.cos_half * z1, fs.cos_half ** 2 * z2


def meixner_step_interp(fs: MeixnerFactorSet, c_in, scheme: str = "quadratic") -> np.ndarray:
    """Apply the step by pointwise interpolation in ``kappa`` over the knots 0, 1, 2."""
    if scheme not in ("quadratic", "pchip"):
        raise DomainError(f"unknown interpolation scheme {scheme!r}")
    if fs.kappa > 2.0:
        warnings.warn(f"kappa = {fs.kappa:.4g} > 2 is outside the interpolation range; "
                      "using the product path", RuntimeWarning, stacklevel=2)
        return meixner_step_product(fs, c_in)
    z0, z1, z2 = kappa_branches(fs, c_in)
    k = fs.kappa
    if k == 0.0:
        return z0
    if k == 1.0:
        return z1
    if k == 2.0:
        return z2
    if scheme == "pchip":
        return PchipInterpolator([0.0, 1.0, 2.0], np.vstack([z0, z1, z2]), axis=0)(k)
    w0, w1, w2 = interpolation_weights(k)
    return w0 * z0 + w1 * z1 + w2 * z2
