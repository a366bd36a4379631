"""Diffusion stage of the splitting: closed-form lognormal propagator and a Crank-Nicolson stepper.

On ``x = log(S/S0)`` the diffusion operator is

    D = -disc + (g - sigma^2/2) d/dx + (sigma^2/2) d^2/dx^2

with growth rate ``g = r - q + c + mu`` (``c`` the jump compensator, ``mu`` a
location parameter moved out of the jump operator) and discount rate ``disc``.
In the compensated convention both ``g`` and ``disc`` carry ``c``, which is what
the one-step experiments use; otherwise ``disc = r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import DomainError
from .grid import BandedLU, BandedMatrix, CompositeGrid, build_stencil
from .params import MarketParams, Payoff, PayoffKind


@dataclass(frozen=True)
class DiffusionSpec:
    rate: float
    dividend: float
    sigma: float
    compensator: float = 0.0
    location: float = 0.0
    discount_compensated: bool = True

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def growth(self) -> float:
        return self.rate - self.dividend + self.compensator + self.location

    @property
    def discount(self) -> float:
        return self.rate + (self.compensator if self.discount_compensated else 0.0)

    @classmethod
    def from_market(cls, market: MarketParams, compensator: float = 0.0, location: float = 0.0,
                    discount_compensated: bool = True) -> "DiffusionSpec":
        return cls(market.rate, market.dividend, market.sigma, compensator, location,
                   discount_compensated)


def _nodes(where) -> np.ndarray:
    if isinstance(where, CompositeGrid):
        return where.nodes
    return np.asarray(where, dtype=float)


def bs_closed_form(spec: DiffusionSpec, market: MarketParams, payoff: Payoff, t: float,
                   nodes) -> np.ndarray:
    """Lognormal expectation of ``payoff`` after time ``t`` at spots ``S0 exp(x)``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    spot = market.spot * np.exp(_nodes(nodes))
    if t == 0:
        return payoff(spot)
    g, disc, k = spec.growth, spec.discount, payoff.strike
    df = math.exp(-disc * t)
    if spec.sigma == 0:
        return df * payoff(spot * math.exp(g * t))
    vol = spec.sigma * math.sqrt(t)
    d1 = (np.log(spot / k) + (g + 0.5 * spec.sigma ** 2) * t) / vol
    d2 = d1 - vol
    fwd_df = math.exp((g - disc) * t)
    if payoff.kind is PayoffKind.CALL:
        return spot * fwd_df * norm.cdf(d1) - k * df * norm.cdf(d2)
    if payoff.kind is PayoffKind.PUT:
        return k * df * norm.cdf(-d2) - spot * fwd_df * norm.cdf(-d1)
    return df * norm.cdf(d2)


def asymptotes(spec: DiffusionSpec, market: MarketParams, payoff: Payoff, tau: float,
               x_left: float, x_right: float) -> tuple[float, float]:
    """Far-field values used as Dirichlet data at the two grid ends."""
    df = math.exp(-spec.discount * tau)
    fwd_df = math.exp((spec.growth - spec.discount) * tau)
    s_lo = market.spot * math.exp(x_left)
    s_hi = market.spot * math.exp(x_right)
    k = payoff.strike
    if payoff.kind is PayoffKind.CALL:
        return 0.0, s_hi * fwd_df - k * df
    if payoff.kind is PayoffKind.PUT:
        return k * df - s_lo * fwd_df, 0.0
    return 0.0, df


def _set_edge_rows(m: BandedMatrix, diag_value: float) -> BandedMatrix:
    """Copy of ``m`` whose first and last rows are ``diag_value`` on the diagonal, zero elsewhere."""
    out = BandedMatrix(m.n, m.kl, m.ku, m.data.copy())
    for d in range(-m.kl, m.ku + 1):
        diag = out.diagonal(d)
        if d == 0:
            diag[0] = diag[-1] = diag_value
        elif d > 0:
            diag[0] = 0.0  # row 0
        else:
            diag[-1] = 0.0  # row n-1
        out.set_diagonal(d, diag)
    return out


@dataclass
class CNStepper:
    """Crank-Nicolson step for ``dC/dtau = D C``; banded factorizations are reused.

    Without Dirichlet data the two edge rows only discount.
    """

    spec: DiffusionSpec
    grid: CompositeGrid
    dt: float
    _lu: BandedLU = field(init=False, repr=False)
    _lu_dirichlet: BandedLU = field(init=False, repr=False)
    _rhs_op: BandedMatrix = field(init=False, repr=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be > 0")
        n = self.grid.size
        s2 = 0.5 * self.spec.sigma ** 2
        op = build_stencil("C2", self.grid).scaled(s2)
        op = op.plus(build_stencil("C", self.grid), self.spec.growth - s2)
        op = op.plus(BandedMatrix.identity(n), -self.spec.discount)
        op = _set_edge_rows(op, -self.spec.discount)
        half = 0.5 * self.dt
        ident = BandedMatrix.identity(n)
        lhs = ident.plus(op, -half)
        self._rhs_op = ident.plus(op, half)
        self._lu = lhs.lu()
        self._lu_dirichlet = _set_edge_rows(lhs, 1.0).lu()

    def step(self, c_in, boundary: tuple[float, float] | None = None) -> np.ndarray:
        c_in = np.asarray(c_in, dtype=float)
        rhs = self._rhs_op.matvec(c_in)
        if boundary is None:
            return self._lu.solve(rhs)
        rhs[0], rhs[-1] = boundary
        return self._lu_dirichlet.solve(rhs)


def cn_step(spec: DiffusionSpec, grid: CompositeGrid, c_in, dt: float,
            boundary: tuple[float, float] | None = None) -> np.ndarray:
    """One Crank-Nicolson step; ``boundary`` optionally fixes the two edge values."""
    return CNStepper(spec, grid, dt).step(c_in, boundary)
