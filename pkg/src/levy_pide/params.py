"""Parameter records, validation and characteristic exponents.

Log-price dynamics are ``ln S_t = ln S_0 + gamma t + sigma W_t + Y_t`` where ``Y`` is
a pure-jump Levy process (NIG, GH or Meixner). ``char_exponent`` returns the
per-unit-time exponent ``phi`` of ``Y`` so that ``E[exp(i u Y_t)] = exp(t phi(u))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy.special import kve

from .errors import DomainError


@dataclass(frozen=True)
class MarketParams:
    spot: float
    strike: float
    rate: float
    dividend: float
    sigma: float
    maturity: float
    dt: float

    @property
    def log_moneyness(self) -> float:
        """Strike location ``log(K/S0)`` on the log-spot axis."""
        return math.log(self.strike / self.spot)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.maturity / self.dt)))


@dataclass(frozen=True)
class NIGParams:
    alpha: float
    beta: float
    delta: float
    mu: float = 0.0

    kind = "nig"


@dataclass(frozen=True)
class GHParams:
    lam: float
    alpha: float
    beta: float
    delta: float
    mu: float = 0.0

    kind = "gh"


@dataclass(frozen=True)
class MeixnerParams:
    a: float
    b: float
    d: float
    m: float = 0.0

    kind = "meixner"


ModelParams = Union[NIGParams, GHParams, MeixnerParams]


class PayoffKind(str, Enum):
    CALL = "call"
    PUT = "put"
    DIGITAL = "digital"


@dataclass(frozen=True)
class Payoff:
    kind: PayoffKind
    strike: float

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        if not self.strike > 0:
            raise DomainError(f"payoff strike must be > 0, got {self.strike}")

    def __call__(self, spot):
        s = np.asarray(spot, dtype=float)
        if self.kind is PayoffKind.CALL:
            return np.maximum(s - self.strike, 0.0)
        if self.kind is PayoffKind.PUT:
            return np.maximum(self.strike - s, 0.0)
        return (s > self.strike).astype(float)


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise DomainError(f"violated: {what}")


def validate_market(market: MarketParams) -> MarketParams:
    _require(market.spot > 0, f"S0 > 0 (S0={market.spot})")
    _require(market.strike > 0, f"K > 0 (K={market.strike})")
    _require(market.sigma >= 0, f"sigma >= 0 (sigma={market.sigma})")
    _require(0 < market.dt <= market.maturity * (1 + 1e-12),
             f"0 < dt <= T (dt={market.dt}, T={market.maturity})")
    return market


def validate(params):
    """Return ``params`` unchanged if every invariant holds, else raise DomainError."""
    if isinstance(params, MarketParams):
        return validate_market(params)
    if isinstance(params, NIGParams):
        _require(params.alpha > 0, f"alpha > 0 (alpha={params.alpha})")
        _require(params.delta > 0, f"delta > 0 (delta={params.delta})")
        _require(abs(params.beta) < params.alpha,
                 f"|beta| < alpha (|beta|={abs(params.beta)}, alpha={params.alpha})")
        return params
    if isinstance(params, GHParams):
        _require(math.isfinite(params.lam), "lambda finite")
        _require(params.alpha > 0, f"alpha > 0 (alpha={params.alpha})")
        _require(params.delta > 0, f"delta > 0 (delta={params.delta})")
        _require(abs(params.beta) < params.alpha,
                 f"|beta| < alpha (|beta|={abs(params.beta)}, alpha={params.alpha})")
        return params
    if isinstance(params, MeixnerParams):
        _require(params.a > 0, f"a > 0 (a={params.a})")
        _require(params.d > 0, f"d > 0 (d={params.d})")
        _require(-math.pi < params.b < math.pi - params.a,
                 f"-pi < b < pi - a (b={params.b}, a={params.a})")
        return params
    raise DomainError(f"unknown parameter record {type(params).__name__}")


def location(model: ModelParams) -> float:
    """Location parameter (mu or m); moved to the diffusion drift by the schemes."""
    return model.m if isinstance(model, MeixnerParams) else model.mu


def in_strip(model: ModelParams, u) -> np.ndarray:
    """Elementwise test that ``u`` lies in the strip where ``phi`` is analytic."""
    im = np.imag(np.asarray(u, dtype=complex))
    if isinstance(model, MeixnerParams):
        return np.abs(model.a * im - model.b) < math.pi
    # beta + i u has real part beta - Im(u)
    return np.abs(model.beta - im) < model.alpha


def _log_cosh(w):
    # continuous branch of log cosh for |Im w| < pi/2
    w = np.asarray(w, dtype=complex)
    s = np.where(w.real >= 0, w, -w)
    return s + np.log1p(np.exp(-2.0 * s)) - math.log(2.0)


def _log_kv(nu: float, z):
    return np.log(kve(nu, z)) - z


def jump_exponent(model: ModelParams, u):
    """Characteristic exponent of the jump part with the location term removed."""
    u = np.asarray(u, dtype=complex)
    if not np.all(in_strip(model, u)):
        raise DomainError(f"u outside the regularity strip of {model.kind}")
    if isinstance(model, NIGParams):
        al, be, de = model.alpha, model.beta, model.delta
        w0 = math.sqrt(al * al - be * be)
        w = np.sqrt(al * al - (be + 1j * u) ** 2)
        return de * (w0 - w)
    if isinstance(model, GHParams):
        lam, al, be, de = model.lam, model.alpha, model.beta, model.delta
        w0 = math.sqrt(al * al - be * be)
        w = np.sqrt(al * al - (be + 1j * u) ** 2)
        log_ratio = _log_kv(lam, de * w) - _log_kv(lam, complex(de * w0))
        return lam * (math.log(w0) - np.log(w)) + log_ratio
    if isinstance(model, MeixnerParams):
        a, b, d = model.a, model.b, model.d
        return 2.0 * d * (math.log(math.cos(b / 2.0)) - _log_cosh((a * u - 1j * b) / 2.0))
    raise DomainError(f"unknown model {type(model).__name__}")


def char_exponent(model: ModelParams, u):
    """Per-unit-time characteristic exponent ``phi(u)`` including the location term.

    Scalars in, complex scalar out; arrays are handled elementwise.
    """
    scalar = np.ndim(u) == 0
    u_arr = np.asarray(u, dtype=complex)
    out = jump_exponent(model, u_arr) + 1j * u_arr * location(model)
    out = np.where(u_arr == 0, 0.0 + 0.0j, out)
    return complex(out) if scalar else out


def compensator(model: ModelParams) -> float:
    """Drift correction ``c = -phi(-i)`` that makes the discounted spot a martingale."""
    return -float(np.real(char_exponent(model, -1j)))


def jump_compensator(model: ModelParams) -> float:
    """``-phi(-i)`` of the location-free exponent; equals ``compensator + location``."""
    return -float(np.real(jump_exponent(model, -1j)))
