"""Generalized Hyperbolic jump step.

All pieces of the GH step operator are functions of one matrix,
``Z = delta * sqrt(M2)``, the discrete form of ``z(d/dx) = delta sqrt(alpha^2 - (beta + d/dx)^2)``.
The Bessel ratio in the exponent is replaced by its large-argument expansion
truncated after the first correction term, which leaves

    B = gamma^dt * (Z/z0)^(-dt(lam+1/2)) * expm(dt (z0 I - Z)) * (I + a1 Z^-1)^dt

with ``z0 = delta sqrt(alpha^2 - beta^2)``, ``a1 = (4 lam^2 - 1)/8`` and
``gamma = 1/(1 + a1/z0)``. For ``lam >= -1/2`` the power of ``Z/z0`` is applied as
its own factor; for ``lam < -1/2`` it has a growing spectrum and is folded into
the exponent instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.special import lambertw

from .errors import DomainError, GridError, StabilityError
from .grid import CompositeGrid
from .matfuncs import expm, logm, powm, sqrtm
from .nig import build_m2
from .params import GHParams, validate


def bessel_asymp_coeffs(nu: float, kmax: int) -> list[float]:
    """Coefficients ``a_k(nu)`` of ``K_nu(z) ~ sqrt(pi/2z) e^-z sum_k a_k / z^k``."""
    if kmax < 0:
        raise DomainError("kmax must be >= 0")
    out = [1.0]
    prod = 1.0
    for k in range(1, kmax + 1):
        prod *= 4.0 * nu * nu - (2 * k - 1) ** 2
        out.append(prod / (factorial(k) * 8.0 ** k))
    return out


def build_Z(params: GHParams, grid: CompositeGrid, boundary: str = "truncate") -> np.ndarray:
    validate(params)
    return params.delta * sqrtm(build_m2(params.alpha, params.beta, grid, boundary))


@dataclass
class GHOperatorSet:
    Z: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)  # combined step operator
    B1: np.ndarray | None = field(repr=False)
    B2: np.ndarray | None = field(repr=False)
    gamma: float
    a1: float
    regime: str  # "high" (lam >= -1/2) or "low"
    dt: float
    kmax: int = 1


def _skew_free_exponent(params: GHParams, root: np.ndarray) -> np.ndarray:
    # same expression as the NIG generator so lam = -1/2 reproduces it bit for bit
    w0 = math.sqrt(params.alpha ** 2 - params.beta ** 2)
    return params.delta * (w0 * np.eye(root.shape[0]) - root)


def build_gh_operator(params: GHParams, grid: CompositeGrid, dt: float,
                      boundary: str = "truncate", kmax: int = 1) -> GHOperatorSet:
    validate(params)
    if dt < 0:
        raise DomainError("dt must be >= 0")
    if not grid.uniform:
        raise GridError("the GH operator needs a uniform grid")
    lam = params.lam
    n = grid.size
    ident = np.eye(n)
    z0 = params.delta * math.sqrt(params.alpha ** 2 - params.beta ** 2)
    coeffs = bessel_asymp_coeffs(lam, kmax)
    a1 = coeffs[1] if kmax >= 1 else 0.0
    gamma = 1.0 / sum(a / z0 ** k for k, a in enumerate(coeffs))
    root = sqrtm(build_m2(params.alpha, params.beta, grid, boundary))
    Z = params.delta * root
    shift = lam + 0.5

    if a1 == 0.0:
        corr = ident
    else:
        z_inv = np.linalg.solve(Z, ident)
        corr = powm(ident + a1 * z_inv, dt)
    scal = gamma ** dt

    if shift >= 0:
        h_free = expm(dt * _skew_free_exponent(params, root))
        if shift == 0.0:
            B1 = ident
        else:
            B1 = expm(-dt * shift * logm(Z / z0))
        B2 = scal * (h_free @ corr)
        B = B2 @ B1
        return GHOperatorSet(Z=Z, B=B, B1=B1, B2=B2, gamma=gamma, a1=a1,
                             regime="high", dt=dt, kmax=kmax)

    bound = max_step_bound(params)
    if not grid.h < bound:
        raise StabilityError(f"h = {grid.h} is not below the stability bound {bound:.6g}")
    m = _skew_free_exponent(params, root) - shift * logm(Z / z0)
    B = scal * (expm(dt * m) @ corr)
    return GHOperatorSet(Z=Z, B=B, B1=None, B2=None, gamma=gamma, a1=a1,
                         regime="low", dt=dt, kmax=kmax)


def gh_jump_step(ops: GHOperatorSet, c_in) -> np.ndarray:
    c_in = np.asarray(c_in, dtype=float)
    if c_in.shape != (ops.B.shape[0],):
        raise GridError(f"vector length {c_in.shape} does not match operator size {ops.B.shape[0]}")
    if ops.regime == "high":
        return ops.B2 @ (ops.B1 @ c_in)
    return ops.B @ c_in


def max_step_bound(params: GHParams, n_nodes: int | None = None,
                   lambda_bar: float | None = None) -> float:
    """Largest ``h`` keeping the exponent of the low-``lam`` operator negative definite.

    With ``y = lambda_bar / h`` and ``kappa = -(lam + 1/2)`` the requirement is
    ``y - kappa log y + kappa * min(b, 0) > 0`` where ``b = log(alpha^2 - beta^2)``.
    When the left side has no real root the bound is infinite; otherwise the
    small-``h`` side of the larger root is kept, which is the ``W_{-1}`` branch.

    ``lambda_bar`` is the h-free factor of an eigenvalue of ``Z``. By default it is
    ``2 delta`` (the top of the spectrum); passing ``n_nodes`` uses the smallest
    eigenvalue's factor ``2 delta sin(pi / (2 (N + 1)))`` instead.
    """
    validate(params)
    kappa = -(params.lam + 0.5)
    if kappa <= 0:
        raise DomainError("the step bound applies to lam < -1/2 only")
    if lambda_bar is None:
        lambda_bar = 2.0 * params.delta
        if n_nodes is not None:
            lambda_bar *= math.sin(math.pi / (2.0 * (n_nodes + 1)))
    b = math.log(params.alpha ** 2 - params.beta ** 2)
    arg = -math.exp(min(b, 0.0)) / kappa
    branch_point = -1.0 / math.e
    if arg < branch_point * (1.0 + 1e-14):
        return math.inf
    if arg <= branch_point * (1.0 - 1e-14):
        # both real branches meet at -1/e where W = -1; lambertw is not reliable there
        return lambda_bar / kappa
    w = lambertw(arg, -1)
    if abs(w.imag) > 1e-12:
        raise DomainError(f"Lambert W argument {arg} is off the real branch")
    return lambda_bar / (-kappa * w.real)
