"""Operator splitting: Strang stepping and the single-step experiment mode.

A Strang step applies half a diffusion step, a full jump step and another half
diffusion step. The experiment mode replaces the first half step by the closed
form over the whole step (with the compensated rate) and stops after the jump
step; it is first order in the time step and is what the convergence tables use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diffusion import CNStepper, DiffusionSpec, asymptotes, bs_closed_form
from .errors import DomainError
from .gh import build_gh_operator, gh_jump_step
from .grid import CompositeGrid, build_grid
from .meixner import build_meixner_factors, meixner_step_interp, meixner_step_product
from .nig import build_nig_generator, nig_jump_step_expm, nig_jump_step_pade
from .params import (GHParams, MarketParams, MeixnerParams, ModelParams, NIGParams, Payoff,
                     compensator, location, validate)

# log-domain width implied by the tabulated (N, h) pairs: h * (N - 1) = ln(1e6)
TABLE_WIDTH = 13.8155

JUMP_METHODS = {
    "nig": ("pade", "expm"),
    "gh": ("expm",),
    "meixner": ("product", "interp"),
}


def default_method(model: ModelParams) -> str:
    return JUMP_METHODS[model.kind][0]


@dataclass
class JumpStage:
    """Callable jump step for a fixed model, grid and step size."""

    model: ModelParams
    grid: CompositeGrid
    dt: float
    method: str
    apply: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    operator: object = field(default=None, repr=False)

    def __call__(self, c):
        return self.apply(c)


def make_jump_stage(model: ModelParams, grid: CompositeGrid, dt: float, method: str | None = None,
                    p: int = 10, boundary: str = "truncate") -> JumpStage:
    validate(model)
    method = default_method(model) if method is None else method
    if method not in JUMP_METHODS[model.kind]:
        raise DomainError(f"method {method!r} is not available for {model.kind}; "
                          f"choose from {JUMP_METHODS[model.kind]}")
    if isinstance(model, NIGParams):
        gen = build_nig_generator(model, grid, boundary)
        if method == "expm":
            gen.propagator(dt)
            fn = lambda c: nig_jump_step_expm(gen, c, dt)  # noqa: E731
        else:
            fn = lambda c: nig_jump_step_pade(gen, c, dt)  # noqa: E731
        return JumpStage(model, grid, dt, method, fn, gen)
    if isinstance(model, GHParams):
        ops = build_gh_operator(model, grid, dt, boundary)
        return JumpStage(model, grid, dt, method, lambda c: gh_jump_step(ops, c), ops)
    if isinstance(model, MeixnerParams):
        fs = build_meixner_factors(model, grid, dt, p, method=method, boundary=boundary)
        if method == "product":
            fs.dense_powers()
            fn = lambda c: meixner_step_product(fs, c)  # noqa: E731
        else:
            fn = lambda c: meixner_step_interp(fs, c)  # noqa: E731
        return JumpStage(model, grid, dt, method, fn, fs)
    raise DomainError(f"unknown model {type(model).__name__}")


@dataclass
class SplitPlan:
    """Stage handles for one run.

    ``half_diffusion(c, tau)`` advances by ``dt/2`` ending at time-to-maturity
    ``tau``; ``jump(c)`` applies the full jump step.
    """

    mode: str  # "strang3" or "experiment2"
    n_steps: int
    dt: float
    grid: CompositeGrid
    jump: Callable
    half_diffusion: Callable | None = None
    diffusion: DiffusionSpec | None = None

    def __post_init__(self):
        if self.mode not in ("strang3", "experiment2"):
            raise DomainError(f"unknown split mode {self.mode!r}")
        if self.n_steps < 1 or not self.dt > 0:
            raise DomainError("need n_steps >= 1 and dt > 0")


def strang_step(plan: SplitPlan, c_in, dt: float | None = None, tau: float = 0.0) -> np.ndarray:
    """Half diffusion, full jump, half diffusion; ``tau`` is the time-to-maturity at the start."""
    dt = plan.dt if dt is None else dt
    if plan.half_diffusion is None:
        raise DomainError("plan has no diffusion stage")
    c = plan.half_diffusion(np.asarray(c_in, dtype=float), tau + 0.5 * dt)
    c = plan.jump(c)
    return plan.half_diffusion(c, tau + dt)


def cn_half_diffusion(spec: DiffusionSpec, grid: CompositeGrid, dt: float,
                      market: MarketParams | None = None, payoff: Payoff | None = None) -> Callable:
    """Crank-Nicolson half step; payoff asymptotes are used as edge data when given."""
    stepper = CNStepper(spec, grid, 0.5 * dt)

    def half(c, tau_end):
        bnd = None
        if market is not None and payoff is not None:
            bnd = asymptotes(spec, market, payoff, tau_end, grid.nodes[0], grid.nodes[-1])
        return stepper.step(c, bnd)

    return half


def strang_plan(model: ModelParams, market: MarketParams, payoff: Payoff, grid: CompositeGrid,
                n_steps: int, method: str | None = None, p: int = 10) -> SplitPlan:
    """Full three-stage plan; discounting is at ``r`` and the compensator sits in the drift."""
    dt = market.maturity / n_steps
    spec = DiffusionSpec.from_market(market, compensator(model), location(model),
                                     discount_compensated=False)
    return SplitPlan("strang3", n_steps, dt, grid, make_jump_stage(model, grid, dt, method, p),
                     cn_half_diffusion(spec, grid, dt, market, payoff), spec)


def strang_price_vector(plan: SplitPlan, market: MarketParams, payoff: Payoff) -> np.ndarray:
    c = payoff(market.spot * np.exp(plan.grid.nodes))
    for k in range(plan.n_steps):
        c = strang_step(plan, c, plan.dt, tau=k * plan.dt)
    return c


def experiment_two_step(plan: SplitPlan, market: MarketParams, model: ModelParams,
                        payoff: Payoff) -> np.ndarray:
    """Closed-form diffusion over the step at rate ``r + c``, then one jump step."""
    if plan.mode != "experiment2":
        raise DomainError("experiment_two_step needs a plan in experiment2 mode")
    if not math.isclose(plan.dt, market.maturity, rel_tol=1e-12):
        raise DomainError("the two-stage experiment takes a single step: dt must equal T")
    spec = plan.diffusion or DiffusionSpec.from_market(market, compensator(model), location(model))
    c1 = bs_closed_form(spec, market, payoff, plan.dt, plan.grid)
    return plan.jump(c1)


def experiment_plan(model: ModelParams, market: MarketParams, grid: CompositeGrid,
                    method: str | None = None, p: int = 10, boundary: str = "truncate") -> SplitPlan:
    dt = market.maturity
    spec = DiffusionSpec.from_market(market, compensator(model), location(model))
    return SplitPlan("experiment2", 1, dt, grid,
                     make_jump_stage(model, grid, dt, method, p, boundary), diffusion=spec)


def price_at_strike(grid: CompositeGrid, values, market: MarketParams) -> float:
    """Linear interpolation of ``values`` at ``x = log(K/S0)``."""
    return float(np.interp(market.log_moneyness, grid.nodes, np.asarray(values, dtype=float)))


def experiment_price(model: ModelParams, market: MarketParams, h: float,
                     width: float = TABLE_WIDTH, method: str | None = None, p: int = 10,
                     payoff: Payoff | None = None, boundary: str = "truncate") -> float:
    """One-step experiment price at the strike on a uniform grid of step ``h``."""
    payoff = Payoff("call", market.strike) if payoff is None else payoff
    grid = build_grid(h, width, center=market.log_moneyness)
    plan = experiment_plan(model, market, grid, method, p, boundary)
    return price_at_strike(grid, experiment_two_step(plan, market, model, payoff), market)
