import numpy as np
import pytest

from levy_pide import (DiffusionSpec, DomainError, MarketParams, NIGParams, Payoff, SplitPlan,
                       bs_closed_form, experiment_price, strang_step)
from levy_pide.splitting import (cn_half_diffusion, experiment_plan, experiment_two_step,
                                 make_jump_stage, strang_plan, strang_price_vector)

from conftest import H_801, table_grid


def _call(grid):
    return np.maximum(100.0 * np.exp(grid.nodes) - 100.0, 0.0)


def test_without_jumps_strang_is_two_half_diffusion_steps(market):
    g = table_grid(101)
    spec = DiffusionSpec.from_market(market)
    half = cn_half_diffusion(spec, g, 0.01)
    identity = make_jump_stage(NIGParams(10.0, -5.7, 1e-300), g, 0.01, "expm")
    plan = SplitPlan("strang3", 1, 0.01, g, identity, half, spec)
    c = _call(g)
    np.testing.assert_allclose(strang_step(plan, c), half(half(c, 0.005), 0.01), atol=1e-13)


def test_without_diffusion_strang_is_the_jump_step(nig_neg):
    g = table_grid(101)
    still = cn_half_diffusion(DiffusionSpec(0.0, 0.0, 0.0), g, 0.01)
    jump = make_jump_stage(nig_neg, g, 0.01, "expm")
    plan = SplitPlan("strang3", 1, 0.01, g, jump, still)
    c = _call(g)
    np.testing.assert_allclose(strang_step(plan, c), jump(c), atol=1e-13)


def test_strang_self_convergence_is_second_order(nig_neg):
    m = MarketParams(100.0, 100.0, 0.05, 0.0, 0.15, 0.04, 0.01)
    pay = Payoff("call", 100.0)
    g = table_grid(201)

    def run(steps):
        return strang_price_vector(strang_plan(nig_neg, m, pay, g, steps, "expm"), m, pay)

    # error over the central half of the grid; the outer rows carry a boundary layer
    # from the zero far-field of the jump operator that does not refine with the step
    ref = run(128)
    mid = slice(g.size // 4, 3 * g.size // 4)
    steps = np.array([4, 8, 16])
    errs = [np.max(np.abs(run(k) - ref)[mid]) for k in steps]
    slope = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.3)


def test_experiment_needs_single_step(market, nig_neg):
    g = table_grid(51)
    plan = experiment_plan(nig_neg, market, g)
    short = MarketParams(100.0, 100.0, 0.05, 0.0, 0.15, 0.02, 0.01)
    with pytest.raises(DomainError):
        experiment_two_step(plan, short, nig_neg, Payoff("call", 100.0))


def test_unknown_method_rejected(nig_neg):
    with pytest.raises(DomainError):
        make_jump_stage(nig_neg, table_grid(51), 0.01, "product")


def test_vanishing_jumps_give_black_scholes(market):
    price = experiment_price(NIGParams(10.0, -5.7, 1e-300), market, 0.0690776)
    bs = bs_closed_form(DiffusionSpec.from_market(market), market, Payoff("call", 100.0), 0.01,
                        np.array([0.0]))[0]
    assert price == pytest.approx(bs, abs=1e-12)


def test_repeated_runs_are_identical(market, nig_neg):
    a = experiment_price(nig_neg, market, 0.0690776, method="pade")
    b = experiment_price(nig_neg, market, 0.0690776, method="pade")
    assert a == b


@pytest.mark.slow
def test_positive_skew_price_at_n801_matches_tabulated(market, nig_pos):
    assert experiment_price(nig_pos, market, H_801, method="expm") == pytest.approx(0.7710,
                                                                                     rel=0.01)
