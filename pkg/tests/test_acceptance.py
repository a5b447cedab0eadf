"""Acceptance suite: eleven go/no-go checks with one printed verdict each.

Each criterion prints a single PASS/FAIL line (visible under -q via
capsys.disabled) and then asserts, so a red run still reports every verdict
it reached. Runtime budgets are wall-clock on a warmed-up kernel; the
compiled walker is forced warm by the session fixture before any timed
section.
"""

import math
import time

import numpy as np
import pytest

from bbsm import (
    FilterSpec,
    OptionSpec,
    PriceSeries,
    PricingConfig,
    RelEsgSeries,
    RisklessParams,
    TraversalStats,
    bachelier_closed_form,
    bsm_closed_form,
    build_csy_path,
    cumulative_path,
    enumerate_tree,
    esg_adjusted_prices,
    fit_riskless_params,
    fit_risky_params,
    h_eval,
    integral_path,
    price_changes,
    price_european,
    price_surface,
    reparameterize,
    riskless_price_path,
    simulate_stock_prices,
)
from bbsm.csyip import bernoulli_sign_values
from bbsm.reference import (
    load_reference_fixtures,
    reference_calibration_reports,
    save_reference_fixtures,
)

from helpers import draw_admissible, make_market, make_params, weekday_calendar

STOCK_TRUTH = {"a": 0.015, "mu": 2e-4, "v": 0.8, "sigma": 2e-3, "gamma": 0.06}
COEF_NAMES = ("a", "mu", "v", "sigma", "gamma")


def report(capsys, number, name, ok, detail):
    with capsys.disabled():
        print(f"\nacceptance {number:02d} {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"criterion {number} ({name}): {detail}"


class TestAcceptance:
    def test_01_bernoulli_construction(self, capsys):
        t0 = time.perf_counter()
        xi_up, xi_down = bernoulli_sign_values(0.524)
        elapsed = time.perf_counter() - t0
        # Three-significant-figure display values; 1e-3 absolute keeps the
        # half-ulp rounding of the published figures inside the window.
        ok = (
            abs(xi_up - 0.954) <= 1e-3
            and abs(xi_down - 1.05) <= 1e-3
            and elapsed < 1e-3
        )
        report(
            capsys, 1, "bernoulli jump sizes", ok,
            f"xi_up={xi_up:.6f} xi_down={xi_down:.6f} runtime={elapsed * 1e6:.0f}us",
        )

    def test_02_replication_identity(self, capsys, warm_kernel):
        rng = np.random.default_rng(2024)
        maturities = (1, 5, 10, 20)
        worst_asset = worst_unit = 0.0
        t0 = time.perf_counter()
        for _ in range(100):
            params, riskless, config = draw_admissible(rng, max(maturities))
            beta = config.beta_path
            for maturity in maturities:
                asset, _ = price_european(
                    OptionSpec("asset", maturity=maturity), params, riskless, config
                )
                unit, _ = price_european(
                    OptionSpec("unit", maturity=maturity), params, riskless, config
                )
                worst_asset = max(worst_asset, abs(asset - config.a0) / config.a0)
                want_unit = beta[0] / beta[maturity]
                worst_unit = max(worst_unit, abs(unit - want_unit) / abs(want_unit))
        elapsed = time.perf_counter() - t0
        ok = worst_asset <= 1e-10 and worst_unit <= 1e-12 and elapsed < 30.0
        report(
            capsys, 2, "replication identity", ok,
            f"asset err={worst_asset:.2e} unit err={worst_unit:.2e} runtime={elapsed:.1f}s",
        )

    def test_03_oracle_equivalence(self, capsys, warm_kernel):
        rng = np.random.default_rng(3)
        worst = 0.0
        t0 = time.perf_counter()
        for _ in range(100):
            maturity = int(rng.integers(1, 13))
            params, riskless, config = draw_admissible(rng, maturity)
            option = OptionSpec("call", strike=config.a0, maturity=maturity)
            streamed, _ = price_european(option, params, riskless, config)
            _, enumerated = enumerate_tree(option, params, riskless, config)
            worst = max(worst, abs(streamed - enumerated) / max(1.0, abs(enumerated)))
        elapsed = time.perf_counter() - t0
        ok = worst <= 1e-13 and elapsed < 60.0
        report(
            capsys, 3, "oracle equivalence", ok,
            f"worst rel diff={worst:.2e} over 100 draws, T<=12, runtime={elapsed:.1f}s",
        )

    def test_04_bsm_limit(self, capsys, warm_kernel):
        # Subspace a = v = gamma = rho = 0: geometric dynamics only.
        params = make_params(a=0.0, mu=0.0, v=0.0, sigma=0.01, gamma=0.0)
        riskless = RisklessParams(rho=0.0, r=2e-4, beta0=100.0, adj_r2=0.0)
        config = PricingConfig(
            delta=1.0, up_prob=0.5, x_init=0.0,
            filter=FilterSpec(d=10.0, kind="power"), a0=100.0,
            beta_path=riskless_price_path(riskless, 20),
        )
        t0 = time.perf_counter()
        tree, _ = price_european(
            OptionSpec("call", strike=100.0, maturity=20), params, riskless, config
        )
        elapsed = time.perf_counter() - t0
        closed = bsm_closed_form(100.0, 100.0, 20, 0.01, r=2e-4)
        gap = abs(tree - closed) / closed
        ok = gap <= 0.015 and elapsed < 10.0
        report(
            capsys, 4, "lognormal-limit convergence", ok,
            f"tree={tree:.6f} closed={closed:.6f} rel gap={gap:.2e} runtime={elapsed:.2f}s",
        )

    def test_05_bachelier_limit(self, capsys, warm_kernel):
        # Subspace mu = sigma = r = 0, gamma = 0: arithmetic dynamics only.
        params = make_params(a=0.0, mu=0.0, v=1.0, sigma=0.0, gamma=0.0)
        riskless = RisklessParams(rho=0.0, r=0.0, beta0=100.0, adj_r2=0.0)
        config = PricingConfig(
            delta=1.0, up_prob=0.5, x_init=0.0,
            filter=FilterSpec(d=10.0, kind="power"), a0=100.0,
            beta_path=riskless_price_path(riskless, 20),
        )
        t0 = time.perf_counter()
        tree, _ = price_european(
            OptionSpec("call", strike=100.0, maturity=20), params, riskless, config
        )
        elapsed = time.perf_counter() - t0
        closed = bachelier_closed_form(100.0, 100.0, 20, 1.0)
        gap = abs(tree - closed) / closed
        ok = gap <= 0.015 and elapsed < 10.0
        report(
            capsys, 5, "arithmetic-limit convergence", ok,
            f"tree={tree:.6f} closed={closed:.6f} rel gap={gap:.2e} runtime={elapsed:.2f}s",
        )

    def test_06_parameter_recovery(self, capsys, market, market_path, stock):
        truth = np.array([STOCK_TRUTH[n] for n in COEF_NAMES])

        fit = fit_risky_params(price_changes(stock), stock.values[:-1], market_path, 1.0)
        clean = np.array([getattr(fit, n) for n in COEF_NAMES])
        clean_err = float(np.max(np.abs(clean - truth) / np.abs(truth)))

        t0 = time.perf_counter()
        big_market = make_market(2000, seed=7)
        big_path = build_csy_path(big_market, FilterSpec())
        covered = 0
        for seed in range(100):
            noisy = simulate_stock_prices(
                big_market, a0=95.0, noise_std=0.1, seed=seed, **STOCK_TRUTH
            )
            fit = fit_risky_params(
                price_changes(noisy), noisy.values[:-1], big_path, 1.0
            )
            est = np.array([getattr(fit, n) for n in COEF_NAMES])
            if np.all(np.abs(est - truth) <= 3.0 * np.asarray(fit.stderrs)):
                covered += 1
        elapsed = time.perf_counter() - t0
        ok = clean_err <= 1e-6 and covered >= 90 and elapsed < 120.0
        report(
            capsys, 6, "parameter recovery", ok,
            f"noise-free rel err={clean_err:.2e}, 3-stderr coverage={covered}/100, "
            f"runtime={elapsed:.1f}s",
        )

    def test_07_scaling_invariance(self, capsys, market):
        riskless = RisklessParams(rho=-0.00139, r=0.00140, beta0=87.0, adj_r2=0.0)
        values = riskless_price_path(riskless, 300)
        calendar = weekday_calendar(values.shape[0])
        fit_a = fit_riskless_params(PriceSeries(calendar, values), beta0=87.0, delta=1.0)
        fit_b = fit_riskless_params(
            PriceSeries(calendar, 10.0 * values), beta0=870.0, delta=1.0
        )
        rho_gap = abs(fit_a.rho - fit_b.rho)
        r_gap = abs(fit_a.r - fit_b.r)

        path = build_csy_path(market, FilterSpec())
        scale = 2.0
        base = simulate_stock_prices(market, a0=95.0, seed=4, **STOCK_TRUTH)
        doubled = simulate_stock_prices(
            market,
            a0=95.0 * scale,
            a=STOCK_TRUTH["a"] * scale,
            mu=STOCK_TRUTH["mu"],
            v=STOCK_TRUTH["v"] * scale,
            sigma=STOCK_TRUTH["sigma"],
            gamma=STOCK_TRUTH["gamma"] * scale,
            seed=4,
        )
        norms = []
        for series in (base, doubled):
            fit = fit_risky_params(price_changes(series), series.values[:-1], path, 1.0)
            n = reparameterize(fit)
            norms.append(
                np.array([n.a_over_a0, n.mu, n.v_over_a0, n.sigma, n.gamma_over_a0])
            )
        norm_gap = float(np.max(np.abs(norms[0] - norms[1]) / np.abs(norms[0])))
        ok = rho_gap <= 1e-10 and r_gap <= 1e-10 and norm_gap <= 1e-8
        report(
            capsys, 7, "scaling invariance", ok,
            f"rho gap={rho_gap:.2e} r gap={r_gap:.2e} normalized gap={norm_gap:.2e}",
        )

    def test_08_csyip_convergence(self, capsys):
        m, n = 10_000, 1024
        spec = FilterSpec(d=1.0, kind="linear")
        t0 = time.perf_counter()
        rng = np.random.default_rng(8)
        dt = 1.0 / n
        sqrt_dt = math.sqrt(dt)
        xi = np.where(rng.random((m, n)) < 0.5, 1.0, -1.0)
        x_prev = np.concatenate(
            [np.zeros((m, 1)), np.cumsum(xi, axis=1)[:, :-1]], axis=1
        ) * sqrt_dt
        x1 = xi.sum(axis=1) * sqrt_dt
        y1 = (xi * h_eval(x_prev, spec)).sum(axis=1) * sqrt_dt
        elapsed = time.perf_counter() - t0

        # The vectorized sweep must agree exactly with the library recursions.
        for row in (0, m // 2, m - 1):
            x_lib = cumulative_path(xi[row], dt)
            np.testing.assert_array_equal(x_lib[:-1], x_prev[row])
            assert x_lib[-1] == x1[row]
            assert integral_path(xi[row], x_lib, spec, dt)[-1] == pytest.approx(
                y1[row], abs=1e-15
            )

        mean_x = float(x1.mean())
        var_x = float(x1.var(ddof=1))
        var_y = float(y1.var(ddof=1))
        ok = (
            abs(mean_x) <= 3.0 / math.sqrt(m)
            and 0.95 <= var_x <= 1.05
            and 0.45 <= var_y <= 0.55
            and elapsed < 60.0
        )
        report(
            capsys, 8, "sign-walk convergence", ok,
            f"|mean X1|={abs(mean_x):.4f} var X1={var_x:.4f} var Y1={var_y:.4f} "
            f"runtime={elapsed:.1f}s",
        )

    def test_09_esg_identities(self, capsys):
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(50, 400))
            calendar = weekday_calendar(n)
            prices = PriceSeries(calendar, rng.uniform(20.0, 300.0, n))
            rel = RelEsgSeries(calendar, rng.uniform(-0.5, 0.5, n))
            gamma = float(rng.uniform(-1.0, 1.0))
            adjusted = esg_adjusted_prices(prices, rel, gamma)

            a, za = prices.values, rel.rel * prices.values
            tol_scale = float(np.max(np.abs(a))) ** 2
            mean_gap = abs(adjusted.values.mean() - (a.mean() + gamma * za.mean()))
            cov = float(np.cov(a, za, ddof=1)[0, 1])
            var_gap = abs(
                adjusted.values.var(ddof=1)
                - (a.var(ddof=1) + 2.0 * gamma * cov + gamma**2 * za.var(ddof=1))
            )
            diff_gap = float(
                np.max(np.abs(np.diff(adjusted.values) - (np.diff(a) + gamma * np.diff(za))))
            )
            worst = max(worst, mean_gap / tol_scale, var_gap / tol_scale, diff_gap / tol_scale)
        ok = worst <= 1e-12
        report(
            capsys, 9, "affinity-adjustment identities", ok,
            f"worst scaled gap={worst:.2e} over 20 randomized series",
        )

    def test_10_memory_contract(self, capsys, warm_kernel):
        rng = np.random.default_rng(10)
        params, riskless, config = draw_admissible(rng, 24)
        peaks = {}
        for maturity in (10, 20, 24):
            stats = TraversalStats()
            t0 = time.perf_counter()
            price_european(
                OptionSpec("call", strike=config.a0, maturity=maturity),
                params, riskless, config, stats=stats,
            )
            if maturity == 24:
                single_runtime = time.perf_counter() - t0
                single_nodes = stats.nodes_visited
            peaks[maturity] = stats.peak_frames

        stats = TraversalStats()
        t0 = time.perf_counter()
        price_surface(
            list(np.linspace(0.9, 1.1, 10) * config.a0), [24],
            OptionSpec("call"), params, riskless, config, stats=stats,
        )
        surface_runtime = time.perf_counter() - t0
        shared = stats.nodes_visited == single_nodes == 2**25 - 1

        ok = (
            all(peaks[t] <= t + 1 for t in (10, 20, 24))
            and single_runtime < 60.0
            and surface_runtime < 90.0
            and shared
            and stats.peak_frames <= 25
        )
        report(
            capsys, 10, "memory contract", ok,
            f"peaks={peaks} T=24 single={single_runtime:.1f}s "
            f"10-strike surface={surface_runtime:.1f}s shared-traversal={shared}",
        )

    def test_11_reference_fixtures(self, capsys, tmp_path):
        # The published study inputs are proprietary vendor feeds, so its
        # tables and figures are not reproducible here; the bundled fixtures
        # document schema and magnitudes, and this criterion checks only
        # that they serialize losslessly and mirror the local report shape.
        paths = save_reference_fixtures(tmp_path)
        loaded = load_reference_fixtures(tmp_path)
        round_trip = loaded["calibration_reference.json"] == reference_calibration_reports()
        local_shape = set(reference_calibration_reports()[0]) <= {
            "ticker", "gamma_esg", "a", "mu", "v", "sigma", "gamma",
            "delta", "adj_r2", "a0", "normalized",
        }
        ok = len(paths) == 4 and round_trip and local_shape
        report(
            capsys, 11, "reference fixtures (documented, not reproducible)", ok,
            f"4 fixture files round-trip={round_trip}; value reproduction is "
            f"out of scope (proprietary inputs)",
        )
