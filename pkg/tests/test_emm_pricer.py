from unittest import TestCase, mock

import numpy as np

from src.constants import SHOCK_QUADRATURE_MAX_DOUBLINGS, SHOCK_QUADRATURE_PANELS
from src.errors import QuadratureError, ValidationError
from src.model.model_types import Measure, ModelParams, Payoff, PayoffKind, Regime
from src.pde.grid import GridSpec
from src.pricing.black_scholes import bs_price
from src.pricing.emm import (
    extrapolated_linear_price,
    linear_price,
    memm_vs_mmm_spread,
    richardson,
    single_shock_memm_price,
    single_shock_memm_surface,
)

CALL = Payoff(PayoffKind.VANILLA_CALL, 10.0)
DIGITAL = Payoff(PayoffKind.DIGITAL_CALL, 10.0)
SPOTS = (8.0, 10.0, 12.0)
TABLE_PARAMS = ModelParams()
# the published digital quotes at S = 10 and 12 sit about 2.1e-3 above the converged value
PUBLISHED_TOLERANCE = 2.5e-3


def coarse_grid(params=TABLE_PARAMS, n_time=500):
    return GridSpec.build(params, 10.0, n_time)


class TestPublishedLinearPrices(TestCase):
    @classmethod
    def setUpClass(cls):
        grid = GridSpec.build(TABLE_PARAMS, 10.0)
        cls.results = {
            (payoff.kind, measure): linear_price(TABLE_PARAMS, payoff, measure, grid)
            for payoff in (CALL, DIGITAL)
            for measure in (Measure.MMM, Measure.MEMM)
        }

    def test_published_values(self):
        expected = {
            (PayoffKind.VANILLA_CALL, Measure.MEMM): (0.3235, 1.1466, 2.5034),
            (PayoffKind.VANILLA_CALL, Measure.MMM): (0.3236, 1.1467, 2.5035),
            (PayoffKind.DIGITAL_CALL, Measure.MEMM): (0.1801, 0.4447, 0.6897),
            (PayoffKind.DIGITAL_CALL, Measure.MMM): (0.1801, 0.4447, 0.6897),
        }
        for key, prices in expected.items():
            for spot, price in zip(SPOTS, prices):
                with self.subTest(kind=key[0].value, measure=key[1].value, spot=spot):
                    self.assertAlmostEqual(
                        self.results[key].quote(spot), price, delta=PUBLISHED_TOLERANCE
                    )

    def test_terminal_rows_are_the_payoff(self):
        for result in self.results.values():
            self.assertEqual(result.surface_p.payoff_gap(), 0.0)
            self.assertEqual(result.surface_q.payoff_gap(), 0.0)

    def test_default_grid_shape(self):
        grid = self.results[PayoffKind.VANILLA_CALL, Measure.MEMM].grid
        self.assertEqual(grid.n_time, 2000)
        self.assertAlmostEqual(grid.delta_z, 0.00671, delta=1e-5)
        self.assertTrue(500 <= grid.n_space + 1 <= 560)

    def test_measures_nearly_agree_on_digitals(self):
        memm = self.results[PayoffKind.DIGITAL_CALL, Measure.MEMM].quote(12.0)
        mmm = self.results[PayoffKind.DIGITAL_CALL, Measure.MMM].quote(12.0)
        self.assertLess(abs(mmm - memm), 1e-4)


class TestLinearPrice(TestCase):
    def setUp(self):
        self.grid = coarse_grid()

    def test_no_shocks_gives_black_scholes(self):
        params = TABLE_PARAMS.replace(nu01=0.0)
        for payoff in (CALL, DIGITAL):
            result = linear_price(params, payoff, Measure.MEMM, coarse_grid(params))
            for spot in SPOTS:
                with self.subTest(kind=payoff.kind.value, spot=spot):
                    self.assertAlmostEqual(
                        result.quote(spot), bs_price(payoff, 1.0, spot), delta=3e-3
                    )

    def test_entropy_price_below_minimal_martingale_price(self):
        memm = linear_price(TABLE_PARAMS, CALL, Measure.MEMM, self.grid).surface_p.initial
        mmm = linear_price(TABLE_PARAMS, CALL, Measure.MMM, self.grid).surface_p.initial
        inner = (self.grid.spots > 5.0) & (self.grid.spots < 20.0)
        slack = 1e-6 * np.max(np.abs(mmm[inner]))
        self.assertTrue(np.all(memm[inner] <= mmm[inner] + slack))

    def test_digital_prices_stay_in_the_unit_interval(self):
        for measure in (Measure.MMM, Measure.MEMM):
            result = linear_price(TABLE_PARAMS, DIGITAL, measure, self.grid)
            for surface in (result.surface_p, result.surface_q):
                self.assertGreaterEqual(surface.values.min(), -1e-12)
                self.assertLessEqual(surface.values.max(), 1.0 + 1e-12)

    def test_illiquid_quote(self):
        result = linear_price(TABLE_PARAMS, CALL, Measure.MEMM, self.grid)
        self.assertEqual(result.quote(10.0, regime=Regime.ILLIQUID), result.surface_q.quote(10.0))
        self.assertNotEqual(result.quote(10.0, regime=Regime.ILLIQUID), result.quote(10.0))

    def test_surfaces_are_read_only(self):
        result = linear_price(TABLE_PARAMS, CALL, "MMM", self.grid)
        with self.assertRaises(ValueError):
            result.surface_p.values[0, 0] = 1.0

    def test_time_refinement_converges(self):
        quotes = [
            linear_price(TABLE_PARAMS, CALL, Measure.MEMM, coarse_grid(n_time=n)).quote(10.0)
            for n in (100, 200, 400, 800)
        ]
        changes = np.abs(np.diff(quotes))
        self.assertLess(changes[-1], changes[0])
        self.assertLess(changes[-1], 2e-3)

    def test_unsupported_measure(self):
        with self.assertRaises(ValidationError):
            linear_price(TABLE_PARAMS, CALL, Measure.PHYSICAL, self.grid)

    def test_too_coarse_grid(self):
        with self.assertRaises(ValidationError):
            GridSpec(1.0, 0.3, 10, 1, 0.0)
        with self.assertRaises(ValidationError):
            GridSpec.build(TABLE_PARAMS, 10.0, 100, width_sd=1e-9)

    def test_spot_outside_grid(self):
        result = linear_price(TABLE_PARAMS, CALL, Measure.MMM, self.grid)
        with self.assertRaises(ValidationError):
            result.quote(1000.0)


class TestSpread(TestCase):
    def test_call_spread_is_small_and_positive(self):
        spread = memm_vs_mmm_spread(TABLE_PARAMS, CALL, 10.0, coarse_grid())
        self.assertGreater(spread, 0.0)
        self.assertLess(spread, 5e-4)

    def test_no_shocks_no_spread(self):
        params = TABLE_PARAMS.replace(nu01=0.0)
        spread = memm_vs_mmm_spread(params, CALL, 10.0, coarse_grid(params, 100))
        self.assertAlmostEqual(spread, 0.0, places=12)


class TestSingleShockPrice(TestCase):
    def test_no_shocks_gives_black_scholes(self):
        params = TABLE_PARAMS.replace(nu01=0.0)
        for payoff in (CALL, DIGITAL):
            for spot in SPOTS:
                self.assertAlmostEqual(
                    single_shock_memm_price(params, payoff, 0.25, spot),
                    bs_price(payoff, 0.75, spot),
                    places=12,
                )

    def test_call_loses_time_value(self):
        for spot in SPOTS:
            price = single_shock_memm_price(TABLE_PARAMS, CALL, 0.0, spot)
            self.assertLessEqual(price, bs_price(CALL, 1.0, spot))
            self.assertGreaterEqual(price, max(spot - 10.0, 0.0))

    def test_digital_between_black_scholes_and_full_model(self):
        price = single_shock_memm_price(TABLE_PARAMS, DIGITAL, 0.0, 10.0)
        self.assertGreater(price, 0.4404)
        self.assertLess(price, 0.4450)

    def test_matches_finite_difference_route(self):
        surface = single_shock_memm_surface(TABLE_PARAMS, DIGITAL, coarse_grid())
        for spot in SPOTS:
            with self.subTest(spot=spot):
                self.assertAlmostEqual(
                    surface.quote(spot),
                    single_shock_memm_price(TABLE_PARAMS, DIGITAL, 0.0, spot),
                    delta=3e-3,
                )

    def test_invalid_time(self):
        with self.assertRaises(ValidationError):
            single_shock_memm_price(TABLE_PARAMS, CALL, 1.0, 10.0)

    def test_quadrature_cap(self):
        with mock.patch("src.pricing.emm.SHOCK_QUADRATURE_TOL", 0.0):
            with self.assertRaises(QuadratureError) as ctx:
                single_shock_memm_price(TABLE_PARAMS, DIGITAL, 0.0, 10.0)
        message = str(ctx.exception)
        self.assertIn(f"{SHOCK_QUADRATURE_MAX_DOUBLINGS} panel doublings", message)
        final = SHOCK_QUADRATURE_PANELS * 2**SHOCK_QUADRATURE_MAX_DOUBLINGS
        self.assertIn(f"{final} panels per axis", message)


class TestRichardson(TestCase):
    def test_cancels_first_order_error(self):
        exact, slope = 1.25, 3.0
        for fine_steps, coarse_steps in ((400, 200), (300, 100)):
            with self.subTest(fine=fine_steps, coarse=coarse_steps):
                value = richardson(
                    exact + slope / fine_steps,
                    exact + slope / coarse_steps,
                    fine_steps / coarse_steps,
                )
                self.assertAlmostEqual(float(value), exact, places=12)

    def test_ratio_must_exceed_one(self):
        for ratio in (1.0, 0.5):
            with self.assertRaises(ValidationError):
                richardson(1.0, 1.0, ratio)

    def test_extrapolated_quote(self):
        quote = extrapolated_linear_price(TABLE_PARAMS, CALL, Measure.MEMM, SPOTS, n_time=400)
        self.assertEqual(quote.spots, SPOTS)
        self.assertEqual(quote.n_time, 400)
        self.assertEqual(quote.values.shape, (3,))
        self.assertTrue(np.all(quote.error >= 0.0))
        plain = linear_price(TABLE_PARAMS, CALL, Measure.MEMM, coarse_grid(n_time=400))
        for k, spot in enumerate(SPOTS):
            self.assertAlmostEqual(quote.values[k], plain.quote(spot), delta=2e-3)

    def test_needs_four_steps(self):
        with self.assertRaises(ValidationError):
            extrapolated_linear_price(TABLE_PARAMS, CALL, Measure.MMM, SPOTS, n_time=3)
