import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import TestCase

import pandas as pd
from click.testing import CliRunner

from src.cli.app import _check_acceptance, cli
from src.cli.commands import cmd_hedge, cmd_ttm
from src.cli.config import RunConfig, load_config, parse_config
from src.constants import EXIT_CONFIG_ERROR, EXIT_OK
from src.errors import AcceptanceError, ConfigError
from src.model.model_types import ModelParams, Payoff, PayoffKind
from src.pricing.black_scholes import bs_price

CALL = Payoff(PayoffKind.VANILLA_CALL, 10.0)
FAST = ["--nsteps", "40", "--spots", "10", "--contracts", "1,-1"]


class TestConfig(TestCase):
    def test_defaults_reproduce_the_parameter_table(self):
        config = load_config(None)
        self.assertEqual(config.model_params(), ModelParams())
        self.assertEqual(config.spots, (8.0, 10.0, 12.0))
        self.assertEqual(config.contracts, (10.0, 5.0, 1.0, -1.0, -5.0, -10.0))

    def test_parse(self):
        config = parse_config(
            "# run\ngamma = 2   # risk aversion\nspots = 8, 10\npayoff = DIGITAL_CALL\n"
            "antithetic = yes\n\nnsteps=100\n"
        )
        self.assertEqual(config.gamma, 2.0)
        self.assertEqual(config.spots, (8.0, 10.0))
        self.assertEqual(config.payoff, PayoffKind.DIGITAL_CALL)
        self.assertTrue(config.antithetic)
        self.assertEqual(config.nsteps, 100)
        self.assertEqual(parse_config("times = 0, 0.5").times, (0.0, 0.5))

    def test_errors_name_the_key(self):
        cases = {
            "nu02 = 1": "nu02",
            "gamma = abc": "gamma",
            "payoff = butterfly": "payoff",
            "antithetic = maybe": "antithetic",
            "gamma 2": "line 1",
        }
        for text, key in cases.items():
            with self.subTest(text=text):
                with self.assertRaises(ConfigError) as ctx:
                    parse_config(text)
                self.assertEqual(ctx.exception.key, key)

    def test_validate(self):
        for changes, key in (
            (dict(spots=()), "spots"),
            (dict(spots=(-1.0,)), "spots"),
            (dict(contracts=(1.0, 0.0)), "contracts"),
            (dict(nsteps=0), "nsteps"),
            (dict(sweep_points=1), "sweep_points"),
            (dict(times=()), "times"),
            (dict(times=(1.0,)), "times"),
            (dict(times=(-0.1,)), "times"),
        ):
            with self.subTest(key=key):
                with self.assertRaises(ConfigError) as ctx:
                    RunConfig(**changes).validate()
                self.assertEqual(ctx.exception.key, key)

    def test_override_skips_missing_values(self):
        config = RunConfig().override(gamma=None, seed=7)
        self.assertEqual(config.gamma, RunConfig().gamma)
        self.assertEqual(config.seed, 7)

    def test_missing_file(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config("/nonexistent/run.cfg")
        self.assertEqual(ctx.exception.key, "config")


class TestReports(TestCase):
    def setUp(self):
        self.config = RunConfig(nsteps=100, spots=(10.0,), contracts=(1.0,), sweep_points=3)

    def test_ttm_report(self):
        frame = cmd_ttm(self.config)
        self.assertEqual(len(frame), 6)
        self.assertEqual(
            list(frame.columns),
            [
                "sweep",
                "t",
                "spot",
                "n",
                "remaining",
                "adjusted_ttm",
                "adjusted_ttm_memm",
                "implied_ttm",
            ],
        )
        first = frame.iloc[0]
        self.assertEqual(first["t"], 0.0)
        self.assertAlmostEqual(first["adjusted_ttm"], 0.928994, places=6)
        self.assertLess(first["adjusted_ttm_memm"], first["adjusted_ttm"])

    def test_hedge_report(self):
        frame = cmd_hedge(self.config)
        self.assertEqual(len(frame), 3)
        self.assertEqual(list(frame["spot"]), [5.0, 10.0, 15.0])
        for _, row in frame.iterrows():
            self.assertAlmostEqual(
                row["residual"], row["indiff_delta"] - row["bs_delta"], delta=1e-10
            )

    def test_digital_hedge_report_fills_only_the_residual(self):
        frame = cmd_hedge(self.config.override(payoff=PayoffKind.DIGITAL_CALL))
        self.assertTrue(frame["implied_spread"].isna().all())
        self.assertFalse(frame["residual"].isna().any())

    def test_acceptance(self):
        _check_acceptance(pd.DataFrame({"value": [1.0]}))
        _check_acceptance(pd.DataFrame({"passed": [True, True]}))
        with self.assertRaises(AcceptanceError):
            _check_acceptance(pd.DataFrame({"passed": [True, False]}))


class TestCommandLine(TestCase):
    def setUp(self):
        self.runner = CliRunner()

    def test_price(self):
        result = self.runner.invoke(cli, ["price", *FAST])
        self.assertEqual(result.exit_code, EXIT_OK, msg=result.output)
        frame = pd.read_csv(StringIO(result.output))
        self.assertEqual(
            list(frame.columns), ["method", "kind", "t", "spot", "n", "gamma", "price"]
        )
        self.assertEqual(
            set(frame["method"]),
            {"BS", "AdjBS", "MMM", "MEMM", "IndiffBuyer", "IndiffWriter", "SingleShock", "Asympt1"},
        )
        bs = frame.loc[frame["method"] == "BS", "price"].item()
        self.assertAlmostEqual(bs, 1.1924, delta=5e-5)
        self.assertTrue(math.isnan(frame.loc[frame["method"] == "MMM", "n"].item()))
        self.assertEqual(set(frame["t"]), {0.0})

    def test_price_at_later_times(self):
        result = self.runner.invoke(cli, ["price", *FAST, "--times", "0,0.5"])
        self.assertEqual(result.exit_code, EXIT_OK, msg=result.output)
        frame = pd.read_csv(StringIO(result.output))
        self.assertEqual(set(frame["t"]), {0.0, 0.5})
        bs = frame[frame["method"] == "BS"].set_index("t")["price"]
        self.assertAlmostEqual(bs[0.5], bs_price(CALL, 0.5, 10.0), delta=5e-5)
        self.assertLess(bs[0.5], bs[0.0])
        for method, rows in (("MMM", 2), ("IndiffBuyer", 2), ("Asympt1", 4)):
            with self.subTest(method=method):
                self.assertEqual(len(frame[frame["method"] == method]), rows)

    def test_quote_time_at_maturity_is_rejected(self):
        result = self.runner.invoke(cli, ["price", *FAST, "--times", "1.0"])
        self.assertEqual(result.exit_code, EXIT_CONFIG_ERROR)
        self.assertIn("times", result.output)

    def test_price_is_deterministic(self):
        first = self.runner.invoke(cli, ["price", *FAST, "--payoff", "digital_call"])
        second = self.runner.invoke(cli, ["price", *FAST, "--payoff", "digital_call"])
        self.assertEqual(first.exit_code, EXIT_OK, msg=first.output)
        self.assertEqual(first.output, second.output)

    def test_out_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "prices.csv"
            result = self.runner.invoke(cli, ["price", *FAST, "--out", str(out)])
            self.assertEqual(result.exit_code, EXIT_OK, msg=result.output)
            self.assertEqual(pd.read_csv(out).columns[0], "method")

    def test_bad_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.cfg"
            path.write_text("nu02 = 1\n")
            result = self.runner.invoke(cli, ["price", "--config", str(path)])
        self.assertEqual(result.exit_code, EXIT_CONFIG_ERROR)
        self.assertIn("nu02", result.output)

    def test_grid_too_narrow(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.cfg"
            path.write_text("width_sd = 1e-9\n")
            result = self.runner.invoke(cli, ["price", "--config", str(path), *FAST])
        self.assertEqual(result.exit_code, EXIT_CONFIG_ERROR)

    def test_ttm_rejects_digitals(self):
        result = self.runner.invoke(cli, ["ttm", *FAST, "--payoff", "digital_call"])
        self.assertEqual(result.exit_code, EXIT_CONFIG_ERROR)

    def test_bad_spot_list(self):
        result = self.runner.invoke(cli, ["price", "--spots", "ten"])
        self.assertNotEqual(result.exit_code, EXIT_OK)

    def test_converge(self):
        result = self.runner.invoke(
            cli, ["converge", "--nsteps", "400", "--spots", "10", "--paths", "20000"]
        )
        self.assertEqual(result.exit_code, EXIT_OK, msg=result.output)
        frame = pd.read_csv(StringIO(result.output))
        self.assertTrue(frame["passed"].all())
        oracle = frame[frame["check"] == "oracle"]
        self.assertEqual(len(oracle), 2)
        self.assertEqual(set(oracle["n_steps"]), {800})
