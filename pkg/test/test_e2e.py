import contextlib
import dataclasses
import io
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import pandas as pd

from tds_optimizer.exporter import read_summary
from tds_optimizer.main import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, async_main
from tds_optimizer.model import OBSERVATIONS, DegenerateDenominatorError, ModelParameters, write_parameters

SMALL_EXPERIMENT = """\
# [experiment]
REPETITIONS=2
BASE_SEED=3
CONVERGENCE_GRID_STRIDE=50
# [engine]
ENGINE_POPULATION_SIZE=20
ENGINE_OFFSPRING_SIZE=4
ENGINE_EVALUATION_BUDGET=200
# [caste]
CASTE_NUMBER_OF_CASTES=2
# [separated]
SEPARATED_NUMBER_OF_CASTES=2
SEPARATED_ASSIGN_CASTES_INTERVAL=100
# [topsis]
TOPSIS_BEST_INDIVIDUALS_COUNT=5
TOPSIS_WORST_INDIVIDUALS_COUNT=5
"""

FEASIBLE = ModelParameters(
    b0=1.0, b0_tau=0.5, tau0=1.0, tau=1.0, a2=3.0, a1=3.0, a0=0.5, a0_theta=0.3, theta=1.0,
)


class TestCommandLine(unittest.IsolatedAsyncioTestCase):
    """Сквозные сценарии подкоманд без сети и без внешних файлов."""

    async def asyncSetUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.root = Path(self.tmpdir.name)
        self.config_path = self.root / "experiment.env"
        self.config_path.write_text(SMALL_EXPERIMENT, encoding="utf-8")

    async def asyncTearDown(self):
        self.tmpdir.cleanup()

    async def invoke(self, *argv: str):
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer), contextlib.redirect_stderr(io.StringIO()):
            code = await async_main(list(argv))
        return code, buffer.getvalue()

    async def test_run(self):
        out = self.root / "run"
        code, output = await self.invoke("run", "--config", str(self.config_path), "--out", str(out), "-q")
        self.assertEqual(code, EXIT_OK, output)
        self.assertIn("genetic", output)

        summary = read_summary(out / "summary.csv")
        self.assertEqual([s.algorithm for s in summary], ["genetic"])
        finals = pd.read_csv(out / "finals.csv")
        self.assertEqual(finals["seed"].tolist(), [3, 4])
        self.assertTrue((out / "resolved_config.env").exists())
        self.assertTrue((out / "bode_genetic.csv").exists())

    async def test_compare_matches_run(self):
        code, output = await self.invoke("compare", "--config", str(self.config_path), "--out", str(self.root / "cmp"), "-q")
        self.assertEqual(code, EXIT_OK, output)
        code, output = await self.invoke("run", "--config", str(self.config_path), "--out", str(self.root / "run"), "-q")
        self.assertEqual(code, EXIT_OK, output)

        compared = read_summary(self.root / "cmp" / "summary.csv")
        single = read_summary(self.root / "run" / "summary.csv")
        self.assertEqual([s.algorithm for s in compared], ["genetic", "caste", "separated", "topsis"])
        self.assertEqual(compared[0], single[0])

    async def test_resolved_config_reproduces_run(self):
        first = self.root / "first"
        code, _ = await self.invoke("run", "--config", str(self.config_path), "--out", str(first), "-q")
        self.assertEqual(code, EXIT_OK)

        echo = first / "resolved_config.env"
        second = self.root / "second"
        code, _ = await self.invoke("run", "--config", str(echo), "--out", str(second), "-q")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual((first / "summary.csv").read_bytes(), (second / "summary.csv").read_bytes())

    async def test_resume(self):
        out = self.root / "resume"
        argv = ("run", "--config", str(self.config_path), "--out", str(out), "-q", "--resume")
        code, _ = await self.invoke(*argv)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(list((out / "checkpoints").glob("genetic_*.json"))), 2)
        before = (out / "summary.csv").read_bytes()

        code, _ = await self.invoke(*argv)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual((out / "summary.csv").read_bytes(), before)

    async def test_check_feasible(self):
        params = write_parameters(FEASIBLE, self.root / "params.csv")
        code, output = await self.invoke("check", str(params))
        self.assertEqual(code, EXIT_OK, output)
        self.assertIn("Модель допустима", output)

    async def test_check_negative_delay(self):
        params = write_parameters(dataclasses.replace(FEASIBLE, tau=-1.0), self.root / "params.csv")
        code, output = await self.invoke("check", str(params))
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("НАРУШЕНО", output)

    async def test_check_undefined_static_gain(self):
        params = write_parameters(dataclasses.replace(FEASIBLE, a0=1.0, a0_theta=-1.0), self.root / "params.csv")
        code, output = await self.invoke("check", str(params))
        self.assertEqual(code, EXIT_VALIDATION, output)
        self.assertIn("Статический коэффициент не определен", output)
        self.assertIn("НАРУШЕНО", output)

    async def test_run_reports_skipped_curves(self):
        out = self.root / "run"
        with mock.patch("tds_optimizer.exporter.bode_points", side_effect=DegenerateDenominatorError("нулевой модуль")):
            code, output = await self.invoke("run", "--config", str(self.config_path), "--out", str(out), "-q")
        self.assertEqual(code, EXIT_OK, output)
        self.assertIn("Кривые Боде и Найквиста не построены", output)
        self.assertIn("genetic: нулевой модуль", output)
        self.assertFalse((out / "bode_genetic.csv").exists())
        self.assertTrue((out / "summary.csv").exists())

    async def test_check_malformed_parameters(self):
        params = self.root / "params.csv"
        params.write_text("name,value\nb0,1.0\nalpha,2.0\n", encoding="utf-8")
        code, _ = await self.invoke("check", str(params))
        self.assertEqual(code, EXIT_VALIDATION)

    async def test_plot_data(self):
        params = write_parameters(FEASIBLE, self.root / "params.csv")
        out = self.root / "plot"
        code, output = await self.invoke("plot-data", str(params), "--out", str(out))
        self.assertEqual(code, EXIT_OK, output)

        bode = pd.read_csv(out / "bode.csv")
        self.assertEqual(list(bode.columns), ["omega", "mag_db", "phase_deg"])
        self.assertEqual(len(bode), 500)
        self.assertEqual(len(pd.read_csv(out / "nyquist.csv")), 500)
        self.assertEqual(len(pd.read_csv(out / "dataset_bode.csv")), 20)
        nyquist = pd.read_csv(out / "dataset_nyquist.csv", float_precision="round_trip")
        self.assertEqual(list(nyquist.columns), ["re", "im"])
        self.assertEqual(
            [tuple(row) for row in nyquist.itertuples(index=False)],
            [(re_value, im_value) for _, re_value, im_value in OBSERVATIONS],
        )

    async def test_plot_data_grid_flags(self):
        params = write_parameters(FEASIBLE, self.root / "params.csv")
        out = self.root / "plot"
        code, _ = await self.invoke("plot-data", str(params), "--out", str(out), "--points", "50", "--omega-min", "0.001")
        self.assertEqual(code, EXIT_OK)
        bode = pd.read_csv(out / "bode.csv", float_precision="round_trip")
        self.assertEqual(len(bode), 50)
        self.assertAlmostEqual(bode["omega"].iloc[0], 0.001, delta=1e-15)

    async def test_unknown_config_key(self):
        self.config_path.write_text(SMALL_EXPERIMENT + "CASTE_COUNT=3\n", encoding="utf-8")
        code, output = await self.invoke("run", "--config", str(self.config_path), "--out", str(self.root / "x"))
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("CASTE_COUNT", output)

    async def test_invalid_value(self):
        code, output = await self.invoke("run", "--config", str(self.config_path), "--jobs", "0", "--out", str(self.root / "x"))
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertIn("JOBS", output)

    async def test_bad_arguments(self):
        code, _ = await self.invoke("run", "--budget", "many")
        self.assertEqual(code, EXIT_VALIDATION)

    async def test_unwritable_output(self):
        blocker = self.root / "file"
        blocker.write_text("x", encoding="utf-8")
        code, _ = await self.invoke("run", "--config", str(self.config_path), "--out", str(blocker / "out"), "-q")
        self.assertEqual(code, EXIT_RUNTIME)


if __name__ == "__main__":
    unittest.main()
