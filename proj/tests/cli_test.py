"""End-to-end checks of the extrudesim command line.

Usage: cli_test.py <extrudesim executable> <schemas dir> <presets dir>
"""

import json
import pathlib
import subprocess
import sys
import tempfile
import unittest

import jsonschema

EXE = None
SCHEMAS = None
PRESETS = None


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def run(*args):
    return subprocess.run([str(EXE), *map(str, args)], capture_output=True, text=True)


class Cli(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = pathlib.Path(self._tmp.name)
        self.case1 = PRESETS / "case1.json"

    def tearDown(self):
        self._tmp.cleanup()

    def write_sweep(self, name, doc):
        path = self.tmp / name
        path.write_text(json.dumps({"base_scenario": str(self.case1), **doc}))
        return path

    def validate_tree(self, root):
        kinds = {"metrics.json": "metrics", "summary.json": "summary", "report.json": "report"}
        seen = 0
        for path in root.rglob("*.json"):
            self.assertIn(path.name, kinds, path)
            jsonschema.validate(json.loads(path.read_text()), schema(kinds[path.name]))
            seen += 1
        return seen

    def test_run_writes_csv_and_metrics(self):
        out = self.tmp / "run"
        p = run("run", self.case1, "--out", out, "--set", "horizon_s=20")
        self.assertEqual(p.returncode, 0, p.stderr)
        self.assertEqual(sorted(f.name for f in out.iterdir()), ["metrics.json", "trajectory.csv"])
        header = (out / "trajectory.csv").read_text().splitlines()[0]
        self.assertEqual(header, "t,x1,x1r,x2,x2r,u1,u2,u_cancel,u_sm,u_opt,eta1,eta2,s,W1,W2")
        self.assertEqual(self.validate_tree(out), 1)

    def test_run_with_plot_adds_svgs(self):
        out = self.tmp / "plot"
        p = run("run", self.case1, "--out", out, "--plot", "--set", "horizon_s=20")
        self.assertEqual(p.returncode, 0, p.stderr)
        names = sorted(f.name for f in out.iterdir())
        self.assertEqual(names, ["control.svg", "metrics.json", "tracking.svg", "trajectory.csv"])
        self.assertTrue((out / "tracking.svg").read_text().startswith("<svg"))

    def test_missing_file_is_an_io_error(self):
        missing = self.tmp / "nope.json"
        p = run("run", missing, "--out", self.tmp / "x")
        self.assertEqual(p.returncode, 2)
        self.assertIn(str(missing), p.stderr)

    def test_malformed_json_is_an_io_error(self):
        bad = self.tmp / "bad.json"
        bad.write_text('{"plant": {')
        p = run("validate", bad)
        self.assertEqual(p.returncode, 2)
        self.assertIn(str(bad), p.stderr)

    def test_bound_violation_needs_force(self):
        args = ["--set", "disturbances.eta1.amplitude=-5", "--set", "horizon_s=40"]
        p = run("run", self.case1, "--out", self.tmp / "v", *args)
        self.assertEqual(p.returncode, 3)
        self.assertIn("eta1", p.stderr)
        self.assertEqual(run("validate", self.case1, *args).returncode, 3)

        out = self.tmp / "forced"
        p = run("run", self.case1, "--out", out, "--force", *args)
        self.assertEqual(p.returncode, 0, p.stderr)
        report = json.loads((out / "metrics.json").read_text())
        self.assertTrue(report["forced"])
        self.assertTrue(any(v["signal"] == "eta1" for v in report["violations"]))
        self.validate_tree(out)

    def test_unknown_key_is_rejected(self):
        p = run("validate", self.case1, "--set", "controllers.nozzle.gain=3")
        self.assertEqual(p.returncode, 3)
        self.assertIn("gain", p.stderr)

    def test_sweep_cap(self):
        sweep = self.write_sweep("cap.json", {
            "name": "cap", "max_runs": 4,
            "axes": [{"path": "controllers.strand.q", "values": [1, 2, 3, 4, 5]}]})
        out = self.tmp / "cap"
        p = run("sweep", sweep, "--out", out)
        self.assertEqual(p.returncode, 4)
        self.assertFalse(out.exists())

    def test_diverging_corner_is_recorded(self):
        sweep = self.write_sweep("div.json", {
            "name": "div",
            "axes": [{"path": "controllers.strand.opt_gain_scale", "values": [1, 10000]}]})
        out = self.tmp / "div"
        p = run("sweep", sweep, "--out", out, "--set", "controllers.strand.enable_sm=false",
                "--set", "horizon_s=20")
        self.assertEqual(p.returncode, 0, p.stderr)
        rows = (out / "results.csv").read_text().splitlines()
        status = rows[0].split(",").index("status")
        self.assertEqual([r.split(",")[status] for r in rows[1:]], ["ok", "diverged"])
        summary = json.loads((out / "summary.json").read_text())
        self.assertEqual(summary["status_counts"]["diverged"], 1)
        self.validate_tree(out)

    def test_jobs_do_not_change_outputs(self):
        sweep = self.write_sweep("grid.json", {
            "name": "grid",
            "axes": [{"path": "controllers.strand.q", "values": [0.5, 1, 4]},
                     {"path": "controllers.strand.r", "values": [0.5, 2]}],
            "monte_carlo": {"n": 3, "sampler": {
                "seed": 11, "default": {"kind": "uniform", "fraction": 0.05}}},
            "surface_metrics": ["cost_J"]})
        outs = []
        for jobs in (1, 8):
            out = self.tmp / f"j{jobs}"
            p = run("sweep", sweep, "--out", out, "--jobs", jobs, "--set", "horizon_s=20")
            self.assertEqual(p.returncode, 0, p.stderr)
            outs.append(out)
        files = sorted(f.name for f in outs[0].iterdir())
        self.assertIn("surface_cost_J.csv", files)
        self.assertEqual(files, sorted(f.name for f in outs[1].iterdir()))
        for name in files:
            self.assertEqual((outs[0] / name).read_bytes(), (outs[1] / name).read_bytes(), name)
        self.validate_tree(outs[0])

    def test_unknown_preset(self):
        p = run("preset", "case9", "--out", self.tmp / "p")
        self.assertEqual(p.returncode, 2)
        self.assertIn("case9", p.stderr)

    def test_preset_outputs_match_schemas(self):
        out = self.tmp / "case2"
        p = run("preset", "case2", "--out", out, "--plot")
        self.assertEqual(p.returncode, 0, p.stderr)
        report = json.loads((out / "report.json").read_text())
        self.assertTrue(report["passed"])
        self.assertEqual(self.validate_tree(out), 2)


if __name__ == "__main__":
    EXE, SCHEMAS, PRESETS = (pathlib.Path(a).resolve() for a in sys.argv[1:4])
    unittest.main(argv=sys.argv[:1], verbosity=2)
