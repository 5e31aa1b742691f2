# This file is part of ts_cherry.
#
# Developed for the Vera C. Rubin Observatory Telescope and Site Systems.
# This product includes software developed by the LSST Project
# (https://www.lsst.org).
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.


import json
import pathlib
import tempfile
import types
import unittest
from unittest import mock

import mpmath
import pytest
from lsst.ts import cherry
from lsst.ts.cherry import kernel


class PersistenceTestCase(cherry.BaseMapTestCase):
    def setUp(self) -> None:
        super().setUp()
        self.tempdir = tempfile.TemporaryDirectory()
        self.root = pathlib.Path(self.tempdir.name)

    def tearDown(self) -> None:
        self.tempdir.cleanup()

    def test_write_json(self) -> None:
        path = self.root / "sub" / "data.json"
        cherry.write_json(path, {"b": 1, "a": [1, 2]})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [1, 2], "b": 1}
        assert [p.name for p in path.parent.iterdir()] == ["data.json"]

    def test_write_csv(self) -> None:
        path = self.root / "rows.csv"
        cherry.write_csv(path, ["n", "alpha"], [["3", "0.5"], ["4", "0.25"]])
        assert path.read_text().splitlines() == ["n,alpha", "3,0.5", "4,0.25"]

    def test_map_round_trip(self) -> None:
        m = self.run_map("3", "3").circle_map
        path = self.root / "map.json"
        cherry.save_map(path, m)
        data = json.loads(path.read_text())
        assert data["format"] == "ts_cherry.map/1"
        assert data["tuned_depth"] == 6
        assert data["rho_spec"] == "golden"
        assert data["rho_target"] == [1] * (6 + cherry.TUNING_MARGIN + 1)
        for key in ("ell1", "ell2", "u_left", "u_length", "c", "precision_bits"):
            assert key in data
        loaded = cherry.load_map(path)
        assert loaded.precision_bits == m.precision_bits
        assert loaded.tuned_depth == 6
        assert loaded.rho_target == m.rho_target
        assert loaded.lift_parameter.value == m.lift_parameter.value
        with mpmath.workprec(m.precision_bits):
            drift = kernel.circle_distance(loaded.c.value, m.c.value)
            assert drift < mpmath.mpf("1e-60")

    def test_plain_descriptor(self) -> None:
        m = self.run_map("3", "3").circle_map
        data = cherry.map_to_dict(m)
        plain = {
            key: data[key]
            for key in (
                "ell1",
                "ell2",
                "u_left",
                "u_length",
                "c",
                "precision_bits",
                "rho_target",
                "tuned_depth",
            )
        }
        loaded = cherry.map_from_dict(json.loads(json.dumps(plain)))
        assert loaded.rho_target == cherry.ContinuedFraction(
            tuple(data["rho_target"]), None
        )
        assert loaded.rho_target.available == 6 + cherry.TUNING_MARGIN + 1
        assert cherry.convergents(loaded.rho_target, 6).q[-1] == 13
        with mpmath.workprec(m.precision_bits):
            assert kernel.circle_distance(loaded.c.value, m.c.value) < 1e-60
            assert abs(loaded.flat.length.value - m.flat.length.value) < 1e-60
        untargeted = cherry.map_from_dict(dict(plain, rho_target=[]))
        assert untargeted.rho_target is None

    def test_bad_map_descriptor(self) -> None:
        data = cherry.map_to_dict(self.run_map("3", "3").circle_map)
        with pytest.raises(cherry.DomainError):
            cherry.map_from_dict(dict(data, format="other/1"))
        with pytest.raises(cherry.DomainError):
            cherry.map_from_dict(dict(data, rho_spec=None, rho_target="golden"))
        del data["u_length"]
        with pytest.raises(cherry.DomainError):
            cherry.map_from_dict(data)
        with pytest.raises(cherry.UsageError):
            cherry.load_map(self.root / "missing.json")

    def test_manifest(self) -> None:
        assert cherry.manifest_path("out/ratios.csv") == pathlib.Path(
            "out/ratios.csv.manifest.json"
        )
        manifest = cherry.RunManifest(
            tool_version="1.0", config={"command": "tune"}, exit_code=2
        )
        path = manifest.save(self.root / "tune.json")
        assert path.name == "tune.json.manifest.json"
        data = json.loads(path.read_text())
        assert data["exit_code"] == 2
        assert data["config"] == {"command": "tune"}
        assert data["checks"] == {}


class ConfigTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.tempdir = tempfile.TemporaryDirectory()
        self.root = pathlib.Path(self.tempdir.name)

    def tearDown(self) -> None:
        self.tempdir.cleanup()

    def write_config(self, text: str) -> pathlib.Path:
        path = self.root / "run.cfg"
        path.write_text(text)
        return path

    def test_read_config_file(self) -> None:
        path = self.write_config(
            "# golden mean run\n--l1 = 3\nl2 = 2.5  # right side\n\n"
            "depth = 7\nescalate = no\n"
        )
        assert cherry.read_config_file(path) == {
            "l1": "3",
            "l2": "2.5",
            "depth": 7,
            "escalate": False,
        }

    def test_bad_config_file(self) -> None:
        for text in ("color = red\n", "depth 7\n", "depth = seven\n"):
            with pytest.raises(cherry.UsageError):
                cherry.read_config_file(self.write_config(text))
        with pytest.raises(cherry.UsageError):
            cherry.read_config_file(self.root / "missing.cfg")

    def test_flags_override_file(self) -> None:
        path = self.write_config("l1 = 3\nl2 = 3\ndepth = 7\n")
        config = cherry.ExperimentConfig.from_sources(
            "ratios", {"depth": 5, "l1": None}, path
        )
        assert config.command == cherry.Command.RATIOS
        assert config.depth == 5
        assert config.l1 == "3"
        assert config.to_dict()["command"] == "ratios"

    def test_parse_grid(self) -> None:
        grid = cherry.parse_grid("1.5:6:0.1")
        assert len(grid) == 46
        assert grid[5] == "2.0"
        assert grid[-1] == "6.0"
        assert cherry.parse_grid("2:2:1") == ["2"]
        for text in ("1:2", "a:2:1", "1:2:0", "3:2:1"):
            with pytest.raises(cherry.UsageError):
                cherry.parse_grid(text)

    def test_validation(self) -> None:
        bad_flags = (
            ("tune", {"l1": "0.5"}),
            ("tune", {"depth": 1}),
            ("tune", {"prec": 8}),
            ("tune", {"flat": "0.4"}),
            ("tune", {"flat": "0.4,1.5"}),
            ("tune", {"rho": "[0,1]rep"}),
            ("ratios", {"first": 2}),
            ("curve", {"a": 0}),
            ("dim", {"epsilon": "0.1,-0.01"}),
            ("tune", {"color": "red"}),
            ("paint", {}),
        )
        for command, flags in bad_flags:
            with pytest.raises(cherry.UsageError):
                cherry.ExperimentConfig.from_sources(command, flags)

    def test_precision_cap_from_env(self) -> None:
        with mock.patch.dict("os.environ", {cherry.PRECISION_CAP_ENV: "512"}):
            config = cherry.ExperimentConfig.from_sources("tune", {})
            assert config.precision_cap == 512
            with pytest.raises(cherry.UsageError):
                cherry.ExperimentConfig.from_sources("tune", {"prec": 1024})
        with mock.patch.dict("os.environ", {cherry.PRECISION_CAP_ENV: "lots"}):
            with pytest.raises(cherry.UsageError):
                cherry.precision_cap_from_env()

    def test_output_path(self) -> None:
        config = cherry.ExperimentConfig(command=cherry.Command.CURVE)
        assert config.output_path() == pathlib.Path("curve.csv")
        config = cherry.ExperimentConfig(command=cherry.Command.TUNE, out="a/b.json")
        assert config.output_path() == pathlib.Path("a/b.json")
        assert cherry.ExperimentConfig(
            command=cherry.Command.CURVE, l1="1.5:2:0.25"
        ).ell1_grid() == ["1.50", "1.75", "2.00"]


class ExperimentRunnerTestCase(cherry.BaseMapTestCase):
    def test_loaded_map_too_shallow(self) -> None:
        m = self.run_map("3", "3").circle_map
        with tempfile.TemporaryDirectory() as tempdir:
            path = pathlib.Path(tempdir) / "map.json"
            cherry.save_map(path, m)
            config = cherry.ExperimentConfig(
                command=cherry.Command.RATIOS, map=str(path), depth=8
            )
            config.validate()
            runner = cherry.ExperimentRunner(config, log=self.log)
            with pytest.raises(cherry.DepthError):
                runner.run()

    def test_loaded_map_is_reused(self) -> None:
        m = self.run_map("3", "3").circle_map
        with tempfile.TemporaryDirectory() as tempdir:
            path = pathlib.Path(tempdir) / "map.json"
            cherry.save_map(path, m)
            config = cherry.ExperimentConfig(
                command=cherry.Command.TUNE, map=str(path), depth=6
            )
            runner = cherry.ExperimentRunner(config, log=self.log)
            result = runner.run(with_series=False)
        assert result.geometry is None
        assert result.circle_map.lift_parameter.value == m.lift_parameter.value

    def test_escalation(self) -> None:
        config = cherry.ExperimentConfig(command=cherry.Command.RATIOS, depth=6)
        runner = cherry.ExperimentRunner(config, log=self.log)
        done = types.SimpleNamespace(escalations=[])
        with mock.patch.object(
            runner,
            "_run_at",
            side_effect=[cherry.PrecisionError("too short", level=4), done],
        ) as run_at:
            result = runner.run()
        assert result is done
        assert result.escalations == [
            {"from_bits": config.prec, "level": 4, "reason": "too short"}
        ]
        assert run_at.call_args.args[0] == 2 * config.prec

    def test_escalation_refused(self) -> None:
        error = cherry.PrecisionError("too short", level=4)
        for config in (
            cherry.ExperimentConfig(command=cherry.Command.RATIOS, escalate=False),
            cherry.ExperimentConfig(
                command=cherry.Command.RATIOS, prec=256, precision_cap=256
            ),
        ):
            runner = cherry.ExperimentRunner(config, log=self.log)
            with mock.patch.object(runner, "_run_at", side_effect=[error]):
                with pytest.raises(cherry.PrecisionError):
                    runner.run()

    def test_series_difference(self) -> None:
        series = self.run_map("3", "3").series
        assert cherry.series_difference(series, series) == 0

    def test_loaded_map_lacks_precision(self) -> None:
        m = self.run_map("3", "3").circle_map
        with tempfile.TemporaryDirectory() as tempdir:
            path = pathlib.Path(tempdir) / "map.json"
            cherry.save_map(path, m)
            config = cherry.ExperimentConfig(
                command=cherry.Command.RATIOS, map=str(path), depth=6, prec=512
            )
            runner = cherry.ExperimentRunner(config, log=self.log)
            with pytest.raises(cherry.PrecisionError) as excinfo:
                runner.run()
        assert not excinfo.value.escalate
        assert "256 bits" in str(excinfo.value)

    def test_precision_audit(self) -> None:
        config = cherry.ExperimentConfig(
            command=cherry.Command.VERIFY, l1="3", l2="3", depth=6
        )
        runner = cherry.ExperimentRunner(config, log=self.log)
        result = runner.run()
        audit = runner.audit_precision(result)
        assert audit["bits"] == result.precision_bits
        assert audit["doubled_bits"] == 2 * result.precision_bits
        assert audit["passed"]
        assert float(audit["difference"]) <= float(audit["tolerance"])

    def test_precision_audit_mismatch(self) -> None:
        result = self.run_map("3", "3")
        other = self.run_map("2.5", "2.5")
        config = cherry.ExperimentConfig(command=cherry.Command.VERIFY, depth=6)
        runner = cherry.ExperimentRunner(config, log=self.log)
        with mock.patch.object(runner, "_run_at", return_value=other) as run_at:
            audit = runner.audit_precision(result)
        bits = 2 * result.precision_bits
        assert run_at.call_args.args[:2] == (bits, result.circle_map)
        assert not audit["passed"]
        assert float(audit["difference"]) > float(audit["tolerance"])

    def test_precision_audit_above_cap(self) -> None:
        result = self.run_map("3", "3")
        config = cherry.ExperimentConfig(
            command=cherry.Command.VERIFY, depth=6, precision_cap=256
        )
        runner = cherry.ExperimentRunner(config, log=self.log)
        with pytest.raises(cherry.PrecisionError) as excinfo:
            runner.audit_precision(result)
        assert not excinfo.value.escalate
