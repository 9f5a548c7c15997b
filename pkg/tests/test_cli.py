import csv
import json
from importlib import resources
from pathlib import Path

import pytest

from agilesim import core
from agilesim.cli import main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


def corpus_path(name):
    return str(resources.files("agilesim.data").joinpath(name))


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestSimulateCommand:
    def test_unknown_preset_exits_2(self, capsys):
        assert main(["simulate", "--preset", "S-X", "--out", "/tmp/never"]) == 2
        assert "unknown preset" in capsys.readouterr().err

    def test_csv_contract(self, tmp_path, capsys):
        code = main(
            [
                "simulate",
                "--preset",
                "S-I",
                "--seed",
                "7",
                "--repetitions",
                "2",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        utility = read_csv(tmp_path / "utility.csv")
        assert utility[0] == ["day", "run", "allocator", "cumulative_utility"]
        # 2 runs x 100 days
        assert len(utility) == 1 + 2 * 100
        allocation_rows = read_csv(tmp_path / "allocation.csv")
        assert allocation_rows[0] == ["agent", "category", "share", "allocator"]
        shares = [float(row[2]) for row in allocation_rows[1:]]
        assert sum(shares) == pytest.approx(1.0, abs=1e-9)
        queues = read_csv(tmp_path / "queues.csv")
        assert queues[0] == [
            "day",
            "agent",
            "pending_workload",
            "congestion",
            "allocator",
        ]
        summary = read_csv(tmp_path / "summary.csv")
        assert summary[0] == [
            "scenario",
            "allocator",
            "repetitions",
            "mean_utility",
            "std_utility",
            "mean_completed",
            "mean_delay_pct",
        ]
        assert summary[1][0] == "S-I"

    def test_byte_identical_reruns(self, tmp_path):
        args = ["simulate", "--preset", "S-I", "--seed", "7", "--repetitions", "2"]
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main([*args, "--out", str(out_a)]) == 0
        assert main([*args, "--out", str(out_b)]) == 0
        assert tree_bytes(out_a) == tree_bytes(out_b)

    def test_compare_directional_summary(self, tmp_path, capsys):
        code = main(
            [
                "simulate",
                "--preset",
                "S-M",
                "--seed",
                "3",
                "--repetitions",
                "2",
                "--compare",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        summary = {row[1]: row for row in read_csv(tmp_path / "summary.csv")[1:]}
        assert set(summary) == {"SMART", "AWR"}
        assert float(summary["SMART"][3]) > float(summary["AWR"][3])
        out = capsys.readouterr().out
        assert "SMART" in out and "AWR" in out

    def test_compare_shares_arrival_schedule(self, tmp_path):
        # identical seeds means both allocators see identical arrivals;
        # day-0 cumulative utilities may differ, but run/day axes align
        code = main(
            [
                "simulate",
                "--preset",
                "S-I",
                "--seed",
                "5",
                "--repetitions",
                "1",
                "--compare",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        rows = read_csv(tmp_path / "utility.csv")[1:]
        smart_days = [(row[0], row[1]) for row in rows if row[2] == "SMART"]
        awr_days = [(row[0], row[1]) for row in rows if row[2] == "AWR"]
        assert smart_days == awr_days

    def test_scenario_file_input(self, tmp_path):
        config = core.with_overrides(core.preset("S-I"), repetitions=1)
        path = tmp_path / "scenario.json"
        core.save_scenario(config, path)
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", str(path), "--out", str(out)]) == 0
        assert (out / "summary.csv").exists()

    def test_invalid_scenario_file_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{\"name\": \"x\"}", encoding="utf-8")
        assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path)]) == 2
        assert "invalid scenario" in capsys.readouterr().err

    def test_missing_scenario_file_exits_2(self, tmp_path):
        assert (
            main(["simulate", "--scenario", "/nope.json", "--out", str(tmp_path)]) == 2
        )


class TestFcmCommand:
    def test_bundled_map_reaches_reported_equilibrium(self, tmp_path, capsys):
        code = main(
            [
                "fcm",
                "--map",
                "michael_scenario1",
                "--initial",
                "0.5,0,0",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "fixed-point" in out
        assert "0.920579" in out or "0.920580" in out
        rows = read_csv(tmp_path / "trajectory.csv")
        assert rows[0] == ["iteration", "Mood", "Progress", "Quality"]

    def test_scenario_two_from_equilibrium(self, tmp_path, capsys):
        code = main(
            [
                "fcm",
                "--map",
                "grace_scenario2",
                "--initial",
                "0.994717128,0.987922232,0.92272765,1",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "fixed-point" in out
        assert "0.960145" in out and "0.917715" in out

    def test_trivalent_outputs_discrete(self, tmp_path):
        code = main(
            [
                "fcm",
                "--map",
                "michael_scenario1",
                "--initial",
                "0.5,0,0",
                "--transform",
                "trivalent",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        rows = read_csv(tmp_path / "trajectory.csv")[2:]  # skip header + initial
        values = {float(cell) for row in rows for cell in row[1:]}
        assert values <= {-1.0, 0.0, 1.0}

    def test_dimension_mismatch_exits_2(self, tmp_path, capsys):
        code = main(
            [
                "fcm",
                "--map",
                "michael_scenario1",
                "--initial",
                "0.5,0",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 2
        assert "3-node" in capsys.readouterr().err

    def test_map_file_path(self, tmp_path):
        doc = {
            "labels": ["a", "b"],
            "weights": [[0, 0.4], [0.2, 0]],
            "transform": "sigmoid",
            "c": 5,
        }
        path = tmp_path / "map.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        assert (
            main(["fcm", "--map", str(path), "--initial", "1,0", "--out", str(tmp_path)])
            == 0
        )


class TestGoalnetCommand:
    def test_bundled_corpus(self, tmp_path, capsys):
        code = main(
            [
                "goalnet",
                "--stories",
                corpus_path("stories.json"),
                "--goals",
                corpus_path("goals.json"),
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "valid goal net" in out
        assert "4 levels" in out
        assert (tmp_path / "net.json").exists()
        dot = (tmp_path / "net.dot").read_text(encoding="utf-8")
        assert dot.startswith("digraph")

    def test_missing_story_file_exits_2(self, tmp_path, capsys):
        code = main(
            [
                "goalnet",
                "--stories",
                "/nope.json",
                "--goals",
                corpus_path("goals.json"),
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 2


LOG_HEADER = (
    "task_id,assignee_id,sprint_index,difficulty,priority,confidence,"
    "estimated_days,actual_days,quality,collaborators,mood_begin,mood_end"
)


class TestIngestCommand:
    def write_log(self, tmp_path, rows):
        path = tmp_path / "log.csv"
        path.write_text("\n".join([LOG_HEADER, *rows]) + "\n", encoding="utf-8")
        return path

    def test_all_on_time_high_quality(self, tmp_path, capsys):
        rows = [
            f"t{i},s{i % 3},1,{4 + i % 5},5,7,4,3,8,1,3,4" for i in range(9)
        ]
        path = self.write_log(tmp_path, rows)
        code = main(
            [
                "ingest",
                "--log",
                str(path),
                "--correlate",
                "competence:productivity",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        table = read_csv(tmp_path / "competence.csv")
        assert table[0] == ["agent", "competence"]
        assert all(float(row[1]) > 0.5 for row in table[1:])
        assert (tmp_path / "productivity.csv").exists()
        correlations = read_csv(tmp_path / "correlations.csv")
        assert correlations[0] == ["x", "y", "r", "n"]
        out = capsys.readouterr().out
        assert "delay percentage: 0.0000" in out

    def test_empty_log_exits_2(self, tmp_path, capsys):
        path = self.write_log(tmp_path, [])
        code = main(["ingest", "--log", str(path), "--out", str(tmp_path)])
        assert code == 2
        assert "no records" in capsys.readouterr().err

    def test_schema_errors_exit_2(self, tmp_path, capsys):
        path = self.write_log(tmp_path, ["t1,s1,1,8,5,7,3,3,12,1,3,4"])
        code = main(["ingest", "--log", str(path), "--out", str(tmp_path)])
        assert code == 2
        assert "quality" in capsys.readouterr().err

    def test_unknown_correlation_series(self, tmp_path, capsys):
        path = self.write_log(tmp_path, ["t1,s1,1,8,5,7,3,3,8,1,3,4"])
        code = main(
            [
                "ingest",
                "--log",
                str(path),
                "--correlate",
                "competence:charisma",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 2


class TestParserContract:
    def test_usage_error_exits_2(self):
        assert main(["simulate"]) == 2

    def test_default_out_from_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv("AGILESIM_OUT", str(tmp_path / "from-env"))
        code = main(
            ["fcm", "--map", "michael_scenario1", "--initial", "0.5,0,0"]
        )
        assert code == 0
        assert (tmp_path / "from-env" / "trajectory.csv").exists()


class TestAllPresets:
    def test_all_presets_writes_per_preset_directories(self, tmp_path):
        code = main(
            [
                "simulate",
                "--all-presets",
                "--repetitions",
                "1",
                "--seed",
                "1",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        names = {p.name for p in tmp_path.iterdir() if p.is_dir()}
        assert names == set(core.PRESET_NAMES)
        for name in names:
            assert (tmp_path / name / "summary.csv").exists()
