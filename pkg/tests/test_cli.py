"""End-to-end tests for the command-line interface (in-process)."""

import json

import pytest

import weakmem.cli as cli
from weakmem.model import OutcomeType
from weakmem.report import build_report, from_json, to_json
from weakmem.runner import AffinityScheme
from weakmem.suite import builtin_suite, suite_entry

RUN_SMALL = ["--batch-size", "300", "--rounds", "1", "--sync-every", "50"]


def fake_report(name="sb.relaxed", histogram=None):
    entry = suite_entry(name)
    if histogram is None:
        histogram = {(0, 1): 80, (1, 0): 20}
    return build_report(entry.test, histogram, params={}, environment={})


class TestList:
    def test_lists_all_fourteen(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 14
        assert any(line.startswith("sb.relaxed") for line in out)
        assert all("threads" in line for line in out)

    def test_filtered_listing(self, capsys):
        assert cli.main(["list", "iriw.*"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert [line.split()[0] for line in out] == ["iriw.relaxed", "iriw.seqcst"]

    def test_unknown_selector_fails_with_hint(self, capsys):
        assert cli.main(["list", "sb.relazed"]) == 1
        err = capsys.readouterr().err
        assert "no test matches" in err
        assert "sb.relaxed" in err  # close-match suggestion
        assert "weakmem list" in err


class TestRun:
    def test_acceptable_run_exits_zero(self, capsys):
        code = cli.main(["run", "mp.drf", *RUN_SMALL])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("mp.drf\n")
        assert "total count: 300," in out

    def test_glob_runs_multiple_tests(self, capsys):
        code = cli.main(["run", "corr.*", *RUN_SMALL])
        out = capsys.readouterr().out
        assert code in (0, 2)  # corr variants may log interesting folds
        assert "corr.relaxed" in out
        assert "corr.cse" in out

    def test_unknown_selector(self, capsys):
        assert cli.main(["run", "nosuch.test", *RUN_SMALL]) == 1
        assert "no test matches" in capsys.readouterr().err

    def test_bad_params_are_operational_errors(self, capsys):
        assert cli.main(["run", "sb.relaxed", "--batch-size", "0"]) == 1
        assert "batch_size" in capsys.readouterr().err
        assert cli.main(["run", "sb.relaxed", "--padding", "3"]) == 1
        assert "padding" in capsys.readouterr().err

    def test_json_format_emits_parseable_report(self, capsys):
        code = cli.main(["run", "sb.seqcst", *RUN_SMALL, "--format", "json"])
        out = capsys.readouterr().out
        assert code in (0, 3)
        report = from_json(out)
        assert report.test_name == "sb.seqcst"
        assert report.total_count == 300

    def test_json_format_requires_single_test(self, capsys):
        assert cli.main(["run", "sb.*", *RUN_SMALL, "--format", "json"]) == 1
        assert "exactly one" in capsys.readouterr().err

    def test_output_file_round_trips_through_compare(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        code = cli.main(["run", "mp.drf", *RUN_SMALL, "--output", str(path)])
        assert code == 0
        capsys.readouterr()
        assert cli.main(["compare", str(path), str(path)]) == 0
        assert "no discrepancies" in capsys.readouterr().out

    def test_interesting_status_exits_two(self, capsys, monkeypatch):
        report = fake_report(histogram={(0, 1): 99, (0, 0): 1})
        assert report.overall is OutcomeType.INTERESTING
        monkeypatch.setattr(cli, "run_test", lambda test, params: report)
        assert cli.main(["run", "sb.relaxed", *RUN_SMALL]) == 2

    def test_forbidden_status_exits_three(self, capsys, monkeypatch):
        report = fake_report(histogram={(0, 1): 99, (7, 7): 1})
        assert report.overall is OutcomeType.FORBIDDEN
        monkeypatch.setattr(cli, "run_test", lambda test, params: report)
        assert cli.main(["run", "sb.relaxed", *RUN_SMALL]) == 3

    def test_worst_status_wins_across_glob(self, capsys, monkeypatch):
        reports = {
            "sb.relaxed": fake_report("sb.relaxed", {(0, 1): 99, (0, 0): 1}),
            "sb.seqcst": fake_report("sb.seqcst", {(0, 1): 100}),
        }
        monkeypatch.setattr(
            cli, "run_test", lambda test, params: reports[test.name]
        )
        assert cli.main(["run", "sb.*", *RUN_SMALL]) == 2

    def test_runner_failure_is_operational(self, capsys, monkeypatch):
        from weakmem.runner import RunnerError

        def boom(test, params):
            raise RunnerError("worker thread failed; partial results discarded")

        monkeypatch.setattr(cli, "run_test", boom)
        assert cli.main(["run", "sb.relaxed", *RUN_SMALL]) == 1
        assert "partial results discarded" in capsys.readouterr().err

    def test_affinity_env_overrides_flag(self, capsys, monkeypatch):
        seen = {}

        def capture(test, params):
            seen["affinity"] = params.affinity
            return fake_report(test.name, {(0, 1): 1})

        monkeypatch.setattr(cli, "run_test", capture)
        monkeypatch.setenv(cli.AFFINITY_ENV, "seq")
        assert cli.main(["run", "sb.relaxed", "--affinity", "none"]) == 0
        assert seen["affinity"] == AffinityScheme.sequential()

    def test_affinity_flag_used_without_env(self, capsys, monkeypatch):
        seen = {}

        def capture(test, params):
            seen["affinity"] = params.affinity
            return fake_report(test.name, {(0, 1): 1})

        monkeypatch.setattr(cli, "run_test", capture)
        monkeypatch.delenv(cli.AFFINITY_ENV, raising=False)
        assert cli.main(["run", "sb.relaxed", "--affinity", "0,1"]) == 0
        assert seen["affinity"] == AffinityScheme.explicit((0, 1))

    def test_freq_style_flag_changes_rendering(self, capsys, monkeypatch):
        report = fake_report(histogram={(0, 1): 505_376, (1, 0): 494_624})
        monkeypatch.setattr(cli, "run_test", lambda test, params: report)
        cli.main(["run", "sb.relaxed", "--freq-style", "paper"])
        assert "50.537%" in capsys.readouterr().out
        cli.main(["run", "sb.relaxed", "--freq-style", "uniform"])
        assert "50.54%" in capsys.readouterr().out


class TestOracle:
    def test_sc_enumeration_output(self, capsys):
        assert cli.main(["oracle", "sb.relaxed"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "sb.relaxed [SC]"
        assert out.splitlines()[1:] == ["(0, 1)", "(1, 0)", "(1, 1)"]

    def test_tso_enumeration_adds_weak_outcome(self, capsys):
        assert cli.main(["oracle", "sb.relaxed", "--model", "tso"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "sb.relaxed [TSO]"
        assert "(0, 0)" in out

    def test_glob_prints_blank_line_between_tests(self, capsys):
        assert cli.main(["oracle", "sb.*"]) == 0
        out = capsys.readouterr().out
        assert "\n\nsb.seqcst [SC]" in out

    def test_twinless_test_is_noted_and_fails_alone(self, capsys):
        assert cli.main(["oracle", "upub.adapted"]) == 1
        captured = capsys.readouterr()
        assert "no abstract twin" in captured.err

    def test_twinless_test_skipped_inside_glob(self, capsys):
        assert cli.main(["oracle", "*"]) == 0
        captured = capsys.readouterr()
        assert "upub.adapted has no abstract twin" in captured.err
        assert "upub.adapted [SC]" not in captured.out

    def test_unknown_selector(self, capsys):
        assert cli.main(["oracle", "zz.*"]) == 1
        assert "no test matches" in capsys.readouterr().err


class TestCompare:
    def write(self, tmp_path, name, report):
        path = tmp_path / name
        path.write_bytes(to_json(report))
        return str(path)

    def test_identical_reports_no_discrepancies(self, tmp_path, capsys):
        a = self.write(tmp_path, "a.json", fake_report())
        b = self.write(tmp_path, "b.json", fake_report())
        assert cli.main(["compare", a, b]) == 0
        assert "no discrepancies" in capsys.readouterr().out

    def test_extra_outcome_gates_with_exit_four(self, tmp_path, capsys):
        a = self.write(
            tmp_path, "a.json", fake_report(histogram={(0, 1): 80, (1, 0): 20})
        )
        b = self.write(
            tmp_path,
            "b.json",
            fake_report(histogram={(0, 1): 80, (1, 0): 20, (0, 0): 1}),
        )
        assert cli.main(["compare", a, b]) == 4
        out = capsys.readouterr().out
        assert "status-differs" in out
        assert "outcome-only-in [b] (0, 0)" in out

    def test_missing_file_is_operational(self, tmp_path, capsys):
        a = self.write(tmp_path, "a.json", fake_report())
        assert cli.main(["compare", a, str(tmp_path / "nope.json")]) == 1
        assert "reading" in capsys.readouterr().err

    def test_unparseable_file_is_operational(self, tmp_path, capsys):
        a = self.write(tmp_path, "a.json", fake_report())
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["compare", a, str(bad)]) == 1
        assert "parsing" in capsys.readouterr().err

    def test_different_tests_is_operational(self, tmp_path, capsys):
        a = self.write(tmp_path, "a.json", fake_report("sb.relaxed"))
        b = self.write(
            tmp_path, "b.json", fake_report("mp.relaxed", {(0, 0): 10})
        )
        assert cli.main(["compare", a, b]) == 1
        assert "different tests" in capsys.readouterr().err

    def test_frequency_only_difference_does_not_gate(self, tmp_path, capsys):
        a = self.write(
            tmp_path, "a.json", fake_report(histogram={(0, 1): 1000, (1, 0): 1000})
        )
        b = self.write(
            tmp_path, "b.json", fake_report(histogram={(0, 1): 1, (1, 0): 500_000})
        )
        assert cli.main(["compare", a, b]) == 0
        out = capsys.readouterr().out
        assert "frequency-differs" in out


def test_exit_code_constants_documented():
    assert (cli.EXIT_OK, cli.EXIT_ERROR, cli.EXIT_INTERESTING,
            cli.EXIT_FORBIDDEN, cli.EXIT_DISCREPANCIES) == (0, 1, 2, 3, 4)


def test_usage_errors_exit_one_not_two(capsys):
    # argparse's native usage-error exit (2) would masquerade as
    # "interesting outcome observed"; main() remaps it.
    assert cli.main(["run", "sb.relaxed", "--frobnicate"]) == cli.EXIT_ERROR
    assert "usage:" in capsys.readouterr().err
    assert cli.main(["frobnicate"]) == cli.EXIT_ERROR


def test_help_still_exits_zero(capsys):
    assert cli.main(["--help"]) == cli.EXIT_OK
    assert "run" in capsys.readouterr().out


def test_entrypoint_raises_system_exit(monkeypatch, capsys):
    monkeypatch.setattr("sys.argv", ["weakmem", "list"])
    with pytest.raises(SystemExit) as exc:
        cli.entrypoint()
    assert exc.value.code == 0


def test_every_builtin_test_is_selectable():
    for entry in builtin_suite():
        assert cli.main(["list", entry.test.name]) == 0
