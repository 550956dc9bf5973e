import json

import pytest

from modsatake import cli

from _support import classified, group


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_gl22_json(capsys):
    code, out, _ = run(capsys, "classify", "--p", "2", "--n", "2")
    assert code == 0
    (report,) = json.loads(out)
    assert report["suite"] == "classify"
    assert len(report["rows"]) == 2
    assert report["checks"][0]["status"] == "pass"


def test_output_is_byte_identical_across_runs(capsys):
    argv = ("relations", "--p", "2", "--n", "2", "--rep", "all", "--depth", "1")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_jobs_do_not_change_the_report(capsys):
    argv = ("relations", "--p", "2", "--n", "2", "--rep", "all", "--depth", "1")
    _, serial, _ = run(capsys, *argv)
    _, pooled, _ = run(capsys, *argv, "--jobs", "2")
    assert serial == pooled


def test_tsv_layout(capsys):
    code, out, _ = run(capsys, "relations", "--p", "2", "--n", "2", "--rep", "steinberg", "--depth", "1", "--format", "tsv")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "suite\tconfig\tcheck\tstatus\tref"
    assert all(len(line.split("\t")) == 5 for line in lines)
    assert {line.split("\t")[3] for line in lines[1:]} == {"pass"}


def test_recorded_checks_do_not_fail_a_run(capsys):
    code, out, _ = run(capsys, "relations", "--p", "2", "--n", "2", "--rep", "trivial", "--depth", "1")
    statuses = {c["name"]: c["status"] for c in json.loads(out)[0]["checks"]}
    assert statuses["S'(T_G) = T_M"] == "recorded"
    assert statuses["T_P not in image of xi"] == "pass"
    assert code == 0


def test_exit_code_one_on_contradiction(capsys):
    code, out, _ = run(capsys, "gl2-remark", "--p", "2", "--depth", "2", "--format", "tsv")
    assert code == 1
    assert "\tfail\t" in out


def test_exit_code_zero_on_clean_remark(capsys):
    code, _, _ = run(capsys, "gl2-remark", "--p", "3", "--depth", "1")
    assert code == 0


@pytest.mark.parametrize(
    "argv",
    [
        ("relations", "--p", "4"),
        ("relations", "--n", "5"),
        ("relations", "--rep", "sym:9"),
        ("relations", "--rep", "#17"),
        ("relations", "--rep", "bogus"),
        ("relations", "--levi", "1"),
        ("relations", "--s", "0,1"),
    ],
)
def test_bad_arguments_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_out_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run(capsys, "classify", "--p", "3", "--n", "2", "--out", str(target))
    assert code == 0 and out == ""
    assert len(json.loads(target.read_text())[0]["rows"]) == 6


def test_selectors_resolve_to_classified_data():
    G = group(2, 3)
    cls = list(classified(2, 3))
    assert cli.select_rep(G, cls, "trivial").dim == 1
    assert cli.select_rep(G, cls, "steinberg").dim == 3
    sym = cli.select_rep(G, cls, "sym:1,det:1")
    assert sym.dim == 2 and sym.psi == (0, 1)
    assert cli.select_rep(G, cls, "#2") is cls[2]
