import csv
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from combmat.cli import OUTPUT_ENV, SUBCOMMANDS, main, parse_config, render_config
from combmat.errors import NotPrimeError, OutputError, RangeViolation, UnknownKeyError
from combmat.experiments import RESULTS_SCHEMA, ExperimentConfig
from combmat.fflinalg import IntMatrix, write_matrix
from combmat.persist import (
    config_hash,
    finalize_manifest,
    format_decimal,
    format_rational,
    format_value,
    result_paths,
    start_manifest,
    verify_manifest,
    write_results,
)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def outputs(out):
    lines = out.splitlines()
    csv_path = next(l.split(": ", 1)[1] for l in lines if l.startswith("results: "))
    manifest = next(l.split(": ", 1)[1] for l in lines if l.startswith("manifest: "))
    return csv_path, manifest


# parse_config

def test_flags_only():
    cfg = parse_config(flags={"n": "10", "d": "5", "trials": "100", "seed": "7"})
    assert (cfg.n, cfg.d, cfg.trials, cfg.master_seed) == (10, 5, 100, 7)
    assert cfg.prime_rule == "auto"


def test_non_prime_rejected():
    with pytest.raises(NotPrimeError, match="p must be prime"):
        parse_config(flags={"n": 10, "d": 5, "p": 4})


def test_d_zero_rejected():
    with pytest.raises(RangeViolation):
        parse_config(flags={"n": 10, "d": 0})


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("n=4\nd=2\nwidth=3\n")
    with pytest.raises(UnknownKeyError):
        parse_config(path)


def test_distinct_diagnostics():
    kinds = set()
    for flags in ({"n": 4, "d": 2, "q": 1}, {"n": 4, "d": 9}, {"n": 4, "d": 2, "p": 9}):
        with pytest.raises(Exception) as info:
            parse_config(flags=flags)
        kinds.add(type(info.value))
    assert kinds == {UnknownKeyError, RangeViolation, NotPrimeError}


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nn = 12\nd = 3\ntrials = 50\nseed = 1\np = 5\n")
    cfg = parse_config(path, {"d": 4, "seed": None})
    assert (cfg.n, cfg.d, cfg.trials, cfg.master_seed, cfg.prime) == (12, 4, 50, 1, 5)


def test_file_matrix_infers_n(tmp_path):
    cfg = parse_config(flags={"d": 1, "A": "1 0 0; 0 1 0; 0 0 -1"})
    assert cfg.n == 3 and cfg.A.rows[2] == (0, 0, -1)
    mfile = tmp_path / "a.txt"
    write_matrix(mfile, [[0, 1], [1, 0]])
    assert parse_config(flags={"d": 1, "matrix": str(mfile)}).A == IntMatrix(((0, 1), (1, 0)))


def test_malformed_line(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("n 4\n")
    with pytest.raises(RangeViolation):
        parse_config(path)


configs = st.integers(1, 6).flatmap(
    lambda n: st.builds(
        ExperimentConfig,
        n=st.just(n),
        d=st.integers(1, n),
        trials=st.integers(1, 10**6),
        master_seed=st.integers(0, 2**64 - 1),
        prime=st.one_of(st.none(), st.sampled_from([2, 3, 5, 101])),
        A=st.one_of(
            st.none(),
            st.lists(st.lists(st.integers(-10**20, 10**20), min_size=n, max_size=n), min_size=n, max_size=n),
        ),
    )
)


@settings(max_examples=200)
@given(configs)
def test_render_parse_round_trip(tmp_path_factory, cfg):
    path = tmp_path_factory.mktemp("cfg") / "run.cfg"
    path.write_text(render_config(cfg), encoding="utf-8")
    assert parse_config(path) == cfg


# formatting and write_results

def test_rational_and_decimal_forms():
    assert format_rational(Fraction(1, 3)) == "1/3"
    assert format_decimal(Fraction(1, 3)) == "0.333333333333"
    assert format_rational(Fraction(1, 2)) == "1/2"
    assert format_decimal(Fraction(1, 2)) == "0.5"
    assert format_decimal(Fraction(2, 3)) == "0.666666666667"
    assert format_decimal(1.0) == "1"
    assert format_decimal(0.0) == "0"
    assert format_value(True) == "true"
    assert format_value(None) == ""


def test_decimal_exact_for_huge_fractions():
    x = Fraction(10**60 + 1, 3 * 10**60)
    assert format_decimal(x) == "0.333333333333"


def test_header_only_csv(tmp_path):
    path = write_results([], ("a", "b"), tmp_path / "out.csv")
    assert path.read_bytes() == b"a,b\r\n"


def test_rational_columns(tmp_path):
    path = write_results([{"x": Fraction(1, 3)}], ("x", "x_decimal"), tmp_path / "r.csv")
    rows = list(csv.DictReader(path.open()))
    assert rows == [{"x": "1/3", "x_decimal": "0.333333333333"}]


def test_schema_enforced(tmp_path):
    with pytest.raises(RangeViolation):
        write_results([{"a": 1}], ("a", "b"), tmp_path / "r.csv")
    with pytest.raises(RangeViolation):
        write_results([{"a": 1, "z": 2}], ("a",), tmp_path / "r.csv")


def test_quoting(tmp_path):
    path = write_results([{"s": "1,3,5"}], ("s",), tmp_path / "q.csv")
    assert path.read_bytes() == b's\r\n"1,3,5"\r\n'


def test_io_error_carries_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    target = blocker / "sub" / "r.csv"
    with pytest.raises(OutputError, match=str(blocker)):
        write_results([], ("a",), target)


def test_no_temp_files_left(tmp_path):
    write_results([{"a": 1}], ("a",), tmp_path / "r.csv")
    write_results([{"a": 2}], ("a",), tmp_path / "r.csv")
    assert [p.name for p in tmp_path.iterdir()] == ["r.csv"]


# manifests

def test_manifest_lifecycle_and_tampering(tmp_path):
    config = {"n": 3, "d": 2}
    csv_path, man_path = result_paths(tmp_path, "demo", config)
    m = start_manifest(man_path, "demo", config, csv_path, master_seed=4)
    on_disk = json.loads(man_path.read_text())
    assert on_disk["status"] == "running" and on_disk["results_sha256"] is None
    write_results([{"a": 1}], ("a",), csv_path)
    finalize_manifest(man_path, m, "complete", {"ok": True})
    assert verify_manifest(man_path)
    final = json.loads(man_path.read_text())
    assert final["log_base"] == "natural" and final["config_hash"] == config_hash("demo", config)

    csv_path.write_text("a\r\n2\r\n")
    assert not verify_manifest(man_path)
    write_results([{"a": 1}], ("a",), csv_path)
    assert verify_manifest(man_path)

    final["config"]["n"] = 4
    man_path.write_text(json.dumps(final))
    assert not verify_manifest(man_path)


def test_config_hash_is_order_independent():
    assert config_hash("x", {"a": 1, "b": 2}) == config_hash("x", {"b": 2, "a": 1})
    assert config_hash("x", {"a": 1}) != config_hash("y", {"a": 1})


# subcommands

def test_all_subcommands_registered():
    assert len(SUBCOMMANDS) == 12


def test_zero_column_prints_both_forms(capsys, tmp_path):
    code, out, _ = run(capsys, "zero-column", "--n", 2, "--d", 1, "--out-dir", tmp_path)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "1/2" and lines[1] == "0.5"
    csv_path, manifest = outputs(out)
    assert list(csv.DictReader(open(csv_path))) == [
        {"n": "2", "d": "1", "probability": "1/2", "probability_decimal": "0.5"}
    ]
    assert verify_manifest(manifest)


def test_output_dir_from_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    code, out, _ = run(capsys, "zero-column", "--n", 3, "--d", 1)
    assert code == 0
    assert outputs(out)[0].startswith(str(tmp_path / "env"))


def test_verify_appendix_exit_zero(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-appendix", "--n-max", 20, "--out-dir", tmp_path)
    assert code == 0
    assert "23040 cells checked, 0 violate" in out


def test_mc_perturbed_eigenpair_exits_2(capsys, tmp_path):
    for d, n in ((1, 1), (2, 3)):
        A = [[-d if i == j else 0 for j in range(n)] for i in range(n)]
        mfile = tmp_path / f"a{d}.txt"
        write_matrix(mfile, A)
        code, _, err = run(capsys, "mc-perturbed", "--d", d, "--matrix", mfile, "--trials", 10, "--out-dir", tmp_path)
        assert code == 2
        assert "eigenpair" in err
    manifests = [json.loads(p.read_text()) for p in tmp_path.glob("mc-perturbed-*.manifest.json")]
    assert manifests and all(m["status"] == "rejected" for m in manifests)


def test_mc_perturbed_ok(capsys, tmp_path):
    mfile = tmp_path / "a.txt"
    write_matrix(mfile, [[1, 0], [0, 1]])
    code, out, _ = run(capsys, "mc-perturbed", "--d", 1, "--matrix", mfile, "--trials", 200, "--out-dir", tmp_path)
    assert code == 0
    row = next(csv.DictReader(open(outputs(out)[0])))
    assert tuple(row) == RESULTS_SCHEMA and row["mode"] == "perturbed"


def test_bad_prime_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "mc-singularity", "--n", 4, "--d", 2, "--p", 4, "--out-dir", tmp_path)
    assert code == 1 and "p must be prime" in err


def test_range_violation_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "mc-singularity", "--n", 4, "--d", 0, "--out-dir", tmp_path)
    assert code == 1 and "error" in err


def test_output_failure_exits_1(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "zero-column", "--n", 2, "--d", 1, "--out-dir", blocker)
    assert code == 1 and str(blocker) in err


def test_mc_singularity_row(capsys, tmp_path):
    code, out, _ = run(capsys, "mc-singularity", "--n", 3, "--d", 2, "--trials", 2000, "--seed", 5, "--out-dir", tmp_path)
    assert code == 0
    csv_path, manifest = outputs(out)
    row = next(csv.DictReader(open(csv_path)))
    assert tuple(row) == RESULTS_SCHEMA
    assert float(row["ci_lo"]) <= 7 / 9 <= float(row["ci_hi"])
    assert row["degenerate"] == "true"
    m = json.loads(open(manifest).read())
    assert m["master_seed"] == 5 and m["prime_choice"]["degenerate"] is True
    assert m["status"] == "complete" and m["tool_version"]


def test_kernel_moment(capsys, tmp_path):
    code, out, _ = run(capsys, "kernel-moment", "--n", 2, "--d", 1, "--p", 3, "--trials", 1000, "--out-dir", tmp_path)
    assert code == 0
    summary = json.loads(open(outputs(out)[1]).read())["summary"]
    assert summary["markov_holds"] is True
    assert set(summary["kernel_size_counts"]) <= {"1", "3"}


def test_kernel_moment_divisor_exits_2(capsys, tmp_path):
    code, _, _ = run(capsys, "kernel-moment", "--n", 6, "--d", 3, "--p", 3, "--trials", 10, "--out-dir", tmp_path)
    assert code == 2


def test_atom_and_fourier(capsys, tmp_path):
    code, out, _ = run(capsys, "atom", "--v", "1,2,0,0", "--p", 3, "--d", 2, "--out-dir", tmp_path)
    assert code == 0
    assert "P[b=0] = 1/3 (0.333333333333)" in out
    rows = list(csv.DictReader(open(outputs(out)[0])))
    assert [(r["numerator"], r["denominator"]) for r in rows] == [("1", "3")] * 3

    code, out, _ = run(capsys, "atom", "--v", "1,1,0,0", "--p", 2, "--d", 2, "--method", "bruteforce", "--out-dir", tmp_path)
    assert "P[b=1] = 2/3" in out

    code, out, _ = run(capsys, "fourier", "--v", "1,2,0,0", "--p", 3, "--d", 2, "--out-dir", tmp_path)
    rows = list(csv.DictReader(open(outputs(out)[0])))
    assert [r["xi"] for r in rows] == ["0", "1", "2"]
    assert float(rows[0]["magnitude"]) == 1 and float(rows[1]["magnitude"]) < 1e-12


def test_det(capsys, tmp_path):
    mfile = tmp_path / "m.txt"
    write_matrix(mfile, [[1, 2], [3, 4]])
    code, out, _ = run(capsys, "det", "--matrix", mfile, "--p", 5, "--out-dir", tmp_path)
    assert code == 0
    assert "det -2" in out and "det mod 5 = 3" in out


def test_sample(capsys, tmp_path):
    mout = tmp_path / "q.txt"
    code, out, _ = run(capsys, "sample", "--n", 5, "--d", 2, "--seed", 3, "--matrix-out", mout, "--out-dir", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(open(outputs(out)[0])))
    assert len(rows) == 5 and all(len(r["support"].split(",")) == 2 for r in rows)
    assert mout.read_text().startswith("5 5\n")


def test_verify_bounds_and_coupling(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-bounds", "--n-max", 4, "--p-max", 50, "--out-dir", tmp_path)
    assert code == 0 and ", 0 failures" in out
    code, out, _ = run(capsys, "coupling-check", "--n-max", 5, "--out-dir", tmp_path)
    assert code == 0 and "0 non-uniform" in out


def test_conjecture_scan(capsys, tmp_path):
    code, out, _ = run(
        capsys, "conjecture-scan", "--n-values", "8,16", "--c-values", "0.5,2", "--trials", 30, "--out-dir", tmp_path
    )
    assert code == 0
    rows = list(csv.DictReader(open(outputs(out)[0])))
    assert len(rows) == 4 and "zero_column_decimal" in rows[0]


@pytest.mark.parametrize("argv", [
    ("mc-singularity", "--n", 7, "--d", 3, "--trials", 120, "--seed", 9),
    ("kernel-moment", "--n", 7, "--d", 3, "--p", 2, "--trials", 120, "--seed", 9),
    ("conjecture-scan", "--n-values", "8,12", "--c-values", "1", "--trials", 60),
])
def test_rerun_byte_identical_across_workers(capsys, tmp_path, argv):
    blobs = []
    for workers in (1, 1, 3):
        out_dir = tmp_path / f"w{workers}-{len(blobs)}"
        code, out, _ = run(capsys, *argv, "--workers", workers, "--out-dir", out_dir)
        assert code == 0
        blobs.append(open(outputs(out)[0], "rb").read())
    assert blobs[0] == blobs[1] == blobs[2]
