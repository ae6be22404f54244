import json

import pytest

from chamberflow.cli import main


def run_cli(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    out, err = capsys.readouterr()
    return exc.value.code, out, err


def data_lines(text):
    return [l for l in text.splitlines() if l and not l.startswith("#")]


def test_roots_json(capsys):
    code, out, _ = run_cli(["roots", "--group", "sl2"], capsys)
    assert code == 0
    assert out.startswith("# command: chamberflow roots")
    body = json.loads("\n".join(data_lines(out)))
    assert body["rank"] == 1
    assert body["weyl_vector"] == [0.5, -0.5]


def test_manifest_header_fields(capsys):
    _, out, _ = run_cli(["roots", "--group", "sl3"], capsys)
    header = [l for l in out.splitlines() if l.startswith("#")]
    keys = [l.split(":")[0] for l in header]
    assert keys == ["# command", "# seed", "# inputs-sha256", "# anchor"]


def test_unknown_flag_exits_1(capsys):
    code, _, err = run_cli(["roots", "--group", "sl2", "--bogus"], capsys)
    assert code == 1
    assert "bogus" in err


def test_unknown_subcommand_exits_1(capsys):
    code, _, _ = run_cli(["frobnicate"], capsys)
    assert code == 1


def test_decomp_iwasawa(capsys):
    code, out, _ = run_cli(
        ["decomp", "--group", "sl2", "--matrix", "2,1,0,0.5", "--iwasawa"], capsys
    )
    assert code == 0
    body = json.loads("\n".join(data_lines(out)))
    assert body["reconstruction_error"] < 1e-12
    assert body["a"][0][0] == pytest.approx(2.0)


def test_decomp_cartan(capsys):
    code, out, _ = run_cli(
        ["decomp", "--group", "sl3", "--matrix", "2,0,0,0,1,0,0,0,0.5", "--cartan"],
        capsys,
    )
    assert code == 0
    body = json.loads("\n".join(data_lines(out)))
    assert body["a"][0][0] == pytest.approx(2.0)


def test_decomp_requires_mode(capsys):
    code, _, err = run_cli(
        ["decomp", "--group", "sl2", "--matrix", "1,0,0,1"], capsys
    )
    assert code == 1
    assert "iwasawa" in err


def test_decomp_bad_matrix_exits_1(capsys):
    code, _, _ = run_cli(
        ["decomp", "--group", "sl2", "--matrix", "1,0,0", "--iwasawa"], capsys
    )
    assert code == 1
    code, _, _ = run_cli(
        ["decomp", "--group", "sl2", "--matrix", "1,0,0,x", "--iwasawa"], capsys
    )
    assert code == 1


def test_decay_row_count_contract(capsys):
    code, out, _ = run_cli(
        ["decay", "--group", "sl3", "--t", "4,64", "--h0", "rho"], capsys
    )
    assert code == 0
    rows = data_lines(out)
    assert rows[0] == "t,shift_l1,slab_mass,concentration_frac"
    assert len(rows) == 1 + 2


def test_decay_bad_h0_exits_1(capsys):
    code, _, _ = run_cli(["decay", "--group", "sl2", "--t", "4", "--h0", "x,y"], capsys)
    assert code == 1
    code, _, _ = run_cli(["decay", "--group", "sl2", "--t", "4", "--h0", "1,0,-1"], capsys)
    assert code == 1


def test_kernel_grid_dump(capsys):
    code, out, _ = run_cli(["kernel", "--group", "sl2", "--t", "4"], capsys)
    assert code == 0
    rows = data_lines(out)
    assert rows[0] == "y1,density"
    assert len(rows) > 400


def test_simulate_csv(capsys):
    code, out, _ = run_cli(
        ["simulate", "--group", "sl2", "--t", "1", "--paths", "4", "--seed", "3"],
        capsys,
    )
    assert code == 0
    rows = data_lines(out)
    assert rows[0] == "path,elapsed,r1,r2"
    assert len(rows) == 1 + 4


def test_exitdirs_csv(capsys):
    code, out, _ = run_cli(
        ["exitdirs", "--t", "2", "--paths", "50", "--bins", "12", "--seed", "3"],
        capsys,
    )
    assert code == 0
    rows = data_lines(out)
    assert rows[0] == "bin,lo,hi,count"
    assert len(rows) == 1 + 12
    counted = sum(int(r.split(",")[-1]) for r in rows[1:])
    assert counted <= 50


def test_byte_identical_reruns(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run_cli(
            ["simulate", "--group", "sl2", "--t", "1", "--paths", "8",
             "--seed", "9", "--out", str(path)],
            capsys,
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_lift_and_invariance_round_trip(tmp_path, capsys):
    stream = tmp_path / "lift.jsonl"
    code, _, _ = run_cli(
        ["lift", "--n", "4", "--count", "16", "--seed", "2", "--out", str(stream)],
        capsys,
    )
    assert code == 0
    lines = data_lines(stream.read_text())
    assert len(lines) == 16
    rec = json.loads(lines[0])
    assert set(rec) == {"representative", "word", "mark"}

    code, out, _ = run_cli(
        ["invariance", "--in", str(stream), "--g", "a:0.25", "--g", "k:0.785"],
        capsys,
    )
    assert code == 0
    rows = data_lines(out)
    assert rows[0] == "g,feature,mean_before,mean_after,deficit"
    max_rows = [r for r in rows if r.split(",")[1] == "max"]
    assert len(max_rows) == 2


def test_invariance_bad_gspec_exits_1(tmp_path, capsys):
    stream = tmp_path / "lift.jsonl"
    run_cli(["lift", "--n", "2", "--count", "4", "--seed", "2",
             "--out", str(stream)], capsys)
    code, _, _ = run_cli(["invariance", "--in", str(stream), "--g", "b:0.1"], capsys)
    assert code == 1
    code, _, _ = run_cli(["invariance", "--in", str(stream), "--g", "a:zz"], capsys)
    assert code == 1


def test_config_file_is_lower_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("t=4\ngroup=sl2\n")
    code, out, _ = run_cli(["decay", "--config", str(cfg)], capsys)
    assert code == 0
    assert len(data_lines(out)) == 1 + 1  # config t=4 replaced the default list
    code, out, _ = run_cli(
        ["decay", "--config", str(cfg), "--t", "4,8"], capsys
    )
    assert code == 0
    assert len(data_lines(out)) == 1 + 2  # explicit flag wins


def test_config_unknown_key_exits_1(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nonsense=1\n")
    code, _, _ = run_cli(["decay", "--config", str(cfg)], capsys)
    assert code == 1


def test_all_subset_prints_table(capsys):
    code, out, _ = run_cli(["all", "--only", "2"], capsys)
    assert code == 0
    assert "criterion 2 root-identities: PASS" in out


def test_all_failing_criterion_exits_nonzero(capsys):
    code, out, _ = run_cli(["all", "--only", "4"], capsys)
    assert code == 2
    assert "criterion 4 concentration: FAIL" in out
