import json

import pytest

from elbow.cli import main


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return _run


def test_check(run, data_dir):
    code, out, _ = run("check", data_dir / "zoo.tbox", "--lhs", "Zebra", "--rhs", "Herbivore")
    assert code == 0 and out.startswith("ENTAILED")
    code, out, _ = run("check", data_dir / "zoo.tbox", "--lhs", "Herbivore", "--rhs", "Zebra", "--method", "global")
    assert code == 1 and out.startswith("NOT ENTAILED")
    code, out, _ = run("check", data_dir / "zoo.tbox", "--lhs", "Zebra", "--rhs", "Herbivore", "--json")
    assert code == 0 and json.loads(out)["entailed"] is True


def test_countermodel_round_trip(run, data_dir, tmp_path):
    code, out, _ = run("countermodel", data_dir / "zoo.tbox", "--lhs", "Herbivore", "--rhs", "Zebra")
    assert code == 1
    path = tmp_path / "m.json"
    path.write_text(out)
    code, out, _ = run("validate-model", path, data_dir / "zoo.tbox")
    assert code == 0 and "VALID" in out
    code, out, _ = run("countermodel", data_dir / "zoo.tbox", "--lhs", "Zebra", "--rhs", "Herbivore")
    assert code == 0 and "ENTAILED" in out


def test_enumerated_countermodel(run, data_dir, tmp_path):
    code, out, _ = run(
        "countermodel", data_dir / "zoo_core.tbox", "--lhs", "Herbivore", "--rhs", "Zebra", "--enumerate"
    )
    assert code == 1
    path = tmp_path / "m.json"
    path.write_text(out)
    assert run("validate-model", path, data_dir / "zoo_core.tbox")[0] == 0


def test_validate_example_interpretation(run, data_dir):
    assert run("validate-model", data_dir / "example2.json", data_dir / "zoo_core.tbox")[0] == 0


def test_classify_normalize_saturate(run, data_dir):
    code, out, _ = run("classify", data_dir / "zoo.tbox", "--json")
    assert code == 0
    assert ["Zebra", "Herbivore"] in json.loads(out)
    code, out, _ = run("normalize", data_dir / "zoo.tbox")
    assert code == 0 and "btw(Rabbit, Giraffe)" in out
    code, out, _ = run("saturate", data_dir / "zoo.tbox", "--interpolative", "--lhs", "Zebra", "--rhs", "Herbivore")
    assert code == 0 and "DERIVED" in out and "S2" in out


def test_dominance(run, data_dir):
    code, out, _ = run("dominance", data_dir / "flip.gcp", "--from", "!a", "--to", "a")
    assert code == 0 and out.splitlines()[0] == "DOMINATES (1 flip)"
    code, out, _ = run("dominance", data_dir / "flip.gcp", "--from", "a", "--to", "!a")
    assert code == 1 and "NOT DOMINATED" in out


def test_gcp_pipeline(run, data_dir, tmp_path):
    tbox = tmp_path / "red.tbox"
    model = tmp_path / "model.json"
    code, out, _ = run("from-gcp", data_dir / "chain.gcp", "--initial", "!a !b !c")
    assert code == 0
    tbox.write_text(out)
    code, out, _ = run("from-gcp", data_dir / "chain.gcp", "--initial", "!a !b !c", "--model")
    assert code == 0
    model.write_text(out)
    code, out, _ = run("geo-check", model, tbox)
    assert code == 0 and "VIOLATED" not in out
    code, out, _ = run("geo-derive", tbox, "--lhs", "A_a & A_b & A_c", "--rhs", "Z")
    assert code == 0 and out.startswith("DERIVABLE")
    code, out, _ = run("geo-derive", tbox, "--lhs", "Abar_a & A_b & Abar_c", "--rhs", "Z")
    assert code == 1 and out.startswith("UNKNOWN")


def test_gcp_verify(run, data_dir):
    code, out, _ = run("gcp-verify", data_dir / "chain.gcp", "--initial", "!a !b !c")
    assert code == 0
    code, out, _ = run("gcp-verify", "--random", 3, "--atoms", 2, "--rules", 2, "--seed", 7, "--jobs", 2)
    assert code == 0
    code, _, err = run("gcp-verify", data_dir / "cyclic.gcp", "--initial", "!a !b")
    assert code == 2 and err


def test_from_prop(run, data_dir):
    code, out, _ = run("from-prop", data_dir / "tiny.cnf", "--conclusion", "-1 3", "--decide", "--truth-table")
    assert code == 0 and "ENTAILED" in out
    code, out, _ = run("from-prop", data_dir / "tiny.cnf", "--conclusion", "1 -3", "--decide")
    assert code == 1


def test_input_errors(run, data_dir, tmp_path):
    assert run("check", tmp_path / "missing.tbox", "--lhs", "A", "--rhs", "B")[0] == 2
    bad = tmp_path / "bad.tbox"
    bad.write_text("natural C; A <= btw(A, C);")
    code, _, err = run("check", bad, "--lhs", "A", "--rhs", "C")
    assert code == 2 and err
    assert run("check", data_dir / "zoo.tbox", "--lhs", "Zebra &", "--rhs", "B")[0] == 2
    assert run("no-such-command")[0] == 2
