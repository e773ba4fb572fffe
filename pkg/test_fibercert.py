import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from pydantic import ValidationError

from fibercert import CorpusEntry, RunConfig, cli

CORPUS = Path(__file__).parent / "corpus"


def run(*args):
    return CliRunner().invoke(cli, ["--log-level", "WARNING", *[str(a) for a in args]])


# ── compute / homs ──

def test_compute_trivial_quotient():
    result = run("compute", CORPUS / "trefoil.pd", "--group", "trivial")
    assert result.exit_code == 0, result.output
    assert "Δ₁ = t^2 - t + 1 (monic, deg 2)" in result.stdout
    assert "Δ₀ = t - 1" in result.stdout


def test_compute_json():
    result = run("compute", CORPUS / "5_2.pd", "--format", "json")
    assert result.exit_code == 0, result.output
    data = json.loads(result.stdout)
    assert data["label"] == "5_2"
    (entry,) = data["entries"]
    assert entry["group"] == "Z1"
    assert entry["text"]["delta1"] == "2*t^2 - 3*t + 2"
    assert entry["route"] == "wada-Z"


def test_compute_over_s3_with_cross_check():
    result = run("compute", CORPUS / "trefoil.pd", "--group", "S3", "--primes", "3")
    assert result.exit_code == 0, result.output
    assert "div = 2" in result.stdout
    assert "Δ₁ over F_3" in result.stdout


def test_homs_listing():
    result = run("homs", CORPUS / "trefoil.pd", "--group", "S3")
    assert result.exit_code == 0, result.output
    assert "1 homomorphism(s)" in result.stdout
    listing = json.loads(run("homs", CORPUS / "trefoil.pd", "--group", "S3", "--format", "json").stdout)
    assert len(listing) == 1
    assert listing[0]["div"] == 2
    assert listing[0]["hom"]["group"] == "S3"


def test_unknown_group_is_invalid_input():
    assert run("homs", CORPUS / "trefoil.pd", "--group", "Q8").exit_code == 2


# ── certify ──

def test_certify_not_fibered_exit_code():
    result = run("certify", CORPUS / "5_2.pd", "--max-order", 4)
    assert result.exit_code == 3
    assert "5_2: NotFibered" in result.stdout


def test_certify_consistent_json_is_deterministic():
    args = ("certify", CORPUS / "trefoil.pd", "--max-order", 4, "--primes", "2,3", "--format", "json")
    first, second = run(*args), run(*args)
    assert first.exit_code == 0, first.output
    assert first.stdout == second.stdout
    report = json.loads(first.stdout)
    assert report["verdict"]["kind"] == "ConsistentUpTo"
    assert report["inferred_norm"] == 1
    assert report["budget"]["primes"] == [2, 3]


def test_certify_presentation_file():
    result = run("certify", CORPUS / "torus.pres", "--max-order", 4)
    assert result.exit_code == 0, result.output
    assert "torus-xy: ConsistentUpTo" in result.stdout


def test_certify_with_known_norm():
    result = run("certify", CORPUS / "trefoil.pd", "--max-order", 3, "--norm", 1, "--format", "json")
    assert result.exit_code == 0, result.output
    assert json.loads(result.stdout)["norm_source"] == "hint"


def test_time_limit_exit_code():
    result = run("certify", CORPUS / "trefoil.pd", "--max-order", 4, "--time-limit", "1e-9")
    assert result.exit_code == 4
    assert "Truncated" in result.stdout


# ── invalid input ──

def test_bad_pd_code_names_the_label(tmp_path):
    bad = tmp_path / "bad.pd"
    bad.write_text("[[1,5,2,4],[3,1,4,6],[5,3,6,7]]")
    result = run("certify", bad)
    assert result.exit_code == 2
    assert "arc label 2" in result.output


def test_bad_presentation_reports_position(tmp_path):
    bad = tmp_path / "bad.pres"
    bad.write_text("gens: 2\nrel: ab?c\n")
    result = run("compute", bad)
    assert result.exit_code == 2
    assert "line 2, column 8" in result.output


def test_unknot_is_rejected(tmp_path):
    unknot = tmp_path / "unknot.pd"
    unknot.write_text("[]")
    assert run("certify", unknot).exit_code == 2


def test_kinked_unknot_is_degenerate(tmp_path):
    kinked = tmp_path / "kinked.pd"
    kinked.write_text("[[4,1,1,2],[2,3,3,4]]")
    result = run("certify", kinked, "--max-order", 2, "--primes", "3")
    assert result.exit_code == 4
    assert "kinked: Degenerate" in result.stdout


@pytest.mark.parametrize("flags", [
    ("--primes", "4"),
    ("--primes", "2,x"),
    ("--max-order", "65"),
    ("--jobs", "0"),
])
def test_bad_flags(flags):
    assert run("certify", CORPUS / "trefoil.pd", *flags).exit_code == 2


def test_run_config_validation():
    assert RunConfig(command="certify", primes=[2, 65537]).primes == [2, 65537]
    with pytest.raises(ValidationError):
        RunConfig(command="certify", primes=[])
    with pytest.raises(ValidationError):
        RunConfig(command="certify", max_order=0)
    budget = RunConfig(command="certify", max_order=6, primes=[3], jobs=2).budget()
    assert budget.max_order == 6 and budget.primes == (3,) and budget.jobs == 2


def test_corpus_entry_needs_an_input():
    with pytest.raises(ValidationError):
        CorpusEntry(name="empty", known_genus=1)
    assert CorpusEntry(name="unknot", pd=[]).pd == []


# ── corpus / oracle ──

def test_corpus_run():
    result = run("corpus", CORPUS / "knots.json", "--max-order", 4, "--format", "json")
    assert result.exit_code == 0, result.output
    rows = {row["name"]: row for row in json.loads(result.stdout)["rows"]}
    assert rows["unknot"]["verdict"] == "n/a"
    assert rows["unknot"]["delta1"] == "1"
    assert rows["3_1"]["verdict"] == "ConsistentUpTo"
    assert rows["3_1"]["agreement"] is True
    assert rows["4_1"]["inferred_norm"] == 1
    assert rows["5_2"]["verdict"] == "NotFibered"
    assert rows["6_1"]["delta1"] == "2*t^2 - 5*t + 2"
    assert rows["6_1"]["verdict"] == "NotFibered"
    assert rows["torus-xy"]["verdict"] == "ConsistentUpTo"


def test_empty_corpus(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text('{"entries": []}')
    result = run("corpus", empty, "--format", "json")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["rows"] == []


def test_corpus_flags_soundness_violations(tmp_path):
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps([{
        "name": "5_2", "pd": [[1, 5, 2, 4], [3, 9, 4, 8], [5, 1, 6, 10], [7, 3, 8, 2], [9, 7, 10, 6]],
        "known_genus": 1, "known_fibered": True,
    }]))
    result = run("corpus", wrong, "--max-order", 2)
    assert result.exit_code == 1
    assert "SOUNDNESS VIOLATION" in result.stdout


def test_corpus_entry_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('[{"name": "nothing"}]')
    assert run("corpus", broken).exit_code == 2
    bad_pd = tmp_path / "bad_pd.json"
    bad_pd.write_text('[{"name": "bad", "pd": [[1, 2, 3, 4]]}]')
    result = run("corpus", bad_pd, "--format", "json")
    assert result.exit_code == 0
    (row,) = json.loads(result.stdout)["rows"]
    assert row["verdict"] == "error"
    assert "arc label" in row["error"]


def test_oracle_command():
    result = run("oracle", "--count", 2, "--seed", 5, "--max-order", 3, "--primes", "3")
    assert result.exit_code == 0, result.output
    assert "2/2 mapping tori consistent" in result.stdout
