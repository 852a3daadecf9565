import json
import os
from fractions import Fraction

import pytest

from spincorr.cli import main
from spincorr.dynamics import contact_process, path_edges
from spincorr.fixtures import fixture_corpus, write_fixtures
from spincorr.harness import derangement_measure, random_measure
from spincorr.measures import WeightVector, is_associated, normalize
from spincorr.serialize import (
    dumps,
    measure_from_dict,
    measure_to_dict,
    parse_rational,
    rate_table_from_dict,
    rate_table_to_dict,
    report_from_dict,
    report_to_dict,
)


class TestRationals:
    def test_parse_forms(self):
        assert parse_rational("3/4") == Fraction(3, 4)
        assert parse_rational(5) == Fraction(5)
        assert parse_rational("7") == Fraction(7)

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_rational("x/y")
        with pytest.raises(ValueError):
            parse_rational(True)
        with pytest.raises(ValueError):
            parse_rational("1/0")


class TestMeasureRoundTrip:
    def test_exact_round_trip_is_canonical(self):
        vector = random_measure(17, 3, "generic")
        doc = measure_to_dict(vector)
        again = measure_from_dict(doc)
        assert again == vector
        assert measure_to_dict(again) == doc

    def test_float_round_trip(self):
        vector = WeightVector.floats([0.25, 0.25, 0.125, 0.375])
        doc = json.loads(dumps(measure_to_dict(vector)))
        assert measure_from_dict(doc) == vector

    def test_mode_inference(self):
        assert measure_from_dict({"weights": ["1/2", "1/2"]}).mode == "exact"
        assert measure_from_dict({"weights": [0.5, 0.5]}).mode == "float"

    def test_declared_n_validated(self):
        with pytest.raises(ValueError):
            measure_from_dict({"n": 3, "weights": ["1", "1"]})

    def test_forcing_exact_converts_floats_exactly(self):
        vector = measure_from_dict({"weights": [0.5, 0.25, 0.125, 0.125]}, force_mode="exact")
        assert vector.mode == "exact"
        assert vector.weights[0] == Fraction(1, 2)


class TestRateTableRoundTrip:
    def test_explicit_tables(self):
        rates = contact_process(path_edges(3), infection=Fraction(3, 2))
        doc = rate_table_to_dict(rates)
        assert rate_table_from_dict(doc) == rates

    def test_contact_shorthand(self):
        doc = {"model": "contact", "edges": [[0, 1], [1, 2]], "lambda": "3/2", "delta": "1"}
        assert rate_table_from_dict(doc) == contact_process(path_edges(3), Fraction(3, 2), 1)

    def test_own_bit_values_are_copied_from_representatives(self):
        doc = {
            "n": 1,
            "beta": {"0": ["2", "99"]},  # the entry at the occupied config is ignored
            "delta": {"0": ["3", "5"]},  # dito: representative has the bit cleared
        }
        rates = rate_table_from_dict(doc)
        assert rates.birth[0] == (Fraction(2), Fraction(2))
        assert rates.death[0] == (Fraction(3), Fraction(3))

    def test_missing_site_rejected(self):
        with pytest.raises(ValueError):
            rate_table_from_dict({"n": 1, "beta": {}, "delta": {"0": ["1", "1"]}})


class TestReportRoundTrip:
    def test_exact_report(self):
        report = is_associated(derangement_measure(3))
        doc = json.loads(dumps(report_to_dict(report)))
        again = report_from_dict(doc)
        assert again.property == report.property
        assert again.verdict == report.verdict
        assert again.margin == report.margin


class TestFixtures:
    def test_corpus_is_deterministic(self, tmp_path):
        first = tmp_path / "a"
        second = tmp_path / "b"
        write_fixtures(str(first))
        write_fixtures(str(second))
        for name in os.listdir(first):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_in_repo_fixtures_match_the_generator(self):
        here = os.path.join(os.path.dirname(__file__), "..", "fixtures")
        for name, doc in fixture_corpus().items():
            path = os.path.join(here, f"{name}.json")
            assert os.path.exists(path), f"fixture {name} missing; run: spincorr fixtures"
            with open(path, "r", encoding="utf-8") as fh:
                assert json.load(fh) == json.loads(dumps(doc))

    def test_fixture_measures_parse(self, tmp_path):
        write_fixtures(str(tmp_path))
        vector = measure_from_dict(json.loads((tmp_path / "derangement3.json").read_text()))
        assert normalize(vector).weights == derangement_measure(3).weights


class TestCli:
    @pytest.fixture()
    def fixture_dir(self, tmp_path_factory):
        directory = tmp_path_factory.mktemp("fx")
        write_fixtures(str(directory))
        return directory

    def run(self, *argv, capsys=None):
        code = main(list(argv))
        return code

    def test_check_measure_exit_codes(self, fixture_dir, capsys):
        path = str(fixture_dir / "derangement3.json")
        assert main(["check-measure", "--input", path]) == 0
        capsys.readouterr()
        assert main(["check-measure", "--input", path, "--assert", "associated,downward-fkg"]) == 0
        capsys.readouterr()
        assert main(["check-measure", "--input", path, "--assert", "fkg-lattice"]) == 1
        out = json.loads(capsys.readouterr().out)
        assert out["format_version"] == 1
        assert out["reports"]["fkg-lattice"]["verdict"] == "fails"
        assert out["reports"]["dca"]["verdict"] == "holds"

    def test_check_rates_on_contact_fixture(self, fixture_dir, capsys):
        path = str(fixture_dir / "contact_path4.json")
        code = main([
            "check-rates", "--input", path,
            "--assert", "attractive,additive-births,constant-deaths",
        ])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["reports"]["independent-flips"]["verdict"] == "fails"

    def test_evolve_time_zero_echoes_measure(self, fixture_dir, capsys):
        measure = str(fixture_dir / "derangement3.json")
        system = str(fixture_dir / "independent_flips3.json")
        assert main(["evolve", "--input", measure, "--system", system, "--t", "0"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["evolved"][0]["t"] == 0
        assert out["evolved"][0]["weights"] == measure_to_dict(derangement_measure(3))["weights"]

    def test_evolve_output_file(self, fixture_dir, tmp_path):
        measure = str(fixture_dir / "derangement3.json")
        system = str(fixture_dir / "contact_path4.json")
        # measure and system sizes disagree: input error
        assert main(["evolve", "--input", measure, "--system", system, "--t", "0.5"]) == 2

    def test_classify3(self, fixture_dir, capsys):
        path = str(fixture_dir / "gap_lattice_vs_dca.json")
        assert main(["classify3", "--input", path, "--assert", "dca,associated"]) == 0
        capsys.readouterr()
        assert main(["classify3", "--input", path, "--assert", "lattice"]) == 1
        out = json.loads(capsys.readouterr().out)
        assert out["verdicts"] == {
            "lattice": False, "dca": True, "downward_fkg": True, "associated": True,
        }

    def test_classify3_named_coordinates(self, tmp_path, capsys):
        doc = {"a": "1/3", "b1": "1/6", "b2": "1/6", "b3": "1/6",
               "c1": "0", "c2": "0", "c3": "0", "d": "1/6"}
        path = tmp_path / "coords.json"
        path.write_text(json.dumps(doc))
        assert main(["classify3", "--input", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["verdicts"]["downward_fkg"] is True

    def test_verify_theorem(self, fixture_dir, capsys):
        system = str(fixture_dir / "independent_flips3.json")
        code = main([
            "verify-theorem", "--system", system, "--property", "fkg-lattice",
            "--t", "0.1,0.5", "--count", "3", "--seed", "7",
        ])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["outcome"]["summary"] == "all-hold"
        assert out["outcome"]["hypotheses"]["independent-flips"] is True

    def test_search_exit_one_on_found(self, fixture_dir, capsys):
        system = str(fixture_dir / "crossed_birth_pair.json")
        code = main(["search", "--system", system, "--target", "association"])
        assert code == 1
        out = json.loads(capsys.readouterr().out)
        assert out["outcome"]["found"] is True

    def test_malformed_input_exit_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["check-measure", "--input", str(bad)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_file_exit_two(self, capsys):
        assert main(["check-measure", "--input", "/nonexistent.json"]) == 2

    def test_markdown_format(self, fixture_dir, capsys):
        path = str(fixture_dir / "derangement3.json")
        assert main(["classify3", "--input", path, "--format", "markdown"]) == 0
        out = capsys.readouterr().out
        assert out.endswith("\n")
        assert "**lattice**" in out
