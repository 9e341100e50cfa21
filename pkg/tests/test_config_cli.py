import csv
import io
import math
from fractions import Fraction

import pytest

from fadingmac.cli import fmt, main, parse_points
from fadingmac.config import (
    MissingKeyError,
    NormalizationError,
    RangeError,
    ScenarioConfig,
    UnknownKeyError,
    ValueFormatError,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)

MINIMAL = """
[channel]
fade_values_1 = 1, 0.5
fade_values_2 = 1, 0.5
fade_probs = 1/4, 1/4, 1/4, 1/4
[power]
pbar1 = 1
pbar2 = 1
[design]
rho_tilde = 0.5
"""


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bundled_two_point():
    sc = load_scenario("two_point.scenario")
    assert sc.fade_values_1 == sc.fade_values_2 == (1, 0.5)
    assert sc.fade_probs == (Fraction(1, 4),) * 4
    assert (sc.pbar1, sc.pbar2, sc.sigma2, sc.rho_tilde) == (5.0, 5.0, 1.0, 0.3)
    assert sc.csit == "perfect" and sc.source == "discrete"
    assert sc.discrete_source().pmf.prob((1, 0)) == 0


@pytest.mark.parametrize(
    "edit, error, key",
    [
        (("fade_probs = 1/4, 1/4, 1/4, 1/4", "fade_probs = 0.3, 0.2, 0.2, 0.2"), NormalizationError, "fade_probs"),
        (("[power]", "[csi]\ncsit = bsc\ncrossover = 0.7\n[power]"), RangeError, "crossover"),
        (("pbar1 = 1", "pbar1 = -1"), RangeError, "pbar1"),
        (("pbar1 = 1", "pbar1 = 1\nwatts = 3"), UnknownKeyError, "power.watts"),
        (("[design]", "[extras]"), UnknownKeyError, "extras"),
        (("[power]", "[csi]\ncsit = bsc\n[power]"), MissingKeyError, "crossover"),
        (("pbar1 = 1", "pbar1 = lots"), ValueFormatError, "pbar1"),
        (("fade_probs = 1/4, 1/4, 1/4, 1/4", "fade_probs = 1/2, 1/2"), ValueFormatError, "fade_probs"),
    ],
)
def test_diagnostics_name_the_offending_key(edit, error, key):
    text = MINIMAL.replace(*edit)
    with pytest.raises(error) as info:
        parse_scenario(text)
    assert info.value.key == key
    assert key in str(info.value)


def test_defaults_and_uniform_fades():
    sc = parse_scenario("[channel]\nfade_values_1 = 1, 0.5, 0.25\nfade_values_2 = 1\n")
    assert sc.fade_probs == (Fraction(1, 3),) * 3
    assert sc.tol == 1e-8 and sc.seed == 0
    assert sc.params().rho_tilde == 0.0


def test_no_csit_is_the_blind_bsc_for_two_point_fades():
    sc = parse_scenario(MINIMAL + "[csi]\ncsit = none\n")
    blind = parse_scenario(MINIMAL + "[csi]\ncsit = bsc\ncrossover = 1/2\n")
    assert sc.channel_model().csit_states == blind.channel_model().csit_states
    assert list(sc.channel_model().csit_probs) == list(blind.channel_model().csit_probs)
    three = parse_scenario("[channel]\nfade_values_1 = 1, 0.5, 0.2\n[csi]\ncsit = none\n")
    assert len(three.channel_model().csit_states) == 1


@pytest.mark.parametrize("name", bundled_scenarios())
def test_round_trip(name):
    sc = load_scenario(name)
    again = parse_scenario(serialize_scenario(sc))
    assert again == sc
    assert serialize_scenario(again) == serialize_scenario(sc)


def test_round_trip_of_a_custom_config():
    sc = ScenarioConfig(fade_values_1=(2, 0.5), fade_values_2=(1.5, 0.25),
                        fade_probs=(Fraction(1, 7), Fraction(2, 7), Fraction(3, 7), Fraction(1, 7)),
                        csit="bsc", crossover=Fraction(3, 20), pbar1=2.5, pbar2=0.75, sigma2=0.5,
                        source="gaussian", source_rho=-0.4, source_r1=0.5, rho_max=0.8,
                        tol=1e-9, seed=12, r_max=3.0, r_step=0.05, full_2d=True)
    assert parse_scenario(serialize_scenario(sc)) == sc


def test_fmt_is_fixed_precision():
    assert fmt(1.0 / 3.0) == "0.333333"
    assert fmt(-0.0) == "0"
    assert fmt(float("nan")) == "nan"
    assert fmt(True) == "true"
    assert fmt(1234567.0) == "1.23457e+06"


def test_point_expansion():
    assert parse_points("0,0.05,...,0.5") == [round(0.05 * i, 12) for i in range(11)]
    assert parse_points("0.1, 0.3") == [0.1, 0.3]
    assert parse_points("") == []


@pytest.mark.parametrize("text", ["0,0.05,...,0.52", "1,0.5,...,0", "a,b", "0,...,1"])
def test_bad_point_lists(capsys, text):
    status, out, err = run(capsys, "sweep", "rate_vs_crossover.scenario", "--axis", "p", "--points", text)
    assert status == 2 and out == "" and "error" in err


def test_feasibility_under_upa_is_infeasible(capsys):
    status, out, _ = run(capsys, "feasibility", "two_point.scenario", "--policy", "upa")
    assert status == 0
    rows = {r["inequality"]: r for r in table(out)}
    assert rows["overall"]["verdict"] == "infeasible"
    assert float(rows["sum"]["margin"]) < 0
    assert float(rows["sum"]["lhs"]) == pytest.approx(1.58496, abs=1e-5)
    status, _, _ = run(capsys, "feasibility", "two_point.scenario", "--policy", "upa", "--strict")
    assert status == 1


def test_feasibility_optimal_and_tuned(capsys):
    status, out, _ = run(capsys, "feasibility", "two_point.scenario", "--strict")
    assert status == 0
    assert table(out)[-1]["verdict"] == "feasible"
    status, out, _ = run(capsys, "feasibility", "two_point.scenario", "--tune")
    assert status == 0
    assert float(table(out)[-1]["rho_tilde"]) == 0.3


def test_feasibility_of_a_gaussian_source(capsys):
    status, out, _ = run(capsys, "feasibility", "lt_distortion.scenario", "--r1", "0.5", "--r2", "0.5")
    assert status == 0
    rows = table(out)
    assert rows[-1]["verdict"] == "feasible"
    assert float(rows[0]["rho_tilde"]) == pytest.approx(0.5 * 0.5, abs=1e-6)


def test_sweep_sum_rate_is_nonincreasing(capsys, tmp_path):
    out_file = tmp_path / "sweep.csv"
    status, out, _ = run(capsys, "sweep", "rate_vs_crossover.scenario", "--axis", "p", "--points", "0,0.05,...,0.5",
                         "--out", str(out_file))
    assert status == 0 and out == ""
    text = out_file.read_bytes().decode()
    assert "\r" not in text
    rows = table(text)
    assert len(rows) == 11
    sums = [float(r["sum_bound"]) for r in rows]
    assert all(b <= a for a, b in zip(sums, sums[1:]))
    assert all(r["converged"] == "true" for r in rows)
    assert list(rows[0]) == ["crossover_p", "r1_bound", "r2_bound", "sum_bound", "d1", "d2", "verdict",
                             "kkt_residual", "converged"]


def test_optimize_and_rates(capsys):
    status, out, _ = run(capsys, "optimize", "two_point.scenario")
    assert status == 0
    rows = table(out)
    assert len(rows) == 4
    assert float(rows[0]["objective"]) == pytest.approx(1.61338, abs=1e-5)
    assert all(float(r["kkt_residual"]) < 1e-8 for r in rows)
    status, out, _ = run(capsys, "rates", "two_point.scenario", "--policy", "upa")
    assert float(table(out)[0]["sum_bound"]) == pytest.approx(1.51917, abs=1e-5)
    status, out, _ = run(capsys, "rates", "two_point.scenario", "--policy", "tdma")
    assert status == 0


def test_distortion(capsys):
    status, out, _ = run(capsys, "distortion", "lt_distortion_static.scenario", "--r-max", "2", "--r-step", "0.05")
    assert status == 0
    row = table(out)[0]
    assert row["verdict"] in ("feasible", "marginal")
    assert float(row["d_sum"]) == pytest.approx(float(row["d1"]) + float(row["d2"]), rel=1e-5)


def test_validate_passes(capsys):
    status, out, _ = run(capsys, "validate", "two_point.scenario", "--samples", "100000", "--seed", "7")
    assert status == 0
    rows = table(out)
    assert rows and all(r["pass"] == "true" for r in rows)


@pytest.mark.parametrize(
    "argv",
    [
        ["rates", "missing.scenario"],
        ["distortion", "two_point.scenario"],
        ["feasibility", "rate_vs_crossover.scenario"],
        ["sweep", "rate_vs_crossover.scenario", "--axis", "rho", "--points", "0.1"],
        ["rates", "rate_vs_crossover.scenario", "--policy", "tdma", "--rho-tilde", "2"],
    ],
)
def test_input_errors_exit_2_without_output(capsys, tmp_path, argv):
    target = tmp_path / "out.csv"
    status, out, err = run(capsys, *argv, "--out", str(target))
    assert status == 2
    assert out == "" and err.startswith("error:")
    assert not target.exists()


def test_bad_scenario_file_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.scenario"
    bad.write_text(MINIMAL.replace("1/4, 1/4, 1/4, 1/4", "0.3, 0.2, 0.2, 0.2"))
    status, _, err = run(capsys, "rates", str(bad))
    assert status == 2
    assert "fade_probs" in err


def test_nan_free_numeric_columns(capsys):
    _, out, _ = run(capsys, "sweep", "two_point.scenario", "--axis", "rho_tilde", "--points", "0,0.5,1")
    for row in table(out):
        for k in ("r1_bound", "r2_bound", "sum_bound", "kkt_residual"):
            assert math.isfinite(float(row[k]))
