from datetime import date

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import stats

from btdfoot.features import (
    BTD_LOG_STRENGTH,
    CoverageError,
    DegenerateDispersionError,
    MissingTeamError,
    StrengthTable,
    btd_strengths,
    fifa_strengths,
    mad_normalize,
    normalize_table,
    omega,
    rank_agreement,
)
from btdfoot.inference import PosteriorSample

vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=40)


def psi_sample(values_by_chain, names):
    draws = np.asarray(values_by_chain, dtype=float)
    return PosteriorSample(draws, [f"psi[{n}]" for n in names] + ["gamma"])


def test_mad_examples():
    assert mad_normalize([1, 2, 3, 4, 5]) == pytest.approx([-2, -1, 0, 1, 2])
    assert mad_normalize([0, 0, 1, 3]) == pytest.approx([-1, -1, 1, 5])
    with pytest.raises(DegenerateDispersionError):
        mad_normalize([7, 7, 7])
    with pytest.raises(ValueError):
        mad_normalize([1.0])


@given(vectors)
def test_mad_output_has_unit_dispersion(values):
    x = np.array(values)
    mad = np.median(np.abs(x - np.median(x)))
    assume(mad > 1e-6 * max(1.0, np.max(np.abs(x))))
    z = mad_normalize(x)
    assert np.median(z) == pytest.approx(0.0, abs=1e-9)
    assert np.median(np.abs(z - np.median(z))) == pytest.approx(1.0, abs=1e-9)


def test_btd_strengths_examples():
    s = psi_sample([[[0.4, -0.4, 0.1]] * 5], ["A", "B"])
    table = btd_strengths(s, ["A", "B"], date(2022, 11, 19))
    assert dict(table.values) == {"A": 0.4, "B": -0.4}
    assert table.source == BTD_LOG_STRENGTH
    with pytest.raises(CoverageError):
        btd_strengths(s, ["A", "C"])


def test_btd_strengths_chain_permutation_and_csv_oracle():
    rng = np.random.default_rng(0)
    draws = rng.normal(size=(3, 51, 4))
    s = psi_sample(draws, ["A", "B", "C"])
    table = btd_strengths(s, ["A", "B", "C"])
    swapped = btd_strengths(psi_sample(draws[::-1], ["A", "B", "C"]), ["A", "B", "C"])
    assert dict(table.values) == dict(swapped.values)
    text = s.to_csv()
    rows = np.array([[float(v) for v in line.split(",")[2:]] for line in text.splitlines()[1:]])
    for k, team in enumerate(["A", "B", "C"]):
        assert table.values[team] == pytest.approx(float(np.median(rows[:, k])), abs=1e-12)


def test_omega_examples(caplog):
    table = StrengthTable("fifa_points", {"A": 0.3, "B": 0.1, "C": 0.1})
    assert omega(table, "A", "B") == pytest.approx(0.2)
    assert omega(table, "B", "C") == 0.0
    assert omega(table, "B", "A") == -omega(table, "A", "B")
    with pytest.raises(MissingTeamError):
        omega(table, "A", "Z")
    assert omega(table, "A", "Z", impute=True) == pytest.approx(0.3 - 0.1)
    normalized = normalize_table(StrengthTable("fifa_points", {"A": 3.0, "B": 1.0, "C": 2.0}))
    assert omega(normalized, "A", "Z", impute=True) == pytest.approx(normalized.values["A"])
    assert "Z" in caplog.text


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=12, unique=True), st.floats(0.01, 50), st.floats(-1e3, 1e3))
def test_omega_invariant_under_affine_maps(values, a, b):
    teams = [f"T{k}" for k in range(len(values))]
    x = np.array(values)
    assume(np.median(np.abs(x - np.median(x))) > 1e-3)
    base = normalize_table(StrengthTable("fifa_points", dict(zip(teams, x))))
    moved = normalize_table(StrengthTable("fifa_points", dict(zip(teams, a * x + b))))
    assert omega(moved, teams[0], teams[1]) == pytest.approx(omega(base, teams[0], teams[1]), rel=1e-9, abs=1e-9)


def test_normalize_over_population():
    table = fifa_strengths({"A": 10.0, "B": 20.0, "C": 30.0, "D": 1000.0})
    over_all = normalize_table(table)
    over_three = normalize_table(table, ["A", "B", "C", "E"])
    assert over_three.values["B"] == 0.0
    assert over_three.values["C"] == pytest.approx(1.0)
    assert over_all.values["B"] != over_three.values["B"]
    assert over_three.raw["D"] == 1000.0


def test_strength_table_csv_round_trip():
    table = normalize_table(fifa_strengths({"Brazil": 1841.3, "Côte d'Ivoire": 1500.0, "Ghana": 1393.0}, date(2022, 10, 6)))
    text = table.to_csv()
    assert text.splitlines()[0] == "team,raw,normalized,source,as_of"
    back = StrengthTable.from_csv(text)
    assert back == table
    assert dict(back.raw) == dict(table.raw)
    with pytest.raises(ValueError):
        StrengthTable("fifa_points", {"A": float("nan")})


def test_rank_agreement_examples():
    x = np.array([3.0, 1.0, 2.0, 5.0])
    r = rank_agreement(x, x)
    assert (r.pearson, r.spearman, r.kendall) == pytest.approx((1, 1, 1))
    r = rank_agreement(x, -x)
    assert r.spearman == pytest.approx(-1) and r.kendall == pytest.approx(-1)
    with pytest.raises(DegenerateDispersionError):
        rank_agreement([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        rank_agreement([1, 2], [1, 2])


def kendall_tau_b_oracle(a, b):
    concordant = discordant = ties_a = ties_b = 0
    n = len(a)
    for i in range(n):
        for j in range(i + 1, n):
            da, db = np.sign(a[i] - a[j]), np.sign(b[i] - b[j])
            if da == 0 and db == 0:
                continue
            if da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif da == db:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / np.sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b))


@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=4, max_size=25))
def test_agreement_against_oracles(pairs):
    a = np.array([p[0] for p in pairs], float)
    b = np.array([p[1] for p in pairs], float)
    assume(np.ptp(a) > 0 and np.ptp(b) > 0)
    r = rank_agreement(a, b)
    assert r.pearson == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)
    assert r.spearman == pytest.approx(np.corrcoef(stats.rankdata(a), stats.rankdata(b))[0, 1], abs=1e-12)
    assert r.kendall == pytest.approx(kendall_tau_b_oracle(a, b), abs=1e-12)
    for coef in (r.pearson, r.spearman, r.kendall):
        assert -1 <= coef <= 1


@given(st.lists(st.integers(-1000, 1000), min_size=4, max_size=20, unique=True), st.floats(0.1, 10), st.floats(-5, 5))
def test_agreement_invariant_under_increasing_maps(values, a, b):
    x = np.array(values) / 100.0
    y = x + np.sin(3 * x)
    assume(np.ptp(y) > 1e-6)
    r = rank_agreement(x, y)
    moved = rank_agreement(a * x + b, np.exp(y / 10))
    assert moved.spearman == pytest.approx(r.spearman, abs=1e-12)
    assert moved.kendall == pytest.approx(r.kendall, abs=1e-12)
    assert rank_agreement(a * x + b, y).pearson == pytest.approx(r.pearson, abs=1e-9)
