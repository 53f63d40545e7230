"""Simulated international results for demos, smoke runs and calibration tests."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .btd import Comparisons, davidson_probs
from .match_data import MATCH_HEADER


def simulate_comparisons(psi, gamma: float, n_matches: int, rng: np.random.Generator) -> Comparisons:
    """Random pairings with outcomes drawn from Davidson probabilities."""
    psi = np.asarray(psi, dtype=float)
    n = len(psi)
    home = rng.integers(0, n, n_matches)
    away = (home + rng.integers(1, n, n_matches)) % n
    pw, pd, _ = davidson_probs(psi[home], psi[away], gamma)
    u = rng.random(n_matches)
    result = np.where(u < pw, 0, np.where(u < pw + pd, 1, 2))
    return Comparisons(home, away, result)


def simulate_goals(theta, att, def_, phi, features_home, features_away, season, omega, rng, lambda3=0.0):
    """Scores from the bivariate Poisson construction (double Poisson when lambda3 = 0)."""
    shift = 0.5 * phi * omega
    l1 = np.exp(theta + att[features_home, season] + def_[features_away, season] + shift)
    l2 = np.exp(theta + att[features_away, season] + def_[features_home, season] - shift)
    common = rng.poisson(lambda3, len(l1)) if lambda3 > 0 else 0
    return np.column_stack([rng.poisson(l1) + common, rng.poisson(l2) + common])


@dataclass
class SyntheticWorld:
    teams: list[str]
    strength: np.ndarray
    results_csv: str
    fifa_csv: str
    group_fixtures_csv: str
    knockout_fixtures_csv: str

    def write(self, directory: Path) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = {
            "matches": directory / "results.csv",
            "fifa_points": directory / "fifa.csv",
            "group_fixtures": directory / "group.csv",
            "knockout_fixtures": directory / "knockout.csv",
        }
        files["matches"].write_text(self.results_csv, encoding="utf-8")
        files["fifa_points"].write_text(self.fifa_csv, encoding="utf-8")
        files["group_fixtures"].write_text(self.group_fixtures_csv, encoding="utf-8")
        files["knockout_fixtures"].write_text(self.knockout_fixtures_csv, encoding="utf-8")
        return files


def _score(rng, s_home, s_away, base=0.25):
    l1 = np.exp(base + 0.45 * (s_home - s_away))
    l2 = np.exp(base - 0.45 * (s_home - s_away))
    return int(rng.poisson(l1)), int(rng.poisson(l2))


def make_world(
    n_teams: int = 12,
    matches_per_year: int = 60,
    years: tuple[int, int] = (2018, 2021),
    n_participants: int = 8,
    seed: int = 0,
) -> SyntheticWorld:
    """A small world of national teams with a tournament at the end of the last year.

    Before the tournament teams play friendlies. The ``n_participants``
    strongest teams then play a round-robin group stage (in two groups) and
    a knockout bracket. FIFA points are a noisy monotone transform of the
    true strengths.
    """
    rng = np.random.default_rng(seed)
    teams = [f"Nation {k + 1:02d}" for k in range(n_teams)]
    strength = np.sort(rng.normal(0.0, 0.8, n_teams))[::-1]
    rows = []
    for year in range(years[0], years[1] + 1):
        for k in range(matches_per_year):
            d = date(year, 1, 10) + timedelta(days=int(300 * k / matches_per_year))
            i = int(rng.integers(n_teams))
            j = int((i + rng.integers(1, n_teams)) % n_teams)
            x, y = _score(rng, strength[i], strength[j])
            tournament = "Friendly" if k % 7 else "Olympic Games"
            rows.append([d.isoformat(), teams[i], teams[j], x, y, tournament, "City", "Country", "FALSE"])

    tournament_start = date(years[1], 11, 20)
    participants = list(range(n_participants))
    groups = [participants[0::2], participants[1::2]]
    group_rows = []
    day = 0
    for g in groups:
        for a in range(len(g)):
            for b in range(a + 1, len(g)):
                d = tournament_start + timedelta(days=day // 2)
                day += 1
                i, j = g[a], g[b]
                x, y = _score(rng, strength[i], strength[j])
                group_rows.append([d.isoformat(), teams[i], teams[j], x, y, "World Cup", "City", "Host", "TRUE"])
    ko_rows = []
    d = tournament_start + timedelta(days=day // 2 + 2)
    bracket = [(groups[0][k], groups[1][len(groups[1]) - 1 - k]) for k in range(len(groups[0]))]
    for i, j in bracket:
        x, y = _score(rng, strength[i], strength[j])
        ko_rows.append([d.isoformat(), teams[i], teams[j], x, y, "World Cup", "City", "Host", "TRUE"])
        d += timedelta(days=1)
    # an unplayed fixture, as in the public dataset
    rows_tail = [[(d + timedelta(days=40)).isoformat(), teams[0], teams[1], "NA", "NA", "Friendly", "City", "Country", "FALSE"]]

    def to_csv(header, body):
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(body)
        return out.getvalue()

    results = to_csv(MATCH_HEADER, rows + group_rows + ko_rows + rows_tail)
    points = 1500 + 150 * strength + rng.normal(0, 40, n_teams)
    fifa = to_csv(("team", "points"), [[t, f"{p:.2f}"] for t, p in zip(teams, points)])
    fixtures = lambda body: to_csv(("date", "home_team", "away_team"), [r[:3] for r in body])
    return SyntheticWorld(teams, strength, results, fifa, fixtures(group_rows), fixtures(ko_rows))
