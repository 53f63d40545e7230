"""Match results and FIFA ranking snapshots.

The match CSV follows the layout of the public international football
results dataset::

    date,home_team,away_team,home_score,away_score,tournament,city,country,neutral

Team ids are dense, zero-based and assigned in order of first appearance.
Season indices are one-based: season 1 is the earliest calendar year present.
"""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import date
from typing import IO, Union

logger = logging.getLogger(__name__)

MATCH_HEADER = (
    "date",
    "home_team",
    "away_team",
    "home_score",
    "away_score",
    "tournament",
    "city",
    "country",
    "neutral",
)
POINTS_HEADER = ("team", "points")

DEFAULT_EXCLUDED_SUFFIXES = (" B", " U-23", " U23")

Source = Union[bytes, str, IO[bytes], IO[str]]


class MatchDataError(ValueError):
    """Raised on malformed input; ``line`` is the 1-based physical line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDatasetError(MatchDataError):
    pass


class EmptyWindowError(MatchDataError):
    pass


class UnknownSeasonError(KeyError):
    pass


@dataclass(frozen=True)
class MatchRecord:
    date: date
    home_team: str
    away_team: str
    home_goals: int
    away_goals: int
    tournament: str
    neutral: bool

    def __post_init__(self):
        if self.home_goals < 0 or self.away_goals < 0:
            raise MatchDataError(f"negative score {self.home_goals}-{self.away_goals}")
        if self.home_team == self.away_team:
            raise MatchDataError(f"team {self.home_team!r} cannot play itself")

    @property
    def outcome(self) -> str:
        """Result from the home side's perspective: 'win', 'draw' or 'loss'."""
        if self.home_goals > self.away_goals:
            return "win"
        if self.home_goals == self.away_goals:
            return "draw"
        return "loss"


@dataclass(frozen=True)
class MatchDataset:
    matches: tuple[MatchRecord, ...]
    teams: tuple[str, ...]
    seasons: Mapping[int, int]
    _ids: Mapping[str, int] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self._ids is None:
            object.__setattr__(self, "_ids", {t: k for k, t in enumerate(self.teams)})
        for m in self.matches:
            if m.home_team not in self._ids or m.away_team not in self._ids:
                raise MatchDataError(f"match {m.home_team} v {m.away_team} references an unregistered team")

    @classmethod
    def from_matches(cls, matches: Iterable[MatchRecord]) -> "MatchDataset":
        matches = tuple(matches)
        ids: dict[str, int] = {}
        for m in matches:
            for name in (m.home_team, m.away_team):
                if name not in ids:
                    ids[name] = len(ids)
        seasons: dict[int, int] = {}
        if matches:
            first = min(m.date.year for m in matches)
            last = max(m.date.year for m in matches)
            seasons = {year: year - first + 1 for year in range(first, last + 1)}
        return cls(matches, tuple(ids), seasons, ids)

    def __len__(self) -> int:
        return len(self.matches)

    @property
    def n_teams(self) -> int:
        return len(self.teams)

    @property
    def n_seasons(self) -> int:
        return len(self.seasons)

    @property
    def first_year(self) -> int:
        return min(self.seasons)

    def team_id(self, name: str) -> int:
        return self._ids[name]

    def season_of(self, d: date) -> int:
        return season_index(self, d)


def _read_text(raw: Source) -> str:
    if isinstance(raw, bytes):
        return raw.decode("utf-8-sig")
    if isinstance(raw, str):
        return raw
    data = raw.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return data


def _parse_date(text: str, line: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise MatchDataError(f"invalid date {text!r}", line) from None


def _parse_goals(text: str, line: int) -> int:
    text = text.strip()
    if not text.isdigit():
        raise MatchDataError(f"invalid score {text!r}", line)
    return int(text)


def _parse_bool(text: str, line: int) -> bool:
    value = text.strip().upper()
    if value == "TRUE":
        return True
    if value == "FALSE":
        return False
    raise MatchDataError(f"invalid neutral flag {text!r}", line)


def parse_matches(raw_csv: Source, *, skip_unplayed: bool = False) -> MatchDataset:
    """Parse a results CSV into a :class:`MatchDataset`.

    With ``skip_unplayed`` rows whose two scores are both ``NA`` (scheduled
    fixtures in the public dataset) are dropped instead of rejected.
    """
    text = _read_text(raw_csv)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDatasetError("empty match file") from None
    if tuple(h.strip() for h in header) != MATCH_HEADER:
        raise MatchDataError(f"unexpected header {header!r}", 1)

    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(MATCH_HEADER):
            raise MatchDataError(
                f"expected {len(MATCH_HEADER)} columns, got {len(row)}", line
            )
        d, home, away, hs, as_, tournament, _city, _country, neutral = row
        if skip_unplayed and hs.strip() == "NA" and as_.strip() == "NA":
            continue
        home, away = home.strip(), away.strip()
        if not home or not away:
            raise MatchDataError("empty team name", line)
        if home == away:
            raise MatchDataError(f"team {home!r} cannot play itself", line)
        records.append(
            MatchRecord(
                date=_parse_date(d, line),
                home_team=home,
                away_team=away,
                home_goals=_parse_goals(hs, line),
                away_goals=_parse_goals(as_, line),
                tournament=tournament.strip(),
                neutral=_parse_bool(neutral, line),
            )
        )
    if not records:
        raise EmptyDatasetError("match file has no data rows")
    return MatchDataset.from_matches(records)


def serialize_matches(ds: MatchDataset) -> str:
    """Write ``ds`` back to the results CSV layout (city/country left blank)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MATCH_HEADER)
    for m in ds.matches:
        writer.writerow(
            [
                m.date.isoformat(),
                m.home_team,
                m.away_team,
                m.home_goals,
                m.away_goals,
                m.tournament,
                "",
                "",
                "TRUE" if m.neutral else "FALSE",
            ]
        )
    return out.getvalue()


def is_excluded_team(name: str, suffixes: Sequence[str] = DEFAULT_EXCLUDED_SUFFIXES) -> bool:
    return any(name.endswith(s) for s in suffixes)


def filter_training_window(
    ds: MatchDataset,
    start: date,
    end: date,
    exclusions: Iterable[str] = (),
    excluded_suffixes: Sequence[str] = (),
) -> MatchDataset:
    """Keep matches dated within ``[start, end]`` whose tournament is not excluded.

    Matches involving a team whose name ends with one of ``excluded_suffixes``
    (B-teams, U-23 sides) are dropped as well. The team registry and season
    mapping are rebuilt on what remains.
    """
    if start > end:
        raise ValueError(f"window start {start} is after end {end}")
    exclusions = frozenset(exclusions)
    kept = [
        m
        for m in ds.matches
        if start <= m.date <= end
        and m.tournament not in exclusions
        and not is_excluded_team(m.home_team, excluded_suffixes)
        and not is_excluded_team(m.away_team, excluded_suffixes)
    ]
    if not kept:
        raise EmptyWindowError(f"no matches between {start} and {end}")
    return MatchDataset.from_matches(kept)


def season_index(ds: MatchDataset, d: date) -> int:
    try:
        return ds.seasons[d.year]
    except KeyError:
        raise UnknownSeasonError(f"year {d.year} is outside the dataset seasons") from None


@dataclass(frozen=True)
class RankingSnapshot:
    as_of_date: date
    points: Mapping[str, float]


def parse_fifa_points(raw_csv: Source, as_of: date) -> RankingSnapshot:
    text = _read_text(raw_csv)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDatasetError("empty ranking file") from None
    if tuple(h.strip() for h in header) != POINTS_HEADER:
        raise MatchDataError(f"unexpected header {header!r}", 1)

    points: dict[str, float] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != 2:
            raise MatchDataError(f"expected 2 columns, got {len(row)}", line)
        team = row[0].strip()
        if not team:
            raise MatchDataError("empty team name", line)
        try:
            value = float(row[1])
        except ValueError:
            raise MatchDataError(f"invalid points {row[1]!r}", line) from None
        if value != value or value in (float("inf"), float("-inf")):
            raise MatchDataError(f"non-finite points {row[1]!r}", line)
        if team in points:
            logger.warning("duplicate ranking entry for %s at line %d; keeping the last", team, line)
        points[team] = value
    return RankingSnapshot(as_of, points)


def team_mismatches(teams: Iterable[str], snapshot: RankingSnapshot) -> list[str]:
    """Teams (in the given order) that have no entry in the ranking snapshot."""
    return [t for t in teams if t.strip() not in snapshot.points]


def mismatch_report(teams: Iterable[str], snapshot: RankingSnapshot) -> str:
    missing = team_mismatches(teams, snapshot)
    return "".join(f"{t}\n" for t in missing)
