"""Team strength tables, MAD normalization and ranking agreement."""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import date

import numpy as np
from scipy import stats

from .inference import PosteriorSample, posterior_median

logger = logging.getLogger(__name__)

FIFA_POINTS, BTD_LOG_STRENGTH = "fifa_points", "btd_log_strength"


class DegenerateDispersionError(ValueError):
    pass


class CoverageError(KeyError):
    pass


class MissingTeamError(KeyError):
    pass


def mad_location_scale(values) -> tuple[float, float]:
    """Median and median absolute deviation (no consistency factor)."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two values")
    centre = float(np.median(x))
    scale = float(np.median(np.abs(x - centre)))
    if scale == 0.0:
        raise DegenerateDispersionError("median absolute deviation is zero")
    return centre, scale


def mad_normalize(values) -> np.ndarray:
    """``(x - median(x)) / median(|x - median(x)|)``."""
    centre, scale = mad_location_scale(values)
    return (np.asarray(values, dtype=float) - centre) / scale


@dataclass(frozen=True)
class StrengthTable:
    """Per-team strengths keyed by team name.

    ``raw`` keeps the unnormalized values once :func:`normalize_table` has run.
    """

    source: str
    values: Mapping[str, float]
    as_of: date | None = None
    raw: Mapping[str, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        for team, v in self.values.items():
            if not np.isfinite(v):
                raise ValueError(f"strength for {team} is not finite")

    @property
    def normalized(self) -> bool:
        return self.raw is not None

    def median(self) -> float:
        return float(np.median(list(self.values.values())))

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["team", "raw", "normalized", "source", "as_of"])
        raw = self.raw if self.raw is not None else self.values
        for team in raw:
            norm = self.values.get(team) if self.raw is not None else None
            writer.writerow(
                [
                    team,
                    repr(float(raw[team])),
                    "" if norm is None else repr(float(norm)),
                    self.source,
                    "" if self.as_of is None else self.as_of.isoformat(),
                ]
            )
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StrengthTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty strength table")
        raw = {r["team"]: float(r["raw"]) for r in rows}
        as_of = date.fromisoformat(rows[0]["as_of"]) if rows[0]["as_of"] else None
        if all(r["normalized"] for r in rows):
            return cls(rows[0]["source"], {r["team"]: float(r["normalized"]) for r in rows}, as_of, raw)
        return cls(rows[0]["source"], raw, as_of)


def fifa_strengths(points: Mapping[str, float], as_of: date | None = None) -> StrengthTable:
    return StrengthTable(FIFA_POINTS, dict(points), as_of)


def btd_strengths(sample: PosteriorSample, registry: Sequence[str], as_of: date | None = None) -> StrengthTable:
    """Posterior median of ``psi[team]`` for every registered team."""
    names = set(sample.parameter_names)
    missing = [t for t in registry if f"psi[{t}]" not in names]
    if missing:
        raise CoverageError(f"sample has no log-strength for {missing[:5]}")
    values = {t: posterior_median(sample, f"psi[{t}]") for t in registry}
    return StrengthTable(BTD_LOG_STRENGTH, values, as_of)


def normalize_table(table: StrengthTable, population: Iterable[str] | None = None) -> StrengthTable:
    """MAD-normalize every team with the median and MAD of ``population``.

    ``population`` defaults to all teams in the table. Population members
    absent from the table are ignored (with a warning).
    """
    raw = dict(table.raw if table.raw is not None else table.values)
    if population is None:
        members = list(raw)
    else:
        population = list(population)
        members = [t for t in population if t in raw]
        absent = [t for t in population if t not in raw]
        if absent:
            logger.warning("%d normalization teams have no %s value: %s", len(absent), table.source, ", ".join(absent))
    centre, scale = mad_location_scale([raw[t] for t in members])
    values = {t: (v - centre) / scale for t, v in raw.items()}
    return StrengthTable(table.source, values, table.as_of, raw)


def omega(table: StrengthTable, home: str, away: str, *, impute: bool = False) -> float:
    """Strength difference home minus away.

    With ``impute`` a team missing from the table gets the median strength:
    0 for a normalized table, the median of the values otherwise.
    """
    values = []
    for team in (home, away):
        if team in table.values:
            values.append(table.values[team])
        elif impute:
            logger.warning("no %s strength for %s; using the median", table.source, team)
            values.append(0.0 if table.normalized else table.median())
        else:
            raise MissingTeamError(f"no {table.source} strength for {team}")
    return float(values[0] - values[1])


@dataclass(frozen=True)
class RankingAgreementReport:
    pearson: float
    spearman: float
    kendall: float

    def to_text(self) -> str:
        return f"pearson {self.pearson:.4f}\nspearman {self.spearman:.4f}\nkendall {self.kendall:.4f}\n"


def rank_agreement(a, b) -> RankingAgreementReport:
    """Pearson, Spearman (midranks) and Kendall tau-b between two score vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-D and of equal length")
    if a.size < 3:
        raise ValueError("need at least three pairs")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise DegenerateDispersionError("constant input")
    pearson = float(np.clip(stats.pearsonr(a, b)[0], -1, 1))
    spearman = float(np.clip(stats.spearmanr(a, b)[0], -1, 1))
    kendall = float(np.clip(stats.kendalltau(a, b, variant="b")[0], -1, 1))
    return RankingAgreementReport(pearson, spearman, kendall)


def table_agreement(x: StrengthTable, y: StrengthTable, teams: Iterable[str]) -> RankingAgreementReport:
    teams = [t for t in teams if t in x.values and t in y.values]
    return rank_agreement([x.values[t] for t in teams], [y.values[t] for t in teams])
