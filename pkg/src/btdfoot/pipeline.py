"""End-to-end tournament experiment: ranking fit, goal models, forecasts, Brier.

Every stage reads its inputs from and writes its outputs to one output
directory, so stages can run separately (see :mod:`btdfoot.cli`) or in one
go with :func:`run_pipeline`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import platform
from collections.abc import Callable
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__
from .btd import BTDModel, BTDPriors, comparisons_from_matches
from .evaluation import (
    DEFAULT_MAX_GOALS,
    EvaluationReport,
    LogitCoefficients,
    OutcomeForecast,
    brier,
    evaluations_from_csv,
    evaluations_to_csv,
    fit_logit_baseline,
    forecasts_to_csv,
    posterior_predictive_forecast,
    predict_logit,
)
from .features import (
    BTD_LOG_STRENGTH,
    FIFA_POINTS,
    StrengthTable,
    btd_strengths,
    fifa_strengths,
    normalize_table,
    omega,
    table_agreement,
)
from .goal_models import MODEL_KINDS, GoalModelHyperpriors, MatchFeature, fit_goal_model, goal_draws
from .inference import DegenerateChainError, McmcConfig, PosteriorSample, ess, r_hat, sample_posterior
from .match_data import (
    DEFAULT_EXCLUDED_SUFFIXES,
    MatchDataset,
    MatchRecord,
    filter_training_window,
    mismatch_report,
    parse_fifa_points,
    parse_matches,
    serialize_matches,
)

logger = logging.getLogger(__name__)

LOGIT = "logit"
ALL_MODELS = (*MODEL_KINDS, LOGIT)
MODEL_LABELS = {
    "diag_inflated": "Diag. Infl.",
    "bivariate": "Biv. Pois.",
    "double": "Double Pois.",
    "logit": "Multinom. Logit",
}
SOURCES = {"fifa": FIFA_POINTS, "btd": BTD_LOG_STRENGTH}
STAGES = ("group", "knockout")


class ConfigError(ValueError):
    pass


class DependencyError(RuntimeError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, step: str, cause: Exception):
        super().__init__(f"step {step!r} failed: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    matches: Path
    fifa_points: Path
    group_fixtures: Path
    knockout_fixtures: Path
    out: Path
    train_start: date
    train_end: date
    fifa_as_of: date | None = None
    exclude_tournaments: tuple[str, ...] = ("Olympic Games",)
    exclude_suffixes: tuple[str, ...] = DEFAULT_EXCLUDED_SUFFIXES
    models: tuple[str, ...] = ALL_MODELS
    ranking: str = "both"
    chains: int = 4
    warmup: int = 2000
    iterations: int = 2000
    seed: int = 0
    normalization: str = "participants"
    max_goals: int = DEFAULT_MAX_GOALS
    skip_unplayed: bool = True
    btd_priors: BTDPriors = BTDPriors()
    goal_hyper: GoalModelHyperpriors = GoalModelHyperpriors()
    source_text: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if self.train_start > self.train_end:
            raise ConfigError("train_start is after train_end")
        if self.ranking not in ("fifa", "btd", "both"):
            raise ConfigError(f"ranking must be fifa, btd or both, not {self.ranking!r}")
        unknown = [m for m in self.models if m not in ALL_MODELS]
        if unknown:
            raise ConfigError(f"unknown models {unknown}; choose from {ALL_MODELS}")
        if self.normalization not in ("participants", "registry"):
            raise ConfigError("normalization must be participants or registry")

    @property
    def sources(self) -> tuple[str, ...]:
        return ("fifa", "btd") if self.ranking == "both" else (self.ranking,)

    def mcmc(self, label: str) -> McmcConfig:
        return McmcConfig(chains=self.chains, iterations=self.iterations, warmup=self.warmup, seed=derived_seed(self.seed, label))

    def check_paths(self):
        for name in ("matches", "fifa_points", "group_fixtures", "knockout_fixtures"):
            path = getattr(self, name)
            if not path.is_file():
                raise ConfigError(f"{name} file not found: {path}")

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()


def derived_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


_LIST_KEYS = {"exclude_tournaments", "exclude_suffixes", "models"}
_PATH_KEYS = {"matches", "fifa_points", "group_fixtures", "knockout_fixtures", "out"}
_DATE_KEYS = {"train_start", "train_end", "fifa_as_of"}
_INT_KEYS = {"chains", "warmup", "iterations", "seed", "max_goals"}
_FLOAT_KEYS = {
    "btd_mu_psi": ("btd_priors", "mu_psi"),
    "btd_sigma_psi": ("btd_priors", "sigma_psi"),
    "btd_mu_gamma": ("btd_priors", "mu_gamma"),
    "btd_sigma_gamma": ("btd_priors", "sigma_gamma"),
    "mu_att": ("goal_hyper", "mu_att"),
    "mu_def": ("goal_hyper", "mu_def"),
    "theta_scale": ("goal_hyper", "theta_scale"),
    "phi_scale": ("goal_hyper", "phi_scale"),
    "beta0_scale": ("goal_hyper", "beta0_scale"),
    "xi_rate": ("goal_hyper", "xi_rate"),
    "sigma_scale": ("goal_hyper", "sigma_scale"),
}


def parse_config_text(text: str, base: Path = Path("."), overrides: dict[str, str] | None = None) -> PipelineConfig:
    """Parse ``key = value`` lines. ``#`` starts a comment; lists are comma separated.

    Relative paths resolve against ``base``. ``exclude_suffixes`` entries are
    name suffixes after a space, e.g. ``B, U-23`` drops "Ghana B".
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    raw.update(overrides or {})

    kwargs: dict = {}
    btd_priors: dict[str, float] = {}
    goal_hyper: dict[str, float] = {}
    for key, value in raw.items():
        try:
            if key in _PATH_KEYS:
                path = Path(value)
                kwargs[key] = path if path.is_absolute() else base / path
            elif key in _DATE_KEYS:
                kwargs[key] = date.fromisoformat(value)
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key == "exclude_suffixes":
                kwargs[key] = tuple(" " + s.strip() for s in value.split(",") if s.strip())
            elif key in _LIST_KEYS:
                kwargs[key] = tuple(s.strip() for s in value.split(",") if s.strip())
            elif key in ("ranking", "normalization"):
                kwargs[key] = value
            elif key == "skip_unplayed":
                kwargs[key] = value.lower() in ("1", "true", "yes")
            elif key in _FLOAT_KEYS:
                group, name = _FLOAT_KEYS[key]
                (btd_priors if group == "btd_priors" else goal_hyper)[name] = float(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    missing = [k for k in ("matches", "fifa_points", "group_fixtures", "knockout_fixtures", "out", "train_start", "train_end") if k not in kwargs]
    if missing:
        raise ConfigError(f"config is missing {', '.join(missing)}")
    kwargs["btd_priors"] = BTDPriors(**btd_priors)
    kwargs["goal_hyper"] = GoalModelHyperpriors(**goal_hyper)
    canonical = "".join(f"{k} = {raw[k]}\n" for k in sorted(raw) if k != "out")
    return PipelineConfig(source_text=canonical, **kwargs)


def load_config(path: Path, overrides: dict[str, str] | None = None) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), path.parent, overrides)


# ---------------------------------------------------------------- artifacts

MATCHES_FILE = "matches.csv"
TOURNAMENT_FILE = "tournament.csv"
BTD_DRAWS_FILE = "btd_draws.csv"
STRENGTH_FILES = {"fifa": "strengths_fifa.csv", "btd": "strengths_btd.csv"}
AGREEMENT_FILE = "agreement.txt"
MISMATCH_FILE = "fifa_mismatches.txt"
FORECAST_FILE = "forecasts.csv"
EVALUATION_FILE = "evaluation.csv"
REPORT_FILE = "report.txt"
FIG_STRENGTHS_FILE = "figure_strengths.csv"
FIG_DIFFERENCES_FILE = "figure_differences.csv"
MANIFEST_FILE = "manifest.json"
DIAGNOSTIC_FILES = {"btd": "diagnostics_btd.csv", "goal": "diagnostics_goal.csv"}
R_HAT_GATE = 1.01
ESS_GATE = 400.0


def goal_draws_file(model: str, source: str, stage: str) -> str:
    return f"goal_{model}_{source}_{stage}_draws.csv"


def goal_params_files(model: str, source: str, stage: str) -> tuple[str, str]:
    stem = f"goal_{model}_{source}_{stage}"
    return f"{stem}_effects.csv", f"{stem}_fixed.csv"


def logit_file(source: str, stage: str) -> str:
    return f"logit_{source}_{stage}.json"


def _require(out: Path, name: str, producer: str) -> Path:
    path = out / name
    if not path.is_file():
        raise DependencyError(f"{name} not found in {out}; run `{producer}` first")
    return path


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


# ------------------------------------------------------------------ stages


def _read_fixtures(path: Path, stage: str) -> list[tuple[date, str, str]]:
    rows = list(csv.DictReader(io.StringIO(path.read_text(encoding="utf-8"))))
    try:
        return [(date.fromisoformat(r["date"]), r["home_team"].strip(), r["away_team"].strip()) for r in rows]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{stage} fixtures {path} need date,home_team,away_team columns") from exc


def ingest(config: PipelineConfig):
    """Write the training window and the tournament fixtures with their results."""
    config.check_paths()
    full = parse_matches(config.matches.read_bytes(), skip_unplayed=config.skip_unplayed)
    train = filter_training_window(
        full, config.train_start, config.train_end, config.exclude_tournaments, config.exclude_suffixes
    )
    by_key = {(m.date, m.home_team, m.away_team): m for m in full.matches}
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["match_id", "stage", "date", "home_team", "away_team", "home_score", "away_score", "tournament", "neutral"])
    for stage, path in (("group", config.group_fixtures), ("knockout", config.knockout_fixtures)):
        for k, key in enumerate(_read_fixtures(path, stage), 1):
            m = by_key.get(key)
            if m is None:
                raise ConfigError(f"{stage} fixture {key[0]} {key[1]} v {key[2]} not found in {config.matches}")
            writer.writerow(
                [f"{stage}-{k:03d}", stage, m.date.isoformat(), m.home_team, m.away_team, m.home_goals, m.away_goals, m.tournament, "TRUE" if m.neutral else "FALSE"]
            )
    _write(config.out / MATCHES_FILE, serialize_matches(train))
    _write(config.out / TOURNAMENT_FILE, out.getvalue())
    logger.info("training window holds %d matches between %d teams", len(train), train.n_teams)


@dataclass(frozen=True)
class Fixture:
    match_id: str
    stage: str
    record: MatchRecord


def _load_training(config: PipelineConfig) -> MatchDataset:
    path = _require(config.out, MATCHES_FILE, "ingest")
    return parse_matches(path.read_bytes())


def _load_fixtures(config: PipelineConfig) -> list[Fixture]:
    path = _require(config.out, TOURNAMENT_FILE, "ingest")
    fixtures = []
    for r in csv.DictReader(io.StringIO(path.read_text(encoding="utf-8"))):
        record = MatchRecord(
            date.fromisoformat(r["date"]), r["home_team"], r["away_team"], int(r["home_score"]), int(r["away_score"]), r["tournament"], r["neutral"] == "TRUE"
        )
        fixtures.append(Fixture(r["match_id"], r["stage"], record))
    return fixtures


def fit_btd(config: PipelineConfig) -> PosteriorSample:
    train = _load_training(config)
    model = BTDModel(comparisons_from_matches(train), train.n_teams, config.btd_priors, train.teams)
    raw = sample_posterior(
        model, model.dim, config.mcmc("btd"), blocks=[[k] for k in range(model.dim)], conditional=model.conditional
    )
    flat = raw.draws.reshape(-1, model.dim)
    full = np.array([model.full_vector(v) for v in flat]).reshape(raw.n_chains, raw.n_iterations, -1)
    sample = PosteriorSample(full, model.parameter_names, raw.acceptance_rate, raw.seed)
    _write(config.out / BTD_DRAWS_FILE, sample.to_csv())
    _write_diagnostics(config.out / DIAGNOSTIC_FILES["btd"], [convergence_summary("btd", sample)])
    return sample


def convergence_summary(label: str, sample: PosteriorSample) -> list[str]:
    """Worst split R-hat and smallest ESS over all parameters, as one CSV row.

    Parameters that never move (constant columns) are skipped. A fit that
    misses the gate is logged as a warning; the run carries on.
    """
    worst_r, worst_r_name, least_ess, least_ess_name = 1.0, "", math.inf, ""
    for name in sample.parameter_names:
        try:
            rh, ne = r_hat(sample, name), ess(sample, name)
        except DegenerateChainError:
            continue
        if rh > worst_r:
            worst_r, worst_r_name = rh, name
        if ne < least_ess:
            least_ess, least_ess_name = ne, name
    passed = worst_r < R_HAT_GATE and least_ess > ESS_GATE
    if not passed:
        logger.warning("%s: max R-hat %.3f (%s), min ESS %.0f (%s)", label, worst_r, worst_r_name, least_ess, least_ess_name)
    return [label, f"{worst_r:.4f}", worst_r_name, f"{least_ess:.1f}", least_ess_name, "TRUE" if passed else "FALSE"]


_DIAGNOSTIC_HEADER = ["fit", "max_r_hat", "max_r_hat_parameter", "min_ess", "min_ess_parameter", "passes_gate"]


def _write_diagnostics(path: Path, rows: list[list[str]]):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_DIAGNOSTIC_HEADER)
    writer.writerows(rows)
    _write(path, out.getvalue())


def _participants(fixtures: list[Fixture]) -> list[str]:
    teams: dict[str, None] = {}
    for f in fixtures:
        teams.setdefault(f.record.home_team)
        teams.setdefault(f.record.away_team)
    return list(teams)


def rank(config: PipelineConfig) -> dict[str, StrengthTable]:
    """Normalized FIFA and BTD strength tables plus their agreement on the participants."""
    train = _load_training(config)
    fixtures = _load_fixtures(config)
    participants = _participants(fixtures)
    population = participants if config.normalization == "participants" else None
    snapshot = parse_fifa_points(config.fifa_points.read_bytes(), config.fifa_as_of or config.train_end)
    _write(config.out / MISMATCH_FILE, mismatch_report(participants, snapshot))

    tables = {"fifa": normalize_table(fifa_strengths(snapshot.points, snapshot.as_of_date), population)}
    if "btd" in config.sources:
        sample = PosteriorSample.from_csv(_require(config.out, BTD_DRAWS_FILE, "fit-btd").read_text(encoding="utf-8"))
        tables["btd"] = normalize_table(btd_strengths(sample, train.teams, config.train_end), population)
    for source, table in tables.items():
        _write(config.out / STRENGTH_FILES[source], table.to_csv())
    if "btd" in tables:
        report = table_agreement(tables["fifa"], tables["btd"], participants)
        _write(config.out / AGREEMENT_FILE, report.to_text())
    return tables


def _load_table(config: PipelineConfig, source: str) -> StrengthTable:
    producer = "rank" if source == "fifa" else "fit-btd` and `rank"
    return StrengthTable.from_csv(_require(config.out, STRENGTH_FILES[source], producer).read_text(encoding="utf-8"))


def _team_omega(table: StrengthTable, home: str, away: str) -> float:
    return omega(table, home, away, impute=True)


@dataclass
class _Design:
    teams: list[str]
    first_year: int
    n_seasons: int
    features: list[MatchFeature]
    goals: np.ndarray
    outcomes: list[str]


def _training_set(config: PipelineConfig, stage: str) -> list[MatchRecord]:
    matches = list(_load_training(config).matches)
    if stage == "knockout":
        matches += [f.record for f in _load_fixtures(config) if f.stage == "group"]
    return matches


def _design(matches: list[MatchRecord], table: StrengthTable, extra_teams: list[str]) -> _Design:
    ds = MatchDataset.from_matches(matches)
    teams = list(ds.teams) + [t for t in extra_teams if t not in ds.teams]
    ids = {t: k for k, t in enumerate(teams)}
    features = [
        MatchFeature(ids[m.home_team], ids[m.away_team], ds.seasons[m.date.year], _team_omega(table, m.home_team, m.away_team))
        for m in matches
    ]
    goals = np.array([[m.home_goals, m.away_goals] for m in matches], dtype=np.int64)
    return _Design(teams, ds.first_year, ds.n_seasons, features, goals, [m.outcome for m in matches])


def _season_for(design: _Design, d: date) -> int:
    return min(max(d.year - design.first_year + 1, 1), design.n_seasons)


def fit_goal(config: PipelineConfig):
    """Fit every selected model, ranking source and stage; write draws and summaries."""
    fixtures = _load_fixtures(config)
    participants = _participants(fixtures)
    diagnostics = []
    for source in config.sources:
        table = _load_table(config, source)
        for stage in STAGES:
            design = _design(_training_set(config, stage), table, participants)
            for model in config.models:
                label = f"{model}/{source}/{stage}"
                logger.info("fitting %s on %d matches", label, len(design.features))
                if model == LOGIT:
                    coef = fit_logit_baseline((f.omega, r) for f, r in zip(design.features, design.outcomes))
                    _write(config.out / logit_file(source, stage), json.dumps(coef.__dict__, sort_keys=True) + "\n")
                    continue
                sample = fit_goal_model(
                    model, design.features, design.goals, len(design.teams), design.n_seasons, config.mcmc(label), config.goal_hyper
                )
                _write(config.out / goal_draws_file(model, source, stage), sample.to_csv())
                effects, fixed = export_goal_parameters(sample, design.teams, design.first_year)
                names = goal_params_files(model, source, stage)
                _write(config.out / names[0], effects)
                _write(config.out / names[1], fixed)
                diagnostics.append(convergence_summary(label, sample))
    _write_diagnostics(config.out / DIAGNOSTIC_FILES["goal"], diagnostics)


def export_goal_parameters(sample: PosteriorSample, teams: list[str], first_year: int) -> tuple[str, str]:
    """Posterior medians as ``parameter,team,season,value`` and ``parameter,value`` CSV."""
    medians = np.median(sample.pooled(), axis=0)
    effects = io.StringIO()
    fixed = io.StringIO()
    ew = csv.writer(effects, lineterminator="\n")
    fw = csv.writer(fixed, lineterminator="\n")
    ew.writerow(["parameter", "team", "season", "value"])
    fw.writerow(["parameter", "value"])
    for name, value in zip(sample.parameter_names, medians):
        if "[" in name:
            kind, rest = name[:-1].split("[")
            team, season = rest.split(",")
            ew.writerow([kind, teams[int(team)], first_year + int(season) - 1, repr(float(value))])
        else:
            fw.writerow([name, repr(float(value))])
    return effects.getvalue(), fixed.getvalue()


def predict(config: PipelineConfig) -> list[dict]:
    fixtures = _load_fixtures(config)
    participants = _participants(fixtures)
    rows = []
    for source in config.sources:
        table = _load_table(config, source)
        for stage in STAGES:
            design = _design(_training_set(config, stage), table, participants)
            ids = {t: k for k, t in enumerate(design.teams)}
            stage_fixtures = [f for f in fixtures if f.stage == stage]
            for model in config.models:
                if model == LOGIT:
                    coef_path = _require(config.out, logit_file(source, stage), "fit-goal")
                    coef = LogitCoefficients(**json.loads(coef_path.read_text(encoding="utf-8")))
                    forecast = lambda fx, w: predict_logit(coef, w, fx.match_id, fx.record.outcome)
                else:
                    path = _require(config.out, goal_draws_file(model, source, stage), "fit-goal")
                    draws = goal_draws(model, PosteriorSample.from_csv(path.read_text(encoding="utf-8")))

                    def forecast(fx, w, draws=draws, model=model):
                        r = fx.record
                        feat = MatchFeature(ids[r.home_team], ids[r.away_team], _season_for(design, r.date), w)
                        return posterior_predictive_forecast(model, draws, feat, config.max_goals, fx.match_id, r.outcome)

                for fx in stage_fixtures:
                    r = fx.record
                    fc: OutcomeForecast = forecast(fx, _team_omega(table, r.home_team, r.away_team))
                    rows.append(
                        {
                            "match_id": fx.match_id,
                            "date": r.date.isoformat(),
                            "home": r.home_team,
                            "away": r.away_team,
                            "model": model,
                            "ranking_source": source,
                            "p_win": fc.p_win,
                            "p_draw": fc.p_draw,
                            "p_loss": fc.p_loss,
                            "realized": fc.realized,
                        }
                    )
    _write(config.out / FORECAST_FILE, forecasts_to_csv(rows))
    return rows


def evaluate(config: PipelineConfig) -> list[EvaluationReport]:
    path = _require(config.out, FORECAST_FILE, "predict")
    rows = list(csv.DictReader(io.StringIO(path.read_text(encoding="utf-8"))))
    groups: dict[tuple[str, str, str], list[OutcomeForecast]] = {}
    for r in rows:
        stage = r["match_id"].split("-", 1)[0]
        fc = OutcomeForecast(r["match_id"], float(r["p_win"]), float(r["p_draw"]), float(r["p_loss"]), r["realized"])
        groups.setdefault((r["model"], r["ranking_source"], stage), []).append(fc)
    reports = [EvaluationReport(m, s, st, brier(fcs), len(fcs)) for (m, s, st), fcs in groups.items()]
    _write(config.out / EVALUATION_FILE, evaluations_to_csv(reports))
    return reports


def brier_table(reports: list[EvaluationReport]) -> str:
    """Plain-text table: one row per model, columns group/knockout x FIFA/BTD."""
    models = list(dict.fromkeys(r.model for r in reports))
    cell = {(r.model, r.ranking_source, r.stage): r.brier for r in reports}
    columns = [("group", "fifa"), ("group", "btd"), ("knockout", "fifa"), ("knockout", "btd")]
    labels = [MODEL_LABELS.get(m, m) for m in models]
    width = max(len("Model"), *(len(label) for label in labels))
    lines = [
        f"{'':<{width}}  {'Group Stage':^13}  {'Knockout Stage':^14}",
        f"{'Model':<{width}}  {'FIFA':>6} {'BTD':>6}  {'FIFA':>6} {'BTD':>7}",
    ]
    for model, label in zip(models, labels):
        values = []
        for stage, source in columns:
            v = cell.get((model, source, stage))
            values.append("   -  " if v is None else f"{v:6.3f}")
        lines.append(f"{label:<{width}}  {values[0]} {values[1]}  {values[2]} {values[3]:>7}")
    return "\n".join(lines) + "\n"


def report(config: PipelineConfig) -> str:
    """Render the Brier table and write the raw data behind the strength figures."""
    path = _require(config.out, EVALUATION_FILE, "evaluate")
    reports = evaluations_from_csv(path.read_text(encoding="utf-8"))
    text = brier_table(reports)
    _write(config.out / REPORT_FILE, text)

    tables = {s: _load_table(config, s) for s in ("fifa", "btd") if (config.out / STRENGTH_FILES[s]).is_file()}
    fixtures = _load_fixtures(config)
    if len(tables) == 2:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["team", "fifa_normalized", "btd_normalized"])
        for team in _participants(fixtures):
            if team in tables["fifa"].values and team in tables["btd"].values:
                w.writerow([team, f"{tables['fifa'].values[team]:.6f}", f"{tables['btd'].values[team]:.6f}"])
        _write(config.out / FIG_STRENGTHS_FILE, out.getvalue())
    if tables:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        sources = list(tables)
        w.writerow(["match_id", "stage", "home", "away", *(f"omega_{s}" for s in sources)])
        for fx in fixtures:
            r = fx.record
            w.writerow([fx.match_id, fx.stage, r.home_team, r.away_team, *(f"{_team_omega(tables[s], r.home_team, r.away_team):.6f}" for s in sources)])
        _write(config.out / FIG_DIFFERENCES_FILE, out.getvalue())
    return text


def write_manifest(config: PipelineConfig):
    files = {}
    for path in sorted(config.out.iterdir()):
        if path.is_file() and path.name != MANIFEST_FILE:
            files[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    import scipy

    manifest = {
        "seed": config.seed,
        "config_sha256": config.digest,
        "config": config.source_text,
        "versions": {
            "btdfoot": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "files": files,
    }
    _write(config.out / MANIFEST_FILE, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


STEPS: dict[str, Callable[[PipelineConfig], object]] = {
    "ingest": ingest,
    "fit-btd": fit_btd,
    "rank": rank,
    "fit-goal": fit_goal,
    "predict": predict,
    "evaluate": evaluate,
    "report": report,
}


def run_step(name: str, config: PipelineConfig):
    try:
        return STEPS[name](config)
    except (DependencyError, ConfigError):
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def run_pipeline(config: PipelineConfig) -> list[EvaluationReport]:
    config.check_paths()
    config.out.mkdir(parents=True, exist_ok=True)
    run_step("ingest", config)
    if "btd" in config.sources:
        run_step("fit-btd", config)
    run_step("rank", config)
    run_step("fit-goal", config)
    run_step("predict", config)
    reports = run_step("evaluate", config)
    run_step("report", config)
    write_manifest(config)
    return reports
