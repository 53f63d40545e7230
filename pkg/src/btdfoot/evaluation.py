"""Three-way forecasts from goal models, a multinomial-logit baseline, Brier scores."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from . import _kernels
from .goal_models import (
    BIVARIATE,
    DIAG_INFLATED,
    DOUBLE,
    MODEL_KINDS,
    FeatureArrays,
    GoalDraws,
    GoalModelParameters,
    MatchFeature,
    _check_kind,
    _log_rates,
    bivpois_logpmf,
    diag_logpmf,
    goal_draws,
    poisson_logpmf,
)
from .inference import EmptySampleError, MleConfig, PosteriorSample, fit_mle

OUTCOMES = ("win", "draw", "loss")
DEFAULT_MAX_GOALS = 30


class DegenerateError(ValueError):
    pass


class IncompleteDataError(ValueError):
    pass


@dataclass(frozen=True)
class OutcomeForecast:
    match_id: str
    p_win: float
    p_draw: float
    p_loss: float
    realized: str | None = None

    def __post_init__(self):
        probs = (self.p_win, self.p_draw, self.p_loss)
        if min(probs) < 0 or abs(math.fsum(probs) - 1.0) > 1e-9:
            raise ValueError(f"forecast {probs} is not on the probability simplex")
        if self.realized is not None and self.realized not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.realized!r}")

    @property
    def probs(self) -> tuple[float, float, float]:
        return self.p_win, self.p_draw, self.p_loss


@dataclass(frozen=True)
class EvaluationReport:
    model: str
    ranking_source: str
    stage: str
    brier: float
    n_matches: int


def _score_matrices(kind, l1, l2, l3, p, xi, max_goals):
    """Joint score probabilities, shape (len(l1), max_goals + 1, max_goals + 1)."""
    g = np.arange(max_goals + 1)
    x = g[None, :, None]
    y = g[None, None, :]
    l1 = np.asarray(l1, float)[:, None, None]
    l2 = np.asarray(l2, float)[:, None, None]
    if kind == DOUBLE:
        return np.exp(poisson_logpmf(x, l1) + poisson_logpmf(y, l2))
    l3 = np.asarray(l3, float)[:, None, None]
    bp = np.exp(bivpois_logpmf(x, y, l1, l2, l3))
    if kind == BIVARIATE:
        return bp
    p = np.asarray(p, float)[:, None, None]
    xi = np.asarray(xi, float)[:, None, None]
    out = (1.0 - p) * bp
    diag = np.exp(diag_logpmf(g, xi[:, :, 0]))  # (draws, max_goals + 1)
    out[:, g, g] += p[:, :, 0] * diag
    return out


def score_matrix(model_kind: str, params: GoalModelParameters, feat: MatchFeature, max_goals: int = DEFAULT_MAX_GOALS) -> np.ndarray:
    """Probability of every score ``(x, y)`` with both counts up to ``max_goals``."""
    _check_kind(model_kind)
    if max_goals < 1:
        raise ValueError("max_goals must be at least 1")
    eta1, eta2 = _log_rates(params.theta, params.att, params.def_, params.phi, FeatureArrays.build([feat]))
    kind_args = (
        [params.lambda3] if model_kind != DOUBLE else [0.0],
        [params.p] if model_kind == DIAG_INFLATED else None,
        [params.xi] if model_kind == DIAG_INFLATED else None,
    )
    return _score_matrices(model_kind, np.exp(eta1), np.exp(eta2), *kind_args, max_goals)[0]


def _three_way_raw(matrices: np.ndarray) -> np.ndarray:
    n = matrices.shape[-1]
    lower = np.tril(np.ones((n, n), dtype=bool), -1)  # x > y: home wins
    win = matrices[..., lower].sum(axis=-1)
    draw = np.trace(matrices, axis1=-2, axis2=-1)
    loss = matrices[..., lower.T].sum(axis=-1)
    return np.stack([win, draw, loss], axis=-1)


def aggregate_three_way(matrix) -> tuple[float, float, float]:
    """Sum a score matrix (rows: home goals) into (p_win, p_draw, p_loss)."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("score matrix must be square")
    if np.any(m < 0):
        raise ValueError("score matrix has negative entries")
    raw = _three_way_raw(m)
    total = math.fsum(raw)
    if total <= 0:
        raise DegenerateError("score matrix has no mass")
    return tuple(float(v / total) for v in raw)


def posterior_predictive_forecast(
    model_kind: str,
    sample: PosteriorSample | GoalDraws,
    feat: MatchFeature,
    max_goals: int = DEFAULT_MAX_GOALS,
    match_id: str = "",
    realized: str | None = None,
) -> OutcomeForecast:
    """Average over posterior draws of the per-draw three-way probabilities."""
    _check_kind(model_kind)
    draws = sample if isinstance(sample, GoalDraws) else None
    if draws is None:
        if sample.draws.size == 0:
            raise EmptySampleError("sample has no draws")
        draws = goal_draws(model_kind, sample)
    if len(draws) == 0:
        raise EmptySampleError("sample has no draws")
    f = FeatureArrays.build([feat])
    if not (0 <= f.home[0] < draws.n_teams and 0 <= f.away[0] < draws.n_teams and 0 <= f.season[0] < draws.n_seasons):
        raise IndexError("team or season index outside the parameter dimensions")
    if max_goals < 1:
        raise ValueError("max_goals must be at least 1")
    shift = 0.5 * draws.phi * feat.omega
    h, a, s = f.home[0], f.away[0], f.season[0]
    eta1 = np.ascontiguousarray(draws.theta + draws.att[:, h, s] + draws.def_[:, a, s] + shift, dtype=float)
    eta2 = np.ascontiguousarray(draws.theta + draws.att[:, a, s] + draws.def_[:, h, s] - shift, dtype=float)
    n = len(eta1)
    l3 = np.exp(draws.beta0) if draws.beta0 is not None else np.zeros(n)
    if draws.p is not None:
        p = np.asarray(draws.p, dtype=float)
        with np.errstate(divide="ignore"):
            log1mp, logp = np.log1p(-p), np.log(p)
        xi = np.asarray(draws.xi, dtype=float)
        logxi = np.log(xi)
    else:
        log1mp, logp, logxi, xi = np.zeros(n), np.full(n, -np.inf), np.zeros(n), np.zeros(n)
    raw = _kernels.three_way_masses(
        MODEL_KINDS.index(model_kind), eta1, eta2, np.asarray(l3, dtype=float), log1mp, logp, logxi, xi, int(max_goals)
    )
    mass = raw.sum(axis=1, keepdims=True)
    if not np.all(mass > 0):
        raise DegenerateError(f"{int(np.sum(mass <= 0))} draws put no mass on the score grid up to {max_goals} goals")
    per_draw = raw / mass
    probs = [math.fsum(per_draw[:, r]) / n for r in range(3)]
    total = math.fsum(probs)
    return OutcomeForecast(match_id, *(q / total for q in probs), realized=realized)


def brier(forecasts: Sequence[OutcomeForecast]) -> float:
    """Mean over matches of the summed squared error across win/draw/loss."""
    if not forecasts:
        raise IncompleteDataError("no forecasts to score")
    terms = []
    for fc in forecasts:
        if fc.realized is None:
            raise IncompleteDataError(f"forecast {fc.match_id!r} has no realized outcome")
        for r, prob in zip(OUTCOMES, fc.probs):
            terms.append((prob - (1.0 if fc.realized == r else 0.0)) ** 2)
    return math.fsum(terms) / len(forecasts)


@dataclass(frozen=True)
class LogitCoefficients:
    """Multinomial logit with draw as reference: eta_r = intercept_r + slope_r * omega."""

    intercept_win: float
    slope_win: float
    intercept_loss: float
    slope_loss: float

    def as_array(self) -> np.ndarray:
        return np.array([self.intercept_win, self.slope_win, self.intercept_loss, self.slope_loss])


def _logit_linear(beta, omega):
    zero = np.zeros_like(omega)
    return np.stack([beta[0] + beta[1] * omega, zero, beta[2] + beta[3] * omega], axis=-1)


def fit_logit_baseline(examples: Iterable[tuple[float, str]], config: MleConfig = MleConfig()) -> LogitCoefficients:
    """Maximum-likelihood fit on ``(omega, outcome)`` pairs."""
    examples = list(examples)
    if not examples:
        raise DegenerateError("no training examples")
    omega = np.array([w for w, _ in examples], dtype=float)
    codes = np.array([OUTCOMES.index(r) for _, r in examples])
    if len(np.unique(codes)) < 2:
        raise DegenerateError("training outcomes cover a single category")
    onehot = np.eye(3)[codes]

    def loglik(beta):
        lp = log_softmax(_logit_linear(beta, omega), axis=1)
        return float(np.sum(lp[np.arange(len(codes)), codes]))

    def grad(beta):
        resid = onehot - softmax(_logit_linear(beta, omega), axis=1)
        return np.array([resid[:, 0].sum(), resid[:, 0] @ omega, resid[:, 2].sum(), resid[:, 2] @ omega])

    beta = fit_mle(loglik, grad, 4, config)
    return LogitCoefficients(*map(float, beta))


def predict_logit(coefficients: LogitCoefficients, omega: float, match_id: str = "", realized: str | None = None) -> OutcomeForecast:
    probs = softmax(_logit_linear(coefficients.as_array(), np.asarray(float(omega))))
    probs = probs / math.fsum(probs)
    return OutcomeForecast(match_id, *map(float, probs), realized=realized)


FORECAST_HEADER = ("match_id", "date", "home", "away", "model", "ranking_source", "p_win", "p_draw", "p_loss", "realized")
EVALUATION_HEADER = ("model", "ranking_source", "stage", "brier")


def forecasts_to_csv(rows: Iterable[dict]) -> str:
    """Forecast rows (dicts keyed by the forecast CSV header) as CSV text."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(FORECAST_HEADER)
    for row in rows:
        writer.writerow(
            [row[k] if k not in ("p_win", "p_draw", "p_loss") else f"{row[k]:.12f}" for k in FORECAST_HEADER]
        )
    return out.getvalue()


def evaluations_to_csv(reports: Iterable[EvaluationReport]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(EVALUATION_HEADER)
    for r in reports:
        writer.writerow([r.model, r.ranking_source, r.stage, f"{r.brier:.6f}"])
    return out.getvalue()


def evaluations_from_csv(text: str) -> list[EvaluationReport]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and tuple(rows[0]) != EVALUATION_HEADER:
        raise ValueError(f"evaluation CSV must have header {','.join(EVALUATION_HEADER)}")
    return [EvaluationReport(r["model"], r["ranking_source"], r["stage"], float(r["brier"]), 0) for r in rows]
