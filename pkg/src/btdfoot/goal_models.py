"""Dynamic Poisson goal models with a ranking-difference predictor.

Three likelihoods share one linear predictor::

    log lambda1 = theta + att[home, s] + def[away, s] + phi/2 * omega
    log lambda2 = theta + att[away, s] + def[home, s] - phi/2 * omega

* ``double``: independent Poisson counts,
* ``bivariate``: bivariate Poisson with common component ``lambda3 = exp(beta0)``,
* ``diag_inflated``: bivariate Poisson mixed with a Poisson(xi) draw placed on
  the diagonal with weight ``p``.

Attack and defence effects follow a Gaussian random walk over seasons and sum
to zero across teams within each season.
"""

from __future__ import annotations

import math
import re
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, gammaln

from . import _kernels
from .inference import McmcConfig, PosteriorSample, sample_posterior

DOUBLE, BIVARIATE, DIAG_INFLATED = "double", "bivariate", "diag_inflated"
MODEL_KINDS = (DOUBLE, BIVARIATE, DIAG_INFLATED)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class DomainError(ValueError):
    pass


class DimensionError(ValueError):
    pass


def _check_kind(kind: str):
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


@dataclass(frozen=True)
class GoalModelParameters:
    theta: float
    att: np.ndarray  # (teams, seasons)
    def_: np.ndarray
    phi: float = 0.0
    beta0: float | None = None
    p: float | None = None
    xi: float | None = None

    def __post_init__(self):
        att = np.atleast_2d(np.asarray(self.att, dtype=float))
        def_ = np.atleast_2d(np.asarray(self.def_, dtype=float))
        object.__setattr__(self, "att", att)
        object.__setattr__(self, "def_", def_)
        if att.shape != def_.shape:
            raise DimensionError("attack and defence matrices differ in shape")
        if np.any(np.abs(att.sum(axis=0)) > 1e-9) or np.any(np.abs(def_.sum(axis=0)) > 1e-9):
            raise DomainError("attack and defence effects must sum to zero within each season")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise DomainError(f"inflation weight p={self.p} outside [0, 1]")
        if self.xi is not None and not self.xi > 0:
            raise DomainError(f"diagonal parameter xi={self.xi} must be positive")

    @classmethod
    def centered(cls, theta, att, def_, **kwargs) -> "GoalModelParameters":
        att = np.atleast_2d(np.asarray(att, dtype=float))
        def_ = np.atleast_2d(np.asarray(def_, dtype=float))
        return cls(theta, att - att.mean(axis=0), def_ - def_.mean(axis=0), **kwargs)

    @property
    def n_teams(self) -> int:
        return self.att.shape[0]

    @property
    def n_seasons(self) -> int:
        return self.att.shape[1]

    @property
    def lambda3(self) -> float:
        return 0.0 if self.beta0 is None else float(np.exp(self.beta0))


@dataclass(frozen=True)
class GoalModelHyperpriors:
    mu_att: float = 0.0
    mu_def: float = 0.0
    sigma_att: float = 0.5
    sigma_def: float = 0.5
    theta_scale: float = 5.0
    phi_scale: float = 5.0
    beta0_scale: float = 5.0
    xi_rate: float = 1.0
    sigma_scale: float = 2.5

    def __post_init__(self):
        scales = (
            self.sigma_att,
            self.sigma_def,
            self.theta_scale,
            self.phi_scale,
            self.beta0_scale,
            self.xi_rate,
            self.sigma_scale,
        )
        if not all(s > 0 for s in scales):
            raise DomainError("all prior scales must be positive")


@dataclass(frozen=True)
class MatchFeature:
    home_id: int
    away_id: int
    season: int  # 1-based
    omega: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.omega):
            raise DomainError("omega must be finite")


@dataclass(frozen=True)
class FeatureArrays:
    home: np.ndarray
    away: np.ndarray
    season: np.ndarray  # 0-based
    omega: np.ndarray

    @classmethod
    def build(cls, features) -> "FeatureArrays":
        if isinstance(features, FeatureArrays):
            return features
        n = len(features)
        return cls(
            np.fromiter((f.home_id for f in features), np.intp, n),
            np.fromiter((f.away_id for f in features), np.intp, n),
            np.fromiter((f.season - 1 for f in features), np.intp, n),
            np.fromiter((f.omega for f in features), float, n),
        )

    def __len__(self) -> int:
        return len(self.home)

    def subset(self, idx) -> "FeatureArrays":
        return FeatureArrays(self.home[idx], self.away[idx], self.season[idx], self.omega[idx])


def _log_rates(theta, att, def_, phi, f: FeatureArrays):
    n_teams, n_seasons = att.shape
    if len(f) and (
        f.home.min() < 0
        or f.away.min() < 0
        or max(f.home.max(), f.away.max()) >= n_teams
        or f.season.min() < 0
        or f.season.max() >= n_seasons
    ):
        raise IndexError("team or season index outside the parameter dimensions")
    shift = 0.5 * phi * f.omega
    eta1 = theta + att[f.home, f.season] + def_[f.away, f.season] + shift
    eta2 = theta + att[f.away, f.season] + def_[f.home, f.season] - shift
    return eta1, eta2


def match_rates(params: GoalModelParameters, feat: MatchFeature) -> tuple[float, float]:
    eta1, eta2 = _log_rates(params.theta, params.att, params.def_, params.phi, FeatureArrays.build([feat]))
    return float(np.exp(eta1[0])), float(np.exp(eta2[0]))


def poisson_logpmf(x, lam):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return x * np.log(lam) - lam - gammaln(x + 1.0)


def _check_counts(*counts):
    for c in counts:
        if np.any(np.asarray(c) < 0):
            raise DomainError("goal counts must be non-negative")


def bivpois_logpmf(x, y, lambda1, lambda2, lambda3):
    """Log mass of the bivariate Poisson distribution; broadcasts over all arguments."""
    x, y, l1, l2, l3 = np.broadcast_arrays(
        np.asarray(x, dtype=np.int64),
        np.asarray(y, dtype=np.int64),
        np.asarray(lambda1, dtype=float),
        np.asarray(lambda2, dtype=float),
        np.asarray(lambda3, dtype=float),
    )
    _check_counts(x, y)
    if np.any(l1 <= 0) or np.any(l2 <= 0) or np.any(l3 < 0):
        raise DomainError("bivariate Poisson needs lambda1, lambda2 > 0 and lambda3 >= 0")
    base = poisson_logpmf(x, l1) + poisson_logpmf(y, l2) - l3
    m = np.minimum(x, y)
    k_max = int(m.max()) if m.size else 0
    if k_max == 0 or not np.any(l3 > 0):
        return base
    with np.errstate(divide="ignore"):
        log_ratio = np.log(l3) - np.log(l1) - np.log(l2)
    xf, yf = x.astype(float), y.astype(float)
    lgx, lgy = gammaln(xf + 1.0), gammaln(yf + 1.0)
    # k = 0 term of the sum is exactly 1
    total = np.zeros(base.shape)
    for k in range(1, k_max + 1):
        valid = k <= m
        term = np.where(
            valid,
            lgx - gammaln(np.maximum(xf - k, 0.0) + 1.0)
            + lgy
            - gammaln(np.maximum(yf - k, 0.0) + 1.0)
            - gammaln(k + 1.0)
            + k * log_ratio,
            -np.inf,
        )
        total = np.logaddexp(total, term)
    return base + total


def bivpois_pmf(x, y, lambda1, lambda2, lambda3):
    out = np.exp(bivpois_logpmf(x, y, lambda1, lambda2, lambda3))
    return float(out) if out.ndim == 0 else out


def diag_logpmf(x, xi):
    if np.any(np.asarray(xi) <= 0):
        raise DomainError("xi must be positive")
    _check_counts(x)
    return poisson_logpmf(x, xi)


def diag_pmf(x, xi):
    """Mass of the diagonal component: Poisson with mean ``xi``."""
    out = np.exp(diag_logpmf(x, xi))
    return float(out) if np.ndim(out) == 0 else out


def dibp_logpmf(x, y, lambda1, lambda2, lambda3, p, xi):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("inflation weight p must lie in [0, 1]")
    bp = bivpois_logpmf(x, y, lambda1, lambda2, lambda3)
    with np.errstate(divide="ignore"):
        off = np.log1p(-p) + bp
        on = np.logaddexp(off, np.log(p) + diag_logpmf(x, xi))
    return np.where(np.asarray(x) == np.asarray(y), on, off)


def dibp_pmf(x, y, lambda1, lambda2, lambda3, p, xi):
    out = np.exp(dibp_logpmf(x, y, lambda1, lambda2, lambda3, p, xi))
    return float(out) if out.ndim == 0 else out


def _goal_arrays(goals):
    goals = np.asarray(goals, dtype=np.int64).reshape(-1, 2)
    return goals[:, 0], goals[:, 1]


def _loglik_terms(kind, theta, att, def_, phi, beta0, p, xi, f: FeatureArrays, x, y):
    eta1, eta2 = _log_rates(theta, att, def_, phi, f)
    if kind == DOUBLE:
        return x * eta1 - np.exp(eta1) - gammaln(x + 1.0) + y * eta2 - np.exp(eta2) - gammaln(y + 1.0)
    l3 = float(np.exp(beta0))
    if kind == BIVARIATE:
        return bivpois_logpmf(x, y, np.exp(eta1), np.exp(eta2), l3)
    return dibp_logpmf(x, y, np.exp(eta1), np.exp(eta2), l3, p, xi)


def _require(kind, params: GoalModelParameters):
    if kind in (BIVARIATE, DIAG_INFLATED) and params.beta0 is None:
        raise DomainError(f"{kind} model needs beta0")
    if kind == DIAG_INFLATED and (params.p is None or params.xi is None):
        raise DomainError("diagonal-inflated model needs p and xi")


def goal_log_likelihood(model_kind: str, params: GoalModelParameters, features, goals) -> float:
    _check_kind(model_kind)
    f = FeatureArrays.build(features)
    goals = np.asarray(goals, dtype=np.int64).reshape(-1, 2)
    if len(f) != len(goals):
        raise DimensionError(f"{len(f)} features but {len(goals)} scores")
    if not len(f):
        return 0.0
    _require(model_kind, params)
    _check_counts(goals)
    x, y = goals[:, 0], goals[:, 1]
    terms = _loglik_terms(
        model_kind, params.theta, params.att, params.def_, params.phi, params.beta0, params.p, params.xi, f, x, y
    )
    return float(np.sum(terms))


def _normal_logpdf(x, mu, sigma):
    return -0.5 * ((x - mu) / sigma) ** 2 - np.log(sigma) - _LOG_SQRT_2PI


def _walk_terms(effects, mu, sigma):
    """Per-season random-walk log-densities, shape (seasons,)."""
    first = _normal_logpdf(effects[:, 0], mu, sigma).sum()
    rest = _normal_logpdf(effects[:, 1:], effects[:, :-1], sigma).sum(axis=0)
    return np.concatenate([[first], rest])


def dynamic_prior_log_density(att, def_, hyper: GoalModelHyperpriors) -> float:
    """Random-walk prior on attack/defence effects, normalizing constants included."""
    if not (hyper.sigma_att > 0 and hyper.sigma_def > 0):
        raise DomainError("random-walk scales must be positive")
    att = np.atleast_2d(np.asarray(att, dtype=float))
    def_ = np.atleast_2d(np.asarray(def_, dtype=float))
    return float(
        _walk_terms(att, hyper.mu_att, hyper.sigma_att).sum() + _walk_terms(def_, hyper.mu_def, hyper.sigma_def).sum()
    )


def _half_normal_logpdf(x, scale):
    return np.log(2.0) + _normal_logpdf(x, 0.0, scale)


def fixed_effect_log_prior(model_kind: str, params: GoalModelParameters, hyper: GoalModelHyperpriors) -> float:
    """Priors on theta, phi, beta0, p, xi and the two random-walk scales.

    theta, phi, beta0 ~ N(0, scale^2); p ~ Uniform(0, 1); xi ~ Exponential(rate);
    sigma_att, sigma_def ~ half-Normal(0, sigma_scale^2).
    """
    _check_kind(model_kind)
    _require(model_kind, params)
    total = _normal_logpdf(params.theta, 0.0, hyper.theta_scale) + _normal_logpdf(params.phi, 0.0, hyper.phi_scale)
    if model_kind in (BIVARIATE, DIAG_INFLATED):
        total += _normal_logpdf(params.beta0, 0.0, hyper.beta0_scale)
    if model_kind == DIAG_INFLATED:
        total += np.log(hyper.xi_rate) - hyper.xi_rate * params.xi
    total += _half_normal_logpdf(hyper.sigma_att, hyper.sigma_scale)
    total += _half_normal_logpdf(hyper.sigma_def, hyper.sigma_scale)
    return float(total)


def goal_log_posterior(model_kind: str, params: GoalModelParameters, hyper: GoalModelHyperpriors, features, goals) -> float:
    return (
        goal_log_likelihood(model_kind, params, features, goals)
        + dynamic_prior_log_density(params.att, params.def_, hyper)
        + fixed_effect_log_prior(model_kind, params, hyper)
    )


class GoalPosterior:
    """Sampler-facing log-posterior on an unconstrained vector.

    Layout: ``theta, phi, [beta0], [logit p, log xi], log sigma_att,
    log sigma_def`` followed by free attack then free defence effects for
    teams ``0 .. n_teams - 2``, stored team-major (``team * seasons +
    season``). The last team's effect in each season is minus the sum of the
    others, so a team-season block only moves that team and the last one.
    """

    def __init__(
        self,
        model_kind: str,
        features,
        goals,
        n_teams: int,
        n_seasons: int,
        hyper: GoalModelHyperpriors = GoalModelHyperpriors(),
        team_names: Sequence[str] | None = None,
    ):
        _check_kind(model_kind)
        if n_teams < 2 or n_seasons < 1:
            raise DimensionError("need at least two teams and one season")
        self.kind = model_kind
        self._code = MODEL_KINDS.index(model_kind)
        self.features = FeatureArrays.build(features)
        goals = np.asarray(goals, dtype=np.int64).reshape(-1, 2)
        if len(goals) != len(self.features):
            raise DimensionError(f"{len(self.features)} features but {len(goals)} scores")
        _check_counts(goals)
        self.x, self.y = np.ascontiguousarray(goals[:, 0]), np.ascontiguousarray(goals[:, 1])
        self.n_teams, self.n_seasons = n_teams, n_seasons
        self.hyper = hyper
        self.team_names = list(team_names) if team_names is not None else [str(k) for k in range(n_teams)]
        _log_rates(0.0, np.zeros((n_teams, n_seasons)), np.zeros((n_teams, n_seasons)), 0.0, self.features)

        fixed = ["theta", "phi"]
        if model_kind in (BIVARIATE, DIAG_INFLATED):
            fixed.append("beta0")
        if model_kind == DIAG_INFLATED:
            fixed += ["logit_p", "log_xi"]
        fixed += ["log_sigma_att", "log_sigma_def"]
        self.fixed_names = fixed
        self._pos = {name: k for k, name in enumerate(fixed)}
        self.n_fixed = len(fixed)
        self.n_free = (n_teams - 1) * n_seasons
        self.dim = self.n_fixed + 2 * self.n_free

        f = self.features
        self._home = np.ascontiguousarray(f.home, dtype=np.int64)
        self._away = np.ascontiguousarray(f.away, dtype=np.int64)
        self._season = np.ascontiguousarray(f.season, dtype=np.int64)
        self._omega = np.ascontiguousarray(f.omega, dtype=float)
        self._lgx = gammaln(self.x + 1.0)
        self._lgy = gammaln(self.y + 1.0)
        self._all = np.arange(len(f), dtype=np.int64)
        ref = n_teams - 1
        self._block_team, self._block_season, self._block_idx = [], [], []
        for i in range(n_teams - 1):
            for s in range(n_seasons):
                touched = (self._season == s) & (
                    (self._home == i) | (self._away == i) | (self._home == ref) | (self._away == ref)
                )
                self._block_team.append(i)
                self._block_season.append(s)
                self._block_idx.append(np.flatnonzero(touched).astype(np.int64))

    # blocks: one per fixed parameter, then one (att, def) pair per free team-season
    @property
    def blocks(self) -> list[np.ndarray]:
        out = [np.array([k]) for k in range(self.n_fixed)]
        for j in range(self.n_free):
            k = self.n_fixed + j
            out.append(np.array([k, k + self.n_free]))
        return out

    @property
    def scale_moves(self) -> list[tuple[int, np.ndarray]]:
        """Joint rescaling of each random-walk scale with the effects it governs."""
        att = np.arange(self.n_fixed, self.n_fixed + self.n_free)
        return [(self._pos["log_sigma_att"], att), (self._pos["log_sigma_def"], att + self.n_free)]

    def _unpack(self, v):
        pos = self._pos
        theta, phi = float(v[pos["theta"]]), float(v[pos["phi"]])
        beta0 = float(v[pos["beta0"]]) if "beta0" in pos else None
        p = float(expit(v[pos["logit_p"]])) if "logit_p" in pos else None
        xi = float(np.exp(v[pos["log_xi"]])) if "log_xi" in pos else None
        sa, sd = float(np.exp(v[pos["log_sigma_att"]])), float(np.exp(v[pos["log_sigma_def"]]))
        shape = (self.n_teams - 1, self.n_seasons)
        ua = v[self.n_fixed : self.n_fixed + self.n_free].reshape(shape)
        ud = v[self.n_fixed + self.n_free :].reshape(shape)
        return theta, phi, beta0, p, xi, sa, sd, ua, ud

    def _mixture_args(self, v, beta0, p, xi):
        l3 = float(np.exp(beta0)) if beta0 is not None else 0.0
        if p is None:
            return l3, 0.0, -np.inf, 0.0, 0.0
        z = float(v[self._pos["logit_p"]])
        log_p = -float(np.logaddexp(0.0, -z))
        log_1mp = -float(np.logaddexp(0.0, z))
        return l3, log_1mp, log_p, float(np.log(xi)), xi

    def _jacobian(self, v) -> float:
        pos = self._pos
        out = v[pos["log_sigma_att"]] + v[pos["log_sigma_def"]]
        if "logit_p" in pos:
            z = v[pos["logit_p"]]
            out += -np.logaddexp(0.0, -z) - np.logaddexp(0.0, z)
        if "log_xi" in pos:
            out += v[pos["log_xi"]]
        return float(out)

    def _walk(self, u, sigma: float) -> float:
        # On the zero-sum surface sum_i (a_i1 - mu)^2 = sum_i a_i1^2 + T mu^2, and the
        # restricted walk density integrates to const * sigma^-S * exp(-T mu^2 / 2 sigma^2).
        # Normalizing (needed once sigma is sampled) cancels mu exactly, so it is
        # evaluated with mu = 0 to avoid cancelling huge terms at small sigma.
        return _kernels.walk_log_density(u, 0.0, sigma) + self.n_seasons * math.log(sigma)

    def walk_normalizer(self, v) -> float:
        """Target walk terms minus the unnormalized walk density at the stated means."""
        theta, phi, beta0, p, xi, sa, sd, ua, ud = self._unpack(np.asarray(v, dtype=float))
        h = self.hyper
        return (
            self._walk(ua, sa) + self._walk(ud, sd)
            - _kernels.walk_log_density(ua, h.mu_att, sa) - _kernels.walk_log_density(ud, h.mu_def, sd)
        )

    def _fixed_prior(self, theta, phi, beta0, xi, sa, sd) -> float:
        h = self.hyper
        out = _normal_logpdf(theta, 0.0, h.theta_scale) + _normal_logpdf(phi, 0.0, h.phi_scale)
        if beta0 is not None:
            out += _normal_logpdf(beta0, 0.0, h.beta0_scale)
        if xi is not None:
            out += np.log(h.xi_rate) - h.xi_rate * xi
        out += _half_normal_logpdf(sa, h.sigma_scale) + _half_normal_logpdf(sd, h.sigma_scale)
        return float(out)

    def _loglik(self, v, idx, theta, phi, beta0, p, xi, ua, ud) -> float:
        return _kernels.loglik_subset(
            self._code, idx, self._home, self._away, self._season, self._omega, self.x, self.y,
            self._lgx, self._lgy, ua, ud, theta, phi, *self._mixture_args(v, beta0, p, xi),
        )

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        theta, phi, beta0, p, xi, sa, sd, ua, ud = self._unpack(v)
        if not (sa > 0 and sd > 0):
            return -math.inf
        return (
            self._loglik(v, self._all, theta, phi, beta0, p, xi, ua, ud)
            + self._walk(ua, sa)
            + self._walk(ud, sd)
            + self._fixed_prior(theta, phi, beta0, xi, sa, sd)
            + self._jacobian(v)
        )

    def conditional(self, v, b: int) -> float:
        v = np.asarray(v, dtype=float)
        theta, phi, beta0, p, xi, sa, sd, ua, ud = self._unpack(v)
        h = self.hyper
        if b < self.n_fixed:
            name = self.fixed_names[b]
            if name in ("log_sigma_att", "log_sigma_def"):
                u, sigma = (ua, sa) if name == "log_sigma_att" else (ud, sd)
                if not sigma > 0:
                    return -math.inf
                return (
                    self._walk(u, sigma)
                    + float(_half_normal_logpdf(sigma, h.sigma_scale))
                    + math.log(sigma)
                )
            return (
                self._loglik(v, self._all, theta, phi, beta0, p, xi, ua, ud)
                + self._fixed_prior(theta, phi, beta0, xi, sa, sd)
                + self._jacobian(v)
            )
        j = b - self.n_fixed
        return _kernels.team_season_conditional(
            self._code, self._block_team[j], self._block_season[j], self._block_idx[j],
            self._home, self._away, self._season, self._omega, self.x, self.y, self._lgx, self._lgy,
            ua, ud, theta, phi, *self._mixture_args(v, beta0, p, xi), 0.0, 0.0, sa, sd,
        )

    def effects(self, v) -> tuple[np.ndarray, np.ndarray]:
        """Full (teams, seasons) attack and defence matrices, each column summing to zero."""
        *_, ua, ud = self._unpack(np.asarray(v, dtype=float))
        return (np.vstack([ua, -ua.sum(axis=0)]), np.vstack([ud, -ud.sum(axis=0)]))

    def initial_point(self) -> np.ndarray:
        v = np.zeros(self.dim)
        mean_goals = (self.x.sum() + self.y.sum()) / max(2 * len(self.x), 1)
        v[self._pos["theta"]] = np.log(max(mean_goals, 0.1))
        if "beta0" in self._pos:
            v[self._pos["beta0"]] = -2.0
        if "logit_p" in self._pos:
            v[self._pos["logit_p"]] = -2.0
        v[self._pos["log_sigma_att"]] = np.log(0.3)
        v[self._pos["log_sigma_def"]] = np.log(0.3)
        return v

    def reported_names(self) -> list[str]:
        names = ["theta", "phi"]
        if self.kind in (BIVARIATE, DIAG_INFLATED):
            names.append("beta0")
        if self.kind == DIAG_INFLATED:
            names += ["p", "xi"]
        names += ["sigma_att", "sigma_def"]
        for kind in ("att", "def"):
            names += [f"{kind}[{i},{s + 1}]" for i in range(self.n_teams) for s in range(self.n_seasons)]
        return names

    def report(self, v) -> np.ndarray:
        """Map a sampler vector to the reported (constrained) parameters."""
        theta, phi, beta0, p, xi, sa, sd, _, _ = self._unpack(np.asarray(v, dtype=float))
        head = [theta, phi]
        if beta0 is not None:
            head.append(beta0)
        if p is not None:
            head += [p, xi]
        head += [sa, sd]
        att, def_ = self.effects(v)
        return np.concatenate([head, att.ravel(), def_.ravel()])


def fit_goal_model(
    model_kind: str,
    features,
    goals,
    n_teams: int,
    n_seasons: int,
    config: McmcConfig = McmcConfig(),
    hyper: GoalModelHyperpriors = GoalModelHyperpriors(),
) -> PosteriorSample:
    """Sample the posterior of a dynamic goal model.

    Returned draws are on the natural scale: ``theta, phi, [beta0], [p, xi],
    sigma_att, sigma_def, att[i,s], def[i,s]`` with team ids ``i`` and
    one-based seasons ``s``.
    """
    target = GoalPosterior(model_kind, features, goals, n_teams, n_seasons, hyper)
    raw = sample_posterior(
        target,
        target.dim,
        config,
        blocks=target.blocks,
        conditional=target.conditional,
        initial=target.initial_point(),
        scale_moves=target.scale_moves,
    )
    flat = raw.draws.reshape(-1, target.dim)
    reported = np.array([target.report(v) for v in flat]).reshape(raw.n_chains, raw.n_iterations, -1)
    return PosteriorSample(reported, target.reported_names(), raw.acceptance_rate, raw.seed)


_EFFECT = re.compile(r"^(att|def)\[(\d+),(\d+)\]$")


@dataclass(frozen=True)
class GoalDraws:
    """Posterior draws of a goal model as stacked arrays (leading axis = draw)."""

    kind: str
    theta: np.ndarray
    phi: np.ndarray
    beta0: np.ndarray | None
    p: np.ndarray | None
    xi: np.ndarray | None
    att: np.ndarray  # (draws, teams, seasons)
    def_: np.ndarray

    def __len__(self) -> int:
        return len(self.theta)

    @property
    def n_teams(self) -> int:
        return self.att.shape[1]

    @property
    def n_seasons(self) -> int:
        return self.att.shape[2]

    def parameters(self, d: int) -> GoalModelParameters:
        pick = lambda a: None if a is None else float(a[d])
        return GoalModelParameters(
            float(self.theta[d]), self.att[d], self.def_[d], float(self.phi[d]), pick(self.beta0), pick(self.p), pick(self.xi)
        )


def goal_draws(model_kind: str, sample: PosteriorSample) -> GoalDraws:
    _check_kind(model_kind)
    flat = sample.pooled()
    names = sample.parameter_names
    col = {n: k for k, n in enumerate(names)}
    effects = [(m.group(1), int(m.group(2)), int(m.group(3)), k) for k, n in enumerate(names) if (m := _EFFECT.match(n))]
    n_teams = 1 + max(e[1] for e in effects)
    n_seasons = max(e[2] for e in effects)
    att = np.zeros((len(flat), n_teams, n_seasons))
    def_ = np.zeros_like(att)
    for kind, i, s, k in effects:
        (att if kind == "att" else def_)[:, i, s - 1] = flat[:, k]
    get = lambda n: flat[:, col[n]] if n in col else None
    if model_kind in (BIVARIATE, DIAG_INFLATED) and "beta0" not in col:
        raise DomainError(f"sample has no beta0 column for a {model_kind} model")
    if model_kind == DIAG_INFLATED and not ("p" in col and "xi" in col):
        raise DomainError("sample has no p/xi columns for a diagonal-inflated model")
    return GoalDraws(
        model_kind,
        get("theta"),
        get("phi"),
        get("beta0") if model_kind != DOUBLE else None,
        get("p") if model_kind == DIAG_INFLATED else None,
        get("xi") if model_kind == DIAG_INFLATED else None,
        att,
        def_,
    )


def with_scales(hyper: GoalModelHyperpriors, sigma_att: float, sigma_def: float) -> GoalModelHyperpriors:
    return replace(hyper, sigma_att=sigma_att, sigma_def=sigma_def)
