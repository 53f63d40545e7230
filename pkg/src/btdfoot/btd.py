"""Bradley-Terry paired comparisons with Rao-Kupper and Davidson ties.

All probability functions work on log-strengths and broadcast over numpy
arrays. They are evaluated through log-sum-exp so that strength gaps of
several hundred do not overflow.

Log-strengths are identified by the sum-to-zero constraint. Samplers and
optimizers work on the free vector ``(psi_1, ..., psi_{N-1}, gamma)`` and the
last team's strength is ``-sum(psi_1..psi_{N-1})``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import _kernels

HOME_WIN, DRAW, AWAY_WIN = "home_win", "draw", "away_win"
_RESULT_CODES = {HOME_WIN: 0, DRAW: 1, AWAY_WIN: 2}
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class DomainError(ValueError):
    pass


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DomainError("log-strengths and tie parameter must be finite")


@dataclass(frozen=True)
class BTDParameters:
    psi: np.ndarray
    gamma: float

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        object.__setattr__(self, "psi", psi)
        _check_finite(psi, self.gamma)
        if psi.size and abs(psi.sum()) > 1e-9:
            raise DomainError(f"log-strengths must sum to zero, got {psi.sum():.3g}")

    @classmethod
    def from_free(cls, free: np.ndarray) -> "BTDParameters":
        """Build from ``(psi_1..psi_{N-1}, gamma)``."""
        free = np.asarray(free, dtype=float)
        return cls(expand_free(free[:-1]), float(free[-1]))

    @classmethod
    def centered(cls, psi, gamma: float) -> "BTDParameters":
        psi = np.asarray(psi, dtype=float)
        return cls(psi - psi.mean(), gamma)

    @property
    def alpha(self) -> np.ndarray:
        return np.exp(self.psi)

    @property
    def eta(self) -> float:
        return float(np.exp(self.gamma))

    @property
    def free(self) -> np.ndarray:
        return np.append(self.psi[:-1], self.gamma)


@dataclass(frozen=True)
class BTDPriors:
    mu_psi: float = 0.0
    sigma_psi: float = 3.0
    mu_gamma: float = 0.0
    sigma_gamma: float = 3.0

    def __post_init__(self):
        if not (self.sigma_psi > 0 and self.sigma_gamma > 0):
            raise DomainError("prior standard deviations must be positive")


@dataclass(frozen=True)
class ComparisonOutcome:
    home_id: int
    away_id: int
    result: str

    def __post_init__(self):
        if self.home_id == self.away_id:
            raise DomainError("a team cannot be compared with itself")
        if self.result not in _RESULT_CODES:
            raise DomainError(f"unknown result {self.result!r}")


@dataclass(frozen=True)
class Comparisons:
    """Columnar form of a sequence of :class:`ComparisonOutcome`.

    ``result`` codes: 0 home win, 1 draw, 2 away win.
    """

    home: np.ndarray
    away: np.ndarray
    result: np.ndarray

    @classmethod
    def from_outcomes(cls, data: Sequence[ComparisonOutcome]) -> "Comparisons":
        if isinstance(data, Comparisons):
            return data
        home = np.fromiter((c.home_id for c in data), dtype=np.intp, count=len(data))
        away = np.fromiter((c.away_id for c in data), dtype=np.intp, count=len(data))
        result = np.fromiter(
            (_RESULT_CODES[c.result] for c in data), dtype=np.intp, count=len(data)
        )
        return cls(home, away, result)

    def __len__(self) -> int:
        return len(self.result)

    def check_ids(self, n_teams: int):
        if len(self) and (
            max(self.home.max(), self.away.max()) >= n_teams
            or min(self.home.min(), self.away.min()) < 0
        ):
            raise IndexError(f"team id out of range for {n_teams} teams")


def expand_free(free_psi: np.ndarray) -> np.ndarray:
    free_psi = np.asarray(free_psi, dtype=float)
    return np.append(free_psi, -free_psi.sum())


def bt_win_prob(psi_i, psi_j):
    """P(i beats j) under the basic Bradley-Terry model."""
    _check_finite(psi_i, psi_j)
    out = expit(np.subtract(psi_i, psi_j))
    return float(out) if np.ndim(out) == 0 else out


def rao_kupper_log_probs(psi_i, psi_j, gamma):
    psi_i, psi_j, gamma = np.broadcast_arrays(
        np.asarray(psi_i, float), np.asarray(psi_j, float), np.asarray(gamma, float)
    )
    _check_finite(psi_i, psi_j, gamma)
    if np.any(gamma < 0):
        raise DomainError("Rao-Kupper threshold requires gamma >= 0")
    den_w = np.logaddexp(psi_i, gamma + psi_j)
    den_l = np.logaddexp(gamma + psi_i, psi_j)
    with np.errstate(divide="ignore"):
        log_w = psi_i - den_w
        log_l = psi_j - den_l
        # log(exp(2g) - 1), -inf at g = 0
        log_d = np.log(np.expm1(2.0 * gamma)) + psi_i + psi_j - den_w - den_l
    return log_w, log_d, log_l


def rao_kupper_probs(psi_i, psi_j, gamma):
    """(p_win, p_draw, p_loss) for i against j under Rao-Kupper ties."""
    return _as_output(tuple(np.exp(p) for p in rao_kupper_log_probs(psi_i, psi_j, gamma)))


def davidson_log_probs(psi_i, psi_j, gamma):
    psi_i, psi_j, gamma = np.broadcast_arrays(
        np.asarray(psi_i, float), np.asarray(psi_j, float), np.asarray(gamma, float)
    )
    _check_finite(psi_i, psi_j, gamma)
    tie = gamma + 0.5 * (psi_i + psi_j)
    den = logsumexp(np.stack([psi_i, psi_j, tie]), axis=0)
    return psi_i - den, tie - den, psi_j - den


def davidson_probs(psi_i, psi_j, gamma):
    """(p_win, p_draw, p_loss) for i against j under Davidson ties."""
    return _as_output(tuple(np.exp(p) for p in davidson_log_probs(psi_i, psi_j, gamma)))


def _as_output(triple):
    if np.ndim(triple[0]) == 0:
        return tuple(float(p) for p in triple)
    return triple


def _match_log_probs(psi: np.ndarray, gamma: float, data: Comparisons) -> np.ndarray:
    log_w, log_d, log_l = davidson_log_probs(psi[data.home], psi[data.away], gamma)
    return np.choose(data.result, (log_w, log_d, log_l))


def btd_log_likelihood(params: BTDParameters, data) -> float:
    data = Comparisons.from_outcomes(data)
    if not len(data):
        return 0.0
    data.check_ids(len(params.psi))
    return float(np.sum(_match_log_probs(params.psi, params.gamma, data)))


def _normal_logpdf(x, mu, sigma):
    return -0.5 * ((x - mu) / sigma) ** 2 - np.log(sigma) - _LOG_SQRT_2PI


def btd_log_prior(params: BTDParameters, priors: BTDPriors) -> float:
    """Independent normal log-densities (with normalizing constants) for every psi_k and gamma."""
    return float(
        np.sum(_normal_logpdf(params.psi, priors.mu_psi, priors.sigma_psi))
        + _normal_logpdf(params.gamma, priors.mu_gamma, priors.sigma_gamma)
    )


def btd_log_posterior(params: BTDParameters, priors: BTDPriors, data) -> float:
    return btd_log_likelihood(params, data) + btd_log_prior(params, priors)


def _likelihood_scores(psi: np.ndarray, gamma: float, data: Comparisons):
    """Per-match partial derivatives of the log-likelihood in (psi_i, psi_j, gamma)."""
    log_w, log_d, log_l = davidson_log_probs(psi[data.home], psi[data.away], gamma)
    pw, pd, pl = np.exp(log_w), np.exp(log_d), np.exp(log_l)
    # derivatives of the log normalizer
    dn_i = pw + 0.5 * pd
    dn_j = pl + 0.5 * pd
    r = data.result
    num_i = np.choose(r, (1.0, 0.5, 0.0))
    num_j = np.choose(r, (0.0, 0.5, 1.0))
    num_g = (r == 1).astype(float)
    return num_i - dn_i, num_j - dn_j, num_g - pd


def btd_grad_log_likelihood(params: BTDParameters, data) -> np.ndarray:
    data = Comparisons.from_outcomes(data)
    n = len(params.psi)
    grad = np.zeros(n + 1)
    if not len(data):
        return grad
    data.check_ids(n)
    g_i, g_j, g_g = _likelihood_scores(params.psi, params.gamma, data)
    grad[:n] = np.bincount(data.home, g_i, minlength=n) + np.bincount(data.away, g_j, minlength=n)
    grad[n] = g_g.sum()
    return grad


def btd_grad_log_posterior(params: BTDParameters, priors: BTDPriors, data) -> np.ndarray:
    """Gradient in ``(psi_1, ..., psi_N, gamma)``, each psi_k treated as a free coordinate."""
    grad = btd_grad_log_likelihood(params, data)
    grad[:-1] -= (params.psi - priors.mu_psi) / priors.sigma_psi**2
    grad[-1] -= (params.gamma - priors.mu_gamma) / priors.sigma_gamma**2
    return grad


def free_gradient(full_grad: np.ndarray) -> np.ndarray:
    """Chain rule from ``(psi_1..psi_N, gamma)`` to the free ``(psi_1..psi_{N-1}, gamma)``."""
    out = full_grad[:-2] - full_grad[-2]
    return np.append(out, full_grad[-1])


class BTDModel:
    """Log-posterior of the Bayesian Davidson model on the free parameter vector.

    ``conditional(x, k)`` returns the terms that change when free coordinate
    ``k`` moves: the matches and priors of team ``k`` and of the last team
    (whose strength absorbs the constraint). The tie coordinate touches
    every match.
    """

    def __init__(
        self,
        data,
        n_teams: int,
        priors: BTDPriors = BTDPriors(),
        team_names: Sequence[str] | None = None,
    ):
        if n_teams < 2:
            raise DomainError("need at least two teams")
        self.data = Comparisons.from_outcomes(data)
        self.data.check_ids(n_teams)
        self.n_teams = n_teams
        self.priors = priors
        self.team_names = list(team_names) if team_names is not None else [str(k) for k in range(n_teams)]
        last = n_teams - 1
        touches = [
            np.flatnonzero(
                (self.data.home == k) | (self.data.away == k) | (self.data.home == last) | (self.data.away == last)
            )
            for k in range(n_teams - 1)
        ]
        self._subsets = [idx.astype(np.int64) for idx in touches]
        self._all = np.arange(len(self.data), dtype=np.int64)
        self._home = np.ascontiguousarray(self.data.home, dtype=np.int64)
        self._away = np.ascontiguousarray(self.data.away, dtype=np.int64)
        self._result = np.ascontiguousarray(self.data.result, dtype=np.int64)

    @property
    def dim(self) -> int:
        return self.n_teams

    @property
    def parameter_names(self) -> list[str]:
        return [f"psi[{t}]" for t in self.team_names] + ["gamma"]

    def unpack(self, x) -> BTDParameters:
        return BTDParameters.from_free(x)

    def full_vector(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.append(expand_free(x[:-1]), x[-1])

    def log_likelihood(self, x) -> float:
        psi = expand_free(x[:-1])
        if not len(self.data):
            return 0.0
        return float(np.sum(_match_log_probs(psi, x[-1], self.data)))

    def log_prior(self, x) -> float:
        psi = expand_free(x[:-1])
        p = self.priors
        return float(
            np.sum(_normal_logpdf(psi, p.mu_psi, p.sigma_psi)) + _normal_logpdf(x[-1], p.mu_gamma, p.sigma_gamma)
        )

    def __call__(self, x) -> float:
        return self.log_likelihood(x) + self.log_prior(x)

    def conditional(self, x, k: int) -> float:
        x = np.asarray(x, dtype=float)
        free, gamma = x[:-1], float(x[-1])
        p = self.priors
        if k == self.n_teams - 1:
            ll = _kernels.davidson_loglik_subset(self._all, self._home, self._away, self._result, free, gamma)
            return ll + float(_normal_logpdf(gamma, p.mu_gamma, p.sigma_gamma))
        ll = _kernels.davidson_loglik_subset(self._subsets[k], self._home, self._away, self._result, free, gamma)
        last = -free.sum()
        return ll + float(_normal_logpdf(free[k], p.mu_psi, p.sigma_psi) + _normal_logpdf(last, p.mu_psi, p.sigma_psi))

    def grad_log_likelihood(self, x) -> np.ndarray:
        full = btd_grad_log_likelihood(BTDParameters.from_free(x), self.data)
        return free_gradient(full)

    def grad(self, x) -> np.ndarray:
        full = btd_grad_log_posterior(BTDParameters.from_free(x), self.priors, self.data)
        return free_gradient(full)


def comparisons_from_matches(dataset) -> Comparisons:
    """Comparisons for every match in a :class:`~btdfoot.match_data.MatchDataset`.

    The dataset's home team is always the first team of the pair, even on
    neutral ground.
    """
    codes = {"win": 0, "draw": 1, "loss": 2}
    home = np.array([dataset.team_id(m.home_team) for m in dataset.matches], dtype=np.intp)
    away = np.array([dataset.team_id(m.away_team) for m in dataset.matches], dtype=np.intp)
    result = np.array([codes[m.outcome] for m in dataset.matches], dtype=np.intp)
    return Comparisons(home, away, result)
