"""Compiled inner loops for the samplers and the forecast grid sums.

Effects are passed as free matrices ``ua``/``ud`` of shape (teams - 1,
seasons); the last team's effect is minus the column sum. Model kinds are
coded 0 double, 1 bivariate, 2 diagonal-inflated.
"""

import math

import numpy as np
from numba import njit

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True, error_model="numpy")
def _logaddexp(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True, error_model="numpy")
def match_loglik(kind, x, y, lgx, lgy, eta1, eta2, l3, log1mp, logp, logxi, xi):
    l1 = math.exp(eta1)
    l2 = math.exp(eta2)
    out = x * eta1 - l1 - lgx + y * eta2 - l2 - lgy
    if kind == 0:
        return out
    out -= l3
    m = min(x, y)
    if m > 0 and l3 > 0.0:
        # log sum_k C(x,k) C(y,k) k! r^k via the term ratio. With r < 1 and
        # m <= 100 every term stays below 1e125; otherwise stay in log space,
        # since r = l3 / (l1 l2) overflows once a rate underflows.
        log_r = math.log(l3) - eta1 - eta2
        if log_r < 0.0 and m <= 100:
            r = math.exp(log_r)
            term = 1.0
            total = 1.0
            for k in range(1, m + 1):
                term *= (x - k + 1) * (y - k + 1) * r / k
                total += term
            out += math.log(total)
        else:
            log_term = 0.0
            total = 0.0
            for k in range(1, m + 1):
                log_term += math.log((x - k + 1) * (y - k + 1) / k) + log_r
                total = _logaddexp(total, log_term)
            out += total
    if kind == 1:
        return out
    off = log1mp + out
    if x != y:
        return off
    return _logaddexp(off, logp + x * logxi - xi - lgx)


@njit(cache=True, error_model="numpy")
def _effect(u, team, s, ref_value):
    if team < u.shape[0]:
        return u[team, s]
    return ref_value


@njit(cache=True, error_model="numpy")
def loglik_subset(kind, idx, home, away, season, omega, x, y, lgx, lgy, ua, ud, theta, phi, l3, log1mp, logp, logxi, xi):
    n_seasons = ua.shape[1]
    ref_a = np.empty(n_seasons)
    ref_d = np.empty(n_seasons)
    for s in range(n_seasons):
        ref_a[s] = -ua[:, s].sum()
        ref_d[s] = -ud[:, s].sum()
    total = 0.0
    for n in idx:
        h = home[n]
        a = away[n]
        s = season[n]
        shift = 0.5 * phi * omega[n]
        eta1 = theta + _effect(ua, h, s, ref_a[s]) + _effect(ud, a, s, ref_d[s]) + shift
        eta2 = theta + _effect(ua, a, s, ref_a[s]) + _effect(ud, h, s, ref_d[s]) - shift
        total += match_loglik(kind, x[n], y[n], lgx[n], lgy[n], eta1, eta2, l3, log1mp, logp, logxi, xi)
    return total


@njit(cache=True, error_model="numpy")
def _normal(x, mu, sigma):
    z = (x - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI


@njit(cache=True, error_model="numpy")
def _full_effects(u):
    n, n_seasons = u.shape
    out = np.empty((n + 1, n_seasons))
    out[:n] = u
    for s in range(n_seasons):
        out[n, s] = -u[:, s].sum()
    return out


@njit(cache=True, error_model="numpy")
def walk_log_density(u, mu, sigma):
    eff = _full_effects(u)
    n, n_seasons = eff.shape
    total = 0.0
    for i in range(n):
        total += _normal(eff[i, 0], mu, sigma)
        for s in range(1, n_seasons):
            total += _normal(eff[i, s], eff[i, s - 1], sigma)
    return total


@njit(cache=True, error_model="numpy")
def _walk_local(u, team, s, mu, sigma):
    """Random-walk terms of one team that involve season ``s``."""
    n_seasons = u.shape[1]
    ref = team == u.shape[0]

    def value(t):
        if ref:
            return -u[:, t].sum()
        return u[team, t]

    here = value(s)
    if s == 0:
        total = _normal(here, mu, sigma)
    else:
        total = _normal(here, value(s - 1), sigma)
    if s + 1 < n_seasons:
        total += _normal(value(s + 1), here, sigma)
    return total


@njit(cache=True, error_model="numpy")
def team_season_conditional(
    kind, team, s, idx, home, away, season, omega, x, y, lgx, lgy, ua, ud,
    theta, phi, l3, log1mp, logp, logxi, xi, mu_att, mu_def, sigma_att, sigma_def,
):
    ref = ua.shape[0]
    total = loglik_subset(kind, idx, home, away, season, omega, x, y, lgx, lgy, ua, ud, theta, phi, l3, log1mp, logp, logxi, xi)
    total += _walk_local(ua, team, s, mu_att, sigma_att) + _walk_local(ua, ref, s, mu_att, sigma_att)
    total += _walk_local(ud, team, s, mu_def, sigma_def) + _walk_local(ud, ref, s, mu_def, sigma_def)
    return total


@njit(cache=True, error_model="numpy")
def davidson_loglik_subset(idx, home, away, result, free_psi, gamma):
    """Davidson log-likelihood of the selected comparisons; ``free_psi`` omits the last team."""
    n_free = free_psi.shape[0]
    last = -free_psi.sum()
    total = 0.0
    for n in idx:
        h = home[n]
        a = away[n]
        pi = free_psi[h] if h < n_free else last
        pj = free_psi[a] if a < n_free else last
        tie = gamma + 0.5 * (pi + pj)
        top = max(pi, pj, tie)
        den = top + math.log(math.exp(pi - top) + math.exp(pj - top) + math.exp(tie - top))
        r = result[n]
        if r == 0:
            total += pi - den
        elif r == 1:
            total += tie - den
        else:
            total += pj - den
    return total


@njit(cache=True, error_model="numpy")
def three_way_masses(kind, eta1, eta2, l3, log1mp, logp, logxi, xi, max_goals):
    """Per-draw (home win, draw, away win) mass of the score grid up to ``max_goals``."""
    lg = np.empty(max_goals + 1)
    for g in range(max_goals + 1):
        lg[g] = math.lgamma(g + 1.0)
    out = np.zeros((eta1.shape[0], 3))
    for d in range(eta1.shape[0]):
        for x in range(max_goals + 1):
            for y in range(max_goals + 1):
                mass = math.exp(match_loglik(kind, x, y, lg[x], lg[y], eta1[d], eta2[d], l3[d], log1mp[d], logp[d], logxi[d], xi[d]))
                if x > y:
                    out[d, 0] += mass
                elif x == y:
                    out[d, 1] += mass
                else:
                    out[d, 2] += mass
    return out
