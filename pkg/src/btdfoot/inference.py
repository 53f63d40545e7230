"""Adaptive random-walk Metropolis, convergence diagnostics and MLE.

Random numbers come from numpy's PCG64. Each chain gets its own stream,
spawned from ``SeedSequence(seed)`` in chain order, so results do not depend
on how chains are scheduled.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np


class InitializationError(RuntimeError):
    pass


class AdaptationError(RuntimeError):
    pass


class DegenerateChainError(ValueError):
    pass


class EmptySampleError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, last_iterate: np.ndarray):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 4
    iterations: int = 2000
    warmup: int = 2000
    seed: int = 0
    target_acceptance: float = 0.44
    initial_step: float = 0.5
    thin: int = 1

    def __post_init__(self):
        if self.chains < 1 or self.iterations < 1 or self.warmup < 0 or self.thin < 1:
            raise ValueError("chains and iterations must be >= 1, warmup >= 0")
        if not 0 < self.target_acceptance < 1:
            raise ValueError("target_acceptance must lie in (0, 1)")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class PosteriorSample:
    draws: np.ndarray  # (chains, iterations, dim)
    parameter_names: list[str]
    acceptance_rate: np.ndarray = field(default_factory=lambda: np.zeros(0))
    seed: int | None = None

    def __post_init__(self):
        self.draws = np.asarray(self.draws, dtype=float)
        if self.draws.ndim != 3:
            raise ValueError("draws must have shape (chains, iterations, dim)")
        if self.draws.shape[2] != len(self.parameter_names):
            raise ValueError("parameter_names does not match the draw dimension")
        if not np.all(np.isfinite(self.draws)):
            raise ValueError("draws must be finite")

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_iterations(self) -> int:
        return self.draws.shape[1]

    def index(self, name: str) -> int:
        return self.parameter_names.index(name)

    def pooled(self, param=None) -> np.ndarray:
        """Draws pooled over chains; a single column if ``param`` is given."""
        flat = self.draws.reshape(-1, self.draws.shape[2])
        if param is None:
            return flat
        if isinstance(param, str):
            param = self.index(param)
        return flat[:, param]

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["chain", "iteration", *self.parameter_names])
        for c in range(self.n_chains):
            for t in range(self.n_iterations):
                writer.writerow([c + 1, t + 1, *(repr(float(v)) for v in self.draws[c, t])])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PosteriorSample":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header[:2] != ["chain", "iteration"]:
            raise ValueError("draws CSV must start with chain,iteration columns")
        rows = [(int(r[0]), int(r[1]), [float(v) for v in r[2:]]) for r in reader if r]
        n_chains = max(r[0] for r in rows)
        n_iter = max(r[1] for r in rows)
        draws = np.empty((n_chains, n_iter, len(header) - 2))
        for c, t, values in rows:
            draws[c - 1, t - 1] = values
        return cls(draws, header[2:])


LogDensity = Callable[[np.ndarray], float]


def _safe(value) -> float:
    value = float(value)
    return -math.inf if math.isnan(value) else value


def _run_chain(log_density, conditional, blocks, x0, config: McmcConfig, rng: np.random.Generator, scale_moves=()):
    x = np.array(x0, dtype=float)
    dim = len(x)
    n_blocks = len(blocks)
    log_step = np.full(n_blocks, math.log(config.initial_step))
    scale_step = np.full(len(scale_moves), math.log(config.initial_step))
    current = _safe(log_density(x))
    kept = np.empty((config.iterations, dim))
    accepted_warmup = 0
    accepted = 0
    total = config.warmup + config.iterations * config.thin
    for it in range(total):
        warm = it < config.warmup
        gain = (it + 1) ** -0.6
        for b, idx in enumerate(blocks):
            proposal = x.copy()
            proposal[idx] += math.exp(log_step[b]) * rng.standard_normal(len(idx))
            if conditional is None:
                new = _safe(log_density(proposal))
                log_ratio = new - current
            else:
                log_ratio = _safe(conditional(proposal, b)) - _safe(conditional(x, b))
            if math.isnan(log_ratio):
                log_ratio = -math.inf
            accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
            if rng.random() < accept_prob:
                x = proposal
                if conditional is None:
                    current = new
                if warm:
                    accepted_warmup += 1
                else:
                    accepted += 1
            if warm:
                log_step[b] += gain * (accept_prob - config.target_acceptance)
        for m, (k, idx) in enumerate(scale_moves):
            eps = math.exp(scale_step[m]) * rng.standard_normal()
            proposal = x.copy()
            proposal[k] += eps
            proposal[idx] *= math.exp(eps)
            new = _safe(log_density(proposal))
            old = current if conditional is None else _safe(log_density(x))
            log_ratio = new - old + len(idx) * eps
            if math.isnan(log_ratio):
                log_ratio = -math.inf
            accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
            if rng.random() < accept_prob:
                x = proposal
                current = new
            if warm:
                scale_step[m] += gain * (accept_prob - config.target_acceptance)
        if not warm:
            k = it - config.warmup
            if (k + 1) % config.thin == 0:
                kept[k // config.thin] = x
    if config.warmup and accepted_warmup == 0:
        raise AdaptationError("no proposal was accepted during warmup")
    rate = accepted / (n_blocks * config.iterations * config.thin)
    return kept, rate


def sample_posterior(
    log_density: LogDensity,
    dim: int,
    config: McmcConfig = McmcConfig(),
    *,
    blocks: Sequence[Sequence[int]] | None = None,
    conditional: Callable[[np.ndarray, int], float] | None = None,
    initial: np.ndarray | None = None,
    parameter_names: Sequence[str] | None = None,
    scale_moves: Sequence[tuple[int, Sequence[int]]] = (),
) -> PosteriorSample:
    """Draw from ``log_density`` with blockwise adaptive random-walk Metropolis.

    Parameters
    ----------
    log_density
        Unnormalized log target on R^dim.
    blocks
        Index groups updated jointly; default one block per coordinate.
    conditional
        Optional ``f(x, b)`` returning the terms of the log target that
        depend on block ``b``. Differences of ``conditional`` must equal
        differences of ``log_density`` for moves inside block ``b``; it lets
        large models skip terms a block cannot change.
    initial
        Starting point for every chain (zeros by default).
    scale_moves
        Pairs ``(k, idx)``. After each sweep, coordinate ``k`` (a log scale)
        moves by ``eps`` while ``x[idx]`` is multiplied by ``exp(eps)``, with
        the Jacobian in the acceptance ratio. Lets a hierarchical scale and
        the effects it governs move together.

    Step sizes are tuned per block by Robbins-Monro during warmup toward
    ``config.target_acceptance`` and held fixed afterwards.
    """
    x0 = np.zeros(dim) if initial is None else np.asarray(initial, dtype=float)
    if x0.shape != (dim,):
        raise ValueError(f"initial point has shape {x0.shape}, expected ({dim},)")
    start = float(log_density(x0))
    if not math.isfinite(start):
        raise InitializationError(f"log density is {start} at the initial point")
    blocks = [np.arange(k, k + 1) for k in range(dim)] if blocks is None else [np.asarray(b, dtype=np.intp) for b in blocks]
    if conditional is not None and not blocks:
        raise ValueError("conditional updates need blocks")
    names = list(parameter_names) if parameter_names is not None else [f"x[{k}]" for k in range(dim)]

    moves = [(int(k), np.asarray(idx, dtype=np.intp)) for k, idx in scale_moves]
    streams = np.random.SeedSequence(config.seed).spawn(config.chains)
    draws = np.empty((config.chains, config.iterations, dim))
    rates = np.empty(config.chains)
    for c, stream in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(stream))
        draws[c], rates[c] = _run_chain(log_density, conditional, blocks, x0, config, rng, moves)
    return PosteriorSample(draws, names, rates, config.seed)


def _chain_matrix(sample: PosteriorSample, param) -> np.ndarray:
    if isinstance(param, str):
        param = sample.index(param)
    return sample.draws[:, :, param]


def _split(chains: np.ndarray) -> np.ndarray:
    n = chains.shape[1]
    if n < 4:
        return chains
    half = n // 2
    return np.concatenate([chains[:, :half], chains[:, n - half :]], axis=0)


def r_hat(sample: PosteriorSample, param) -> float:
    """Split-chain potential scale reduction factor."""
    chains = _chain_matrix(sample, param)
    if chains.shape[1] < 2:
        raise DegenerateChainError("need at least two draws per chain")
    chains = _split(chains)
    n = chains.shape[1]
    within = chains.var(axis=1, ddof=1).mean()
    if within <= 0:
        raise DegenerateChainError("zero within-chain variance")
    between = n * chains.mean(axis=1).var(ddof=1) if chains.shape[0] > 1 else 0.0
    var_plus = (n - 1) / n * within + between / n
    return float(math.sqrt(max(var_plus / within, 1.0 - 1e-6)))


def _autocovariance(x: np.ndarray) -> np.ndarray:
    n = len(x)
    size = 1 << (2 * n - 1).bit_length()
    centered = x - x.mean()
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    return acov


def ess(sample: PosteriorSample, param) -> float:
    """Effective sample size from split chains with Geyer's initial monotone sequence."""
    chains = _chain_matrix(sample, param)
    if chains.shape[1] < 2:
        raise DegenerateChainError("need at least two draws per chain")
    total = chains.size
    chains = _split(chains)
    m, n = chains.shape
    acov = np.array([_autocovariance(c) for c in chains])
    within = acov[:, 0].mean() * n / (n - 1)
    if within <= 0:
        raise DegenerateChainError("zero within-chain variance")
    between = n * chains.mean(axis=1).var(ddof=1) if m > 1 else 0.0
    var_plus = (n - 1) / n * within + between / n
    rho = 1.0 - (within - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer: sum adjacent pairs while positive, enforce monotone decrease
    pair_sums = []
    t = 0
    while t + 1 < n:
        s = rho[t] + rho[t + 1]
        if s < 0:
            break
        if pair_sums and s > pair_sums[-1]:
            s = pair_sums[-1]
        pair_sums.append(s)
        t += 2
    tau = -1.0 + 2.0 * sum(pair_sums) if pair_sums else 1.0
    tau = max(tau, 1.0 / math.log10(max(total, 10)))
    return float(min(total / tau, total))


def posterior_median(sample: PosteriorSample, param) -> float:
    values = sample.pooled(param)
    if values.size == 0:
        raise EmptySampleError("sample has no draws")
    return float(np.median(values))


@dataclass(frozen=True)
class MleConfig:
    tol: float = 1e-8
    max_iter: int = 10_000
    divergence_bound: float = 25.0
    probe_distance: float = 10.0


def fit_mle(
    log_likelihood: LogDensity,
    gradient: Callable[[np.ndarray], np.ndarray],
    dim: int,
    config: MleConfig = MleConfig(),
    initial: np.ndarray | None = None,
) -> np.ndarray:
    """Maximize ``log_likelihood`` by gradient ascent.

    Steps follow the Barzilai-Borwein rule, shortened by backtracking until
    the Armijo condition holds. Stops when the gradient max-norm falls below
    ``config.tol``.

    Raises :class:`NonConvergenceError` if the iteration cap is hit, if any
    coordinate leaves ``[-divergence_bound, divergence_bound]``, or if the
    objective does not drop ``probe_distance`` further along the final
    gradient. The last two are how a supremum at infinity shows up (complete
    separation), where the gradient vanishes without a maximum being reached.
    """
    x = np.zeros(dim) if initial is None else np.array(initial, dtype=float)
    f = float(log_likelihood(x))
    g = np.asarray(gradient(x), dtype=float)
    step = 1.0
    for _ in range(config.max_iter):
        if np.max(np.abs(g), initial=0.0) < config.tol:
            _probe_unbounded(log_likelihood, x, f, g, config)
            return x
        gg = float(g @ g)
        g_max = float(np.max(np.abs(g)))
        t = step
        g_new = None
        while t >= 1e-20:
            candidate = x + t * g
            f_new = float(log_likelihood(candidate))
            if math.isfinite(f_new):
                if f_new >= f + 1e-4 * t * gg:
                    break
                if abs(f_new - f) <= 1e-12 * max(1.0, abs(f)):
                    # objective flat to rounding: accept if the gradient shrinks
                    g_new = np.asarray(gradient(candidate), dtype=float)
                    if np.max(np.abs(g_new)) < g_max:
                        break
                    g_new = None
            t *= 0.5
        else:
            raise NonConvergenceError("line search failed to find an ascent step", x)
        if g_new is None:
            g_new = np.asarray(gradient(candidate), dtype=float)
        s = candidate - x
        y = g - g_new
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else 2.0 * t
        step = min(max(step, 1e-10), 1e10)
        x, f, g = candidate, f_new, g_new
        if np.max(np.abs(x)) > config.divergence_bound:
            raise NonConvergenceError(
                f"iterate left the box |x| <= {config.divergence_bound}; the maximum is not attained", x
            )
    raise NonConvergenceError(f"no convergence after {config.max_iter} iterations", x)


def _probe_unbounded(log_likelihood, x, f, g, config: MleConfig):
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        return
    far = float(log_likelihood(x + config.probe_distance * g / norm))
    if far >= f - 1e-12 * max(1.0, abs(f)):
        raise NonConvergenceError("objective keeps increasing along the gradient; the maximum is not attained", x)
