"""Ranking five teams from win/draw/loss records.

We simulate a season of paired comparisons from known log-strengths, then
recover them two ways: by maximum likelihood and by the posterior median of
the Bayesian model. Both should land near the truth, and near each other.
"""

import numpy as np

from btdfoot.btd import BTDModel, BTDPriors, davidson_probs
from btdfoot.inference import McmcConfig, ess, fit_mle, r_hat, sample_posterior
from btdfoot.synthetic import simulate_comparisons

truth = np.array([0.9, 0.4, 0.0, -0.5, -0.8])
gamma = -0.3

# A draw is most likely between equals and fades as the gap widens.
for gap in (0.0, 0.5, 1.0, 2.0):
    w, d, l = davidson_probs(gap / 2, -gap / 2, gamma)
    print(f"gap {gap:3.1f}: win {w:.3f}  draw {d:.3f}  loss {l:.3f}")

rng = np.random.default_rng(1)
data = simulate_comparisons(truth, gamma, 600, rng)
model = BTDModel(data, len(truth), BTDPriors())

mle = model.full_vector(fit_mle(model.log_likelihood, model.grad_log_likelihood, model.dim))
sample = sample_posterior(model, model.dim, McmcConfig(chains=4, iterations=1000, warmup=1000, seed=3), conditional=model.conditional)
full = np.array([model.full_vector(v) for v in sample.pooled()])
median = np.median(full, axis=0)

print("\nparameter   truth     MLE  median")
for k, name in enumerate([f"psi[{i}]" for i in range(len(truth))] + ["gamma"]):
    print(f"{name:<9} {np.append(truth, gamma)[k]:7.3f} {mle[k]:7.3f} {median[k]:7.3f}")

print("\nworst R-hat", max(r_hat(sample, n) for n in sample.parameter_names))
print("smallest ESS", min(ess(sample, n) for n in sample.parameter_names))
