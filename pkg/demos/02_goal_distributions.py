"""How the three goal models spread probability over scorelines.

With equal teams the independent model already gives roughly three draws
in ten. The bivariate model adds one shared count to both scores: low
scores become rarer, but the goal difference keeps its distribution, so
win/draw/loss do not move at all. Only the diagonal inflation raises draws.
"""

import math

import numpy as np

from btdfoot.evaluation import aggregate_three_way, score_matrix
from btdfoot.goal_models import BIVARIATE, DIAG_INFLATED, DOUBLE, GoalModelParameters, MatchFeature

zeros = np.zeros((2, 1))
feature = MatchFeature(home_id=0, away_id=1, season=1, omega=0.0)
variants = {
    DOUBLE: GoalModelParameters(0.2, zeros, zeros),
    BIVARIATE: GoalModelParameters(0.2, zeros, zeros, beta0=math.log(0.2)),
    DIAG_INFLATED: GoalModelParameters(0.2, zeros, zeros, beta0=math.log(0.2), p=0.08, xi=0.9),
}

for kind, params in variants.items():
    grid = score_matrix(kind, params, feature)
    w, d, l = aggregate_three_way(grid)
    print(f"{kind:<14} win {w:.3f} draw {d:.3f} loss {l:.3f}   P(0-0) {grid[0, 0]:.3f}  P(1-1) {grid[1, 1]:.3f}")

# A ranking gap moves the rates in opposite directions through phi.
for gap in (-1.0, 0.0, 1.0, 2.0):
    params = GoalModelParameters(0.2, zeros, zeros, phi=0.35)
    w, d, l = aggregate_three_way(score_matrix(DOUBLE, params, MatchFeature(0, 1, 1, gap)))
    print(f"omega {gap:+.1f}: win {w:.3f} draw {d:.3f} loss {l:.3f}")
