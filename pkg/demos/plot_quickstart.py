"""
Fitting without a validation set
================================

Draw one instance of the sparse scenario, fit the three families on the
training rows only and score them on fresh test rows.
"""
import numpy as np

from permreg import ScenarioConfig, generate_scenario, r2_score, train

train_set, test_set, beta_star = generate_scenario(ScenarioConfig("B", seed=3))
print("train", train_set.X.shape, "test", test_set.X.shape)

###############################################################################
# Each call standardizes internally, so raw arrays go straight in.

for family in ("bkk", "sbkk", "abkk"):
    fit = train(family, train_set.X, train_set.Y, T=30, seed=0)
    r2 = r2_score(test_set.Y, fit.predict(test_set.X))
    print(f"{family:5s} iterations={fit.iterations:3d} lambda={fit.theta_hat.lam:9.3g} "
          f"selected={fit.n_selected} test R2={r2:.3f}")

###############################################################################
# The criterion trace starts at the heavily regularized initial point and
# drops quickly.

fit = train("sbkk", train_set.X, train_set.Y)
print(np.round(fit.criterion_trace[:10], 4))
