"""From a selection trace to a boosted multiple-kernel classifier.

The nested feature sets in the trace are crossed with a bandwidth grid.
Each (feature set, bandwidth, ridge) triple becomes a kernel ridge weak
learner and LPBoost picks a sparse convex combination of them.

Run: python demos/04_mkl_boosting.py
"""

import numpy as np

from randsel import RandSelConfig, gen_xor, run, tune_D

train, test = gen_xor(10, 300, seed=4), gen_xor(10, 500, seed=1004)
trace = run(train, RandSelConfig(r=200, s=100, master_seed=4))
print("selected features:", trace.final_active)

model, best_D, scores = tune_D(train, trace, [0.01, 0.05], seed=4, sigmas=[0.1, 0.5, 2.0], lambda_grid=[1e-2])
print("validation accuracy by D:", {d: round(a, 3) for d, a in scores.items()})
print("chosen D:", best_D)

for k in model.support:
    learner = model.learners[k]
    print(f"  weight {model.weights[k]:.3f}  features {learner.spec.features}  sigma {learner.spec.sigma}")
print("test accuracy:", float(np.mean(model.predict(test.X) == test.y)))
