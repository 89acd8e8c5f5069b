"""
Scenario benchmark
==================

Repeat the draw / fit / score loop M times and compare against 5-fold
cross-validated ridge with a Mann-Whitney test on the R2 samples.
"""
from permreg import ScenarioConfig, run_benchmark

report = run_benchmark(["bkk", "sbkk", "abkk", "ridgecv"], ScenarioConfig("C"), M=10, seed=1)

for m in report.methods:
    print(f"{m:8s} mean R2 {report.mean_score(m):.3f}")
print("best (not significantly beaten):", report.winners_score)

###############################################################################
# ``report.write(out_dir)`` stores the same content as JSON and CSV.
