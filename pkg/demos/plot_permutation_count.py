"""
How many permutations
=====================

T = 0 reduces the criterion to the plain training risk. A handful of
permutations already changes the fit, and the score flattens out well
before the default of 30.
"""
from permreg import ScenarioConfig, run_benchmark

for T in (0, 1, 5, 10, 30):
    rep = run_benchmark(["bkk", "abkk"], ScenarioConfig("B"), M=10, seed=4, T=T)
    print(f"T={T:2d}  bkk {rep.mean_score('bkk'):.3f}  abkk {rep.mean_score('abkk'):.3f}")
