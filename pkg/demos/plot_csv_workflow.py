"""
From a CSV file
===============

Write a synthetic table to disk, read it back, split it and fit.
"""
import tempfile
from pathlib import Path

from permreg import ScenarioConfig, generate_scenario, load_csv, r2_score, split, train
from permreg.data import save_csv

tmp = Path(tempfile.mkdtemp())
train_set, _, _ = generate_scenario(ScenarioConfig("A", n_train=300, p=30))
save_csv(train_set, tmp / "table.csv", target_column="target")

D = load_csv(tmp / "table.csv", "target")
tr, te = split(D, test_fraction=0.25, seed=0)
fit = train("abkk", tr.X, tr.Y)
print(len(tr.Y), len(te.Y), "test R2", round(r2_score(te.Y, fit.predict(te.X)), 3))
