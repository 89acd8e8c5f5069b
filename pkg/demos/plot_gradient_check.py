"""
Checking the analytic gradient
==============================

Central differences against the adjoint gradient at random parameter
draws, for the richest family.
"""
from permreg.gradcheck import check_gradients

rows = check_gradients("abkk", draws=5)
for r in rows:
    print(r.draw, f"{r.worst:.2e}", r.names[:3], "...")
