"""
Kill matrix
===========

Every registered mutant against both suites.
"""

# %%
from mcmc_testkit import REGISTRY, GewekeConfig, RngStream, detected_by, kill_matrix

for m in REGISTRY.values():
    print(f"{m.id:<5} {m.description}")

# %%
rows = kill_matrix(None, rng=RngStream(6), trials=100, geweke_config=GewekeConfig(num_samples=5000))
for mid, found in detected_by(rows).items():
    print(f"{mid:<5} {', '.join(found) or '(not detected)'}")

# %% evidence per detector for one mutant
for r in rows:
    if r.mutant == "M4":
        print(f"{r.detector:<26} {'x' if r.detected else ' '} {r.evidence:.3g}")
