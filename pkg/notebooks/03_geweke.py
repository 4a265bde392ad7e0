"""
Forward samples against the successive-conditional chain
========================================================

Both procedures draw from the joint of parameters and data when the Gibbs
sweep is correct, so every statistic must agree in distribution.
"""

# %%
from pathlib import Path

import numpy as np

from mcmc_testkit import GewekeConfig, MixtureModel, RngStream, apply_mutant, geweke_run
from mcmc_testkit.geweke import drift, lag1_autocorrelation, run_chain, write_report

out = Path(__file__).with_name("out")
config = GewekeConfig(num_samples=10_000)

# %% the reference sampler passes; P-P plots go to notebooks/out
report = geweke_run(MixtureModel(), config)
print(report.summary())
write_report(report, out / "null", svg=True)

# %% the 0.51 typo shrinks the noise variance a little at every sweep; the
# chain settles below the prior instead of drifting off
bad = geweke_run(apply_mutant(None, "M1"), config)
print(bad.summary())
write_report(bad, out / "m1", svg=True)
slope, se = drift(np.log(bad.results["sigma_sq_n"].chain[:2000]))
print(f"log sigma_sq_n drift: {slope / se:+.1f} standard errors")

# %% too few samples leave the verdict open
print(geweke_run(MixtureModel(), GewekeConfig(num_samples=100)).verdict)

# %% more data couples parameters and data more tightly and the chain mixes
# more slowly
for n in (100, 20, 5):
    cfg = config.replace(n=n, num_samples=2000, statistics=("sigma_sq_n",))
    chain = run_chain(MixtureModel(), cfg, RngStream(8)).values["sigma_sq_n"]
    print(n, round(lag1_autocorrelation(chain), 3))
