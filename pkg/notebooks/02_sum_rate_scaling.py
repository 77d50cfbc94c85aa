"""
Sum rate against the number of users
====================================

Runs a reduced version of the sum-rate campaign (fewer trials than the
acceptance run) and prints the simulated rates next to the scaling laws.
All rates are in nats per channel use.
"""

# %%
import time

import numpy as np

from irs_rotations import harness

cfg = harness.load_config("configs/fig1.cfg", trials=100)
t0 = time.perf_counter()
points = harness.run_sumrate(cfg, threads=4)
print(f"{len(points)} points in {time.perf_counter() - t0:.1f}s")

# %%
print(f"{'K':>6} {'scheme':>8} {'mean':>8} {'stderr':>8} {'law':>8}")
for p in points:
    law = "" if p.theorem is None else f"{p.theorem:8.3f}"
    print(f"{p.k:>6} {p.scheme:>8} {p.mean_rate:8.3f} {p.stderr:8.3f} {law:>8}")

# %% [markdown]
# The multi-user diversity gain grows like ``M ln ln K``.  A least-squares
# fit of the DBF curve against ``ln ln K`` over the large-K points gives the
# empirical slope.

# %%
dbf = [(p.k, p.mean_rate) for p in points if p.scheme == "dbf" and p.k >= 256]
k, r = map(np.array, zip(*dbf))
print("DBF slope vs ln ln K:", np.polyfit(np.log(np.log(k)), r, 1)[0], "(M =", cfg.m, ")")
