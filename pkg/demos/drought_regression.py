"""Drought duration given severity, from synthetic daily rainfall.

Run with ``python3 demos/drought_regression.py``.
"""

import numpy as np

from tiecop.hydro import (
    conditional_duration,
    conditional_mean_duration,
    extract_droughts,
    fit_duration_severity,
    spi,
    synthetic_precip,
)

precip = synthetic_precip(20 * 365, seed=7)
index = spi(precip, window_days=30)
events = extract_droughts(index)
print(f"{len(events)} drought events from {len(precip)} days")

ranked, margins = fit_duration_severity(events)
for r in ranked:
    print(f"{r.family.value:>9}: loglik/obs = {r.loglik_per_obs:.4f}")
best = ranked[0]

# P(D > y | S = s) for a few durations (months) at the median severity
s = float(np.median(margins.severities))
ys = np.array([0.5, 1.0, 2.0])
print("P(D > y | S = median):", np.round(1.0 - conditional_duration(best, margins, s, ys), 3))
for q in (0.25, 0.5, 0.9):
    s = float(np.quantile(margins.severities, q))
    print(f"E(D | S = {s:.3f}) = {conditional_mean_duration(best, margins, s):.3f} months")
