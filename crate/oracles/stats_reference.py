"""Reference values for the rank and variance tests, computed with scipy.
Writes fixtures/stats_reference.json."""
import json
import pathlib

import numpy as np
from scipy import stats

rng = np.random.default_rng(20240611)
cases = []
for i in range(20):
    k = int(rng.integers(2, 5))
    groups = []
    for g in range(k):
        n = int(rng.integers(4, 25))
        scale = float(rng.uniform(0.5, 3.0))
        loc = float(rng.uniform(-1.0, 1.0))
        x = rng.normal(loc, scale, n)
        if i % 3 == 0:
            x = np.round(x, 1)  # introduce ties
        groups.append([float(v) for v in x])
    h, hp = stats.kruskal(*groups)
    w, wp = stats.levene(*groups, center="median")
    res = stats.mannwhitneyu(groups[0], groups[1], use_continuity=True,
                             alternative="two-sided", method="asymptotic")
    u1 = float(res.statistic)
    u = min(u1, len(groups[0]) * len(groups[1]) - u1)
    cases.append({
        "groups": groups,
        "kruskal": [float(h), float(hp)],
        "levene": [float(w), float(wp)],
        "mann_whitney": [u, float(res.pvalue)],
    })

out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "stats_reference.json"
out.write_text(json.dumps({"cases": cases}, indent=1) + "\n")
print("wrote", out, len(cases), "cases")
