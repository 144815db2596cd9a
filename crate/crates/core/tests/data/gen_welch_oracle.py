"""Regenerates welch_oracle.json with scipy (Welch t-test, two-sided)."""
import json

import numpy as np
from scipy import special, stats

rng = np.random.default_rng(20231115)
fixtures = [
    ([1, 2, 3, 4], [2, 3, 4, 5]),
    ([1, 2, 3], [101, 102, 103]),
    ([5.1, 4.9, 6.2, 5.7, 6.0], [5.0, 5.3, 4.8, 5.9]),
    ([12, 15, 11, 19, 14, 13], [22, 25, 17, 21, 28, 24, 26]),
    ([0.5, 0.7], [0.9, 1.4]),
]
while len(fixtures) < 20:
    na = int(rng.integers(2, 15))
    nb = int(rng.integers(2, 15))
    a = np.round(rng.normal(rng.uniform(0, 60), rng.uniform(0.5, 15), na), 3)
    b = np.round(rng.normal(rng.uniform(0, 60), rng.uniform(0.5, 15), nb), 3)
    fixtures.append((a.tolist(), b.tolist()))

out = {"welch": [], "betainc": []}
for a, b in fixtures:
    r = stats.ttest_ind(a, b, equal_var=False)
    va, vb = np.var(a, ddof=1) / len(a), np.var(b, ddof=1) / len(b)
    df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    out["welch"].append({"a": a, "b": b, "t": float(r.statistic), "df": float(df), "p": float(r.pvalue)})

for x, a, b in [(0.5, 2.0, 3.0), (0.1, 0.5, 0.5), (0.9, 10.0, 0.5), (0.3, 1.5, 40.0),
                (0.999, 3.0, 0.5), (0.01, 0.5, 7.0), (0.75, 25.0, 25.0), (0.2, 1.0, 1.0)]:
    out["betainc"].append({"x": x, "a": a, "b": b, "value": float(special.betainc(a, b, x))})

print(json.dumps(out, indent=1))
