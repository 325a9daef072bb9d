"""The sampling primitives, shown against their analytic targets.

Run:  python demos/kernel_tour.py
"""
import numpy as np
from scipy import stats

from nbbtf import (
    RngStream,
    SymBandedMatrix,
    pg_draw_many,
    pg_mean,
    sample_mvn_canonical,
    slice_sample,
)

rng = RngStream(2024)

print("Polya-Gamma moments (100k draws each)")
for b, c in [(1, 0.0), (2, 1.0), (5, 2.0)]:
    x = pg_draw_many(np.full(100_000, b, dtype=np.int64), np.full(100_000, c), rng)
    print(f"  PG({b},{c}): sample mean {x.mean():.5f}  analytic {pg_mean(b, c):.5f}")

print("\nslice sampling a Beta(10,2) target (mean 10/12 = 0.8333)")
x, draws = 0.5, []
for _ in range(20_000):
    x = slice_sample(stats.beta(10, 2).logpdf, x, rng, lower=0.0, upper=1.0)
    draws.append(x)
print(f"  chain mean {np.mean(draws):.4f}")

print("\njoint draw from a banded-precision Gaussian (tridiagonal, T=3)")
q = SymBandedMatrix(np.array([[2.0, 2.0, 2.0], [-1.0, -1.0, 0.0]]))
draws = sample_mvn_canonical(q, np.zeros(3), rng, size=200_000)
print("  sample covariance:")
print(np.round(np.cov(draws.T), 3))
print("  exact inverse precision:")
print(np.array([[0.75, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 0.75]]))
