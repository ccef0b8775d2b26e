"""Rebuild the bundled annual consumption fixture.

The fixture is a reconstruction, not a transcription: annual log-increments are
drawn from a seeded generator and then pinned so that the series reproduces the
published summary statistics of U.S. real per-capita consumption, 1889-2009
(anchor levels, sub-period means and variances, higher moments, Great
Depression episode). Run from the repository root:

    python3 scripts/reconstruct_fixture.py > crates/core/data/us_consumption_1889_2009.csv
"""
import sys

import numpy as np
from scipy import stats

C1949 = 8045.5
C2009 = 30509.0
NAIVE_2009 = 23932.2
PRE_VAR = 0.0022
FULL_VAR = 0.00123
SKEW, KURT = -0.38, 1.14

# fixed episodes, keyed by terminal year of the increment
EPISODES = {
    (1927, 1930): np.log(1.12),
    (1931, 1934): np.log(0.74),
    (1935, 1938): np.log(1.21),
}


def pin_segment(z, fixed, total, var):
    """Affinely map free draws so that the segment has the given sum and variance."""
    n = len(z) + len(fixed)
    mu = total / n
    free_mean = (total - fixed.sum()) / len(z)
    ss = var * (n - 1) - ((fixed - mu) ** 2).sum() - len(z) * (free_mean - mu) ** 2
    if ss <= 0:
        return None
    zc = z - z.mean()
    return free_mean + zc * np.sqrt(ss / (zc**2).sum())


def adjusted_moments(x):
    n = len(x)
    d = x - x.mean()
    m2, m3, m4 = (d**2).mean(), (d**3).mean(), (d**4).mean()
    g1, g2 = m3 / m2**1.5, m4 / m2**2 - 3
    G1 = np.sqrt(n * (n - 1)) / (n - 2) * g1
    G2 = (n - 1) / ((n - 2) * (n - 3)) * ((n + 1) * g2 + 6)
    return G1, G2


def box_pierce_p(x, lags=10):
    d = x - x.mean()
    c0 = (d**2).sum()
    q = len(x) * sum(((d[k:] * d[:-k]).sum() / c0) ** 2 for k in range(1, lags + 1))
    return stats.chi2.sf(q, lags)


def sinh_arcsinh(rng, n):
    """Normal draws bent by a random skew and tail-weight transform."""
    skew = rng.uniform(-1.5, 1.5)
    tail = rng.uniform(0.8, 2.5)
    return np.sinh((np.arcsinh(rng.standard_normal(n)) + skew) / tail)


def build(seed):
    rng = np.random.default_rng(seed)
    years = np.arange(1890, 2010)
    pre = years <= 1949
    fixed_mask = np.zeros(len(years), bool)
    fixed_vals = np.zeros(len(years))
    for (a, b), total in EPISODES.items():
        k = b - a + 1
        w = rng.dirichlet(np.full(k, 4.0))
        sel = (years >= a) & (years <= b)
        fixed_mask[sel] = True
        fixed_vals[sel] = total * w
    x = np.zeros(len(years))
    x[fixed_mask] = fixed_vals[fixed_mask]

    free_pre = pre & ~fixed_mask
    z = sinh_arcsinh(rng, free_pre.sum())
    v = pin_segment(z, fixed_vals[pre & fixed_mask], np.log(NAIVE_2009 / C1949), PRE_VAR)
    if v is None:
        return None
    x[free_pre] = v

    post = ~pre
    pre_total = x[pre].sum()
    post_total = np.log(C2009 / C1949)
    n = len(x)
    mu = (pre_total + post_total) / n
    ss_post = FULL_VAR * (n - 1) - ((x[pre] - mu) ** 2).sum() - 60 * (post_total / 60 - mu) ** 2
    if ss_post <= 0:
        return None
    z = sinh_arcsinh(rng, post.sum())
    x[post] = pin_segment(z, np.array([]), post_total, ss_post / 59)
    return x


def score(x):
    s, k = adjusted_moments(x)
    if box_pierce_p(x) < 0.3:
        return None
    levels = C1949 * np.exp(np.concatenate([[0.0], np.cumsum(x)]) - x[:60].sum())
    t = np.arange(len(levels))
    slope, _, r, _, _ = stats.linregress(t, np.log(levels))
    if abs(slope - 0.021) > 0.0004 or r**2 < 0.988:
        return None
    return abs(s - SKEW) / 0.06 + abs(k - KURT) / 0.2


def main():
    best = None
    for seed in range(100000):
        x = build(seed)
        if x is None:
            continue
        sc = score(x)
        if sc is not None and (best is None or sc < best[0]):
            best = (sc, seed, x)
            if sc < 0.1:
                break
    _, seed, x = best
    c1889 = C1949 / np.exp(x[:60].sum())
    levels = c1889 * np.exp(np.concatenate([[0.0], np.cumsum(x)]))
    out = sys.stdout
    out.write("# Annual real per-capita consumption, constant 2005 USD, 1889-2009.\n")
    out.write("# RECONSTRUCTED series (generator seed %d): annual increments are synthetic,\n" % seed)
    out.write("# pinned to published summary statistics of the U.S. series (levels in 1949\n")
    out.write("# and 2009, 1890-1949 mean/variance, full-sample moments, 1926-1938 episode).\n")
    out.write("# Regenerate with scripts/reconstruct_fixture.py.\n")
    out.write("year,consumption\n")
    for yr, c in zip(range(1889, 2010), levels):
        out.write("%d,%.2f\n" % (yr, c))


if __name__ == "__main__":
    main()
