"""Estimators and tests shared by the experiments."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


def ks_test(sample, reference):
    """Kolmogorov-Smirnov statistic and asymptotic p-value.

    ``reference`` is either a CDF callable (one-sample test) or a second sample.
    """
    sample = np.asarray(sample, dtype=float)
    if callable(reference):
        res = stats.kstest(sample, reference, method="asymp")
    else:
        res = stats.ks_2samp(sample, np.asarray(reference, dtype=float), method="asymp")
    return float(res.statistic), float(res.pvalue)


def wilson_ci(hits, trials, level=0.95):
    if trials <= 0:
        return 0.0, 1.0
    z = stats.norm.ppf(0.5 + level / 2.0)
    p = hits / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class TailEstimate:
    threshold: float
    hits: int
    trials: int

    @property
    def estimate(self):
        return self.hits / self.trials if self.trials else float("nan")

    @property
    def stderr(self):
        if not self.trials:
            return float("nan")
        p = self.estimate
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    def interval(self, level=0.95):
        return wilson_ci(self.hits, self.trials, level)

    def as_dict(self):
        lo, hi = self.interval()
        return {"threshold": self.threshold, "hits": self.hits, "trials": self.trials,
                "estimate": self.estimate, "stderr": self.stderr, "ci_low": lo, "ci_high": hi}


def mean_stderr(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def log_linear_fit(levels, survival):
    """Least-squares line through (level, log survival); returns slope, intercept, R^2."""
    levels = np.asarray(levels, dtype=float)
    y = np.log(np.asarray(survival, dtype=float))
    slope, intercept = np.polyfit(levels, y, 1)
    resid = y - (slope * levels + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
