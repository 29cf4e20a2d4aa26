import numpy as np


def max_asymmetry(a: np.ndarray, block: int = 512) -> float:
    """max |a - a.T| computed in row blocks, without an n x n temporary."""
    worst = 0.0
    n = a.shape[0]
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        worst = max(worst, float(np.max(np.abs(a[lo:hi] - a[:, lo:hi].T), initial=0.0)))
    return worst
