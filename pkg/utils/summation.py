import numpy as np


def compensated_cumsum(values):
    """
    Prefix sums of `values` with Neumaier's compensated accumulation.

    Purpose:
        - Keeps the rounding error of every addition in a separate carry, so long
          prefix sums of weights stay accurate to a few ulps regardless of length.

    Usage:
        compensated_cumsum([1e16, 1.0, -1e16, 1.0])   # array([1e16, 1e16, 1., 2.])

    Returns a float64 array of the same length.
    """
    s = 0.0
    carry = 0.0
    out = []
    for x in np.asarray(values, dtype=float).tolist():
        t = s + x
        if abs(s) >= abs(x):
            carry += (s - t) + x
        else:
            carry += (x - t) + s
        s = t
        out.append(s + carry)
    return np.array(out, dtype=float)
