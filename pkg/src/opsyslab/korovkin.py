"""Bernstein operators on a grid: smallness on {1, x, x^2} forces smallness
everywhere as the degree grows."""

from __future__ import annotations

import numpy as np

from .errors import InputError

TEST_FUNCTIONS = {
    "1": lambda x: np.ones_like(x),
    "x": lambda x: x,
    "x^2": lambda x: x * x,
    "x^3": lambda x: x**3,
    "x^4": lambda x: x**4,
    "sin_pi": lambda x: np.sin(np.pi * x),
    "abs_mid": lambda x: np.abs(x - 0.5),
    "exp": lambda x: np.exp(x),
}


def bernstein_weights(n: int, x: float) -> np.ndarray:
    """Binomial weights C(n,k) x^k (1-x)^(n-k), k = 0..n.

    Computed by the multiplicative recurrence started from the larger of
    x, 1-x (symmetry), which keeps every weight in the normal floating
    range for n up to about 1000 and the relative error near machine level.
    """
    if not 0.0 <= x <= 1.0:
        raise InputError("Bernstein weights need x in [0, 1]")
    if x == 0.0:
        w = np.zeros(n + 1)
        w[0] = 1.0
        return w
    if x == 1.0:
        w = np.zeros(n + 1)
        w[-1] = 1.0
        return w
    flip = x > 0.5
    p = 1.0 - x if flip else x
    ratio = p / (1.0 - p)
    k = np.arange(n)
    factors = ratio * (n - k) / (k + 1)
    w = np.empty(n + 1)
    w[0] = (1.0 - p) ** n
    w[1:] = w[0] * np.cumprod(factors)
    if flip:
        w = w[::-1].copy()
    return w


def bernstein_values(f, n: int, grid: np.ndarray) -> np.ndarray:
    """(B_n f)(x) on the grid: sum_k w_k(x) f(k/n)."""
    samples = np.asarray(f(np.arange(n + 1) / n), dtype=float)
    return np.array([float(bernstein_weights(n, float(x)) @ samples) for x in grid])


def korovkin_demo(n: int, grid_size: int, test_functions=()) -> dict:
    """Sup-grid deviations ||B_n f - f|| for the generating triple and extras.

    Extra functions are given by registry name (see TEST_FUNCTIONS) or as
    (name, callable) pairs.
    """
    if n < 1:
        raise InputError("degree must be at least 1")
    if grid_size < 2:
        raise InputError("grid needs at least two points")
    if n > 2000:
        raise InputError("degrees above 2000 exceed the weight recurrence's range")
    grid = np.linspace(0.0, 1.0, grid_size)
    table = {}
    fns = [("1", TEST_FUNCTIONS["1"]), ("x", TEST_FUNCTIONS["x"]), ("x^2", TEST_FUNCTIONS["x^2"])]
    for item in test_functions:
        if isinstance(item, str):
            if item in ("1", "x", "x^2"):
                continue
            if item not in TEST_FUNCTIONS:
                raise InputError(f"unknown test function {item!r}; known: {sorted(TEST_FUNCTIONS)}")
            fns.append((item, TEST_FUNCTIONS[item]))
        else:
            name, func = item
            fns.append((str(name), func))
    for name, f in fns:
        approx = bernstein_values(f, n, grid)
        exact = np.asarray(f(grid), dtype=float)
        table[name] = float(np.max(np.abs(approx - exact)))
    return table
