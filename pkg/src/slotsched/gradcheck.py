"""Central finite-difference verification of analytic gradients.

The numeric side re-evaluates the model's loss function and never touches the
backprop code, so the two routes stay independent.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-5
DEFAULT_SAMPLES = 200


def relative_error(a: float, n: float, floor: float = 1e-6) -> float:
    """|a - n| / max(|a| + |n|, floor); exactly 0 when both sides are 0."""
    if a == 0.0 and n == 0.0:
        return 0.0
    return abs(a - n) / max(abs(a) + abs(n), floor)


def max_gradient_error(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    loss_fn: Callable[[], float],
    rng: np.random.Generator,
    n_samples: int = DEFAULT_SAMPLES,
    h: float = DEFAULT_STEP,
) -> float:
    """Max relative error between `grads` and central differences of `loss_fn`.

    Samples `n_samples` coordinates across all parameter arrays (all of them
    when n_samples exceeds the parameter count). `loss_fn` must read `params`
    live, so perturbing an entry changes its value.
    """
    names = sorted(params)
    sizes = np.array([params[k].size for k in names])
    total = int(sizes.sum())
    count = min(n_samples, total)
    flat_choice = rng.choice(total, size=count, replace=False)
    bounds = np.cumsum(sizes)
    worst = 0.0
    for flat in flat_choice:
        which = int(np.searchsorted(bounds, flat, side="right"))
        inner = int(flat - (bounds[which - 1] if which > 0 else 0))
        arr = params[names[which]]
        orig = arr.flat[inner]
        arr.flat[inner] = orig + h
        plus = loss_fn()
        arr.flat[inner] = orig - h
        minus = loss_fn()
        arr.flat[inner] = orig
        numeric = (plus - minus) / (2.0 * h)
        analytic = float(grads[names[which]].flat[inner])
        worst = max(worst, relative_error(analytic, numeric))
    return worst
