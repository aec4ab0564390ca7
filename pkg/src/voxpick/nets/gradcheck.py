"""Central finite-difference checking of analytic gradients.

Check a scalar loss L(arrays) at randomly chosen coordinates:
numeric = (L(x + h e_i) - L(x - h e_i)) / (2h), compared to the analytic
gradient with relative error |a - n| / max(|a|, |n|, floor). The floor keeps
coordinates with ~zero true gradient (for example dead relu paths) from
turning roundoff noise into a spurious ratio.
"""

from __future__ import annotations

import numpy as np


def numeric_grad_at(loss_fn, array, flat_index, h=1e-4):
    old = array.flat[flat_index]
    array.flat[flat_index] = old + h
    up = loss_fn()
    array.flat[flat_index] = old - h
    down = loss_fn()
    array.flat[flat_index] = old
    return (up - down) / (2.0 * h)


def check_gradients(loss_and_grads, arrays, rng, n_coords=64, h=1e-4, floor=1e-4):
    """Compare analytic and numeric gradients on random coordinates.

    loss_and_grads() -> (loss, {name: grad}) evaluated at the current arrays;
    arrays: {name: ndarray}, mutated in place during probing and restored.
    Returns the max relative error over the sampled coordinates.
    """
    _, grads = loss_and_grads()
    names = sorted(k for k in arrays if k in grads)
    sizes = np.array([arrays[k].size for k in names])
    total = int(sizes.sum())
    picks = rng.choice(total, size=min(n_coords, total), replace=False)
    bounds = np.cumsum(sizes)

    worst = 0.0
    for p in picks:
        which = int(np.searchsorted(bounds, p, side="right"))
        name = names[which]
        idx = int(p - (bounds[which - 1] if which > 0 else 0))
        analytic = float(grads[name].flat[idx])
        numeric = float(
            numeric_grad_at(lambda: loss_and_grads()[0], arrays[name], idx, h=h)
        )
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
        worst = max(worst, rel)
    return worst
