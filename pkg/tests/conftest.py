"""Shared test helpers: finite-difference gradient checking."""

from __future__ import annotations

import numpy as np


def fd_check(loss_fn, arr: np.ndarray, analytic: np.ndarray, rng: np.random.Generator,
             samples: int = 8, h: float = 1e-5, tol: float = 1e-4, name: str = "") -> float:
    """Central finite differences on sampled entries of one parameter array.

    loss_fn re-evaluates the scalar loss with the (mutated) array in place.
    Returns the worst relative error seen; asserts every error < tol.
    """
    assert arr.shape == analytic.shape, f"{name}: grad shape {analytic.shape} != {arr.shape}"
    count = min(samples, arr.size)
    flat = rng.choice(arr.size, size=count, replace=False)
    worst = 0.0
    for fi in flat:
        ix = np.unravel_index(fi, arr.shape)
        old = arr[ix]
        arr[ix] = old + h
        lp = loss_fn()
        arr[ix] = old - h
        lm = loss_fn()
        arr[ix] = old
        fd = (lp - lm) / (2.0 * h)
        an = analytic[ix]
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
        assert rel < tol, f"{name}[{ix}]: analytic {an!r} vs finite-diff {fd!r} (rel {rel:.3e})"
        worst = max(worst, rel)
    return worst


def projection_loss(rng: np.random.Generator, shape) -> tuple[np.ndarray, object]:
    """Fixed random projection R and loss(out) = sum(out * R).

    Checking d loss / d x against backward(R) exercises the full Jacobian,
    not just the all-ones direction.
    """
    R = rng.normal(size=shape)
    return R, lambda out: float(np.sum(out * R))
