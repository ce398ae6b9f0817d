"""Pure-Python Monte Carlo kernels.

Reference implementation of the trial loops; the compiled twin in
``fastkern.pyx`` must reproduce these bit for bit.  Trial t draws from its
own splitmix64 stream seeded with derive_seed(seed, t), so trials are
order-independent.  Draw order within a trial is fixed and documented below.
"""

from __future__ import annotations

import numpy as np

from ..rng import GOLDEN, MASK64, derive_seed, mix64

BACKEND_NAME = "python"

_INV_2_53 = 1.1102230246251565e-16  # 2**-53


def lg_pair_trials(p_first0: float, p_cond00: float, p_cond10: float,
                   n_trials: int, seed: int) -> int:
    """Sum over trials of s(x)*s(y) for a two-measurement experiment.

    Per trial (in order): u decides the first outcome x (0 iff u < p_first0),
    v decides the second outcome y (0 iff v < p_cond<x>0).  Outcomes map to
    signs s = 2*outcome - 1.
    """
    total = 0
    for t in range(n_trials):
        state = derive_seed(seed, t)
        state = (state + GOLDEN) & MASK64
        u = (mix64(state) >> 11) * _INV_2_53
        state = (state + GOLDEN) & MASK64
        v = (mix64(state) >> 11) * _INV_2_53
        x = 0 if u < p_first0 else 1
        pc0 = p_cond00 if x == 0 else p_cond10
        y = 0 if v < pc0 else 1
        total += (2 * x - 1) * (2 * y - 1)
    return total


def chsh_trials(joint, n_trials: int, seed: int,
                out_sa, out_a, out_sb, out_b) -> None:
    """Fill per-trial setting/outcome logs for a two-party experiment.

    ``joint`` is a (4, 4) float array: row 2*sa+sb holds the joint outcome
    probabilities (p00, p01, p10, p11) for that setting pair.  Per trial (in
    order): one coin for Alice's setting, one for Bob's, then u samples
    Alice's outcome from her marginal and v samples Bob's outcome from the
    conditional given Alice's.
    """
    joint = np.asarray(joint, dtype=float)
    if joint.shape != (4, 4):
        raise ValueError("joint must have shape (4, 4)")
    for out in (out_sa, out_a, out_sb, out_b):
        if len(out) < n_trials:
            raise ValueError("output arrays shorter than n_trials")
    for t in range(n_trials):
        state = derive_seed(seed, t)
        state = (state + GOLDEN) & MASK64
        sa = mix64(state) >> 63
        state = (state + GOLDEN) & MASK64
        sb = mix64(state) >> 63
        state = (state + GOLDEN) & MASK64
        u = (mix64(state) >> 11) * _INV_2_53
        state = (state + GOLDEN) & MASK64
        v = (mix64(state) >> 11) * _INV_2_53
        row = joint[2 * sa + sb]
        pa0 = row[0] + row[1]
        if u < pa0:
            a = 0
            pb0 = row[0] / pa0
        else:
            a = 1
            pb0 = row[2] / (1.0 - pa0)
        b = 0 if v < pb0 else 1
        out_sa[t] = sa
        out_a[t] = a
        out_sb[t] = sb
        out_b[t] = b
