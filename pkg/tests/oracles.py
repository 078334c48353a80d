"""Independent reference solvers used to cross-check the analytic inner solve.

The dense oracle never touches the package's basis-vector machinery: it builds
the explicit five-column design matrix, eliminates the two coupling constraint
rows through an SVD nullspace, and solves the reduced problem with a QR-based
least-squares call.
"""

from __future__ import annotations

import math

import numpy as np

from ifreq import FreqPair, SampledCycle


def dense_constrained_lstsq(
    freqs: FreqPair, cycle: SampledCycle
) -> tuple[np.ndarray, float]:
    """Optimal (a1, a2, b1, b2, pbar) and objective by explicit constrained least squares."""
    t1, t2, f = cycle.t1, cycle.t2, cycle.samples
    n, m = cycle.n, cycle.m
    design = np.zeros((n + m, 5))
    design[:n, 0] = np.cos(freqs.omega1 * t1)
    design[n:, 1] = np.cos(freqs.omega2 * t2)
    design[:n, 2] = np.sin(freqs.omega1 * t1)
    design[n:, 3] = np.sin(freqs.omega2 * t2)
    design[:, 4] = 1.0

    dT = cycle.T - cycle.T0
    constraints = np.array(
        [
            [math.cos(freqs.omega1 * cycle.T0), -1.0, math.sin(freqs.omega1 * cycle.T0), 0.0, 0.0],
            [1.0, -math.cos(freqs.omega2 * dT), 0.0, -math.sin(freqs.omega2 * dT), 0.0],
        ]
    )
    _, singular, vt = np.linalg.svd(constraints)
    rank = int(np.sum(singular > 1e-12 * singular[0]))
    nullspace = vt[rank:].T  # orthonormal basis of the feasible coefficient space

    reduced, *_ = np.linalg.lstsq(design @ nullspace, f, rcond=None)
    theta = nullspace @ reduced
    residual = design @ theta - f
    return theta, float(residual @ residual)
