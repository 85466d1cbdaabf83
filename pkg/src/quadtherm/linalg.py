"""Matrix exponential by scaling-and-squaring with a shifted Taylor series."""

import numpy as np

TAYLOR_TOL = 1e-13
_MAX_TERMS = 200


def expm(M, tol=TAYLOR_TOL):
    """Return exp(M) for a square matrix.

    The diagonal is shifted by ``mu = -min(diag(M))`` before the series is
    summed, so for Metzler matrices (nonnegative off-diagonals) every series
    term is entrywise nonnegative and the result is nonnegative by
    construction.  The shifted matrix is scaled by ``2**-s`` until its
    infinity norm is at most 0.5, summed until the next term's norm falls
    below ``tol`` relative to the partial sum, then squared ``s`` times.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    mu = -float(np.min(np.diag(M)))
    P = M + mu * np.eye(n)

    norm = float(np.max(np.sum(np.abs(P), axis=1)))
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    P = P / (2.0**s)
    mu_scaled = mu / (2.0**s)

    total = np.eye(n)
    term = np.eye(n)
    for k in range(1, _MAX_TERMS):
        term = term @ P / k
        total = total + term
        if np.max(np.abs(term)) <= tol * max(1.0, np.max(np.abs(total))):
            break
    else:  # pragma: no cover - norm <= 0.5 converges in ~20 terms
        raise RuntimeError("Taylor series did not converge")

    E = total * np.exp(-mu_scaled)
    for _ in range(s):
        E = E @ E
    return E
