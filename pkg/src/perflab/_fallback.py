"""Pure numpy implementations of the compiled routines in ``_speedups``."""
import numpy as np

_CHUNK = 4096


def dcd_pass(Q, alpha, grad, upper, order):
    changed = 0
    for i in order:
        g = grad[i]
        a = alpha[i]
        if a <= 0.0:
            pg = min(g, 0.0)
        elif a >= upper:
            pg = max(g, 0.0)
        else:
            pg = g
        if pg == 0.0:
            continue
        new = min(max(a - g / Q[i, i], 0.0), upper)
        delta = new - a
        if delta == 0.0:
            continue
        alpha[i] = new
        changed += 1
        grad += delta * Q[i]
    return changed


def _sq_dist(A, B):
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _rbf_block(A, B, scale, squared):
    s = _sq_dist(A, B)
    if not squared:
        s = np.sqrt(s)
    return np.exp(-s * scale)


def gram_rbf(A, B, sigma, squared):
    scale = 1.0 / (2.0 * sigma * sigma)
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _CHUNK * 64 // max(1, B.shape[0]))
    for start in range(0, A.shape[0], step):
        out[start:start + step] = _rbf_block(A[start:start + step], B, scale, squared)
    return out


def predict_rbf(S, beta, X, sigma, squared, cutoff):
    scale = 1.0 / (2.0 * sigma * sigma)
    limit = cutoff / scale
    if not squared:
        limit = limit * limit
    out = np.empty(X.shape[0])
    step = max(1, _CHUNK * 64 // max(1, S.shape[0]))
    for start in range(0, X.shape[0], step):
        s = _sq_dist(X[start:start + step], S)
        far = s > limit
        if not squared:
            s = np.sqrt(s)
        k = np.exp(-s * scale)
        k[far] = 0.0
        out[start:start + step] = k @ beta
    return out
