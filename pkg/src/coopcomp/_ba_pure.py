"""Pure-python (numpy) backend for the alternating-minimization kernel.

Minimizes sum_i w_i * I(V;L|K_i) over a support-masked channel p(v|l) by
the classic rate-distortion fixed-point iteration: alternate the exact
update of the induced conditionals r_i(v|k_i) with the multiplicative
(exponential-family) update of the channel.  Each term is jointly convex
in (channel, reference), so the iteration decreases monotonically to the
global minimum over the masked support.
"""
from __future__ import annotations

import numpy as np

_LOG2 = np.log(2.0)


def _references(q, p_lk_list):
    """Induced r_i(v|k) = sum_l p(l|k) q(v|l) for every conditioning table."""
    refs = []
    for p_lk in p_lk_list:
        pk = p_lk.sum(axis=0)
        joint_vk = q @ p_lk  # (nV, nK)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(pk > 0.0, joint_vk / np.where(pk > 0.0, pk, 1.0), 0.0)
        refs.append(r)
    return refs


def _objective_bits(q, p_lk_list, weights, refs):
    total = 0.0
    for p_lk, w, r in zip(p_lk_list, weights, refs):
        if w == 0.0:
            continue
        # sum_{l,k} p(l,k) sum_v q(v|l) log2( q(v|l) / r(v|k) )
        with np.errstate(divide="ignore", invalid="ignore"):
            logq = np.where(q > 0.0, np.log(q), 0.0)
            logr = np.where(r > 0.0, np.log(r), 0.0)
        # q>0 and p(l,k)>0 imply r(v|k) >= q(v|l) p(l|k) > 0
        term_l = (q * logq).sum(axis=0) @ p_lk.sum(axis=1)
        cross = ((q @ p_lk) * logr).sum()
        total += w * (term_l - cross)
    return float(total / _LOG2)


def solve_masked_mi(mask, p_lk_list, weights, q0, tol=1e-9, max_iter=10_000):
    """Run the masked alternating-minimization loop to convergence.

    Parameters
    ----------
    mask : (nV, nL) boolean support of the channel (columns index L)
    p_lk_list : list of (nL, nK_i) joint tables, one per objective term
    weights : nonnegative weight per term
    q0 : (nV, nL) initial channel, columns normalized on the mask
    tol : stop when the objective improves by less than this many bits
    max_iter : iteration cap

    Returns (value_bits, channel, iterations).
    """
    mask = np.asarray(mask, dtype=bool)
    p_lk_list = [np.asarray(p, dtype=float) for p in p_lk_list]
    weights = [float(w) for w in weights]
    wsum = sum(weights)
    if wsum <= 0.0:
        raise ValueError("weights must include a positive entry")
    q = np.where(mask, np.asarray(q0, dtype=float), 0.0)
    col = q.sum(axis=0)
    if np.any(col <= 0.0):
        raise ValueError("initial channel has an empty masked column")
    q = q / col

    p_l = p_lk_list[0].sum(axis=1)
    # conditioning weights p(k|l) per term, zero rows for p(l) = 0
    cond = []
    for p_lk in p_lk_list:
        pl = p_lk.sum(axis=1, keepdims=True)
        cond.append(np.where(pl > 0.0, p_lk / np.where(pl > 0.0, pl, 1.0), 0.0))

    value = np.inf
    iters = 0
    for iters in range(1, max_iter + 1):
        refs = _references(q, p_lk_list)
        score = np.zeros_like(q)
        blocked = np.zeros_like(q, dtype=bool)
        for w, c, r in zip(weights, cond, refs):
            if w == 0.0:
                continue
            logr = np.where(r > 0.0, np.log(np.where(r > 0.0, r, 1.0)), 0.0)
            score += (w / wsum) * (logr @ c.T)  # (nV, nL)
            # a zero reference with positive conditioning weight forces q -> 0
            blocked |= (r <= 0.0).astype(float) @ (c > 0.0).T.astype(float) > 0.0
        score = np.where(mask & ~blocked, score, -np.inf)
        score -= score.max(axis=0, keepdims=True)
        q_new = np.exp(score, where=np.isfinite(score), out=np.zeros_like(score))
        norm = q_new.sum(axis=0)
        dead = norm <= 0.0
        if np.any(dead):  # only possible for p(l) = 0 columns; keep previous
            q_new[:, dead] = q[:, dead]
            norm[dead] = 1.0
        q_new = q_new / norm
        # zero-probability l columns carry no objective weight; pin them to
        # the uniform masked row for deterministic output
        zero_l = p_l <= 0.0
        if np.any(zero_l):
            u = mask[:, zero_l].astype(float)
            q_new[:, zero_l] = u / u.sum(axis=0)
        q = q_new
        refs = _references(q, p_lk_list)
        new_value = _objective_bits(q, p_lk_list, weights, refs)
        if value - new_value < tol and new_value <= value + 1e-15:
            value = new_value
            break
        value = new_value
    return value, q, iters
