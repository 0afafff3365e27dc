"""JIT-compiled inner loops for the Godunov Hamiltonian.

The per-node work is a triple nested optimization (two sampled ext intervals
and a direction minimum), far too hot for numpy broadcasting at production
grid sizes; numba compiles it to native loops. Exact semantics, shared with
the scalar operations in `hamiltonian`:

  ext over u in I(ux+, ux-) of ext over v in I(uy+, uy-) of min_d (P[d]*u + Q[d]*v)

with ext = sampled min when the first interval argument <= the second, else
sampled max; samples are n_ext equally spaced points including both endpoints,
plus the point 0 on a max-ext whose interval strictly straddles it.

Exact shortcuts (min/max algebra only, no value changes beyond fp ties):
the direction minimum commutes with a sampled min, whose concave slices attain
it at interval endpoints, so pure-min axes collapse to endpoint evaluations.
"""

import numba
import numpy as np

_INF = np.inf


@numba.njit(cache=True)
def _godunov_node(uxm, uxp, uym, uyp, P, Q, n_ext, scratch):
    ax = uxp
    bx = uxm
    ay = uyp
    by = uym
    x_min = ax <= bx
    y_min = ay <= by
    nd = P.shape[0]
    if y_min:
        # v-min collapses to the interval endpoints per direction.
        for d in range(nd):
            qa = Q[d] * ay
            qb = Q[d] * by
            scratch[d] = qa if qa < qb else qb
        if x_min:
            best = _INF
            for d in range(nd):
                pa = P[d] * ax
                pb = P[d] * bx
                mu = pa if pa < pb else pb
                v = mu + scratch[d]
                if v < best:
                    best = v
            return best
        # max over u-samples of the collapsed direction minimum.
        step_u = (bx - ax) / (n_ext - 1)
        nu = n_ext + 1 if ax * bx < 0.0 else n_ext
        best_out = -_INF
        for k in range(nu):
            if k == n_ext:
                us = 0.0
            elif k == n_ext - 1:
                us = bx
            else:
                us = ax + k * step_u
            best_d = _INF
            for d in range(nd):
                v = P[d] * us + scratch[d]
                if v < best_d:
                    best_d = v
            if best_d > best_out:
                best_out = best_d
        return best_out
    # Sampled max over v; no endpoint shortcut on either axis.
    step_u = (bx - ax) / (n_ext - 1)
    step_v = (by - ay) / (n_ext - 1)
    nv = n_ext + 1 if ay * by < 0.0 else n_ext
    if x_min:
        nu = n_ext
    else:
        nu = n_ext + 1 if ax * bx < 0.0 else n_ext
    best_out = _INF if x_min else -_INF
    for k in range(nu):
        if k == n_ext:
            us = 0.0
        elif k == n_ext - 1:
            us = bx
        else:
            us = ax + k * step_u
        for d in range(nd):
            scratch[d] = P[d] * us
        best_in = -_INF
        for m in range(nv):
            if m == n_ext:
                vs = 0.0
            elif m == n_ext - 1:
                vs = by
            else:
                vs = ay + m * step_v
            best_d = _INF
            for d in range(nd):
                v = scratch[d] + Q[d] * vs
                if v < best_d:
                    best_d = v
            if best_d > best_in:
                best_in = best_d
        if x_min:
            if best_in < best_out:
                best_out = best_in
        else:
            if best_in > best_out:
                best_out = best_in
    return best_out


@numba.njit(cache=True)
def godunov_hamiltonian(uxm, uxp, uym, uyp, P, Q, n_ext, out):
    """Godunov values for a block of nodes.

    uxm/uxp/uym/uyp: one-sided differences, shape (ni, nj).
    P, Q: direction tables, shape (ni, nj, n_directions).
    out: preallocated (ni, nj) result array.
    """
    ni, nj = uxm.shape
    nd = P.shape[2]
    scratch = np.empty(nd)
    for i in range(ni):
        for j in range(nj):
            out[i, j] = _godunov_node(uxm[i, j], uxp[i, j], uym[i, j], uyp[i, j],
                                      P[i, j], Q[i, j], n_ext, scratch)
    return out
