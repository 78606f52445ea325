"""Compiled per-trajectory stepping kernel.

One trajectory advances its M non-normalized component wave functions with
one shared uniform random number per step (or one per component in the
independent mode; the caller encodes that choice in the eps array).  The
arithmetic mirrors the pure-numpy step operations in `engine` term by term
and in the same accumulation order, so the two paths agree bitwise; the
test suite relies on that.

Jump terms arrive sorted by (target, source, label); `tgt_start[m]` /
`tgt_start[m+1]` bracket the slots targeting component m.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_STEP_TOO_LARGE = 1
STATUS_NEGATIVE_NON_JUMP = 2
STATUS_ZERO_NORM = 3

# Observable kinds in the obs_kind array.
OBS_MATRIX = 0
OBS_WEIGHT = 1


@njit(cache=True)
def _record(psi, obs_kind, obs_ref, obs_mats, out, row):
    n_comp, dim = psi.shape
    max_resid = 0.0
    for o in range(obs_kind.size):
        if obs_kind[o] == OBS_WEIGHT:
            c = obs_ref[o]
            acc = 0.0
            for i in range(dim):
                acc += (psi[c, i].conjugate() * psi[c, i]).real
            out[row, o] = acc
        else:
            mat = obs_mats[obs_ref[o]]
            total = 0j
            for m in range(n_comp):
                sub = 0j
                for i in range(dim):
                    av = 0j
                    for j in range(dim):
                        av += mat[i, j] * psi[m, j]
                    sub += psi[m, i].conjugate() * av
                total += sub
            out[row, o] = total.real
            resid = abs(total.imag)
            if resid > max_resid:
                max_resid = resid
    return max_resid


@njit(cache=True)
def run_trajectory_kernel(
    psi, w0, g0, r_ops, q_ops, jt_source, tgt_start,
    dt, n_steps, eps, stride, obs_kind, obs_ref, obs_mats, out,
):
    n_comp, dim = psi.shape
    n_terms = r_ops.shape[0]
    q = np.zeros(n_terms)
    q0 = np.zeros(n_comp)
    p = np.zeros(n_comp)
    psi_new = np.zeros_like(psi)

    max_resid = _record(psi, obs_kind, obs_ref, obs_mats, out, 0)
    row = 0
    for step in range(n_steps):
        # Jump weights q and non-jump weights q0 from the pre-step states.
        for k in range(n_terms):
            s = jt_source[k]
            total = 0j
            for i in range(dim):
                av = 0j
                for j in range(dim):
                    av += q_ops[k, i, j] * psi[s, j]
                total += psi[s, i].conjugate() * av
            q[k] = total.real * dt
            if q[k] > 0.5:
                return STATUS_STEP_TOO_LARGE, step, max_resid
        for m in range(n_comp):
            total = 0j
            for i in range(dim):
                av = 0j
                for j in range(dim):
                    av += g0[m, i, j] * psi[m, j]
                total += psi[m, i].conjugate() * av
            q0[m] = total.real
            if q0[m] < 0.0:
                return STATUS_NEGATIVE_NON_JUMP, step, max_resid
        for m in range(n_comp):
            total = q0[m]
            for k in range(tgt_start[m], tgt_start[m + 1]):
                total += q[k]
            p[m] = total

        # Every component resolves its own branch from the same random number.
        for m in range(n_comp):
            if p[m] <= 0.0:
                for i in range(dim):
                    psi_new[m, i] = 0j
                continue
            e = eps[step, m]
            chosen = -1
            non_jump = False
            cum = 0.0
            for k in range(tgt_start[m], tgt_start[m + 1]):
                dp = q[k] / p[m]
                cum += dp
                if e < cum and dp > 0.0:
                    chosen = k
                    break
            if chosen < 0:
                dp0 = q0[m] / p[m]
                cum += dp0
                if e < cum and dp0 > 0.0:
                    non_jump = True
                else:
                    # eps landed beyond the accumulated partition (floating
                    # point residue); take the last positive branch.
                    if dp0 > 0.0:
                        non_jump = True
                    else:
                        for k in range(tgt_start[m + 1] - 1, tgt_start[m] - 1, -1):
                            if q[k] > 0.0:
                                chosen = k
                                break
                        if chosen < 0:
                            return STATUS_ZERO_NORM, step, max_resid
            nrm2 = 0.0
            if non_jump:
                for i in range(dim):
                    av = 0j
                    for j in range(dim):
                        av += w0[m, i, j] * psi[m, j]
                    psi_new[m, i] = av
                    nrm2 += (av.conjugate() * av).real
            else:
                s = jt_source[chosen]
                for i in range(dim):
                    av = 0j
                    for j in range(dim):
                        av += r_ops[chosen, i, j] * psi[s, j]
                    psi_new[m, i] = av
                    nrm2 += (av.conjugate() * av).real
            if nrm2 <= 0.0:
                return STATUS_ZERO_NORM, step, max_resid
            scale = np.sqrt(p[m]) / np.sqrt(nrm2)
            for i in range(dim):
                psi_new[m, i] = psi_new[m, i] * scale

        for m in range(n_comp):
            for i in range(dim):
                psi[m, i] = psi_new[m, i]

        if (step + 1) % stride == 0:
            row += 1
            resid = _record(psi, obs_kind, obs_ref, obs_mats, out, row)
            if resid > max_resid:
                max_resid = resid
    return STATUS_OK, -1, max_resid
