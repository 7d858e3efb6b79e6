# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled decision-feedback streaming kernel.

Per received sample: assemble the input drive by gathering weight rows for
the nonzero ternary lanes and the one-hot feedback, simulate the two-layer
network for n_steps from a zeroed state, take the argmax readout, shift the
feedback register. Ternary sparsity makes the drive a row-gather instead of
a dense GEMV; the recurrent term only touches rows of neurons that fired.
"""

import numpy as np

cimport numpy as cnp


def run_stream(double[:, ::1] enc, double[:, ::1] w_in, double[:, ::1] w_rec,
               double[:, ::1] w_out, hid_scalars, out_scalars,
               Py_ssize_t n_ff, Py_ssize_t m_fb, Py_ssize_t m_bits,
               Py_ssize_t n_steps, bint reset_subtract, bint impulse,
               bint teacher, true_idx):
    """Mirror of spikeq.backends.numpy_stream.run_stream (same contract)."""
    cdef double alpha = hid_scalars[0]
    cdef double beta = hid_scalars[1]
    cdef double ci = hid_scalars[2]
    cdef double v_th = hid_scalars[3]
    cdef double v_rest = hid_scalars[4]
    cdef double alpha_o = out_scalars[0]
    cdef double beta_o = out_scalars[1]
    cdef double ci_o = out_scalars[2]

    cdef Py_ssize_t two_m = 2 * m_bits
    cdef Py_ssize_t ff_width = two_m * n_ff
    cdef Py_ssize_t n_hidden = w_in.shape[1]
    cdef Py_ssize_t n_out = w_out.shape[1]
    cdef Py_ssize_t k_total = enc.shape[0] - (n_ff - 1)
    cdef Py_ssize_t alphabet = 0
    if m_fb > 0:
        alphabet = (w_in.shape[0] - ff_width) // m_fb
        if ff_width + alphabet * m_fb != w_in.shape[0]:
            raise ValueError("w_in width inconsistent with architecture")
    if enc.shape[1] != two_m:
        raise ValueError("encoded width != 2 * m_bits")
    if w_rec.shape[0] != n_hidden or w_rec.shape[1] != n_hidden:
        raise ValueError("w_rec must be (n_hidden, n_hidden)")
    if w_out.shape[0] != n_hidden:
        raise ValueError("w_out must be (n_hidden, n_out)")
    if k_total < 0:
        raise ValueError("burst shorter than the window prehistory")

    cdef cnp.int32_t[::1] truth
    if teacher:
        if true_idx is None:
            raise ValueError("teacher mode requires true indices")
        truth = np.ascontiguousarray(true_idx, dtype=np.int32)
        if truth.shape[0] < k_total - (n_ff - 1):
            raise ValueError("true_idx shorter than the burst")
    else:
        truth = np.zeros(1, dtype=np.int32)

    out_arr = np.empty(k_total, dtype=np.int32)
    cdef cnp.int32_t[::1] out = out_arr
    cdef double[::1] d = np.zeros(n_hidden)
    cdef double[::1] v = np.zeros(n_hidden)
    cdef double[::1] cur = np.zeros(n_hidden)
    cdef double[::1] vo = np.zeros(n_out)
    cdef double[::1] io = np.zeros(n_out)
    cdef Py_ssize_t[::1] fired = np.zeros(n_hidden, dtype=np.intp)
    cdef Py_ssize_t[::1] fb = np.zeros(max(m_fb, 1), dtype=np.intp)

    cdef Py_ssize_t k, t, c, j, h, o, step, nf, f, row, base, kp, dec
    cdef double e, a, best
    cdef bint spiked

    for k in range(k_total):
        # Input drive: ternary window gather plus one-hot feedback rows.
        for h in range(n_hidden):
            d[h] = 0.0
        for t in range(n_ff):
            row = k + n_ff - 1 - t
            base = t * two_m
            for c in range(two_m):
                e = enc[row, c]
                if e > 0.0:
                    for h in range(n_hidden):
                        d[h] += w_in[base + c, h]
                elif e < 0.0:
                    for h in range(n_hidden):
                        d[h] -= w_in[base + c, h]
        for j in range(m_fb):
            row = ff_width + j * alphabet + fb[j]
            for h in range(n_hidden):
                d[h] += w_in[row, h]

        # n_steps of the two-layer simulation from zero state.
        for h in range(n_hidden):
            v[h] = 0.0
            cur[h] = 0.0
        for o in range(n_out):
            vo[o] = 0.0
            io[o] = 0.0
        for step in range(n_steps):
            nf = 0
            for h in range(n_hidden):
                if v[h] > v_th:
                    fired[nf] = h
                    nf += 1
            for o in range(n_out):
                vo[o] = alpha_o * vo[o] + ci_o * io[o]
                io[o] = beta_o * io[o]
            for f in range(nf):
                h = fired[f]
                for o in range(n_out):
                    io[o] += w_out[h, o]
            for h in range(n_hidden):
                spiked = v[h] > v_th
                a = alpha * v[h] + ci * cur[h]
                if spiked:
                    v[h] = a - v_th if reset_subtract else v_rest
                else:
                    v[h] = a
            if impulse and step > 0:
                for h in range(n_hidden):
                    cur[h] = beta * cur[h]
            else:
                for h in range(n_hidden):
                    cur[h] = beta * cur[h] + d[h]
            for f in range(nf):
                j = fired[f]
                for h in range(n_hidden):
                    cur[h] += w_rec[j, h]

        best = vo[0]
        dec = 0
        for o in range(1, n_out):
            if vo[o] > best:
                best = vo[o]
                dec = o
        out[k] = <cnp.int32_t> dec

        if m_fb > 0:
            kp = k - (n_ff - 1)
            for j in range(m_fb - 1, 0, -1):
                fb[j] = fb[j - 1]
            if kp >= 0:
                fb[0] = truth[kp] if teacher else dec
            else:
                fb[0] = 0
    return out_arr
