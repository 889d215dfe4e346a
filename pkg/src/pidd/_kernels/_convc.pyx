"""Compiled convolution backend; mirrors convnp exactly.

The 3x3 case, the package default, keeps all nine taps in registers and
makes a single fused pass per channel pair; other sizes fall back to a
tap-at-a-time loop whose inner pass runs contiguously along x.
"""

import numpy as np

BACKEND = "compiled"


cdef void _fwd3(double[:, :, ::1] padded, double[:, :, :, ::1] w,
                double[::1] b, double[:, :, ::1] out,
                Py_ssize_t out_ch, Py_ssize_t in_ch,
                Py_ssize_t ny, Py_ssize_t nx) nogil:
    cdef Py_ssize_t o, c, y, i
    cdef double w00, w01, w02, w10, w11, w12, w20, w21, w22, bval
    for o in range(out_ch):
        bval = b[o]
        for y in range(ny):
            for i in range(nx):
                out[o, y, i] = bval
        for c in range(in_ch):
            w00 = w[o, c, 0, 0]; w01 = w[o, c, 0, 1]; w02 = w[o, c, 0, 2]
            w10 = w[o, c, 1, 0]; w11 = w[o, c, 1, 1]; w12 = w[o, c, 1, 2]
            w20 = w[o, c, 2, 0]; w21 = w[o, c, 2, 1]; w22 = w[o, c, 2, 2]
            for y in range(ny):
                for i in range(nx):
                    out[o, y, i] += (
                        w00 * padded[c, y, i]
                        + w01 * padded[c, y, i + 1]
                        + w02 * padded[c, y, i + 2]
                        + w10 * padded[c, y + 1, i]
                        + w11 * padded[c, y + 1, i + 1]
                        + w12 * padded[c, y + 1, i + 2]
                        + w20 * padded[c, y + 2, i]
                        + w21 * padded[c, y + 2, i + 1]
                        + w22 * padded[c, y + 2, i + 2]
                    )


cdef void _fwd_any(double[:, :, ::1] padded, double[:, :, :, ::1] w,
                   double[::1] b, double[:, :, ::1] out,
                   Py_ssize_t out_ch, Py_ssize_t in_ch, Py_ssize_t k,
                   Py_ssize_t ny, Py_ssize_t nx) nogil:
    cdef Py_ssize_t o, c, u, v, y, i
    cdef double wval, bval
    for o in range(out_ch):
        bval = b[o]
        for y in range(ny):
            for i in range(nx):
                out[o, y, i] = bval
        for c in range(in_ch):
            for u in range(k):
                for v in range(k):
                    wval = w[o, c, u, v]
                    for y in range(ny):
                        for i in range(nx):
                            out[o, y, i] += wval * padded[c, y + u, i + v]


def conv2d_same(x, weights, bias):
    """Zero-padded same-size 2-D correlation, float64.

    x is [in_ch, ny, nx], weights [out_ch, in_ch, k, k], bias [out_ch];
    returns [out_ch, ny, nx].
    """
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(bias, dtype=np.float64)
    cdef Py_ssize_t out_ch = w.shape[0], in_ch = w.shape[1], k = w.shape[2]
    x_arr = np.asarray(x, dtype=np.float64)
    cdef Py_ssize_t ny = x_arr.shape[1], nx = x_arr.shape[2]
    cdef Py_ssize_t pad = k // 2
    padded_arr = np.zeros((in_ch, ny + 2 * pad, nx + 2 * pad))
    padded_arr[:, pad:pad + ny, pad:pad + nx] = x_arr
    cdef double[:, :, ::1] padded = padded_arr
    out_arr = np.empty((out_ch, ny, nx))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        if k == 3:
            _fwd3(padded, w, b, out, out_ch, in_ch, ny, nx)
        else:
            _fwd_any(padded, w, b, out, out_ch, in_ch, k, ny, nx)
    return out_arr


cdef void _gw3(double[:, :, ::1] padded, double[:, :, ::1] gout,
               double[:, :, :, ::1] grads,
               Py_ssize_t out_ch, Py_ssize_t in_ch,
               Py_ssize_t ny, Py_ssize_t nx) nogil:
    cdef Py_ssize_t o, c, y, i
    cdef double a00, a01, a02, a10, a11, a12, a20, a21, a22, g
    for o in range(out_ch):
        for c in range(in_ch):
            a00 = a01 = a02 = a10 = a11 = a12 = a20 = a21 = a22 = 0.0
            for y in range(ny):
                for i in range(nx):
                    g = gout[o, y, i]
                    a00 += g * padded[c, y, i]
                    a01 += g * padded[c, y, i + 1]
                    a02 += g * padded[c, y, i + 2]
                    a10 += g * padded[c, y + 1, i]
                    a11 += g * padded[c, y + 1, i + 1]
                    a12 += g * padded[c, y + 1, i + 2]
                    a20 += g * padded[c, y + 2, i]
                    a21 += g * padded[c, y + 2, i + 1]
                    a22 += g * padded[c, y + 2, i + 2]
            grads[o, c, 0, 0] = a00; grads[o, c, 0, 1] = a01
            grads[o, c, 0, 2] = a02; grads[o, c, 1, 0] = a10
            grads[o, c, 1, 1] = a11; grads[o, c, 1, 2] = a12
            grads[o, c, 2, 0] = a20; grads[o, c, 2, 1] = a21
            grads[o, c, 2, 2] = a22


cdef void _gw_any(double[:, :, ::1] padded, double[:, :, ::1] gout,
                  double[:, :, :, ::1] grads,
                  Py_ssize_t out_ch, Py_ssize_t in_ch, Py_ssize_t k,
                  Py_ssize_t ny, Py_ssize_t nx) nogil:
    cdef Py_ssize_t o, c, u, v, y, i
    cdef double acc
    for o in range(out_ch):
        for c in range(in_ch):
            for u in range(k):
                for v in range(k):
                    acc = 0.0
                    for y in range(ny):
                        for i in range(nx):
                            acc += gout[o, y, i] * padded[c, y + u, i + v]
                    grads[o, c, u, v] = acc


def conv2d_grad_weights(x, grad_out, ksize):
    """Weight gradient of conv2d_same given the output gradient."""
    cdef double[:, :, ::1] gout = np.ascontiguousarray(grad_out, dtype=np.float64)
    cdef Py_ssize_t k = ksize
    cdef Py_ssize_t out_ch = gout.shape[0]
    cdef Py_ssize_t ny = gout.shape[1], nx = gout.shape[2]
    cdef Py_ssize_t pad = k // 2
    x_arr = np.asarray(x, dtype=np.float64)
    cdef Py_ssize_t in_ch = x_arr.shape[0]
    padded_arr = np.zeros((in_ch, ny + 2 * pad, nx + 2 * pad))
    padded_arr[:, pad:pad + ny, pad:pad + nx] = x_arr
    cdef double[:, :, ::1] padded = padded_arr
    grads_arr = np.zeros((out_ch, in_ch, k, k))
    cdef double[:, :, :, ::1] grads = grads_arr
    with nogil:
        if k == 3:
            _gw3(padded, gout, grads, out_ch, in_ch, ny, nx)
        else:
            _gw_any(padded, gout, grads, out_ch, in_ch, k, ny, nx)
    return grads_arr
