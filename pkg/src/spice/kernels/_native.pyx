# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pixel kernels.

Mirrors spice.kernels.fallback operation for operation, including the float
evaluation order, so both paths produce bit-identical bytes (enforced by
tests/test_kernel_parity.py).
"""

from libc.math cimport floor, ceil, fabs

import numpy as np

ctypedef unsigned long long u64
ctypedef long long i64

cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef u64 MIX1 = 0xBF58476D1CE4E5B9UL
cdef u64 MIX2 = 0x94D049BB133111EBUL

cdef i64 TAN22_NUM = 5741
cdef i64 TAN22_DEN = 13860


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def blur_sep_f64(const double[:, ::1] src, const i64[::1] taps):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t k = taps.shape[0], radius = k // 2
    cdef double total = <double> _tap_total(taps)
    cdef double[:, ::1] mid = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = np.empty((h, w), dtype=np.float64)
    cdef Py_ssize_t y, x, i
    cdef double acc
    with nogil:
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for i in range(k):
                    acc += (<double> taps[i]) * src[y, _clamp(x - radius + i, 0, w - 1)]
                mid[y, x] = acc / total
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for i in range(k):
                    acc += (<double> taps[i]) * mid[_clamp(y - radius + i, 0, h - 1), x]
                out[y, x] = acc / total
    return np.asarray(out)


cdef i64 _tap_total(const i64[::1] taps):
    cdef i64 s = 0
    cdef Py_ssize_t i
    for i in range(taps.shape[0]):
        s += taps[i]
    return s


def blur_sep_i64(const i64[:, ::1] src, const i64[::1] taps):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef Py_ssize_t k = taps.shape[0], radius = k // 2
    cdef i64[:, ::1] mid = np.empty((h, w), dtype=np.int64)
    cdef i64[:, ::1] out = np.empty((h, w), dtype=np.int64)
    cdef Py_ssize_t y, x, i
    cdef i64 acc
    with nogil:
        for y in range(h):
            for x in range(w):
                acc = 0
                for i in range(k):
                    acc += taps[i] * src[y, _clamp(x - radius + i, 0, w - 1)]
                mid[y, x] = acc
        for y in range(h):
            for x in range(w):
                acc = 0
                for i in range(k):
                    acc += taps[i] * mid[_clamp(y - radius + i, 0, h - 1), x]
                out[y, x] = acc
    return np.asarray(out)


def sobel_i64(const i64[:, ::1] sm):
    cdef Py_ssize_t h = sm.shape[0], w = sm.shape[1]
    cdef i64[:, ::1] gx = np.empty((h, w), dtype=np.int64)
    cdef i64[:, ::1] gy = np.empty((h, w), dtype=np.int64)
    cdef Py_ssize_t y, x, ym, yp, xm, xp
    with nogil:
        for y in range(h):
            ym = _clamp(y - 1, 0, h - 1)
            yp = _clamp(y + 1, 0, h - 1)
            for x in range(w):
                xm = _clamp(x - 1, 0, w - 1)
                xp = _clamp(x + 1, 0, w - 1)
                gx[y, x] = (sm[ym, xp] + 2 * sm[y, xp] + sm[yp, xp]) - \
                           (sm[ym, xm] + 2 * sm[y, xm] + sm[yp, xm])
                gy[y, x] = (sm[yp, xm] + 2 * sm[yp, x] + sm[yp, xp]) - \
                           (sm[ym, xm] + 2 * sm[ym, x] + sm[ym, xp])
    return np.asarray(gx), np.asarray(gy)


def gradient_mag2(const i64[:, ::1] gx, const i64[:, ::1] gy):
    cdef Py_ssize_t h = gx.shape[0], w = gx.shape[1]
    cdef double[:, ::1] out = np.empty((h, w), dtype=np.float64)
    cdef Py_ssize_t y, x
    cdef double fx, fy
    with nogil:
        for y in range(h):
            for x in range(w):
                fx = <double> gx[y, x]
                fy = <double> gy[y, x]
                out[y, x] = fx * fx + fy * fy
    return np.asarray(out)


def nms_keep(const i64[:, ::1] gx, const i64[:, ::1] gy, const double[:, ::1] mag2):
    cdef Py_ssize_t h = mag2.shape[0], w = mag2.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, ny1, nx1, ny2, nx2
    cdef i64 vx, vy, adx, ady
    cdef double m, n1, n2
    with nogil:
        for y in range(h):
            for x in range(w):
                m = mag2[y, x]
                if m <= 0.0:
                    continue
                vx = gx[y, x]
                vy = gy[y, x]
                adx = vx if vx >= 0 else -vx
                ady = vy if vy >= 0 else -vy
                if ady * TAN22_DEN <= adx * TAN22_NUM:
                    ny1 = y; nx1 = x + 1; ny2 = y; nx2 = x - 1
                elif adx * TAN22_DEN <= ady * TAN22_NUM:
                    ny1 = y + 1; nx1 = x; ny2 = y - 1; nx2 = x
                elif (vx > 0) == (vy > 0):
                    ny1 = y + 1; nx1 = x + 1; ny2 = y - 1; nx2 = x - 1
                else:
                    ny1 = y - 1; nx1 = x + 1; ny2 = y + 1; nx2 = x - 1
                n1 = mag2[ny1, nx1] if 0 <= ny1 < h and 0 <= nx1 < w else 0.0
                n2 = mag2[ny2, nx2] if 0 <= ny2 < h and 0 <= nx2 < w else 0.0
                if m >= n1 and m >= n2:
                    out[y, x] = 1
    return out_arr.view(np.bool_)


def hysteresis(const unsigned char[:, ::1] weak, const unsigned char[:, ::1] strong):
    cdef Py_ssize_t h = weak.shape[0], w = weak.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    stack_arr = np.empty(h * w, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0, y, x, ny, nx, dy, dx, idx
    with nogil:
        for y in range(h):
            for x in range(w):
                if strong[y, x] and weak[y, x] and not out[y, x]:
                    out[y, x] = 1
                    stack[top] = y * w + x
                    top += 1
                    while top > 0:
                        top -= 1
                        idx = stack[top]
                        for dy in range(-1, 2):
                            for dx in range(-1, 2):
                                ny = idx // w + dy
                                nx = idx % w + dx
                                if 0 <= ny < h and 0 <= nx < w:
                                    if weak[ny, nx] and not out[ny, nx]:
                                        out[ny, nx] = 1
                                        stack[top] = ny * w + nx
                                        top += 1
    return out_arr


def resize_bilinear_f64(const double[:, :, ::1] src, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], c = src.shape[2]
    cdef double[:, :, ::1] out = np.empty((out_h, out_w, c), dtype=np.float64)
    cdef double scale_y = h / (<double> out_h)
    cdef double scale_x = w / (<double> out_w)
    cdef Py_ssize_t i, j, ch, y0, y1, x0, x1
    cdef double sy, sx, fy, fx, y0f, x0f, top, bottom
    with nogil:
        for i in range(out_h):
            sy = (i + 0.5) * scale_y - 0.5
            y0f = floor(sy)
            fy = sy - y0f
            y0 = _clamp(<Py_ssize_t> y0f, 0, h - 1)
            y1 = _clamp((<Py_ssize_t> y0f) + 1, 0, h - 1)
            for j in range(out_w):
                sx = (j + 0.5) * scale_x - 0.5
                x0f = floor(sx)
                fx = sx - x0f
                x0 = _clamp(<Py_ssize_t> x0f, 0, w - 1)
                x1 = _clamp((<Py_ssize_t> x0f) + 1, 0, w - 1)
                for ch in range(c):
                    top = (1.0 - fx) * src[y0, x0, ch] + fx * src[y0, x1, ch]
                    bottom = (1.0 - fx) * src[y1, x0, ch] + fx * src[y1, x1, ch]
                    out[i, j, ch] = (1.0 - fy) * top + fy * bottom
    return np.asarray(out)


cdef void _area_pass(const double[:, :, ::1] src, double[:, :, ::1] out) nogil:
    """Resample the middle (column) axis by fractional pixel coverage."""
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], c = src.shape[2]
    cdef Py_ssize_t out_n = out.shape[1]
    cdef double scale = w / (<double> out_n)
    cdef Py_ssize_t j, col, c0, c1, y, ch
    cdef double b0, b1, wgt, wsum
    for j in range(out_n):
        b0 = j * scale
        b1 = (j + 1) * scale
        c0 = <Py_ssize_t> floor(b0)
        c1 = <Py_ssize_t> ceil(b1)
        if c1 > w:
            c1 = w
        if c0 > w - 1:
            c0 = w - 1
        for y in range(h):
            for ch in range(c):
                out[y, j, ch] = 0.0
        wsum = 0.0
        for col in range(c0, c1):
            wgt = (b1 if b1 < col + 1.0 else col + 1.0) - (b0 if b0 > col else <double> col)
            if wgt < 0.0:
                wgt = 0.0
            for y in range(h):
                for ch in range(c):
                    out[y, j, ch] += wgt * src[y, col, ch]
            wsum += wgt
        for y in range(h):
            for ch in range(c):
                out[y, j, ch] = out[y, j, ch] / wsum
    return


def resize_area_f64(const double[:, :, ::1] src, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t h = src.shape[0], c = src.shape[2]
    cdef double[:, :, ::1] mid = np.empty((h, out_w, c), dtype=np.float64)
    with nogil:
        _area_pass(src, mid)
    midT = np.ascontiguousarray(np.asarray(mid).transpose(1, 0, 2))
    cdef const double[:, :, ::1] midT_v = midT
    cdef double[:, :, ::1] outT = np.empty((out_w, out_h, c), dtype=np.float64)
    with nogil:
        _area_pass(midT_v, outT)
    return np.ascontiguousarray(np.asarray(outT).transpose(1, 0, 2))


def blend_u8(const unsigned char[:, :, ::1] original, const unsigned char[:, :, ::1] edited,
             const double[:, ::1] soft):
    cdef Py_ssize_t h = original.shape[0], w = original.shape[1], c = original.shape[2]
    cdef unsigned char[:, :, ::1] out = np.empty((h, w, c), dtype=np.uint8)
    cdef Py_ssize_t y, x, ch
    cdef double s, v, mag
    with nogil:
        for y in range(h):
            for x in range(w):
                s = soft[y, x]
                for ch in range(c):
                    if s == 0.0:
                        out[y, x, ch] = original[y, x, ch]
                    elif s == 1.0:
                        out[y, x, ch] = edited[y, x, ch]
                    else:
                        v = s * (edited[y, x, ch] / 255.0) + (1.0 - s) * (original[y, x, ch] / 255.0)
                        mag = floor(fabs(v) * 255.0 + 0.5)
                        if v < 0.0:
                            mag = -mag
                        if mag < 0.0:
                            mag = 0.0
                        elif mag > 255.0:
                            mag = 255.0
                        out[y, x, ch] = <unsigned char> mag
    return np.asarray(out)


cdef inline u64 _mix(u64 z) nogil:
    z ^= z >> 30
    z = z * MIX1
    z ^= z >> 27
    z = z * MIX2
    z ^= z >> 31
    return z


def noise_field(u64 seed, u64 stage_index, Py_ssize_t h, Py_ssize_t w, Py_ssize_t c):
    cdef double[:, :, ::1] out = np.empty((h, w, c), dtype=np.float64)
    cdef u64 base = (seed * <u64> 0x9E3779B97F4A7C15UL) ^ (stage_index << 48)
    cdef Py_ssize_t y, x, ch
    cdef u64 z
    with nogil:
        for y in range(h):
            for x in range(w):
                for ch in range(c):
                    z = _mix(base ^ ((<u64> y) << 24) ^ ((<u64> x) << 2) ^ (<u64> ch))
                    out[y, x, ch] = (<double> (z >> 11)) * INV_2_53
    return np.asarray(out)


def quantize_u8(values):
    flat = values.reshape(-1)
    cdef const double[::1] v = flat
    cdef Py_ssize_t n = v.shape[0], i
    out_arr = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef double mag
    with nogil:
        for i in range(n):
            mag = floor(fabs(v[i]) * 255.0 + 0.5)
            if v[i] < 0.0:
                mag = -mag
            if mag < 0.0:
                mag = 0.0
            elif mag > 255.0:
                mag = 255.0
            out[i] = <unsigned char> mag
    return out_arr.reshape(values.shape)
