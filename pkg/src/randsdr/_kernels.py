"""Compiled scalar loops for the dense factorizations in :mod:`randsdr.linalg`.

Both routines work in place on float64 arrays and return a status code
instead of raising, because numba-compiled code cannot raise custom
exception types with payloads.
"""
import math

import numpy as np
from numba import njit

EPS = np.finfo(np.float64).eps


@njit(cache=True)
def _pythag(a, b):
    a = abs(a)
    b = abs(b)
    if a > b:
        return a * math.sqrt(1.0 + (b / a) ** 2)
    if b == 0.0:
        return 0.0
    return b * math.sqrt(1.0 + (a / b) ** 2)


@njit(cache=True)
def golub_kahan_svd(a, w, v, max_iter):
    """Golub-Reinsch SVD of ``a`` (m x n, m >= n), in place.

    Householder bidiagonalization followed by implicit-shift QR sweeps on
    the bidiagonal. On exit ``a`` holds U (m x n), ``w`` the (unsorted,
    nonnegative) singular values and ``v`` the right singular vectors.

    Returns ``(iterations, k)`` where ``k`` is -1 on success, otherwise the
    index of the singular value that failed to converge.
    """
    m, n = a.shape
    rv1 = np.zeros(n)
    g = 0.0
    scale = 0.0
    anorm = 0.0
    l = 0
    for i in range(n):
        l = i + 1
        rv1[i] = scale * g
        g = 0.0
        s = 0.0
        scale = 0.0
        for k in range(i, m):
            scale += abs(a[k, i])
        if scale != 0.0:
            for k in range(i, m):
                a[k, i] /= scale
                s += a[k, i] * a[k, i]
            f = a[i, i]
            g = -math.copysign(math.sqrt(s), f)
            h = f * g - s
            a[i, i] = f - g
            for j in range(l, n):
                s = 0.0
                for k in range(i, m):
                    s += a[k, i] * a[k, j]
                f = s / h
                for k in range(i, m):
                    a[k, j] += f * a[k, i]
            for k in range(i, m):
                a[k, i] *= scale
        w[i] = scale * g
        g = 0.0
        s = 0.0
        scale = 0.0
        if i != n - 1:
            for k in range(l, n):
                scale += abs(a[i, k])
            if scale != 0.0:
                for k in range(l, n):
                    a[i, k] /= scale
                    s += a[i, k] * a[i, k]
                f = a[i, l]
                g = -math.copysign(math.sqrt(s), f)
                h = f * g - s
                a[i, l] = f - g
                for k in range(l, n):
                    rv1[k] = a[i, k] / h
                for j in range(l, m):
                    s = 0.0
                    for k in range(l, n):
                        s += a[j, k] * a[i, k]
                    for k in range(l, n):
                        a[j, k] += s * rv1[k]
                for k in range(l, n):
                    a[i, k] *= scale
        anorm = max(anorm, abs(w[i]) + abs(rv1[i]))

    # right-hand transformations
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            if g != 0.0:
                for j in range(l, n):
                    v[j, i] = (a[i, j] / a[i, l]) / g
                for j in range(l, n):
                    s = 0.0
                    for k in range(l, n):
                        s += a[i, k] * v[k, j]
                    for k in range(l, n):
                        v[k, j] += s * v[k, i]
            for j in range(l, n):
                v[i, j] = 0.0
                v[j, i] = 0.0
        v[i, i] = 1.0
        g = rv1[i]
        l = i

    # left-hand transformations
    for i in range(n - 1, -1, -1):
        l = i + 1
        g = w[i]
        for j in range(l, n):
            a[i, j] = 0.0
        if g != 0.0:
            g = 1.0 / g
            for j in range(l, n):
                s = 0.0
                for k in range(l, m):
                    s += a[k, i] * a[k, j]
                f = (s / a[i, i]) * g
                for k in range(i, m):
                    a[k, j] += f * a[k, i]
            for j in range(i, m):
                a[j, i] *= g
        else:
            for j in range(i, m):
                a[j, i] = 0.0
        a[i, i] += 1.0

    # relative negligibility; an exact `x + anorm == anorm` test can stall
    # on off-diagonals of order ulp(anorm)
    tol = EPS * anorm
    total = 0
    for k in range(n - 1, -1, -1):
        while True:
            flag = True
            nm = 0
            l = k
            while l >= 0:
                nm = l - 1
                if abs(rv1[l]) <= tol:
                    flag = False
                    break
                if abs(w[nm]) <= tol:
                    break
                l -= 1
            if flag:
                # cancel rv1[l] when w[nm] is negligible
                c = 0.0
                s = 1.0
                for i in range(l, k + 1):
                    f = s * rv1[i]
                    rv1[i] = c * rv1[i]
                    if abs(f) <= tol:
                        break
                    g = w[i]
                    h = _pythag(f, g)
                    w[i] = h
                    h = 1.0 / h
                    c = g * h
                    s = -f * h
                    for j in range(m):
                        y = a[j, nm]
                        z = a[j, i]
                        a[j, nm] = y * c + z * s
                        a[j, i] = z * c - y * s
            z = w[k]
            if l == k:
                if z < 0.0:
                    w[k] = -z
                    for j in range(n):
                        v[j, k] = -v[j, k]
                break
            total += 1
            if total > max_iter:
                return total, k
            x = w[l]
            nm = k - 1
            y = w[nm]
            g = rv1[nm]
            h = rv1[k]
            f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y)
            g = _pythag(f, 1.0)
            f = ((x - z) * (x + z) + h * ((y / (f + math.copysign(g, f))) - h)) / x
            c = 1.0
            s = 1.0
            for j in range(l, nm + 1):
                i = j + 1
                g = rv1[i]
                y = w[i]
                h = s * g
                g = c * g
                z = _pythag(f, h)
                rv1[j] = z
                c = f / z
                s = h / z
                f = x * c + g * s
                g = g * c - x * s
                h = y * s
                y *= c
                for jj in range(n):
                    x = v[jj, j]
                    z = v[jj, i]
                    v[jj, j] = x * c + z * s
                    v[jj, i] = z * c - x * s
                z = _pythag(f, h)
                w[j] = z
                if z != 0.0:
                    z = 1.0 / z
                    c = f * z
                    s = h * z
                f = c * g + s * y
                x = c * y - s * g
                for jj in range(m):
                    y = a[jj, j]
                    z = a[jj, i]
                    a[jj, j] = y * c + z * s
                    a[jj, i] = z * c - y * s
            rv1[l] = 0.0
            rv1[k] = f
            w[k] = x
    return total, -1


@njit(cache=True)
def _rotate(a, s, tau, i, j, k, l):
    g = a[i, j]
    h = a[k, l]
    a[i, j] = g - s * (h + g * tau)
    a[k, l] = h + s * (g - h * tau)


@njit(cache=True)
def jacobi_eig(a, d, v, max_sweeps):
    """Cyclic Jacobi eigendecomposition of symmetric ``a``, in place.

    Only the strict upper triangle of ``a`` is read and it is destroyed.
    Returns the number of sweeps used, or -1 if ``max_sweeps`` ran out.
    """
    n = a.shape[0]
    b = np.empty(n)
    z = np.zeros(n)
    for ip in range(n):
        for iq in range(n):
            v[ip, iq] = 0.0
        v[ip, ip] = 1.0
        b[ip] = a[ip, ip]
        d[ip] = a[ip, ip]
    for sweep in range(1, max_sweeps + 1):
        sm = 0.0
        for ip in range(n - 1):
            for iq in range(ip + 1, n):
                sm += abs(a[ip, iq])
        if sm == 0.0:
            return sweep
        if sweep < 4:
            tresh = 0.2 * sm / (n * n)
        else:
            tresh = 0.0
        for ip in range(n - 1):
            for iq in range(ip + 1, n):
                g = 100.0 * abs(a[ip, iq])
                if (sweep > 4 and abs(d[ip]) + g == abs(d[ip])
                        and abs(d[iq]) + g == abs(d[iq])):
                    a[ip, iq] = 0.0
                elif abs(a[ip, iq]) > tresh:
                    h = d[iq] - d[ip]
                    if abs(h) + g == abs(h):
                        t = a[ip, iq] / h
                    else:
                        theta = 0.5 * h / a[ip, iq]
                        t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / math.sqrt(1.0 + t * t)
                    s = t * c
                    tau = s / (1.0 + c)
                    h = t * a[ip, iq]
                    z[ip] -= h
                    z[iq] += h
                    d[ip] -= h
                    d[iq] += h
                    a[ip, iq] = 0.0
                    for j in range(ip):
                        _rotate(a, s, tau, j, ip, j, iq)
                    for j in range(ip + 1, iq):
                        _rotate(a, s, tau, ip, j, j, iq)
                    for j in range(iq + 1, n):
                        _rotate(a, s, tau, ip, j, iq, j)
                    for j in range(n):
                        _rotate(v, s, tau, j, ip, j, iq)
        for ip in range(n):
            b[ip] += z[ip]
            d[ip] = b[ip]
            z[ip] = 0.0
    return -1
