# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of ``_dopri.poly_rhs`` and ``_dopri.dopri_poly``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, isfinite, nextafter, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432
cdef double D3 = 87487479700.0 / 32700410799
cdef double D4 = -10690763975.0 / 1880347072
cdef double D5 = 701980252875.0 / 199316789632
cdef double D6 = -1453857185.0 / 822651844
cdef double D7 = 69997945.0 / 29380423
cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 10.0, BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75


cdef double _det_lu(double* a, int m) nogil:
    cdef int k, r, c, p
    cdef double det = 1.0, piv, f, tmp, best
    if m == 0:
        return 1.0
    for k in range(m):
        p = k
        best = fabs(a[k * m + k])
        for r in range(k + 1, m):
            if fabs(a[r * m + k]) > best:
                best = fabs(a[r * m + k])
                p = r
        if a[p * m + k] == 0.0:
            return 0.0
        if p != k:
            for c in range(m):
                tmp = a[k * m + c]
                a[k * m + c] = a[p * m + c]
                a[p * m + c] = tmp
            det = -det
        piv = a[k * m + k]
        det *= piv
        for r in range(k + 1, m):
            f = a[r * m + k] / piv
            if f != 0.0:
                for c in range(k + 1, m):
                    a[r * m + c] -= f * a[k * m + c]
    return det


cdef class _Poly:
    cdef long[:, :] exps
    cdef double[:] coefs
    cdef long[:] owner
    cdef int nterms, n
    cdef double* G
    cdef double* minor

    def __cinit__(self, long[:, :] exps, double[:] coefs, long[:] owner, int n):
        self.exps = exps
        self.coefs = coefs
        self.owner = owner
        self.nterms = coefs.shape[0]
        self.n = n
        self.G = <double*> malloc(n * n * sizeof(double))
        self.minor = <double*> malloc(n * n * sizeof(double))

    def __dealloc__(self):
        free(self.G)
        free(self.minor)

    cdef void rhs(self, double* X, double* out) nogil:
        cdef int n = self.n, m = n - 1
        cdef int t, v, w, ew, j, r, c, cc
        cdef double val
        for r in range(m * n):
            self.G[r] = 0.0
        for t in range(self.nterms):
            for v in range(n):
                if self.exps[t, v] == 0:
                    continue
                val = self.coefs[t] * self.exps[t, v]
                for w in range(n):
                    ew = self.exps[t, w] - 1 if w == v else self.exps[t, w]
                    if ew:
                        val *= pow(X[w], ew)
                self.G[self.owner[t] * n + v] += val
        for j in range(n):
            for r in range(m):
                cc = 0
                for c in range(n):
                    if c != j:
                        self.minor[r * m + cc] = self.G[r * n + c]
                        cc += 1
            out[j] = (-1.0 if (n - 1 - j) % 2 else 1.0) * _det_lu(self.minor, m)


def poly_rhs(long[:, :] exps, double[:] coefs, long[:] owner, double[:] X):
    cdef int n = X.shape[0]
    cdef _Poly P = _Poly(exps, coefs, owner, n)
    out = np.empty(n)
    cdef double[:] o = out
    cdef double[:] xc = np.ascontiguousarray(X)
    P.rhs(&xc[0], &o[0])
    return out


def dopri_poly(long[:, :] exps, double[:] coefs, long[:] owner, y0, double t0, double t1,
               t_eval, double rtol, double atol, double max_step=INFINITY, long max_steps=100000):
    cdef int n = len(y0)
    cdef _Poly P = _Poly(exps, coefs, owner, n)
    te_arr = np.ascontiguousarray(t_eval, dtype=float)
    cdef double[:] te = te_arr
    cdef int ne = te.shape[0]
    Yarr = np.full((ne, n), np.nan)
    cdef double[:, :] Y = Yarr
    K = np.zeros((7, n))
    cdef double[:, :] k = K
    buf = np.zeros((4, n))
    cdef double[:, :] b = buf
    yarr = np.array(y0, dtype=float)
    cdef double[:] y = yarr
    cdef double[:] ytmp = b[0]
    cdef double[:] y1 = b[1]
    cdef double[:] sc = b[2]
    R = np.zeros((5, n))
    cdef double[:, :] rc = R
    cdef double d = 1.0 if t1 >= t0 else -1.0
    cdef double t = t0, h, hs, err, fac, fac11, facold = 1e-4, th, th1, d0, d1s, d2, h0, h1, tmp, eps_t
    cdef double t_old = t0, hs_old = 0.0
    cdef long naccept = 0, nreject = 0, nfev = 0
    cdef int i, kk = 0, status = 0, finished = 0, ok

    P.rhs(&y[0], &k[0, 0])
    nfev += 1
    # initial step
    d0 = 0.0
    d1s = 0.0
    for i in range(n):
        tmp = atol + rtol * fabs(y[i])
        sc[i] = tmp
        d0 += (y[i] / tmp) ** 2
        d1s += (k[0, i] / tmp) ** 2
    d0 = sqrt(d0 / n)
    d1s = sqrt(d1s / n)
    if d0 < 1e-5 or d1s < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1s
    h0 = min(h0, fabs(t1 - t0), max_step)
    for i in range(n):
        ytmp[i] = y[i] + d * h0 * k[0, i]
    P.rhs(&ytmp[0], &k[1, 0])
    nfev += 1
    d2 = 0.0
    for i in range(n):
        d2 += ((k[1, i] - k[0, i]) / sc[i]) ** 2
    d2 = sqrt(d2 / n) / h0
    if max(d1s, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / max(d1s, d2), 0.2)
    h = min(100 * h0, h1, max_step)

    while kk < ne and d * (te[kk] - t0) <= 0:
        for i in range(n):
            Y[kk, i] = y[i]
        kk += 1

    while t != t1:
        if naccept >= max_steps:
            status = 1
            break
        while True:
            h = min(h, max_step, fabs(t1 - t))
            tmp = max(fabs(t), 1.0)
            eps_t = nextafter(tmp, INFINITY) - tmp
            if h < 16 * eps_t:
                status = 2
                break
            hs = d * h
            for i in range(n):
                ytmp[i] = y[i] + hs * (A21 * k[0, i])
            P.rhs(&ytmp[0], &k[1, 0])
            for i in range(n):
                ytmp[i] = y[i] + hs * (A31 * k[0, i] + A32 * k[1, i])
            P.rhs(&ytmp[0], &k[2, 0])
            for i in range(n):
                ytmp[i] = y[i] + hs * (A41 * k[0, i] + A42 * k[1, i] + A43 * k[2, i])
            P.rhs(&ytmp[0], &k[3, 0])
            for i in range(n):
                ytmp[i] = y[i] + hs * (A51 * k[0, i] + A52 * k[1, i] + A53 * k[2, i] + A54 * k[3, i])
            P.rhs(&ytmp[0], &k[4, 0])
            for i in range(n):
                ytmp[i] = y[i] + hs * (A61 * k[0, i] + A62 * k[1, i] + A63 * k[2, i] + A64 * k[3, i] + A65 * k[4, i])
            P.rhs(&ytmp[0], &k[5, 0])
            ok = 1
            for i in range(n):
                y1[i] = y[i] + hs * (A71 * k[0, i] + A73 * k[2, i] + A74 * k[3, i] + A75 * k[4, i] + A76 * k[5, i])
                if not isfinite(y1[i]):
                    ok = 0
            P.rhs(&y1[0], &k[6, 0])
            nfev += 6
            if not ok:
                h = 0.5 * h
                nreject += 1
                continue
            err = 0.0
            for i in range(n):
                tmp = hs * (E1 * k[0, i] + E3 * k[2, i] + E4 * k[3, i] + E5 * k[4, i] + E6 * k[5, i] + E7 * k[6, i])
                err += (tmp / (atol + rtol * max(fabs(y[i]), fabs(y1[i])))) ** 2
            err = sqrt(err / n)
            fac11 = pow(err, EXPO1) if err > 0 else 0.0
            if err <= 1.0:
                fac = fac11 / pow(facold, BETA)
                fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFETY))
                facold = max(err, 1e-4)
                for i in range(n):
                    rc[0, i] = y[i]
                    rc[1, i] = y1[i] - y[i]
                    rc[2, i] = hs * k[0, i] - rc[1, i]
                    rc[3, i] = rc[1, i] - hs * k[6, i] - rc[2, i]
                    rc[4, i] = hs * (D1 * k[0, i] + D3 * k[2, i] + D4 * k[3, i] + D5 * k[4, i] + D6 * k[5, i] + D7 * k[6, i])
                t_old = t
                hs_old = hs
                if h < fabs(t1 - t):
                    t = t + hs
                else:
                    t = t1
                for i in range(n):
                    y[i] = y1[i]
                    k[0, i] = k[6, i]
                h = h / fac
                naccept += 1
                break
            nreject += 1
            h = h / min(1.0 / FAC_MIN, fac11 / SAFETY)
        if status != 0:
            break
        while kk < ne and d * (te[kk] - t) <= 0:
            if te[kk] == t:
                for i in range(n):
                    Y[kk, i] = y[i]
            else:
                th = (te[kk] - t_old) / hs_old
                th1 = 1.0 - th
                for i in range(n):
                    Y[kk, i] = rc[0, i] + th * (rc[1, i] + th1 * (rc[2, i] + th * (rc[3, i] + th1 * rc[4, i])))
            kk += 1
    stats = {"naccept": naccept, "nreject": nreject, "nfev": nfev, "t_final": t}
    return Yarr, kk, status, stats
