"""Dense linear algebra on small matrices, written out in full.

The matrices here are tiny (one row per infected place, rarely more than
four), so everything uses plain lists of floats and textbook algorithms:
Gaussian elimination with partial pivoting for solves and inverses, and a
balanced Hessenberg reduction followed by the implicit double-shift QR
iteration for eigenvalues. Matrices are lists of row lists.
"""
from __future__ import annotations

import math


class LinalgError(Exception):
    pass


class SingularMatrixError(LinalgError):
    pass


class EigenConvergenceError(LinalgError):
    pass


def mat_copy(a):
    return [row[:] for row in a]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return out


def norm1(a) -> float:
    """Maximum absolute column sum."""
    if not a or not a[0]:
        return 0.0
    return max(sum(abs(row[j]) for row in a) for j in range(len(a[0])))


def max_abs(a) -> float:
    return max((abs(v) for row in a for v in row), default=0.0)


def solve(a, b):
    """Solve the square system a x = b by elimination with partial pivoting."""
    n = len(a)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    scale = max_abs(a)
    tiny = 1e-14 * max(scale, 1.0)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) <= tiny:
            raise SingularMatrixError(f"pivot {col} below tolerance")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
        prow = m[col]
        for r in range(col + 1, n):
            f = m[r][col] / prow[col]
            if f != 0.0:
                for c in range(col, n + 1):
                    m[r][c] -= f * prow[c]
    x = [0.0] * n
    for i in range(n - 1, -1, -1):
        s = m[i][n]
        for j in range(i + 1, n):
            s -= m[i][j] * x[j]
        x[i] = s / m[i][i]
    return x


def invert(a):
    """Inverse via Gauss-Jordan on [a | I]; returns (inverse, condition) where
    condition is the 1-norm estimate ||a||_1 * ||a^-1||_1."""
    n = len(a)
    m = [row[:] + [1.0 if i == j else 0.0 for j in range(n)] for i, row in enumerate(a)]
    scale = max_abs(a)
    tiny = 1e-14 * max(scale, 1.0)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[piv][col]) <= tiny:
            raise SingularMatrixError(f"pivot {col} below tolerance")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
        prow = m[col]
        d = prow[col]
        for c in range(2 * n):
            prow[c] /= d
        for r in range(n):
            if r == col:
                continue
            f = m[r][col]
            if f != 0.0:
                for c in range(2 * n):
                    m[r][c] -= f * prow[c]
    inv = [row[n:] for row in m]
    cond = norm1(a) * norm1(inv)
    return inv, cond


def basic_solution(a, b, tol_factor: float = 1e-10):
    """Row-echelon solve of a (possibly rank-deficient or non-square) system.

    Columns are examined in order; a column with no usable pivot stays free
    and its solution component is zero, so the returned x is the basic
    solution that favours the earliest-declared variables. Returns
    (x, rank, pivot_cols).
    """
    nrow = len(a)
    ncol = len(a[0]) if a else 0
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    tol = tol_factor * max(max_abs(a), 1e-30)
    pivot_cols = []
    pivot_rows = []
    row = 0
    for col in range(ncol):
        if row >= nrow:
            break
        piv = row
        best = abs(m[row][col])
        for r in range(row + 1, nrow):
            if abs(m[r][col]) > best:
                best = abs(m[r][col])
                piv = r
        if best <= tol:
            continue
        if piv != row:
            m[row], m[piv] = m[piv], m[row]
        prow = m[row]
        for r in range(row + 1, nrow):
            f = m[r][col] / prow[col]
            if f != 0.0:
                for c in range(col, ncol + 1):
                    m[r][c] -= f * prow[c]
        pivot_cols.append(col)
        pivot_rows.append(row)
        row += 1
    x = [0.0] * ncol
    for k in range(len(pivot_cols) - 1, -1, -1):
        r, c = pivot_rows[k], pivot_cols[k]
        s = m[r][ncol]
        for j in range(c + 1, ncol):
            s -= m[r][j] * x[j]
        x[c] = s / m[r][c]
    return x, len(pivot_cols), pivot_cols


# ------------------------------------------------------------- eigenvalues

def _balance(a):
    """Diagonal similarity scaling so row and column norms roughly match."""
    n = len(a)
    radix = 2.0
    done = False
    while not done:
        done = True
        for i in range(n):
            r = sum(abs(a[i][j]) for j in range(n) if j != i)
            c = sum(abs(a[j][i]) for j in range(n) if j != i)
            if r == 0.0 or c == 0.0:
                continue
            f = 1.0
            s = c + r
            while c < r / radix:
                c *= radix
                r /= radix
                f *= radix
            while c > r * radix:
                c /= radix
                r *= radix
                f /= radix
            if (c + r) < 0.95 * s and f != 1.0:
                done = False
                for j in range(n):
                    a[i][j] /= f
                for j in range(n):
                    a[j][i] *= f
    return a


def _hessenberg(a):
    """Householder reduction to upper Hessenberg form, in place."""
    n = len(a)
    for k in range(n - 2):
        # build the reflector annihilating a[k+2:, k]
        alpha = 0.0
        for i in range(k + 1, n):
            alpha = max(alpha, abs(a[i][k]))
        if alpha == 0.0:
            continue
        v = [a[i][k] / alpha for i in range(k + 1, n)]
        sigma = math.sqrt(sum(t * t for t in v))
        if sigma == 0.0:
            continue
        if v[0] < 0:
            sigma = -sigma
        v[0] += sigma
        beta = 1.0 / (sigma * v[0])
        # apply from the left: rows k+1..n-1
        for j in range(k, n):
            s = 0.0
            for i in range(k + 1, n):
                s += v[i - k - 1] * a[i][j]
            s *= beta
            for i in range(k + 1, n):
                a[i][j] -= s * v[i - k - 1]
        # apply from the right: columns k+1..n-1
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += a[i][j] * v[j - k - 1]
            s *= beta
            for j in range(k + 1, n):
                a[i][j] -= s * v[j - k - 1]
        a[k + 1][k] = -sigma * alpha
        for i in range(k + 2, n):
            a[i][k] = 0.0
    return a


def _eig2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]] as two complex numbers."""
    tr = a + d
    det = a * d - b * c
    disc = tr * tr / 4.0 - det
    if disc >= 0.0:
        q = math.sqrt(disc)
        return complex(tr / 2.0 + q, 0.0), complex(tr / 2.0 - q, 0.0)
    q = math.sqrt(-disc)
    return complex(tr / 2.0, q), complex(tr / 2.0, -q)


def eigenvalues(a_in, tol: float = 1e-12, max_sweeps_factor: int = 100):
    """All eigenvalues of a real square matrix as complex numbers.

    Balances, reduces to Hessenberg form, then runs the Francis double-shift
    QR iteration with deflation. Raises EigenConvergenceError if a block
    fails to deflate within max_sweeps_factor * n^2 sweeps.
    """
    n = len(a_in)
    if n == 0:
        return []
    for row in a_in:
        for v in row:
            if not math.isfinite(v):
                raise LinalgError("matrix contains a non-finite entry")
    if n == 1:
        return [complex(a_in[0][0], 0.0)]
    h = _hessenberg(_balance(mat_copy(a_in)))
    eigs = []
    hi = n - 1
    sweeps = 0
    max_sweeps = max_sweeps_factor * n * n
    iters_since_deflation = 0
    while hi >= 0:
        if sweeps > max_sweeps:
            raise EigenConvergenceError(
                f"QR iteration did not deflate after {max_sweeps} sweeps")
        # zero out negligible subdiagonals, then find the active block [lo, hi]
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1][lo - 1]) + abs(h[lo][lo])
            if s == 0.0:
                s = max_abs(h)
            if abs(h[lo][lo - 1]) <= tol * s:
                h[lo][lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs.append(complex(h[hi][hi], 0.0))
            hi -= 1
            iters_since_deflation = 0
            continue
        if lo == hi - 1:
            e1, e2 = _eig2(h[lo][lo], h[lo][hi], h[hi][lo], h[hi][hi])
            eigs.extend([e1, e2])
            hi -= 2
            iters_since_deflation = 0
            continue
        sweeps += 1
        iters_since_deflation += 1
        # Francis double shift from the trailing 2x2; exceptional shift when stuck
        if iters_since_deflation % 11 == 0:
            s1 = abs(h[hi][hi - 1]) + abs(h[hi - 1][hi - 2])
            trace = 1.5 * s1
            det = s1 * s1
        else:
            trace = h[hi - 1][hi - 1] + h[hi][hi]
            det = h[hi - 1][hi - 1] * h[hi][hi] - h[hi - 1][hi] * h[hi][hi - 1]
        # first column of (H - s1)(H - s2) restricted to the leading block
        x = h[lo][lo] * h[lo][lo] + h[lo][lo + 1] * h[lo + 1][lo] - trace * h[lo][lo] + det
        y = h[lo + 1][lo] * (h[lo][lo] + h[lo + 1][lo + 1] - trace)
        z = h[lo + 2][lo + 1] * h[lo + 1][lo]
        for k in range(lo, hi):
            # Householder on (x, y, z) to chase the bulge; the last step
            # (k == hi-1) degenerates to a 2-row reflector
            three = k + 2 <= hi
            alpha = max(abs(x), abs(y), abs(z))
            if alpha == 0.0:
                x, y, z = _next_column(h, k, hi)
                continue
            xs, ys, zs = x / alpha, y / alpha, (z / alpha if three else 0.0)
            sigma = math.sqrt(xs * xs + ys * ys + zs * zs)
            if xs < 0:
                sigma = -sigma
            v0 = xs + sigma
            v1, v2 = ys, zs
            beta = 1.0 / (sigma * v0) if sigma * v0 != 0.0 else 0.0
            jlo = max(lo, k - 1)
            for j in range(jlo, n):
                s = v0 * h[k][j] + v1 * h[k + 1][j]
                if three:
                    s += v2 * h[k + 2][j]
                s *= beta
                h[k][j] -= s * v0
                h[k + 1][j] -= s * v1
                if three:
                    h[k + 2][j] -= s * v2
            iend = min(hi, k + 3)
            for i in range(0, iend + 1):
                s = v0 * h[i][k] + v1 * h[i][k + 1]
                if three:
                    s += v2 * h[i][k + 2]
                s *= beta
                h[i][k] -= s * v0
                h[i][k + 1] -= s * v1
                if three:
                    h[i][k + 2] -= s * v2
            x, y, z = _next_column(h, k, hi)
    return eigs


def _next_column(h, k, hi):
    x = h[k + 1][k] if k + 1 <= hi else 0.0
    y = h[k + 2][k] if k + 2 <= hi else 0.0
    z = h[k + 3][k] if k + 3 <= hi else 0.0
    return x, y, z


def spectral_radius_of(a, tol: float = 1e-12):
    """(radius, dominant eigenvalue, all eigenvalues, tie flag)."""
    eigs = eigenvalues(a, tol=tol)
    if not eigs:
        return 0.0, complex(0.0), [], False
    radius = max(abs(ev) for ev in eigs)
    near = [ev for ev in eigs if abs(ev) >= radius - 1e-12 * (1.0 + radius)]
    dominant = max(near, key=lambda ev: (ev.real, ev.imag))
    tie = len({(round(ev.real, 9), round(abs(ev.imag), 9)) for ev in near}) > 1
    return radius, dominant, eigs, tie
