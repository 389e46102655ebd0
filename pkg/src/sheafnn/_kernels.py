"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The numba path is used by default.  Set ``SHEAFNN_DISABLE_NUMBA=1`` in the
environment before import to force the numpy fallbacks (also used
automatically when numba is not importable).  Both paths are exposed under
``*_nb`` / ``*_np`` names so tests and benchmarks can compare them directly.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


USE_NUMBA = HAVE_NUMBA and os.environ.get("SHEAFNN_DISABLE_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)

JACOBI_TOL = 1e-15
JACOBI_MAX_SWEEPS = 100


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rotation(app, aqq, apq):
    diff = aqq - app
    if abs(diff) * 1e-150 > abs(2.0 * apq):
        # tiny angle; dividing first would overflow theta
        t = apq / diff
    else:
        theta = diff / (2.0 * apq)
        t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


@njit(cache=True)
def jacobi_eigh_nb(a, tol, max_sweeps):
    n = a.shape[0]
    A = a.copy()
    V = np.eye(n)
    scale = np.sqrt(np.sum(A * A))
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += A[p, q] * A[p, q]
        if np.sqrt(2.0 * off) <= tol * scale:
            return np.diag(A).copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation(A[p, p], A[q, q], apq)
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    return np.diag(A).copy(), V, -1


def jacobi_eigh_np(a, tol, max_sweeps):
    n = a.shape[0]
    A = np.array(a, dtype=np.float64, copy=True)
    V = np.eye(n)
    scale = np.sqrt(np.sum(A * A))
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps + 1):
        if np.sqrt(2.0 * np.sum(A[iu] ** 2)) <= tol * scale:
            return np.diag(A).copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation_py(A[p, p], A[q, q], apq)
                cp = A[:, p].copy()
                A[:, p] = c * cp - s * A[:, q]
                A[:, q] = s * cp + c * A[:, q]
                rp = A[p, :].copy()
                A[p, :] = c * rp - s * A[q, :]
                A[q, :] = s * rp + c * A[q, :]
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
    return np.diag(A).copy(), V, -1


def _rotation_py(app, aqq, apq):
    diff = aqq - app
    if abs(diff) * 1e-150 > abs(2.0 * apq):
        # tiny angle; dividing first would overflow theta
        t = apq / diff
    else:
        theta = diff / (2.0 * apq)
        t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


@njit(cache=True)
def batched_jacobi_eigh_nb(blocks, tol, max_sweeps):
    b, n, _ = blocks.shape
    w = np.empty((b, n))
    V = np.empty((b, n, n))
    worst = 0
    for i in range(b):
        wi, Vi, sweeps = jacobi_eigh_nb(blocks[i], tol, max_sweeps)
        if sweeps < 0:
            return w, V, -1
        if sweeps > worst:
            worst = sweeps
        w[i] = wi
        V[i] = Vi
    return w, V, worst


def batched_jacobi_eigh_np(blocks, tol, max_sweeps):
    """Jacobi sweeps applied to a stack of matrices in lockstep."""
    A = np.array(blocks, dtype=np.float64, copy=True)
    b, n, _ = A.shape
    V = np.broadcast_to(np.eye(n), (b, n, n)).copy()
    scale = np.sqrt(np.sum(A * A, axis=(1, 2)))
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(A[:, iu[0], iu[1]] ** 2, axis=1))
        if np.all(off <= tol * scale):
            return np.diagonal(A, axis1=1, axis2=2).copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                active = apq != 0.0
                if not active.any():
                    continue
                safe = np.where(active, apq, 1.0)
                theta = (A[:, q, q] - A[:, p, p]) / (2.0 * safe)
                big = np.abs(theta) > 1e150
                theta_s = np.where(big, 1.0, theta)
                t = np.sign(theta_s) / (np.abs(theta_s) + np.sqrt(theta_s * theta_s + 1.0))
                t = np.where(theta_s == 0.0, 1.0, t)
                t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cc = c[:, None]
                ss = s[:, None]
                cp = A[:, :, p].copy()
                A[:, :, p] = cc * cp - ss * A[:, :, q]
                A[:, :, q] = ss * cp + cc * A[:, :, q]
                rp = A[:, p, :].copy()
                A[:, p, :] = cc * rp - ss * A[:, q, :]
                A[:, q, :] = ss * rp + cc * A[:, q, :]
                A[active, p, q] = 0.0
                A[active, q, p] = 0.0
                vp = V[:, :, p].copy()
                V[:, :, p] = cc * vp - ss * V[:, :, q]
                V[:, :, q] = ss * vp + cc * V[:, :, q]
    return np.diagonal(A, axis1=1, axis2=2).copy(), V, -1


# ---------------------------------------------------------------------------
# Incremental connectivity (union-find)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def edges_until_connected_nb(n, us, vs):
    parent = np.arange(n)
    components = n
    if components <= 1:
        return 0
    for i in range(us.shape[0]):
        ru = _find(parent, us[i])
        rv = _find(parent, vs[i])
        if ru != rv:
            parent[ru] = rv
            components -= 1
            if components == 1:
                return i + 1
    return -1


def edges_until_connected_np(n, us, vs):
    parent = list(range(n))

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    components = n
    if components <= 1:
        return 0
    for i, (u, v) in enumerate(zip(us.tolist(), vs.tolist())):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            components -= 1
            if components == 1:
                return i + 1
    return -1


# ---------------------------------------------------------------------------
# Dense sheaf Laplacian assembly from restriction blocks
# ---------------------------------------------------------------------------


@njit(cache=True)
def assemble_laplacian_nb(n, us, vs, fu, fv):
    d = fu.shape[1]
    L = np.zeros((n * d, n * d))
    for e in range(us.shape[0]):
        u = us[e]
        v = vs[e]
        a = fu[e]
        b = fv[e]
        for i in range(d):
            for j in range(d):
                uu = 0.0
                vv = 0.0
                uv = 0.0
                for k in range(d):
                    uu += a[k, i] * a[k, j]
                    vv += b[k, i] * b[k, j]
                    uv += a[k, i] * b[k, j]
                L[u * d + i, u * d + j] += uu
                L[v * d + i, v * d + j] += vv
                L[u * d + i, v * d + j] -= uv
                L[v * d + j, u * d + i] -= uv
    return L


def assemble_laplacian_np(n, us, vs, fu, fv):
    d = fu.shape[1]
    L = np.zeros((n, d, n, d))
    uu = np.einsum("eki,ekj->eij", fu, fu)
    vv = np.einsum("eki,ekj->eij", fv, fv)
    uv = np.einsum("eki,ekj->eij", fu, fv)
    np.add.at(L, (us, slice(None), us, slice(None)), uu)
    np.add.at(L, (vs, slice(None), vs, slice(None)), vv)
    np.add.at(L, (us, slice(None), vs, slice(None)), -uv)
    np.add.at(L, (vs, slice(None), us, slice(None)), -uv.transpose(0, 2, 1))
    return L.reshape(n * d, n * d)


@njit(cache=True)
def laplacian_map_grads_nb(G, us, vs, fu, fv):
    """Gradients of <G, L(fu, fv)> with respect to the restriction maps."""
    ne, d, _ = fu.shape
    gu = np.zeros_like(fu)
    gv = np.zeros_like(fv)
    for e in range(ne):
        u = us[e]
        v = vs[e]
        for a in range(d):
            for b in range(d):
                su = 0.0
                sv = 0.0
                for c in range(d):
                    guu = G[u * d + b, u * d + c] + G[u * d + c, u * d + b]
                    gvv = G[v * d + b, v * d + c] + G[v * d + c, v * d + b]
                    guv = G[u * d + b, v * d + c] + G[v * d + c, u * d + b]
                    gvu = G[v * d + b, u * d + c] + G[u * d + c, v * d + b]
                    su += fu[e, a, c] * guu - fv[e, a, c] * guv
                    sv += fv[e, a, c] * gvv - fu[e, a, c] * gvu
                gu[e, a, b] = su
                gv[e, a, b] = sv
    return gu, gv


def laplacian_map_grads_np(G, us, vs, fu, fv):
    d = fu.shape[1]
    n = G.shape[0] // d
    B = G.reshape(n, d, n, d)
    Guu = B[us, :, us, :]
    Gvv = B[vs, :, vs, :]
    Guv = B[us, :, vs, :]
    Gvu = B[vs, :, us, :]
    sym_uu = Guu + Guu.transpose(0, 2, 1)
    sym_vv = Gvv + Gvv.transpose(0, 2, 1)
    cross_u = Guv + Gvu.transpose(0, 2, 1)
    cross_v = Gvu + Guv.transpose(0, 2, 1)
    gu = np.matmul(fu, sym_uu) - np.matmul(fv, cross_u.transpose(0, 2, 1))
    gv = np.matmul(fv, sym_vv) - np.matmul(fu, cross_v.transpose(0, 2, 1))
    return gu, gv


# ---------------------------------------------------------------------------
# Row scatter-add (segment sum)
# ---------------------------------------------------------------------------


@njit(cache=True)
def segment_sum_nb(values, index, num_segments):
    out = np.zeros((num_segments, values.shape[1]))
    for i in range(values.shape[0]):
        row = index[i]
        for j in range(values.shape[1]):
            out[row, j] += values[i, j]
    return out


def segment_sum_np(values, index, num_segments):
    out = np.zeros((num_segments, values.shape[1]))
    if values.shape[0] == 0:
        return out
    order = np.argsort(index, kind="stable")
    sorted_idx = index[order]
    starts = np.flatnonzero(np.r_[True, sorted_idx[1:] != sorted_idx[:-1]])
    out[sorted_idx[starts]] = np.add.reduceat(values[order], starts, axis=0)
    return out


# ---------------------------------------------------------------------------
# Stacked small matrix products
# ---------------------------------------------------------------------------


@njit(cache=True)
def batched_matmul_nb(a, b):
    nb, n, m = a.shape
    k = b.shape[2]
    out = np.zeros((nb, n, k))
    for e in range(nb):
        for i in range(n):
            for j in range(m):
                x = a[e, i, j]
                for col in range(k):
                    out[e, i, col] += x * b[e, j, col]
    return out


def batched_matmul_np(a, b):
    return np.matmul(a, b)


if USE_NUMBA:
    laplacian_map_grads = laplacian_map_grads_nb
    # np.matmul beats the loop version (see benchmarks/); kept for parity tests
    batched_matmul = batched_matmul_np
    segment_sum = segment_sum_nb
    jacobi_eigh = jacobi_eigh_nb
    batched_jacobi_eigh = batched_jacobi_eigh_nb
    edges_until_connected = edges_until_connected_nb
    assemble_laplacian = assemble_laplacian_nb
else:
    laplacian_map_grads = laplacian_map_grads_np
    batched_matmul = batched_matmul_np
    segment_sum = segment_sum_np
    jacobi_eigh = jacobi_eigh_np
    batched_jacobi_eigh = batched_jacobi_eigh_np
    edges_until_connected = edges_until_connected_np
    assemble_laplacian = assemble_laplacian_np
