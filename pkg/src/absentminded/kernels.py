"""Hot loops, each with a numba implementation and a numpy implementation.

The public wrappers dispatch on `_accel.numba_enabled()`.  Both versions of
a kernel perform the same floating-point operations in the same order, so
their outputs agree bit for bit.

Random numbers come from a counter-based SplitMix64 hash: the uniform for
draw j of run r under seed s is finalize(key(s, r) + (j + 1) * GOLDEN)
mapped to [0, 1) with 53 bits.  No generator state is carried between
runs, so any partition of the run range gives the same counts.
"""
import numpy as np

from ._accel import njit, numba_enabled

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53

# ----------------------------------------------------------------- RNG


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _stream_key(seed, run):
    return _mix64(seed ^ _mix64(run + GOLDEN))


@njit(cache=True)
def _uniform(key, j):
    z = _mix64(key + (np.uint64(j) + np.uint64(1)) * GOLDEN)
    return np.float64(z >> np.uint64(11)) * TO_UNIT


def _mix64_np(z):
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def _uniform_np(keys, j):
    z = _mix64_np(keys + (np.uint64(j) + np.uint64(1)) * GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * TO_UNIT


def _keys_np(seed, start, stop):
    runs = np.arange(start, stop, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_np(np.uint64(seed) ^ _mix64_np(runs + GOLDEN))


def uniforms(seed, run, count):
    """First `count` uniforms of one run's stream (reference implementation)."""
    key = _keys_np(seed, run, run + 1)
    with np.errstate(over="ignore"):
        return np.array([_uniform_np(key, j)[0] for j in range(count)])


# ------------------------------------------------- baseline Monte Carlo


@njit(cache=True, nogil=True)
def _mc_baseline_loop(sigma, p_G, seed, start, stop):
    T = sigma.shape[0]
    counts = np.zeros((T + 1, 2), dtype=np.int64)
    useed = np.uint64(seed)
    for r in range(start, stop):
        key = _stream_key(useed, np.uint64(r))
        done = False
        for t in range(T):
            if _uniform(key, 2 * t) < sigma[t]:
                if _uniform(key, 2 * t + 1) < p_G:
                    counts[t, 0] += 1
                    done = True
                    break
            else:
                counts[t, 1] += 1
                done = True
                break
        if not done:
            counts[T, 0] += 1
    return counts


def _mc_baseline_numpy(sigma, p_G, seed, start, stop, chunk=1 << 18):
    T = sigma.shape[0]
    counts = np.zeros((T + 1, 2), dtype=np.int64)
    for a in range(start, stop, chunk):
        b = min(stop, a + chunk)
        with np.errstate(over="ignore"):
            keys = _keys_np(seed, a, b)
            alive = np.ones(b - a, dtype=bool)
            for t in range(T):
                greedy = _uniform_np(keys, 2 * t) < sigma[t]
                accept = _uniform_np(keys, 2 * t + 1) < p_G
                counts[t, 0] += np.count_nonzero(alive & greedy & accept)
                counts[t, 1] += np.count_nonzero(alive & ~greedy)
                alive &= greedy & ~accept
        counts[T, 0] += np.count_nonzero(alive)
    return counts


def mc_baseline_counts(sigma, p_G, seed, start, stop, backend=None):
    """Counts[t, 0|1] of trades at period t+1 on a greedy|fair offer; counts[T, 0] no deal."""
    sigma = np.ascontiguousarray(sigma, dtype=np.float64)
    if _use_numba(backend):
        return _mc_baseline_loop(sigma, float(p_G), np.uint64(seed), int(start), int(stop))
    return _mc_baseline_numpy(sigma, float(p_G), seed, int(start), int(stop))


# -------------------------------------------- general two-period Monte Carlo


@njit(cache=True)
def _draw_index(cdf, u):
    k = 0
    n = cdf.shape[0]
    while k < n - 1 and u >= cdf[k]:
        k += 1
    return k


@njit(cache=True, nogil=True)
def _mc_general_loop(cdf1, cdf2, accept, seed, start, stop):
    n = cdf1.shape[0]
    counts = np.zeros((3, n), dtype=np.int64)
    useed = np.uint64(seed)
    for r in range(start, stop):
        key = _stream_key(useed, np.uint64(r))
        i = _draw_index(cdf1, _uniform(key, 0))
        if _uniform(key, 1) < accept[i]:
            counts[0, i] += 1
            continue
        k = _draw_index(cdf2[i], _uniform(key, 2))
        if _uniform(key, 3) < accept[k]:
            counts[1, k] += 1
        else:
            counts[2, 0] += 1
    return counts


def _mc_general_numpy(cdf1, cdf2, accept, seed, start, stop, chunk=1 << 18):
    n = cdf1.shape[0]
    counts = np.zeros((3, n), dtype=np.int64)
    for a in range(start, stop, chunk):
        b = min(stop, a + chunk)
        with np.errstate(over="ignore"):
            keys = _keys_np(seed, a, b)
            u = [_uniform_np(keys, j) for j in range(4)]
        i = np.minimum(np.searchsorted(cdf1, u[0], side="right"), n - 1)
        first = u[1] < accept[i]
        counts[0] += np.bincount(i[first], minlength=n)
        rest = ~first
        rows = cdf2[i[rest]]
        k = np.minimum((u[2][rest][:, None] >= rows).sum(axis=1), n - 1)
        second = u[3][rest] < accept[k]
        counts[1] += np.bincount(k[second], minlength=n)
        counts[2, 0] += np.count_nonzero(~second)
    return counts


def mc_general_counts(cdf1, cdf2, accept, seed, start, stop, backend=None):
    """Counts[0|1, i] of trades in period 1|2 at offer index i; counts[2, 0] no deal."""
    cdf1 = np.ascontiguousarray(cdf1, dtype=np.float64)
    cdf2 = np.ascontiguousarray(cdf2, dtype=np.float64)
    accept = np.ascontiguousarray(accept, dtype=np.float64)
    if _use_numba(backend):
        return _mc_general_loop(cdf1, cdf2, accept, np.uint64(seed), int(start), int(stop))
    return _mc_general_numpy(cdf1, cdf2, accept, seed, int(start), int(stop))


# ------------------------------------------------ baseline grid search


@njit(cache=True)
def _cell_residual(sig, p, delta, V, tol, tie, up, ur):
    T = sig.shape[0]
    up[T] = 0.0
    ur[T] = 0.0
    for k in range(T - 1, -1, -1):
        g = sig[k]
        up[k] = g * p * 0.75 * V + (1.0 - g) * 0.5 * V + delta * g * (1.0 - p) * up[k + 1]
        ur[k] = g * p * 0.25 * V + (1.0 - g) * 0.5 * V + delta * g * (1.0 - p) * ur[k + 1]
    # earlier periods are pure choices that must match the slope sign
    for k in range(T - 1):
        m = p * 0.75 * V - 0.5 * V + delta * (1.0 - p) * up[k + 1]
        if sig[k] == 1.0 and m < -tie:
            return np.inf
        if sig[k] == 0.0 and m > tie:
            return np.inf
    m = p * 0.75 * V - 0.5 * V + delta * (1.0 - p) * up[T]
    s = sig[T - 1]
    if s >= 1.0:
        res = max(0.0, -m)
    elif s <= 0.0:
        res = max(0.0, m)
    else:
        res = abs(m)
    num = 0.0
    den = 0.0
    cmin = np.inf
    cmax = -np.inf
    w = 1.0
    dpow = 1.0
    for k in range(T):
        c = dpow * 0.25 * V - dpow * delta * ur[k + 1]
        num += sig[k] * w * c
        den += sig[k] * w
        cmin = min(cmin, c)
        cmax = max(cmax, c)
        w = w * (1.0 - p) * sig[k]
        dpow = dpow * delta
    if den > 0.0:
        L = num / den
        if p >= 1.0:
            r2 = max(0.0, -L)
        elif p <= 0.0:
            r2 = max(0.0, L)
        else:
            r2 = abs(L)
    else:
        # greedy offers never arrive: the best supporting belief is free
        if p >= 1.0:
            r2 = max(0.0, -cmax)
        elif p <= 0.0:
            r2 = max(0.0, cmin)
        else:
            r2 = max(0.0, max(cmin, -cmax))
    return max(res, r2)


@njit(cache=True, nogil=True)
def _grid_residuals_loop(prefix, n, delta, V, tol, tie):
    T = prefix.shape[0] + 1
    out = np.empty((n + 1, n + 1))
    sig = np.empty(T)
    up = np.empty(T + 1)
    ur = np.empty(T + 1)
    for k in range(T - 1):
        sig[k] = prefix[k]
    for i in range(n + 1):
        sig[T - 1] = i / n
        for j in range(n + 1):
            out[i, j] = _cell_residual(sig, j / n, delta, V, tol, tie, up, ur)
    return out


def _grid_residuals_numpy(prefix, n, delta, V, tol, tie):
    T = prefix.shape[0] + 1
    S = (np.arange(n + 1) / n)[:, None] * np.ones((1, n + 1))
    P = np.ones((n + 1, 1)) * (np.arange(n + 1) / n)[None, :]
    sig = [np.full_like(S, prefix[k]) for k in range(T - 1)] + [S]
    up = [None] * (T + 1)
    ur = [None] * (T + 1)
    up[T] = np.zeros_like(S)
    ur[T] = np.zeros_like(S)
    for k in range(T - 1, -1, -1):
        g = sig[k]
        up[k] = g * P * 0.75 * V + (1.0 - g) * 0.5 * V + delta * g * (1.0 - P) * up[k + 1]
        ur[k] = g * P * 0.25 * V + (1.0 - g) * 0.5 * V + delta * g * (1.0 - P) * ur[k + 1]
    bad = np.zeros(S.shape, dtype=bool)
    for k in range(T - 1):
        m = P * 0.75 * V - 0.5 * V + delta * (1.0 - P) * up[k + 1]
        bad |= (m < -tie) if prefix[k] == 1.0 else (m > tie)
    m = P * 0.75 * V - 0.5 * V + delta * (1.0 - P) * up[T]
    res = np.where(S >= 1.0, np.maximum(0.0, -m), np.where(S <= 0.0, np.maximum(0.0, m), np.abs(m)))
    num = np.zeros_like(S)
    den = np.zeros_like(S)
    cmin = np.full_like(S, np.inf)
    cmax = np.full_like(S, -np.inf)
    w = np.ones_like(S)
    dpow = 1.0
    for k in range(T):
        c = dpow * 0.25 * V - dpow * delta * ur[k + 1]
        num = num + sig[k] * w * c
        den = den + sig[k] * w
        cmin = np.minimum(cmin, c)
        cmax = np.maximum(cmax, c)
        w = w * (1.0 - P) * sig[k]
        dpow = dpow * delta
    with np.errstate(invalid="ignore", divide="ignore"):
        L = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    on = np.where(P >= 1.0, np.maximum(0.0, -L), np.where(P <= 0.0, np.maximum(0.0, L), np.abs(L)))
    off = np.where(P >= 1.0, np.maximum(0.0, -cmax),
                   np.where(P <= 0.0, np.maximum(0.0, cmin), np.maximum(0.0, np.maximum(cmin, -cmax))))
    r2 = np.where(den > 0.0, on, off)
    out = np.maximum(res, r2)
    out[bad] = np.inf
    return out


def grid_residuals(prefix, n, delta, V, tol, tie, backend=None):
    """Equilibrium residual on the (sigma_T, p_G) = (i/n, j/n) grid for one pure prefix."""
    prefix = np.ascontiguousarray(prefix, dtype=np.float64)
    if _use_numba(backend):
        return _grid_residuals_loop(prefix, int(n), float(delta), float(V), float(tol), float(tie))
    return _grid_residuals_numpy(prefix, int(n), float(delta), float(V), float(tol), float(tie))


def _use_numba(backend):
    if backend is None:
        return numba_enabled()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend == "numba" and numba_enabled()
