"""Independent reference computations used to cross-check the package.

Everything here is written from scratch with plain loops and bisection; no
package code is imported, so agreement is evidence rather than tautology.
"""
import math

KEEP, GIVE, HALF = 0.75, 0.25, 0.5


def paths(sigma, p, delta, V=1.0):
    """Walk the baseline game tree.

    Returns (date probabilities {t: (greedy, fair)}, Pr(no deal),
    proposer payoff, respondent payoff) with payoffs discounted to period 1.
    """
    T = len(sigma)
    reach, disc = 1.0, 1.0
    cells, up, ur = {}, 0.0, 0.0
    for t in range(1, T + 1):
        s = sigma[t - 1]
        g, f = reach * s * p, reach * (1 - s)
        cells[t] = (g, f)
        up += disc * V * (g * KEEP + f * HALF)
        ur += disc * V * (g * GIVE + f * HALF)
        reach *= s * (1 - p)
        disc *= delta
    return cells, reach, up, ur


def respondent_from(sigma, p, t, delta, V=1.0):
    """Respondent payoff from period t on, discounted to period 1."""
    total, reach = 0.0, 1.0
    for k in range(t, len(sigma) + 1):
        s = sigma[k - 1]
        d = delta ** (k - 1) * V
        total += reach * (s * p * GIVE * d + (1 - s) * HALF * d)
        reach *= s * (1 - p)
    return total


def greedy_belief(sigma, p):
    """Frequency belief over periods at a greedy offer."""
    w, reach = [], 1.0
    for s in sigma:
        w.append(reach * s)
        reach *= s * (1 - p)
    tot = sum(w)
    return [x / tot for x in w]


def respondent_slope(sigma, p, delta, V=1.0):
    """Gain from raising the greedy acceptance by one unit at the
    respondent's single information set, payoffs discounted to period 1."""
    alpha = greedy_belief(sigma, p)
    T = len(sigma)
    out = 0.0
    for t in range(1, T + 1):
        accept = delta ** (t - 1) * GIVE * V
        reject = respondent_from(sigma, p, t + 1, delta, V) if t < T else 0.0
        out += alpha[t - 1] * (accept - reject)
    return out


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mixing_root(T, delta, V=1.0):
    """sigma_T in (0, 1) with zero respondent slope at p = 2/3, or None."""
    f = lambda s: respondent_slope([1.0] * (T - 1) + [s], 2 / 3, delta, V)
    lo, hi = 1e-12, 1 - 1e-12
    if not (f(lo) < 0 < f(hi)):
        return None
    return bisect(f, lo, hi)


def planning_value(sigma, p, delta, V=1.0):
    """Respondent payoff when committed to accept greedy offers with prob p."""
    return paths(sigma, p, delta, V)[3]


def planning_curvature(T, delta, h=1e-4):
    s = mixing_root(T, delta)
    if s is None:
        return None
    sig = [1.0] * (T - 1) + [s]
    w = lambda q: planning_value(sig, q, delta)
    return (w(2 / 3 + h) - 2 * w(2 / 3) + w(2 / 3 - h)) / h ** 2


def threshold(T):
    """Smallest delta at which the mixing root exists with nonpositive planning curvature."""
    ok = lambda d: (planning_curvature(T, d) or 1.0) <= 0.0
    grid = [0.5 + k / 200 for k in range(101)]
    k = next(i for i, d in enumerate(grid) if ok(d))
    if k == 0:
        return grid[0]
    lo, hi = grid[k - 1], grid[k]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


# ------------------------------------------------- two-period offer game

def markov_gains(xs, sigma1, sigma2, accept, belief_off, delta):
    """Largest deviation gains of a Markov profile on the finite offer list xs.

    sigma1, sigma2, accept map offers to probabilities; belief_off gives the
    period-1 belief at offers with no on-path mass.  Returns (proposer
    period 1, proposer period 2, respondent, delay).
    """
    p = [accept(x) for x in xs]
    s1 = [sigma1.get(x, 0.0) for x in xs]
    s2 = [sigma2.get(x, 0.0) for x in xs]
    v2 = [(1 - x) * q for x, q in zip(xs, p)]
    V2 = sum(a * b for a, b in zip(s2, v2))
    v1 = [(1 - x) * q + (1 - q) * delta * V2 for x, q in zip(xs, p)]
    V1 = sum(a * b for a, b in zip(s1, v1))
    C = sum(w * x * q for x, w, q in zip(xs, s2, p))
    reach2 = sum(w * (1 - q) for w, q in zip(s1, p))
    worst = 0.0
    for x, a, b, q in zip(xs, s1, s2, p):
        den = a + reach2 * b
        alpha = a / den if den > 0 else belief_off(x)
        m = alpha * (x - delta * C) + (1 - alpha) * delta * x
        worst = max(worst, m * (1 - q) if m > 0 else -m * q)
    delay = sum(w * (1 - q) for w, q in zip(s1, p))
    return max(v1) - V1, max(v2) - V2, worst, delay


def punctured(xs, delta):
    """Brute-force puncture test: some a > 0 with an empty gap inside the hull."""
    xs = sorted(xs)
    lo, hi = xs[0], xs[-1]
    eps = 1e-12
    for a in xs:
        if a <= eps:
            continue
        for left, right in ((a, a / delta), (delta * a, a)):
            if left < lo - eps or right > hi + eps:
                continue
            if not any(left + eps < y < right - eps for y in xs):
                return True
    return False


def z_ok(count, n, prob, z=4.0):
    se = math.sqrt(prob * (1 - prob) / n)
    return abs(count / n - prob) <= z * se if se > 0 else count == round(prob * n)
