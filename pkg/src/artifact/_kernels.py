"""Hot loops shared by the simulator and the deviation scanner.

Each kernel has a numba version and a pure-numpy version with identical
semantics.  Set ARTIFACT_DISABLE_NUMBA=1 to force the numpy path.
"""
import os

import numpy as np

try:
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("ARTIFACT_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def backend():
    return "numba" if USE_NUMBA else "numpy"


# A concession law is (atom, breaks, hazards): mass `atom` at t=0, then hazard
# hazards[k] on [breaks[k], breaks[k+1]); nothing after breaks[-1].

def _inverse_survival_np(u, atom, breaks, hazards):
    u = np.asarray(u, dtype=float)
    out = np.full(u.shape, np.inf)
    out[u < atom] = 0.0
    if hazards.size == 0 or atom >= 1.0:
        return out
    # log survival at each break
    logs = np.empty(breaks.size)
    logs[0] = np.log1p(-atom)
    logs[1:] = logs[0] - np.cumsum(hazards * np.diff(breaks))
    mid = u >= atom
    with np.errstate(divide="ignore"):
        target = np.log1p(-np.minimum(u[mid], 1.0))
    # piece k holds targets in (logs[k+1], logs[k]]
    k = np.searchsorted(-logs, -target, side="left") - 1
    k = np.clip(k, 0, hazards.size - 1)
    ok = target > logs[-1]
    t = np.full(target.shape, np.inf)
    h = hazards[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        tk = breaks[k] + (logs[k] - target) / h
    t[ok] = np.where(h[ok] > 0, tk[ok], np.inf)
    t[ok & (target >= logs[0])] = 0.0
    out[mid] = t
    return out


def _concession_values_np(times, atom, breaks, hazards, win, lose, tie, r):
    times = np.asarray(times, dtype=float)
    K = hazards.size
    out = np.empty(times.shape)
    zero = times <= 0.0
    out[zero] = atom * tie + (1.0 - atom) * lose
    if K == 0:
        out[~zero] = atom * win + (1.0 - atom) * lose * np.exp(-r * times[~zero])
        out[~zero & np.isinf(times)] = atom * win
        return out
    S = np.empty(K + 1)
    S[0] = 1.0 - atom
    S[1:] = S[0] * np.exp(-np.cumsum(hazards * np.diff(breaks)))
    seg = hazards * S[:-1] * np.exp(-r * breaks[:-1]) / (r + hazards) * (
        1.0 - np.exp(-(r + hazards) * np.diff(breaks)))
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    t = times[~zero]
    k = np.clip(np.searchsorted(breaks, t, side="right") - 1, 0, K)
    inside = k < K
    kk = np.minimum(k, K - 1)
    dt = np.where(inside, np.minimum(t, breaks[-1]) - breaks[kk], 0.0)
    part = np.where(inside, hazards[kk] * S[kk] * np.exp(-r * breaks[kk]) / (r + hazards[kk])
                    * (1.0 - np.exp(-(r + hazards[kk]) * dt)), 0.0)
    dm = cum[np.minimum(k, K)] + part
    surv = np.where(inside, S[kk] * np.exp(-hazards[kk] * dt), S[K])
    with np.errstate(invalid="ignore"):
        tail = np.where(np.isinf(t), 0.0, surv * np.exp(-r * t))
    out[~zero] = atom * win + win * dm + lose * tail
    return out


def _resolve_np(tau_b, tau_s, p_b, p_s, tie_window):
    with np.errstate(invalid="ignore"):  # inf - inf when neither concedes
        both = np.abs(tau_b - tau_s) <= tie_window
    both &= np.isfinite(tau_b) | np.isfinite(tau_s)
    t = np.minimum(tau_b, tau_s)
    price = np.where(tau_b < tau_s, p_s, p_b)
    price = np.where(both & np.isfinite(t), 0.5 * (p_b + p_s), price)
    return t, price, both & np.isfinite(t)


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _inverse_survival_nb(u, atom, breaks, hazards):
        n = u.size
        K = hazards.size
        out = np.empty(n)
        logs = np.empty(K + 1)
        if atom < 1.0:
            logs[0] = np.log1p(-atom)
        else:
            logs[0] = -np.inf
        for k in range(K):
            logs[k + 1] = logs[k] - hazards[k] * (breaks[k + 1] - breaks[k])
        for i in range(n):
            ui = u[i]
            if ui < atom:
                out[i] = 0.0
                continue
            if K == 0 or ui >= 1.0:
                out[i] = np.inf
                continue
            target = np.log1p(-ui)
            if target <= logs[K]:
                out[i] = np.inf
                continue
            if target >= logs[0]:
                out[i] = 0.0
                continue
            k = 0
            while k < K - 1 and target <= logs[k + 1]:
                k += 1
            if hazards[k] > 0:
                out[i] = breaks[k] + (logs[k] - target) / hazards[k]
            else:
                out[i] = np.inf
        return out

    @njit(cache=True)
    def _concession_values_nb(times, atom, breaks, hazards, win, lose, tie, r):
        n = times.size
        K = hazards.size
        out = np.empty(n)
        for i in range(n):
            t = times[i]
            if t <= 0.0:
                out[i] = atom * tie + (1.0 - atom) * lose
                continue
            dm = 0.0
            s = 1.0 - atom
            for k in range(K):
                a = breaks[k]
                b = breaks[k + 1]
                h = hazards[k]
                end = b if t > b else t
                dt = end - a
                dm += h * s * np.exp(-r * a) / (r + h) * (1.0 - np.exp(-(r + h) * dt))
                s = s * np.exp(-h * dt)
                if t <= b:
                    break
            tail = 0.0
            if not np.isinf(t):
                tail = s * np.exp(-r * t)
            out[i] = atom * win + win * dm + lose * tail
        return out

    @njit(cache=True)
    def _resolve_nb(tau_b, tau_s, p_b, p_s, tie_window):
        n = tau_b.size
        t = np.empty(n)
        price = np.empty(n)
        tied = np.zeros(n, dtype=np.bool_)
        for i in range(n):
            tb = tau_b[i]
            ts = tau_s[i]
            m = tb if tb < ts else ts
            t[i] = m
            if np.isinf(m):
                price[i] = p_b[i]
            elif abs(tb - ts) <= tie_window:
                price[i] = 0.5 * (p_b[i] + p_s[i])
                tied[i] = True
            elif tb < ts:
                price[i] = p_s[i]
            else:
                price[i] = p_b[i]
        return t, price, tied


def inverse_survival(u, atom, breaks, hazards):
    """Concession time for population positions u in [0, 1) (inf = never)."""
    u = np.ascontiguousarray(u, dtype=float)
    breaks = np.ascontiguousarray(breaks, dtype=float)
    hazards = np.ascontiguousarray(hazards, dtype=float)
    if USE_NUMBA:
        return _inverse_survival_nb(u, float(atom), breaks, hazards)
    return _inverse_survival_np(u, float(atom), breaks, hazards)


def concession_values(times, atom, breaks, hazards, win, lose, tie, r):
    """Payoff from conceding at each time against an opponent's law.

    win: payoff if the opponent concedes first, lose: payoff from conceding,
    tie: payoff when both concede at t=0.
    """
    times = np.ascontiguousarray(times, dtype=float)
    breaks = np.ascontiguousarray(breaks, dtype=float)
    hazards = np.ascontiguousarray(hazards, dtype=float)
    args = (float(atom), breaks, hazards, float(win), float(lose), float(tie), float(r))
    if USE_NUMBA:
        return _concession_values_nb(times, *args)
    return _concession_values_np(times, *args)


def resolve_trades(tau_b, tau_s, p_b, p_s, tie_window=0.0):
    """First-concession time, price and tie flag for each path."""
    arrs = [np.ascontiguousarray(a, dtype=float) for a in (tau_b, tau_s, p_b, p_s)]
    if USE_NUMBA:
        return _resolve_nb(*arrs, float(tie_window))
    return _resolve_np(*arrs, float(tie_window))
