"""Arbitrary-precision reference evaluations of the closed-form bounds."""

import mpmath as mp

DPS = 50


def _chain(S, L):
    return 1 + L * S * mp.e ** (L * S)


def delta_bar(eps, S, L, P, T):
    with mp.workdps(DPS):
        eps, S, L, P, T = map(mp.mpf, (eps, S, L, P, T))
        A = _chain(S, L)
        return (2 * eps * S * P + T * L * (eps * S * P + eps) * A) * mp.e ** (T * L * A)


def d_bar(eps, S, L, P, T):
    with mp.workdps(DPS):
        db = delta_bar(eps, S, L, P, T)
        eps, S, L, P = map(mp.mpf, (eps, S, L, P))
        return S * L * (db + eps * S * P + eps) * mp.e ** (L * S)


def k_eps(eps, S, L, P, T, L_av, R, z_bar, gamma):
    with mp.workdps(DPS):
        db = delta_bar(eps, S, L, P, T)
        eps, S, P, T, L_av, gamma = map(mp.mpf, (eps, S, P, T, L_av, gamma))
        M = mp.mpf(max(R, z_bar))
        h = eps * S
        return db + T * gamma * M + h * L_av * (h * P + T * gamma * M) * mp.e ** (h * L_av)


def f_eps(eps, S, L, P, T, r_y, beta_y, delta_y):
    with mp.workdps(DPS):
        dd = d_bar(eps, S, L, P, T)
        S, r_y, beta_y, delta_y = map(mp.mpf, (S, r_y, beta_y, delta_y))
        return dd * (1 + r_y * mp.e ** (-beta_y * S) / (1 - mp.e ** (-(beta_y - delta_y) * S)))


def seps(L, T, eps):
    with mp.workdps(DPS):
        L, T, eps = map(mp.mpf, (L, T, eps))
        g = lambda u: u + T * L + T * L * L * mp.e ** (u + L * mp.e**u) + mp.log(eps) / 4  # noqa: E731
        lo, hi = mp.mpf(-400), mp.mpf(5)
        for _ in range(220):
            mid = (lo + hi) / 2
            if g(mid) < 0:
                lo = mid
            else:
                hi = mid
        return mp.e ** ((lo + hi) / 2)


def rel_err(logreal_value, ref):
    with mp.workdps(DPS):
        return abs(mp.mpf(logreal_value.logmag) - mp.log(ref))
