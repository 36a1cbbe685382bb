"""Vectorised bivariate normal and Student-t lower-orthant probabilities.

The normal routine follows the Drezner-Wesolowsky / Genz scheme (Gauss-Legendre
quadrature of Plackett's identity, with a separate expansion when |rho| is
close to one).  The Student routine uses the Dunnett-Sobel finite series,
which is exact for integer degrees of freedom.  Non-integer degrees of freedom
go through a conditional-form quadrature, one point at a time.
"""

import threading

import numpy as np
from scipy import integrate, special, stats

_TWO_PI = 2.0 * np.pi

_GL20_X, _GL20_W = np.polynomial.legendre.leggauss(20)
_GL12_X, _GL12_W = np.polynomial.legendre.leggauss(12)
_GL6_X, _GL6_W = np.polynomial.legendre.leggauss(6)


def _ndtr(x):
    return special.ndtr(x)


def _bvn_upper_scalar_rho(h, k, r):
    """P(X > h, Y > k) for standard bivariate normal, arrays h, k and scalar r."""
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    h, k = np.broadcast_arrays(h, k)

    if r == 0.0:
        return _ndtr(-h) * _ndtr(-k)

    if abs(r) < 0.3:
        x, w = _GL6_X, _GL6_W
    elif abs(r) < 0.75:
        x, w = _GL12_X, _GL12_W
    else:
        x, w = _GL20_X, _GL20_W

    hk = (h * k)[..., None]
    if abs(r) < 0.925:
        hs = ((h * h + k * k) / 2.0)[..., None]
        asr = np.arcsin(r) / 2.0
        sn = np.sin(asr * (1.0 + x))
        with np.errstate(invalid="ignore", over="ignore"):
            vals = np.exp((sn * hk - hs) / (1.0 - sn * sn))
        bvn = (vals * w).sum(axis=-1)
        out = bvn * asr / _TWO_PI + _ndtr(-h) * _ndtr(-k)
        return np.nan_to_num(out, nan=0.0)

    kk = k.copy()
    if r < 0:
        kk = -kk
        hk = -hk
    hk1 = hk[..., 0]
    bvn = np.zeros_like(hk1)
    if abs(r) < 1.0:
        a_s = 1.0 - r * r
        a = np.sqrt(a_s)
        bs = (h - kk) ** 2
        c = (4.0 - hk1) / 8.0
        d = (12.0 - hk1) / 80.0
        asr = -(bs / a_s + hk1) / 2.0
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            term = a * np.exp(asr) * (1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s)
            bvn = np.where(asr > -100.0, term, 0.0)
            b = np.sqrt(bs)
            sp = np.sqrt(_TWO_PI) * _ndtr(-b / a)
            corr = np.exp(-hk1 / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
            bvn = bvn - np.where(hk1 > -100.0, corr, 0.0)
            a2 = a / 2.0
            xs = (a2 * (1.0 + x)) ** 2
            rs = np.sqrt(1.0 - xs)
            bs_ = bs[..., None]
            c_ = c[..., None]
            d_ = d[..., None]
            asr2 = -(bs_ / xs + hk) / 2.0
            sp2 = 1.0 + c_ * xs * (1.0 + 5.0 * d_ * xs)
            ep = np.exp(-hk * xs / (2.0 * (1.0 + rs) ** 2)) / rs
            vals = np.where(asr2 > -100.0, np.exp(asr2) * (sp2 - ep), 0.0)
        bvn = (a2 * (vals * w).sum(axis=-1) - bvn) / _TWO_PI
    if r > 0:
        out = bvn + _ndtr(-np.maximum(h, kk))
    else:
        lower = np.where(h < 0, _ndtr(kk) - _ndtr(h), _ndtr(-h) - _ndtr(-kk))
        out = np.where(h >= kk, -bvn, lower - bvn)
    return np.nan_to_num(out, nan=0.0)


def bvn_cdf(x, y, rho):
    """P(X <= x, Y <= y) for a standard bivariate normal with correlation ``rho``.

    ``x`` and ``y`` broadcast together and may contain infinities.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    out = np.empty(x.shape)

    neg_inf = np.isneginf(x) | np.isneginf(y)
    x_inf = np.isposinf(x)
    y_inf = np.isposinf(y)
    out[neg_inf] = 0.0
    m = ~neg_inf & x_inf
    out[m] = _ndtr(y[m])
    m = ~neg_inf & ~x_inf & y_inf
    out[m] = _ndtr(x[m])
    fin = ~neg_inf & ~x_inf & ~y_inf
    if np.any(fin):
        out[fin] = _bvn_upper_scalar_rho(-x[fin], -y[fin], float(rho))
    return np.clip(out, 0.0, 1.0)


def _bvt_integer(nu, dh, dk, r):
    """Dunnett-Sobel series for P(T1 < dh, T2 < dk), integer ``nu`` >= 1."""
    snu = np.sqrt(nu)
    ors = 1.0 - r * r
    hrk = dh - r * dk
    krh = dk - r * dh
    with np.errstate(invalid="ignore", divide="ignore"):
        xnhk = np.where(np.abs(hrk) + ors > 0, hrk**2 / (hrk**2 + ors * (nu + dk**2)), 0.0)
        xnkh = np.where(np.abs(krh) + ors > 0, krh**2 / (krh**2 + ors * (nu + dh**2)), 0.0)
    hs = np.sign(hrk)
    ks = np.sign(krh)
    if nu % 2 == 0:
        bvt = np.full(dh.shape, np.arctan2(np.sqrt(ors), -r) / _TWO_PI)
        gmph = dh / np.sqrt(16.0 * (nu + dh**2))
        gmpk = dk / np.sqrt(16.0 * (nu + dk**2))
        btnckh = 2.0 * np.arctan2(np.sqrt(xnkh), np.sqrt(1.0 - xnkh)) / np.pi
        btpdkh = 2.0 * np.sqrt(xnkh * (1.0 - xnkh)) / np.pi
        btnchk = 2.0 * np.arctan2(np.sqrt(xnhk), np.sqrt(1.0 - xnhk)) / np.pi
        btpdhk = 2.0 * np.sqrt(xnhk * (1.0 - xnhk)) / np.pi
        for j in range(1, nu // 2 + 1):
            bvt = bvt + gmph * (1.0 + ks * btnckh) + gmpk * (1.0 + hs * btnchk)
            btnckh = btnckh + btpdkh
            btpdkh = 2 * j * btpdkh * (1.0 - xnkh) / (2 * j + 1)
            btnchk = btnchk + btpdhk
            btpdhk = 2 * j * btpdhk * (1.0 - xnhk) / (2 * j + 1)
            gmph = gmph * (2 * j - 1) / (2 * j * (1.0 + dh**2 / nu))
            gmpk = gmpk * (2 * j - 1) / (2 * j * (1.0 + dk**2 / nu))
    else:
        qhrk = np.sqrt(dh**2 + dk**2 - 2.0 * r * dh * dk + nu * ors)
        hkrn = dh * dk + r * nu
        hkn = dh * dk - nu
        hpk = dh + dk
        bvt = np.arctan2(-snu * (hkn * qhrk + hpk * hkrn), hkn * hkrn - nu * hpk * qhrk) / _TWO_PI
        bvt = np.where(bvt < -1e-15, bvt + 1.0, bvt)
        gmph = dh / (_TWO_PI * snu * (1.0 + dh**2 / nu))
        gmpk = dk / (_TWO_PI * snu * (1.0 + dk**2 / nu))
        btnckh = np.sqrt(xnkh)
        btpdkh = btnckh.copy()
        btnchk = np.sqrt(xnhk)
        btpdhk = btnchk.copy()
        for j in range(1, (nu - 1) // 2 + 1):
            bvt = bvt + gmph * (1.0 + ks * btnckh) + gmpk * (1.0 + hs * btnchk)
            btpdkh = (2 * j - 1) * btpdkh * (1.0 - xnkh) / (2 * j)
            btnckh = btnckh + btpdkh
            btpdhk = (2 * j - 1) * btpdhk * (1.0 - xnhk) / (2 * j)
            btnchk = btnchk + btpdhk
            gmph = gmph * 2 * j / ((2 * j + 1) * (1.0 + dh**2 / nu))
            gmpk = gmpk * 2 * j / ((2 * j + 1) * (1.0 + dk**2 / nu))
    return bvt


# optimizers evaluate the same points for many rho at fixed nu; memoise the quantiles
_QUANTILE_CACHE = {}
_QUANTILE_CACHE_SIZE = 16
_CACHE_LOCK = threading.Lock()


def t_quantile(u, nu):
    key = (float(nu), u.shape, hash(u.tobytes()))
    hit = _QUANTILE_CACHE.get(key)
    if hit is not None:
        return hit
    with np.errstate(invalid="ignore"):
        x = special.stdtrit(nu, u)
    x = np.where(u <= 0.0, -np.inf, np.where(u >= 1.0, np.inf, x))
    x.setflags(write=False)
    with _CACHE_LOCK:
        if len(_QUANTILE_CACHE) >= _QUANTILE_CACHE_SIZE:
            _QUANTILE_CACHE.pop(next(iter(_QUANTILE_CACHE)), None)
        _QUANTILE_CACHE[key] = x
    return x


def student_conditional(x_given, x_other, rho, nu):
    """P(T2 <= x_other | T1 = x_given) for the bivariate Student-t."""
    scale = np.sqrt((1.0 - rho * rho) * (nu + x_given**2) / (nu + 1.0))
    return special.stdtr(nu + 1.0, (x_other - rho * x_given) / scale)


def _bvt_quad_scalar(u1, u2, rho, nu, epsabs=1e-13):
    # integrate the conditional cdf of T2 given T1 = t_nu^{-1}(s) over s in (0, u1)
    if u1 <= 0.0 or u2 <= 0.0:
        return 0.0
    if u1 >= 1.0:
        return u2
    if u2 >= 1.0:
        return u1
    x2 = stats.t.ppf(u2, nu)

    def integrand(s):
        return student_conditional(stats.t.ppf(s, nu), x2, rho, nu)

    val, _ = integrate.quad(integrand, 0.0, u1, epsabs=epsabs, epsrel=1e-12, limit=200)
    return val


def bvt_copula_cdf(u1, u2, rho, nu):
    """Student-t copula cdf on the unit square.

    Integer ``nu`` uses the exact series; any other positive ``nu`` falls back
    to adaptive quadrature of the conditional representation.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    u1, u2 = np.broadcast_arrays(u1, u2)
    out = np.empty(u1.shape)
    zero = (u1 <= 0.0) | (u2 <= 0.0)
    one1 = ~zero & (u1 >= 1.0)
    one2 = ~zero & ~one1 & (u2 >= 1.0)
    out[zero] = 0.0
    out[one1] = u2[one1]
    out[one2] = u1[one2]
    inner = ~(zero | one1 | one2)
    if not np.any(inner):
        return out
    if float(nu).is_integer():
        nu_i = int(nu)
        dh = t_quantile(u1[inner], nu_i)
        dk = t_quantile(u2[inner], nu_i)
        out[inner] = _bvt_integer(nu_i, dh, dk, float(rho))
    else:
        out[inner] = [_bvt_quad_scalar(a, b, rho, nu) for a, b in zip(u1[inner], u2[inner])]
    return np.clip(out, 0.0, 1.0)
