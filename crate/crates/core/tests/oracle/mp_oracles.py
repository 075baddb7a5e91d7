"""High-precision reference values frozen into the Rust test suite.

Each value is computed two ways at 40 significant digits: a Poisson-mixture
series summed term by term to 1e-30, and direct quadrature of the defining
integral. Run with `python3 mp_oracles.py`.
"""
from mpmath import mp, mpf, betainc, quad, ncdf, exp, log, sqrt, gamma, loggamma, inf, npdf

mp.dps = 40


def nct_cdf_series(t, nu, delta):
    # t >= 0 branch of the Poisson mixture for the noncentral t
    t, nu, delta = mpf(t), mpf(nu), mpf(delta)
    y = t * t / (t * t + nu)
    mu = delta * delta / 2
    total = ncdf(-delta)
    j = 0
    while True:
        p = exp(-mu + j * log(mu) - loggamma(j + 1))
        q = exp(-mu + j * log(mu) - loggamma(j + mpf(3) / 2)) * delta / sqrt(2)
        term = p * betainc(j + mpf(1) / 2, nu / 2, 0, y, regularized=True) + q * betainc(
            j + 1, nu / 2, 0, y, regularized=True
        )
        total += term / 2
        if j > mu and p < mpf(10) ** -30:
            break
        j += 1
    return total


def nct_cdf_quad(t, nu, delta):
    t, nu, delta = mpf(t), mpf(nu), mpf(delta)
    dens = lambda s: exp((nu / 2 - 1) * log(s) - s / 2 - (nu / 2) * log(2) - loggamma(nu / 2))
    return quad(lambda s: ncdf(t * sqrt(s / nu) - delta) * dens(s), [0, nu, 4 * nu, inf])


def ncf_cdf_series(x, d1, d2, lam):
    x, d1, d2, lam = mpf(x), mpf(d1), mpf(d2), mpf(lam)
    y = d1 * x / (d1 * x + d2)
    mu = lam / 2
    total = mpf(0)
    j = 0
    while True:
        w = exp(-mu + j * log(mu) - loggamma(j + 1)) if mu > 0 else (mpf(1) if j == 0 else mpf(0))
        if w > mpf(10) ** -45:
            total += w * betainc(d1 / 2 + j, d2 / 2, 0, y, regularized=True)
        if j > mu and w < mpf(10) ** -30:
            break
        j += 1
    return total


def ncf_cdf_quad_df1(x, d2, lam):
    # numerator df 1: F = (Z + sqrt(lam))^2 / (chi2_d2 / d2)
    x, d2, lam = mpf(x), mpf(d2), mpf(lam)
    dens = lambda s: exp((d2 / 2 - 1) * log(s) - s / 2 - (d2 / 2) * log(2) - loggamma(d2 / 2))
    r = sqrt(lam)
    inner = lambda s: ncdf(sqrt(x * s / d2) - r) - ncdf(-sqrt(x * s / d2) - r)
    return quad(lambda s: inner(s) * dens(s), [0, d2, 4 * d2, 20 * d2, inf])


if __name__ == "__main__":
    print("I_0.3(2.5,4)      ", betainc(2.5, 4.0, 0, 0.3, regularized=True))
    print("nct(1.5,7,2.1) ser", nct_cdf_series(1.5, 7, 2.1))
    print("nct(1.5,7,2.1) quad", nct_cdf_quad(1.5, 7, 2.1))
    print("ncf(2,1,4,500) ser", ncf_cdf_series(2.0, 1, 4, 500))
    print("ncf(2,1,4,500) quad", ncf_cdf_quad_df1(2.0, 4, 500))
    print("ncf(1.7,1,4,5)  ser", ncf_cdf_series(1.7, 1, 4, 5))
    # cv2 cdf: 1 - F_F(n/x | 1, n-1, n/g^2)
    for (x, n, g) in [(0.0144, 5, 0.1), (0.01, 15, 0.05), (0.05, 5, 0.2), (0.0025, 5, 0.05)]:
        print(f"cv2_cdf({x},{n},{g})", 1 - ncf_cdf_series(n / mpf(x), 1, n - 1, n / mpf(g) ** 2))
    for (x, n, g) in [(0.12, 5, 0.1)]:
        print(f"cv_cdf({x},{n},{g})", 1 - nct_cdf_series(sqrt(n) / mpf(x), n - 1, sqrt(n) / mpf(g)))
    for (x, d1, d2, lam) in [(500.0, 1, 4, 500), (350.0, 1, 4, 500), (6000.0, 1, 14, 6000), (2000.0, 1, 4, 2000), (400000.0, 1, 4, 400000)]:
        print(f"ncf({x},{d1},{d2},{lam}) ser", ncf_cdf_series(x, d1, d2, lam))
    print("ncf(500,1,4,500) quad", ncf_cdf_quad_df1(500.0, 4, 500))
