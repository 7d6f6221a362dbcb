"""Closed-form utility laws on a homogeneous disk of radius ``R``.

Four model pairs are covered: power-law or exponential decay, each with
exponential or uniform intensity.  Every function takes ``z`` (scalar or
array) and returns ``F_Z`` or ``f_Z``.

The ``printed_*`` functions reproduce published expressions verbatim,
including their typos, so that their deviation from the reference can be
measured.  They are never used to build a distribution.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .quadrature import quad


def expn_real(nu, x):
    """Generalised exponential integral ``E_nu(x)`` for real ``nu < 1``, ``x > 0``."""
    a = 1.0 - np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    return x ** (-a) * special.gamma(a) * special.gammaincc(a, x)


def _vectorize(fn):
    def wrapper(z, *args):
        z = np.asarray(z, dtype=float)
        out = np.vectorize(lambda v: fn(float(v), *args), otypes=[float])(z)
        return out if out.ndim else float(out)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- power law, exponential intensity ---------------------------------------


def _power_exp_terms(z, R, eta, mu, shift):
    # (1/eta) * int_1^{1+R} (u - 1) u^shift exp(-mu z u^eta) du in E_nu form
    a = mu * z
    c = (1.0 + R) ** eta
    s2 = (2.0 + shift) / eta
    s1 = (1.0 + shift) / eta
    return (
        expn_real(1.0 - s2, a) - (1.0 + R) ** (2.0 + shift) * expn_real(1.0 - s2, a * c)
        - expn_real(1.0 - s1, a) + (1.0 + R) ** (1.0 + shift) * expn_real(1.0 - s1, a * c)
    ) / eta


@_vectorize
def power_exponential_cdf(z, R, eta, mu):
    if z <= 0:
        return 0.0
    return float(1.0 - 2.0 / R**2 * _power_exp_terms(z, R, eta, mu, 0.0))


@_vectorize
def power_exponential_pdf(z, R, eta, mu):
    if z < 0:
        return 0.0
    if z == 0:
        # mu * E[(1 + D)^eta]
        return quad(lambda d: mu * (1 + d) ** eta * 2 * d / R**2, 0.0, R)
    return float(2.0 * mu / R**2 * _power_exp_terms(z, R, eta, mu, eta))


# -- power law, uniform intensity -------------------------------------------


def _power_moment(r, eta):
    # int_0^r d (1 + d)^eta dd
    return (1.0 + (1.0 + r) ** (eta + 1.0) * (r * (eta + 1.0) - 1.0)) / (
        (eta + 1.0) * (eta + 2.0)
    )


@_vectorize
def power_uniform_cdf(z, R, eta, beta):
    if z <= 0:
        return 0.0
    if z >= beta:
        return 1.0
    if z <= beta * (1.0 + R) ** (-eta):
        return 2.0 * z / (beta * R**2) * _power_moment(R, eta)
    knee = (beta / z) ** (1.0 / eta) - 1.0
    return 2.0 * z / (beta * R**2) * _power_moment(knee, eta) + 1.0 - knee**2 / R**2


@_vectorize
def power_uniform_pdf(z, R, eta, beta):
    if z < 0 or z >= beta:
        return 0.0
    knee = min(R, (beta / z) ** (1.0 / eta) - 1.0) if z > 0 else R
    return 2.0 / (beta * R**2) * _power_moment(knee, eta)


# -- exponential decay, exponential intensity --------------------------------


@_vectorize
def exponential_exponential_cdf(z, R, alpha, mu):
    if z <= 0:
        return 0.0
    tail = quad(lambda d: d * np.exp(-mu * z * np.exp(alpha * d)), 0.0, R, tol=1e-13)
    return 1.0 - 2.0 / R**2 * tail


@_vectorize
def exponential_exponential_pdf(z, R, alpha, mu):
    if z < 0:
        return 0.0
    return quad(
        lambda d: 2.0 * mu * d / R**2 * np.exp(alpha * d - mu * z * np.exp(alpha * d)),
        0.0, R, tol=1e-13,
    )


# -- exponential decay, uniform intensity -------------------------------------


def _exp_moment(r, alpha):
    # int_0^r d exp(alpha d) dd
    return (1.0 + np.exp(alpha * r) * (alpha * r - 1.0)) / alpha**2


@_vectorize
def exponential_uniform_cdf(z, R, alpha, beta):
    if z <= 0:
        return 0.0
    if z >= beta:
        return 1.0
    if z <= beta * np.exp(-alpha * R):
        return 2.0 * z / (beta * R**2) * _exp_moment(R, alpha)
    knee = np.log(beta / z) / alpha
    return 2.0 * z / (beta * R**2) * _exp_moment(knee, alpha) + 1.0 - knee**2 / R**2


@_vectorize
def exponential_uniform_pdf(z, R, alpha, beta):
    if z < 0 or z >= beta:
        return 0.0
    knee = min(R, np.log(beta / z) / alpha) if z > 0 else R
    return 2.0 / (beta * R**2) * _exp_moment(knee, alpha)


# -- expressions exactly as published ----------------------------------------


@_vectorize
def printed_power_exponential_pdf(z, R, eta, mu):
    return quad(lambda d: mu * d * (1 + d) ** eta * np.exp(-mu * z * (1 + d) ** eta), 0.0, R)


@_vectorize
def printed_power_uniform_cdf(z, R, eta, beta):
    if z <= 0:
        return 0.0
    den = 2.0 + 3.0 * eta + eta**2
    q = (beta / z) ** (1.0 / eta)
    if z <= beta * (1.0 + R) ** (-eta):
        return 2.0 * z / (beta * R**2) * (1.0 + q ** (eta + 1.0) * (R * (eta + 1.0) - 1.0)) / den
    if z <= beta:
        return (
            2.0 * z / (beta * R**2)
            * (1.0 + (R + 1.0) ** (eta + 1.0) * ((eta + 1.0) * q - eta - 2.0)) / den
            + 2.0 / R**2 * (R**2 / 2.0 - 0.5 * (q - 1.0) ** 2)
        )
    return 1.0


@_vectorize
def printed_power_uniform_pdf(z, R, eta, beta):
    if z <= 0:
        return 0.0
    den = 2.0 + 3.0 * eta + eta**2
    if z <= beta * (1.0 + R) ** (-eta):
        return 2.0 / (beta * R**2) * (1.0 + (R + 1.0) ** (eta + 1.0) * (R * (eta + 1.0) - 1.0)) / den
    if z <= beta:
        b = beta / z
        return (
            2.0 * eta * (1.0 - 2.0 * b ** (1.0 + 2.0 / eta) + b ** ((eta + 1.0) / eta))
            - 4.0 * b ** ((eta + 1.0) / eta) * (b ** (1.0 / eta) - 1.0)
        ) / (beta * R**2 * eta)
    return 0.0


@_vectorize
def printed_exponential_uniform_cdf(z, R, alpha, beta):
    if z <= 0:
        return 0.0
    if z <= beta:
        # both published branches carry this same expression
        return 2.0 * z / (alpha**2 * beta * R**2) * (1.0 + np.exp(alpha * R) * (alpha * R - 1.0))
    return 1.0


@_vectorize
def printed_exponential_uniform_pdf(z, R, alpha, beta):
    if z <= 0 or z > beta:
        return 0.0
    return 2.0 / (alpha**2 * beta * R**2) * (1.0 + np.exp(alpha * R) * (alpha * R - 1.0))
