"""Pointwise geometry of spacelike graphs x_{n+1} = u(x) in Minkowski space.

All batched functions accept a gradient array of shape ``(..., n)`` and a
Hessian array of shape ``(..., n, n)`` and broadcast over the leading axes.
The sign convention makes upward hyperboloids have positive principal
curvatures.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EllipticityError, NumericError

# Relative gradient-slot step used by the finite-difference part of the
# linearization.
GRAD_FD_STEP = 1e-6


def _check_spacelike(grad):
    sq = np.sum(np.asarray(grad) ** 2, axis=-1)
    if np.any(~(sq < 1.0)):
        worst = float(np.max(sq))
        raise DomainError(f"jet is not spacelike: max |Du|^2 = {worst:.6g}")
    return sq


def tilt(grad):
    """Tilt factor nu = 1/sqrt(1 - |Du|^2)."""
    sq = _check_spacelike(grad)
    return 1.0 / np.sqrt(1.0 - sq)


def metric_factor(grad):
    """B = I + Du Du^T / (1 - |Du|^2) = I + nu^2 Du Du^T."""
    grad = np.asarray(grad, dtype=float)
    nu = tilt(grad)
    n = grad.shape[-1]
    outer = grad[..., :, None] * grad[..., None, :]
    return np.eye(n) + (nu**2)[..., None, None] * outer


def sqrt_metric_factor(grad):
    """Positive square root of B, in closed form I + nu^2/(nu+1) Du Du^T."""
    grad = np.asarray(grad, dtype=float)
    nu = tilt(grad)
    n = grad.shape[-1]
    outer = grad[..., :, None] * grad[..., None, :]
    return np.eye(n) + (nu**2 / (nu + 1.0))[..., None, None] * outer


def endomorphism(grad, hess):
    """Batched curvature endomorphism A = nu * B * D^2u."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    nu = tilt(grad)
    return nu[..., None, None] * (metric_factor(grad) @ hess)


def symmetric_endomorphism(grad, hess):
    """nu * S D^2u S with S = B^{1/2}; similar to A and symmetric."""
    S = sqrt_metric_factor(grad)
    nu = tilt(grad)
    sym = nu[..., None, None] * (S @ np.asarray(hess, dtype=float) @ S)
    return 0.5 * (sym + np.swapaxes(sym, -1, -2))


def sigma2_of_matrix(A):
    """Sum of principal 2x2 minors: ((tr A)^2 - tr(A^2)) / 2."""
    A = np.asarray(A, dtype=float)
    tr = np.trace(A, axis1=-2, axis2=-1)
    tr2 = np.einsum("...ij,...ji->...", A, A)
    return 0.5 * (tr * tr - tr2)


def sigma1_sigma2(grad, hess):
    """(sigma_1, sigma_2) of the curvature endomorphism, without eigen-solves."""
    A = endomorphism(grad, hess)
    return np.trace(A, axis1=-2, axis2=-1), sigma2_of_matrix(A)


def h2(grad, hess):
    """Second mean curvature H_2 = sigma_2 of the principal curvatures."""
    return sigma2_of_matrix(endomorphism(grad, hess))


def sigma_k(lambdas, k):
    """k-th elementary symmetric polynomial of the last axis of ``lambdas``."""
    lam = np.asarray(lambdas, dtype=float)
    n = lam.shape[-1]
    if k == 0:
        return np.ones(lam.shape[:-1])
    if k < 0 or k > n:
        return np.zeros(lam.shape[:-1])
    # e[j] holds sigma_j of the entries consumed so far
    e = [np.ones(lam.shape[:-1])] + [np.zeros(lam.shape[:-1]) for _ in range(k)]
    for i in range(n):
        x = lam[..., i]
        for j in range(min(k, i + 1), 0, -1):
            e[j] = e[j] + x * e[j - 1]
    return e[k]


def admissibility_margin(sigma1, sigma2):
    """Scalar margin min(s1, s2) / max(1, s1^2); positive iff in Gamma_2."""
    sigma1 = np.asarray(sigma1, dtype=float)
    return np.minimum(sigma1, sigma2) / np.maximum(1.0, sigma1**2)


@dataclass(frozen=True)
class PointJet:
    """First and second derivatives of u at a single point."""

    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        grad = np.asarray(self.grad, dtype=float).reshape(-1)
        hess = np.asarray(self.hess, dtype=float)
        n = grad.size
        if n < 2 or hess.shape != (n, n):
            raise DomainError(f"inconsistent jet shapes {grad.shape}, {hess.shape}")
        if not np.allclose(hess, hess.T, rtol=1e-12, atol=1e-12):
            raise DomainError("Hessian is not symmetric")
        _check_spacelike(grad)
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "hess", 0.5 * (hess + hess.T))

    @property
    def dim(self):
        return self.grad.size

    @property
    def nu(self):
        return float(tilt(self.grad))


@dataclass(frozen=True)
class PrincipalCurvatures:
    lambdas: np.ndarray
    sigma1: float = field(init=False)
    sigma2: float = field(init=False)
    sigma1_partials: np.ndarray = field(init=False)

    def __post_init__(self):
        lam = np.sort(np.asarray(self.lambdas, dtype=float).reshape(-1))[::-1]
        object.__setattr__(self, "lambdas", lam)
        s1 = float(lam.sum())
        object.__setattr__(self, "sigma1", s1)
        object.__setattr__(self, "sigma2", float(sigma_k(lam, 2)))
        object.__setattr__(self, "sigma1_partials", s1 - lam)

    @property
    def margin(self):
        return float(admissibility_margin(self.sigma1, self.sigma2))


def curvature_endomorphism(jet):
    return endomorphism(jet.grad, jet.hess)


def principal_curvatures(jet):
    """Eigenvalues of the curvature endomorphism, sorted descending."""
    sym = symmetric_endomorphism(jet.grad, jet.hess)
    try:
        lam = np.linalg.eigvalsh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigen-solver failed on\n{sym}") from exc
    return PrincipalCurvatures(lam)


def is_admissible(pc):
    return pc.sigma1 > 0 and pc.sigma2 > 0


def h2_coefficients(grad, hess, fd_step=GRAD_FD_STEP):
    """Batched linearization of H_2 with respect to (D^2u, Du).

    Returns ``(c, b)`` with ``c[..., i, j] = dH_2/d(D^2u)_{ij}`` in closed
    form, ``nu * (tr A * B - nu * B D^2u B)``, and ``b[..., i] = dH_2/d(Du)_i``
    by central differences.
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    nu = tilt(grad)[..., None, None]
    B = metric_factor(grad)
    A = nu * (B @ hess)
    trA = np.trace(A, axis1=-2, axis2=-1)[..., None, None]
    c = nu * (trA * B - A @ B)
    c = 0.5 * (c + np.swapaxes(c, -1, -2))

    n = grad.shape[-1]
    b = np.empty(grad.shape)
    for i in range(n):
        step = fd_step * np.maximum(1.0, np.abs(grad[..., i]))
        plus = grad.copy()
        minus = grad.copy()
        plus[..., i] += step
        minus[..., i] -= step
        b[..., i] = (h2(plus, hess) - h2(minus, hess)) / (2.0 * step)
    return c, b


def linearize_H2(jet):
    """Pointwise (c, b) coefficients; requires an admissible jet."""
    s1, s2 = sigma1_sigma2(jet.grad, jet.hess)
    if not (s1 > 0 and s2 > 0):
        raise EllipticityError(
            f"jet not admissible (sigma1={float(s1):.3g}, sigma2={float(s2):.3g})"
        )
    return h2_coefficients(jet.grad, jet.hess)
