"""Gaussian moment dynamics of the coupled atom-membrane pair.

Quadratures are ordered (x_at, p_at, x_m, p_m) with x = (a + a^dag)/sqrt(2),
[x, p] = i, so the vacuum variance is 1/2.  First and second moments close on
themselves: dmu/dt = A mu, dsigma/dt = A sigma + sigma A^T + D.

The directional (cascaded) coupling enters only the drift: the membrane
momentum row couples back with g * reflectivity while the atom momentum row
sees the full g.  The generator is not completely positive, so for extreme
parameter draws the steady covariance can dip slightly below the uncertainty
bound; solvers here report such states as-is and leave physicality checks to
the caller (see GaussianState.uncertainty_margin).
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput, NonPositiveInput, NotHurwitz, NumericalError, StepTooLarge

# Symplectic form for the (x_at, p_at, x_m, p_m) ordering.
OMEGA = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
])


@dataclass
class DriftDiffusion:
    """Drift matrix A and diffusion matrix D of the moment equations."""

    A: np.ndarray  # (4, 4)
    D: np.ndarray  # (4, 4), symmetric PSD up to rounding

    def validate(self):
        if self.A.shape != (4, 4) or self.D.shape != (4, 4):
            raise InvalidInput("A and D must be 4x4")
        mineig = np.linalg.eigvalsh(0.5 * (self.D + self.D.T)).min()
        if mineig < -1e-12 * np.linalg.norm(self.D, 2):
            raise InvalidInput(f"D has negative eigenvalue {mineig:.3e}")


def drift_diffusion(model):
    """Assemble DriftDiffusion from ModelParams.

    The asymmetry is exact by construction: A[3, 0] is computed as
    reflectivity times A[1, 2].
    """
    gc = model.gamma_cool
    gm = model.gamma_m
    a_mem_x = -model.g  # atom momentum is pushed by the membrane position
    A = np.array([
        [-gc / 2, model.omega_at, 0.0, 0.0],
        [-model.omega_at, -gc / 2, a_mem_x, 0.0],
        [0.0, 0.0, -gm / 2, model.omega_m],
        [model.reflectivity * a_mem_x, 0.0, -model.omega_m, -gm / 2],
    ])
    D = np.diag([
        gc / 2,
        gc / 2 + model.gamma_diff_at,
        gm * (model.nbar + 0.5),
        gm * (model.nbar + 0.5) + model.gamma_diff_m,
    ])
    dd = DriftDiffusion(A=A, D=D)
    dd.validate()
    return dd


@dataclass
class GaussianState:
    """First and second moments; cov holds symmetrized covariances."""

    mean: np.ndarray  # (4,)
    cov: np.ndarray   # (4, 4)

    def uncertainty_margin(self):
        """Smallest eigenvalue of cov + (i/2) Omega; >= 0 for physical states."""
        return float(np.linalg.eigvalsh(self.cov + 0.5j * OMEGA).min())

    def is_physical(self, tol=1e-10):
        return (self.uncertainty_margin() >= -tol
                and np.diag(self.cov).min() >= 0.5 - tol)


def vacuum_state():
    return GaussianState(mean=np.zeros(4), cov=0.5 * np.eye(4))


def thermal_state(nbar_atom, nbar_membrane):
    """Product of thermal states, zero means."""
    return GaussianState(
        mean=np.zeros(4),
        cov=np.diag([nbar_atom + 0.5, nbar_atom + 0.5,
                     nbar_membrane + 0.5, nbar_membrane + 0.5]))


def _require_hurwitz(A):
    eig = np.linalg.eigvals(A)
    worst = eig[np.argmax(eig.real)]
    if worst.real >= -1e-12 * np.linalg.norm(A, 2):
        raise NotHurwitz(
            f"drift matrix has eigenvalue {worst:.6e} with non-negative "
            "real part; no unique steady state")


def steady_state(dd, method="kron"):
    """Steady Gaussian state from A sigma + sigma A^T = -D.

    method "kron" solves the 16x16 Kronecker-sum system directly;
    "bartels" goes through the Schur-based Lyapunov solver.  Both require
    A to be Hurwitz and certify the residual of A sigma + sigma A^T + D
    against 1e-10 * ||D|| plus the double-precision floor
    64 * eps * ||A|| * ||sigma||; merely storing sigma in doubles already
    leaves a residual of that order when ||A|| ||sigma|| >> ||D||.
    """
    dd.validate()
    _require_hurwitz(dd.A)
    if method == "kron":
        eye = np.eye(4)
        S = np.kron(dd.A, eye) + np.kron(eye, dd.A)
        sigma = np.linalg.solve(S, -dd.D.reshape(16)).reshape(4, 4)
    elif method == "bartels":
        sigma = scipy.linalg.solve_continuous_lyapunov(dd.A, -dd.D)
    else:
        raise InvalidInput(f"unknown method {method!r}")
    sigma = 0.5 * (sigma + sigma.T)
    residual = np.linalg.norm(dd.A @ sigma + sigma @ dd.A.T + dd.D, 2)
    floor = (64 * np.finfo(float).eps
             * np.linalg.norm(dd.A, 2) * np.linalg.norm(sigma, 2))
    if residual > 1e-10 * np.linalg.norm(dd.D, 2) + floor:
        raise NumericalError(f"Lyapunov residual {residual:.3e} too large")
    return GaussianState(mean=np.zeros(4), cov=sigma)


def _taylor4(X):
    n = X.shape[0]
    X2 = X @ X
    X3 = X2 @ X
    return (np.eye(n) + X + X2 / 2 + X3 / 6 + X3 @ X / 24,
            np.eye(n) + X / 2 + X2 / 6 + X3 / 24)


def _rk4_affine(S, c, h):
    """One RK4 step of y' = S y + c as the affine map y -> P y + q."""
    P, R = _taylor4(h * S)
    return P, h * (R @ c)


def _pow_affine(P, q, n):
    """n-fold composition of the affine map (P, q) by binary exponentiation."""
    accP, accq = np.eye(P.shape[0]), np.zeros_like(q)
    while n:
        if n & 1:
            accP, accq = P @ accP, P @ accq + q
        P, q = P @ P, P @ q + q
        n >>= 1
    return accP, accq


def evolve(dd, state, t, dt):
    """Propagate moments for time t with fixed-step RK4 of step dt.

    The moment equations are linear with constant coefficients, so the RK4
    update is the exact degree-4 Taylor map of one step; steps are composed
    by repeated squaring.  A shorter final step covers any remainder of t.

    Raises StepTooLarge when dt times the spectral radius of A exceeds 0.1.
    """
    dd.validate()
    if dt <= 0:
        raise NonPositiveInput(f"dt must be > 0, got {dt}")
    if t < 0:
        raise NonPositiveInput(f"t must be >= 0, got {t}")
    rho = np.abs(np.linalg.eigvals(dd.A)).max()
    if dt * rho > 0.1:
        raise StepTooLarge(
            f"dt * spectral_radius(A) = {dt * rho:.3e} exceeds 0.1")
    mean = np.array(state.mean, dtype=float)
    cov = np.array(state.cov, dtype=float)
    if t == 0:
        return GaussianState(mean=mean, cov=cov)

    eye = np.eye(4)
    S = np.kron(dd.A, eye) + np.kron(eye, dd.A)
    c = dd.D.reshape(16)
    n_full = int(t / dt)
    remainder = t - n_full * dt

    def apply(h, n, mean, vec):
        Pm, _ = _taylor4(h * dd.A)
        Ps, qs = _rk4_affine(S, c, h)
        Pm, _ = _pow_affine(Pm, np.zeros(4), n)
        Ps, qs = _pow_affine(Ps, qs, n)
        return Pm @ mean, Ps @ vec + qs

    vec = cov.reshape(16)
    if n_full:
        mean, vec = apply(dt, n_full, mean, vec)
    if remainder > 1e-12 * t:
        mean, vec = apply(remainder, 1, mean, vec)
    cov = vec.reshape(4, 4)
    return GaussianState(mean=mean, cov=0.5 * (cov + cov.T))


def occupation(state, mode="membrane"):
    """Mean phonon/excitation number of one mode, means included."""
    if mode == "atom":
        i = 0
    elif mode == "membrane":
        i = 2
    else:
        raise InvalidInput(f"mode must be 'atom' or 'membrane', got {mode!r}")
    var = state.cov[i, i] + state.cov[i + 1, i + 1]
    msq = state.mean[i] ** 2 + state.mean[i + 1] ** 2
    return float((var - 1.0) / 2 + msq / 2)


CoolingResult = namedtuple("CoolingResult", ["nbar_ss", "factor"])


def cooling_factor(model, method="kron"):
    """Steady membrane occupation and the ratio nbar / nbar_ss."""
    s = steady_state(drift_diffusion(model), method=method)
    nbar_ss = occupation(s, "membrane")
    return CoolingResult(nbar_ss=nbar_ss, factor=model.nbar / nbar_ss)
