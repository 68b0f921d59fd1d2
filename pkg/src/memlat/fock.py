"""Brute-force density-operator solver on a truncated two-mode number basis.

Serves as the oracle for the Gaussian moment solver: assemble the full
master-equation generator as a sparse superoperator, find its null vector or
integrate it, and read moments back out.  Everything uses the column-stacking
convention, vec(A rho B) = (B^T kron A) vec(rho), i.e. numpy order='F'.

The truncated generator preserves trace identically (the trace of any
commutator or sandwich of finite matrices cancels by cyclicity), including
the thermal raising jump at the truncation edge; the build therefore asserts
the trace invariant on the raw operator.  Truncation artifacts show up
instead as population piling up in the top levels, which every steady-state
result is gated on via leak_tol.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, lgmres

from .errors import (
    CapExceeded,
    DegenerateKernel,
    InvalidInput,
    NonPositiveInput,
    NumericalError,
    StepTooLarge,
    TruncationLeak,
)
from .gaussian import GaussianState


@dataclass
class FockConfig:
    """Truncation sizes (levels per mode) and validity thresholds."""

    n_at: int
    n_m: int
    leak_tol: float = 1e-6   # max tolerated population in the top two levels
    cap: int = 4096          # bound on n_at * n_m

    def validate(self):
        if self.n_at < 2 or self.n_m < 2:
            raise InvalidInput(
                f"need at least 2 levels per mode, got ({self.n_at}, {self.n_m})")
        if self.n_at * self.n_m > self.cap:
            raise CapExceeded(
                f"n_at * n_m = {self.n_at * self.n_m} exceeds cap {self.cap}")
        if not self.leak_tol > 0:
            raise NonPositiveInput("leak_tol must be > 0")


def _ladder(n):
    return sp.diags(np.sqrt(np.arange(1.0, n)), 1, format="csr", dtype=complex)


def mode_operators(cfg):
    """Two-mode ladder and quadrature operators as sparse matrices."""
    cfg.validate()
    a1 = _ladder(cfg.n_at)
    b1 = _ladder(cfg.n_m)
    ia = sp.identity(cfg.n_at, format="csr", dtype=complex)
    im = sp.identity(cfg.n_m, format="csr", dtype=complex)
    a_at = sp.kron(a1, im, format="csr")
    a_m = sp.kron(ia, b1, format="csr")
    s = 1 / np.sqrt(2)
    return {
        "a_at": a_at,
        "a_m": a_m,
        "x_at": (s * (a_at + a_at.conj().T)).tocsr(),
        "p_at": (-1j * s * (a_at - a_at.conj().T)).tocsr(),
        "x_m": (s * (a_m + a_m.conj().T)).tocsr(),
        "p_m": (-1j * s * (a_m - a_m.conj().T)).tocsr(),
    }


@dataclass
class Liouvillian:
    """Sparse superoperator of side dim**2 plus solver metadata."""

    matrix: sp.csr_matrix
    dim: int
    n_at: int
    n_m: int
    cfg: FockConfig
    prec_parts: tuple = field(repr=False, default=None)  # (S_at, S_m, shift)


@dataclass
class DensityMatrix:
    rho: np.ndarray  # (dim, dim) complex, Hermitian
    n_at: int
    n_m: int


def _single_mode_super(n, omega, jumps):
    """Dense one-mode generator used to build the solver preconditioner."""
    eye = np.eye(n, dtype=complex)
    h = omega * np.diag(np.arange(n, dtype=complex))
    s = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c, w in jumps:
        cd = c.conj().T
        cdc = cd @ c
        s += w * (np.kron(c.conj(), c)
                  - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye))
    return s


def build_liouvillian(m, cfg, cascade_scale=1.0):
    """Assemble the full generator for ModelParams m on the truncated space.

    The directional term has the transmitted weight t g / 2; together with
    the symmetric Hamiltonian coupling it leaves the membrane driven with
    the reduced strength r g, the moment-level image of the asymmetry.

    cascade_scale multiplies that term alone; 1.0 is the physical value.
    It exists as a fault-injection hook for the verification command.
    """
    cfg.validate()
    ops = mode_operators(cfg)
    a, b = ops["a_at"], ops["a_m"]
    xa, xm = ops["x_at"], ops["x_m"]
    dim = cfg.n_at * cfg.n_m
    eye = sp.identity(dim, format="csr", dtype=complex)

    def left(op):
        return sp.kron(eye, op)

    def right(op):
        return sp.kron(op.T, eye)

    def sandwich(op_l, op_r):  # rho -> op_l rho op_r
        return sp.kron(op_r.T, op_l)

    def dissipator(c, w):
        cd = c.conj().T
        cdc = (cd @ c).tocsr()
        return w * (sandwich(c, cd) - 0.5 * left(cdc) - 0.5 * right(cdc))

    h = (m.omega_at * (a.conj().T @ a) + m.omega_m * (b.conj().T @ b)
         + m.g * (xa @ xm))
    liou = -1j * (left(h) - right(h))
    # model rates multiply (1/2) D[c] with D[c] = 2 c rho c^dag - ...; the
    # half and the two cancel against the standard dissipator used here
    liou = liou + dissipator(a, m.gamma_cool)
    liou = liou + dissipator(xa, m.gamma_diff_at)
    liou = liou + dissipator(b, m.gamma_m * (m.nbar + 1.0))
    liou = liou + dissipator(b.conj().T, m.gamma_m * m.nbar)
    liou = liou + dissipator(xm, m.gamma_diff_m)
    # Directional term: i s ([x_m, x_at rho] - [rho x_at, x_m])
    s = cascade_scale * m.transmittivity * m.g / 2
    liou = liou + 1j * s * (left((xm @ xa).tocsr()) - sandwich(xa, xm)
                            + sandwich(xm, xa) - right((xa @ xm).tocsr()))
    liou = liou.tocsr()

    norm = np.sqrt((np.abs(liou.data) ** 2).sum())
    trace_row = _trace_vector(dim) @ liou
    trace_norm = np.sqrt((np.abs(trace_row.data) ** 2).sum()) if trace_row.nnz else 0.0
    if trace_norm > 1e-10 * norm:
        raise NumericalError(
            f"generator does not annihilate the trace functional: "
            f"{trace_norm:.3e} vs {norm:.3e}")

    a1 = _ladder(cfg.n_at).toarray()
    b1 = _ladder(cfg.n_m).toarray()
    x1a = (a1 + a1.conj().T) / np.sqrt(2)
    x1m = (b1 + b1.conj().T) / np.sqrt(2)
    s_at = _single_mode_super(cfg.n_at, m.omega_at, [
        (a1, m.gamma_cool), (x1a, m.gamma_diff_at)])
    s_m = _single_mode_super(cfg.n_m, m.omega_m, [
        (b1, m.gamma_m * (m.nbar + 1.0)),
        (b1.conj().T, m.gamma_m * m.nbar),
        (x1m, m.gamma_diff_m)])
    shift = 0.5 * max(m.gamma_cool, m.gamma_m, 0.02)
    return Liouvillian(matrix=liou, dim=dim, n_at=cfg.n_at, n_m=cfg.n_m,
                       cfg=cfg, prec_parts=(s_at, s_m, shift))


def _trace_vector(dim):
    cols = np.arange(0, dim * dim, dim + 1)
    return sp.csr_matrix(
        (np.ones(dim), (np.zeros(dim, dtype=int), cols)),
        shape=(1, dim * dim), dtype=complex)


class _KronPrec:
    """Approximate inverse of the decoupled, shifted generator.

    Diagonalizes the two single-mode superoperators once; each apply is a
    pair of dense basis changes plus an elementwise divide in the
    (atom-superindex, membrane-superindex) layout.
    """

    def __init__(self, s_at, s_m, n_at, n_m, shift):
        self.n_at, self.n_m = n_at, n_m
        da, va = np.linalg.eig(s_at)
        dm, vm = np.linalg.eig(s_m)
        self.va, self.vai = va, np.linalg.inv(va)
        self.vm, self.vmi = vm, np.linalg.inv(vm)
        self.denom = da[:, None] + dm[None, :] - shift

    def apply(self, y):
        na, nm = self.n_at, self.n_m
        yy = (y.reshape(na, nm, na, nm).transpose(0, 2, 1, 3)
              .reshape(na * na, nm * nm))
        w = self.vai @ yy @ self.vmi.T
        w = w / self.denom
        z = self.va @ w @ self.vm.T
        return (z.reshape(na, na, nm, nm).transpose(0, 2, 1, 3)
                .reshape(na * nm * na * nm))


def _replace_row(liou, row, dim):
    tr = _trace_vector(dim)
    side = dim * dim
    if row == 0:
        m = sp.vstack([tr, liou.matrix[1:]], format="csr")
    else:
        m = sp.vstack(
            [liou.matrix[:row], tr, liou.matrix[row + 1:]], format="csr")
    rhs = np.zeros(side, dtype=complex)
    rhs[row] = 1.0
    return m, rhs


def _solve_iterative(liou, row):
    m, rhs = _replace_row(liou, row, liou.dim)
    s_at, s_m, shift = liou.prec_parts
    prec = _KronPrec(s_at, s_m, liou.n_at, liou.n_m, shift)
    side = liou.dim ** 2
    op = LinearOperator((side, side), matvec=prec.apply, dtype=complex)
    x, info = lgmres(m, rhs, M=op, rtol=1e-13, atol=1e-13,
                     maxiter=500, inner_m=40)
    if info != 0:
        raise NumericalError(
            f"iterative steady-state solve stalled (info={info}); the kernel "
            "may be degenerate or the truncation too aggressive")
    return x


def steady_state_fock(liou, method="auto"):
    """Null vector of the generator, normalized to unit trace.

    Small problems go through a dense factorization with the kernel
    uniqueness read off the singular spectrum (second-smallest singular
    value must exceed 1e3 times the smallest).  Larger ones use a
    preconditioned iterative solve; uniqueness is then cross-checked by
    replacing two different population rows with the trace constraint and
    demanding the same answer.
    """
    dim = liou.dim
    side = dim * dim
    if method == "auto":
        if side <= 1296:
            method = "dense-svd"
        elif dim <= 64:
            method = "dense"
        else:
            method = "iterative"

    if method == "dense-svd":
        dense = liou.matrix.toarray()
        sv = np.linalg.svd(dense, compute_uv=False)
        if not sv[-2] > 1e3 * sv[-1]:
            raise DegenerateKernel(
                f"singular values {sv[-1]:.3e}, {sv[-2]:.3e} do not isolate "
                "a one-dimensional kernel")
        m, rhs = _replace_row(liou, 0, dim)
        vec = np.linalg.solve(m.toarray(), rhs)
    elif method in ("dense", "iterative"):
        sols = []
        for row in (0, dim + 1):  # two different population equations
            if method == "dense":
                m, rhs = _replace_row(liou, row, dim)
                try:
                    sols.append(np.linalg.solve(m.toarray(), rhs))
                except np.linalg.LinAlgError:
                    raise DegenerateKernel(
                        "trace-constrained system is singular")
            else:
                sols.append(_solve_iterative(liou, row))
        dev = np.linalg.norm(sols[0] - sols[1]) / np.linalg.norm(sols[0])
        if dev > 1e-8:
            raise DegenerateKernel(
                f"steady state depends on the replaced row (rel {dev:.3e}); "
                "kernel is not one-dimensional")
        vec = sols[0]
    else:
        raise InvalidInput(f"unknown method {method!r}")

    rho = vec.reshape(dim, dim, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise NumericalError(f"trace {np.trace(rho):.12f} not 1")
    mineig = np.linalg.eigvalsh(rho).min()
    if mineig < -1e-9:
        raise NumericalError(f"steady state has eigenvalue {mineig:.3e}")
    residual = np.linalg.norm(liou.matrix @ rho.reshape(side, order="F"))
    if residual > 1e-9:
        raise NumericalError(f"steady-state residual {residual:.3e}")
    out = DensityMatrix(rho=rho, n_at=liou.n_at, n_m=liou.n_m)
    _check_leak(out, liou.cfg.leak_tol)
    return out


def level_populations(dm):
    """Marginal number-state populations of each mode."""
    pops = np.diag(dm.rho).real.reshape(dm.n_at, dm.n_m)
    return pops.sum(axis=1), pops.sum(axis=0)


def _check_leak(dm, leak_tol):
    pop_at, pop_m = level_populations(dm)
    leak = max(pop_at[-2:].sum(), pop_m[-2:].sum())
    if leak >= leak_tol:
        raise TruncationLeak(
            f"top-two-level population {leak:.3e} >= leak_tol {leak_tol:.1e}; "
            "increase n_at/n_m")


def _spectral_radius_estimate(matrix, iters=25):
    rng = np.random.default_rng(0)
    v = rng.standard_normal(matrix.shape[0]) + 1j * rng.standard_normal(matrix.shape[0])
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(iters):
        w = matrix @ v
        rho = np.linalg.norm(w)
        if rho == 0:
            return 0.0
        v = w / rho
    return rho


def evolve_fock(liou, rho0, t, dt):
    """Fixed-step RK4 on the vectorized density matrix.

    Hermiticity is restored by symmetrization after every step; trace is
    conserved by the generator and checked at the end.  dt must satisfy
    dt * spectral_radius <= 0.1 (radius estimated by power iteration).
    """
    if dt <= 0:
        raise NonPositiveInput(f"dt must be > 0, got {dt}")
    if t < 0:
        raise NonPositiveInput(f"t must be >= 0, got {t}")
    rho_in = rho0.rho if isinstance(rho0, DensityMatrix) else np.asarray(rho0)
    dim = liou.dim
    if rho_in.shape != (dim, dim):
        raise InvalidInput(f"rho0 shape {rho_in.shape} does not match dim {dim}")
    radius = _spectral_radius_estimate(liou.matrix)
    if dt * radius > 0.1:
        raise StepTooLarge(
            f"dt * spectral_radius(L) = {dt * radius:.3e} exceeds 0.1")
    trace0 = np.trace(rho_in).real
    v = rho_in.reshape(dim * dim, order="F").astype(complex)

    n_full = int(t / dt)
    remainder = t - n_full * dt
    steps = [dt] * n_full
    if remainder > 1e-12 * max(t, dt):
        steps.append(remainder)
    mat = liou.matrix
    for h in steps:
        k1 = mat @ v
        k2 = mat @ (v + 0.5 * h * k1)
        k3 = mat @ (v + 0.5 * h * k2)
        k4 = mat @ (v + h * k3)
        v = v + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = v.reshape(dim, dim, order="F")
        rho = 0.5 * (rho + rho.conj().T)
        v = rho.reshape(dim * dim, order="F")
    rho = v.reshape(dim, dim, order="F")
    drift = abs(np.trace(rho).real - trace0)
    if drift > 1e-8:
        raise NumericalError(f"trace drifted by {drift:.3e}")
    return DensityMatrix(rho=rho, n_at=liou.n_at, n_m=liou.n_m)


def moments(dm):
    """Means and symmetrized covariances of the four quadratures."""
    cfg = FockConfig(n_at=dm.n_at, n_m=dm.n_m)
    ops = mode_operators(cfg)
    quads = [ops["x_at"], ops["p_at"], ops["x_m"], ops["p_m"]]
    mean = np.array([(op @ dm.rho).trace().real for op in quads])
    cov = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            sym = 0.5 * (quads[i] @ quads[j] + quads[j] @ quads[i])
            cov[i, j] = cov[j, i] = (sym @ dm.rho).trace().real - mean[i] * mean[j]
    return GaussianState(mean=mean, cov=cov)


@dataclass
class ConvergenceReport:
    base: DensityMatrix
    check: DensityMatrix
    occ: tuple          # (atom, membrane) at the requested dims
    occ_check: tuple    # same at 1.5x dims
    delta: float
    converged: bool


def truncation_convergence(m, cfg, method="auto"):
    """Solve at cfg dims and at 1.5x dims; flag runs that moved > 1e-4."""
    big = FockConfig(n_at=math.ceil(1.5 * cfg.n_at), n_m=math.ceil(1.5 * cfg.n_m),
                     leak_tol=cfg.leak_tol, cap=cfg.cap)
    dms = [steady_state_fock(build_liouvillian(m, c), method=method)
           for c in (cfg, big)]
    occs = []
    for dm in dms:
        n_at_op = (mode_operators(FockConfig(dm.n_at, dm.n_m))["a_at"])
        n_m_op = (mode_operators(FockConfig(dm.n_at, dm.n_m))["a_m"])
        occ_at = ((n_at_op.conj().T @ n_at_op) @ dm.rho).trace().real
        occ_m = ((n_m_op.conj().T @ n_m_op) @ dm.rho).trace().real
        occs.append((occ_at, occ_m))
    delta = max(abs(occs[0][0] - occs[1][0]), abs(occs[0][1] - occs[1][1]))
    return ConvergenceReport(base=dms[0], check=dms[1], occ=occs[0],
                             occ_check=occs[1], delta=delta,
                             converged=bool(delta < 1e-4))
