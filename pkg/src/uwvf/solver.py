"""Block Jacobi preconditioned BiCGstab for (I - D^-1 C) x = D^-1 b."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .assembly import SystemOperators, apply_C


class FactorizationError(np.linalg.LinAlgError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, x=None, report=None):
        super().__init__(message)
        self.x = x
        self.report = report


@dataclass
class FactoredD:
    factors: list  # ("chol", cho_factor) or ("lu", lu_factor) per element
    offsets: np.ndarray

    def solve(self, y: np.ndarray) -> np.ndarray:
        out = np.empty_like(y)
        for e, (kind, fac) in enumerate(self.factors):
            s = slice(int(self.offsets[e]), int(self.offsets[e + 1]))
            if kind == "chol":
                out[s] = sla.cho_solve(fac, y[s], check_finite=False)
            else:
                out[s] = sla.lu_solve(fac, y[s], check_finite=False)
        return out

    def nbytes(self) -> int:
        return sum(f[0].nbytes + (f[1].nbytes if kind == "lu" else 0) for kind, f in self.factors)


def factor_D(D_blocks, offsets=None, allow_lu: bool = True, release: bool = False) -> FactoredD:
    """Cholesky factor every block, falling back to pivoted LU with a warning.

    With ``release`` each entry of the list ``D_blocks`` is replaced by None
    once factored, so D and its factors never coexist in full.
    """
    if offsets is None:
        offsets = np.concatenate([[0], np.cumsum([len(b) for b in D_blocks])])
    factors = []
    for e in range(len(D_blocks)):
        blk = D_blocks[e]
        try:
            factors.append(("chol", sla.cho_factor(blk, lower=False, check_finite=True)))
        except np.linalg.LinAlgError:
            cond = np.linalg.cond(blk)
            if not allow_lu:
                raise FactorizationError(f"D block of element {e} is not positive definite (cond ~ {cond:.3e})")
            warnings.warn(f"D block of element {e} not positive definite (cond ~ {cond:.3e}); using LU",
                          RuntimeWarning, stacklevel=2)
            factors.append(("lu", sla.lu_factor(blk)))
        if release:
            D_blocks[e] = None
        del blk
    return FactoredD(factors, np.asarray(offsets))


def apply_C_stored(ops: SystemOperators, x: np.ndarray) -> np.ndarray:
    if x.shape != (ops.n_dof,):
        raise ValueError(f"vector of length {ops.n_dof} expected, got {x.shape}")
    off = ops.offsets
    y = np.zeros(ops.n_dof, dtype=complex)
    for (i, j), blk in ops.C.items():
        y[off[i]:off[i + 1]] += blk @ x[off[j]:off[j + 1]]
    return y


def apply_C_matrix_free(mesh, bases, offsets, x: np.ndarray, order=None, quadrature=False,
                        threads: int = 1) -> np.ndarray:
    """C x without materialising C; at most one face block lives at a time."""
    n = int(offsets[-1])
    if x.shape != (n,):
        raise ValueError(f"vector of length {n} expected, got {x.shape}")
    return apply_C(mesh, bases, x, offsets, order, quadrature, threads)


def matvec_stored(ops: SystemOperators, fD: FactoredD, x: np.ndarray) -> np.ndarray:
    """D^-1 C x from stored blocks."""
    return fD.solve(apply_C_stored(ops, x))


def matvec_matrix_free(mesh, bases, ops: SystemOperators, fD: FactoredD, x: np.ndarray,
                       threads: int = 1) -> np.ndarray:
    """D^-1 C x without materialising C."""
    y = apply_C_matrix_free(mesh, bases, ops.offsets, x, ops.quadrature_order, ops.force_quadrature, threads)
    return fD.solve(y)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    mode: str
    wall_time: float
    converged: bool = True
    restarts: int = 0
    history: list | None = None


def bicgstab(apply: Callable[[np.ndarray], np.ndarray], rhs, tol: float = 1e-5, max_iter: int = 5000,
             x0=None, mode: str = "stored", raise_on_failure: bool = True):
    """Solve apply(x) = rhs; returns (x, SolveReport).

    Convergence is declared on the true residual ||rhs - apply(x)|| / ||rhs||.
    A breakdown restarts once with a perturbed shadow vector.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    t0 = time.perf_counter()
    b = np.asarray(rhs, dtype=complex)
    nb = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=complex)
    if nb == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, mode, time.perf_counter() - t0)
    r = b - apply(x) if x0 is not None else b.copy()
    res = np.linalg.norm(r) / nb
    history = [res]
    if res <= tol:
        return x, SolveReport(0, res, mode, time.perf_counter() - t0, history=history)
    rng = np.random.default_rng(12345)
    r_hat = r.copy()
    restarts = 0
    rho = alpha = omega = 1.0 + 0j
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    it = 0
    tiny = np.finfo(float).eps ** 2
    while it < max_iter:
        rho_new = np.vdot(r_hat, r)
        if abs(rho_new) < tiny * np.linalg.norm(r_hat) * np.linalg.norm(r) or abs(omega) == 0.0:
            if restarts >= 1:
                break
            restarts += 1
            r = b - apply(x)
            r_hat = r + 1e-3 * np.linalg.norm(r) / np.sqrt(len(r)) * (
                rng.standard_normal(len(r)) + 1j * rng.standard_normal(len(r)))
            rho = alpha = omega = 1.0 + 0j
            v[:] = 0.0
            p[:] = 0.0
            continue
        if it == 0 or np.all(p == 0):
            p = r.copy()
        else:
            beta = (rho_new / rho) * (alpha / omega)
            p = r + beta * (p - omega * v)
        rho = rho_new
        v = apply(p)
        alpha = rho / np.vdot(r_hat, v)
        s = r - alpha * v
        it += 1
        if np.linalg.norm(s) / nb <= tol:
            x_try = x + alpha * p
            true = np.linalg.norm(b - apply(x_try)) / nb
            if true <= tol:
                history.append(true)
                return x_try, SolveReport(it, true, mode, time.perf_counter() - t0, True, restarts, history)
        t = apply(s)
        tt = np.vdot(t, t).real
        omega = np.vdot(t, s) / tt if tt > 0 else 0.0
        x = x + alpha * p + omega * s
        r = s - omega * t
        res = np.linalg.norm(r) / nb
        history.append(res)
        if res <= tol:
            r = b - apply(x)
            res = np.linalg.norm(r) / nb
            if res <= tol:
                return x, SolveReport(it, res, mode, time.perf_counter() - t0, True, restarts, history)
    res = np.linalg.norm(b - apply(x)) / nb
    report = SolveReport(it, res, mode, time.perf_counter() - t0, res <= tol, restarts, history)
    if res <= tol:
        return x, report
    msg = f"BiCGstab stopped after {it} iterations at relative residual {res:.3e}"
    if raise_on_failure:
        raise ConvergenceError(msg, x, report)
    warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return x, report


# ---------------------------------------------------------------------------
# ordering


def bandwidth(adjacency, perm=None) -> int:
    A = adjacency.tocoo()
    if A.nnz == 0:
        return 0
    if perm is None:
        return int(np.max(np.abs(A.row - A.col)))
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return int(np.max(np.abs(inv[A.row] - inv[A.col])))


def rcm_order(mesh) -> np.ndarray:
    """Reverse Cuthill-McKee element permutation; never worse than the identity."""
    adj = mesh.adjacency()
    perm = np.asarray(reverse_cuthill_mckee(adj, symmetric_mode=True), dtype=np.int64)
    if bandwidth(adj, perm) > bandwidth(adj):
        return np.arange(mesh.n_elements)
    return perm


def dof_permutation(perm, offsets) -> np.ndarray:
    """Unknown indices listed element by element in the order ``perm``."""
    return np.concatenate([np.arange(offsets[e], offsets[e + 1]) for e in perm]).astype(np.int64)


# ---------------------------------------------------------------------------
# driver


def solve(ops: SystemOperators, mode: str = "stored", mesh=None, bases=None, tol: float = 1e-5,
          max_iter: int = 5000, reorder: bool = True, threads: int = 1, raise_on_failure: bool = True,
          release_D: bool = False):
    """Solve the system; returns (x, SolveReport, FactoredD).

    ``release_D`` frees the D blocks of ``ops`` as they are factored.
    """
    if mode not in ("stored", "matrix_free"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "matrix_free" and (mesh is None or bases is None):
        raise ValueError("matrix-free mode needs the mesh and bases")
    fD = factor_D(ops.D, ops.offsets, release=release_D)
    if mode == "stored":
        def mv(x):
            return matvec_stored(ops, fD, x)
    else:
        def mv(x):
            return matvec_matrix_free(mesh, bases, ops, fD, x, threads)

    rhs = fD.solve(ops.b)
    if reorder and mesh is not None:
        idx = dof_permutation(rcm_order(mesh), ops.offsets)
    else:
        idx = np.arange(ops.n_dof)

    def apply(xp):
        x = np.empty_like(xp)
        x[idx] = xp
        return xp - mv(x)[idx]

    xp, report = bicgstab(apply, rhs[idx], tol, max_iter, mode=mode, raise_on_failure=raise_on_failure)
    x = np.empty_like(xp)
    x[idx] = xp
    return x, report, fD
