"""End-to-end transfer function of the RIS-aided link.

The RIS enters only through ``Z_SE = Z_SS + diag(R0 + j x)``.  Its inverse is
never formed: one LU factorization per load vector serves the coupling
scalars, the objective and the gradient.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .em_model import ImpedanceSet
from .errors import ConfigError, DegenerateChannelError, SingularImpedanceError
from .metrics import MultCounter

log = logging.getLogger(__name__)

NEAR_SINGULAR_COND = 1e14


@dataclass(frozen=True, eq=False)
class RisLoad:
    """Tunable RIS loads ``r0 + 1j * x`` with ``x`` boxed to ``bounds``."""

    r0: float
    x: np.ndarray
    bounds: tuple[float, float] = (-1e4, 1e4)

    def __post_init__(self):
        lo, hi = (float(b) for b in self.bounds)
        if not lo < hi:
            raise ConfigError(f"bounds must satisfy z_min < z_max, got {self.bounds}")
        if not self.r0 >= 0:
            raise ConfigError(f"r0 must be non-negative, got {self.r0}")
        x = np.array(self.x, dtype=float).reshape(-1)
        if np.any(x < lo) or np.any(x > hi) or not np.all(np.isfinite(x)):
            raise ConfigError("load reactances outside the feasible box")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "bounds", (lo, hi))
        object.__setattr__(self, "r0", float(self.r0))

    @property
    def z_ris(self) -> np.ndarray:
        return self.r0 + 1j * self.x

    def with_x(self, x) -> RisLoad:
        return RisLoad(self.r0, x, self.bounds)


class ZseFactorization:
    """LU factorization of the equivalent RIS impedance matrix."""

    def __init__(self, iset: ImpedanceSet, load: RisLoad, counter: MultCounter | None = None):
        n = iset.n_ris
        if load.x.size != n:
            raise ValueError(f"load has {load.x.size} entries, RIS has {n}")
        z_se = iset.z_ss + np.diag(load.z_ris)
        self.n = n
        self.counter = counter
        with warnings.catch_warnings():
            # exact singularity is reported below as an exception
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(z_se, check_finite=False)
        if counter is not None:
            counter.factorization(n)
        diag = np.diag(lu)
        if np.any(diag == 0):
            raise SingularImpedanceError("Z_SE is exactly singular")
        self._lu = (lu, piv)
        anorm = np.linalg.norm(z_se, 1)
        rcond, info = sla.lapack.zgecon(lu, anorm, norm="1")
        self.rcond = float(rcond) if info == 0 else 0.0
        self.near_singular = not self.rcond > 1 / NEAR_SINGULAR_COND
        if self.near_singular:
            log.debug("Z_SE near singular (rcond %.3e)", self.rcond)

    @property
    def condition_estimate(self) -> float:
        return np.inf if self.rcond == 0 else 1 / self.rcond

    def solve(self, b: np.ndarray) -> np.ndarray:
        """``Z_SE^-1 b``."""
        return self._solve(b, 0)

    def solve_transposed(self, b: np.ndarray) -> np.ndarray:
        """``Z_SE^-T b``, i.e. the row vector ``b^T Z_SE^-1`` as a column."""
        return self._solve(b, 1)

    def _solve(self, b, trans):
        b = np.asarray(b, dtype=complex)
        if self.counter is not None:
            self.counter.lu_solve(self.n, 1 if b.ndim == 1 else b.shape[1])
        return sla.lu_solve(self._lu, b, trans=trans, check_finite=False)


def z_se(iset: ImpedanceSet, load: RisLoad, counter: MultCounter | None = None) -> ZseFactorization:
    return ZseFactorization(iset, load, counter)


def _rows(iset):
    return {"T": iset.z_ts, "R": iset.z_rs}


def _self_terms(iset):
    return {("T", "T"): iset.z_tt, ("R", "R"): iset.z_rr, ("T", "R"): iset.z_tr, ("R", "T"): iset.z_tr}


def phi(iset: ImpedanceSet, zse: ZseFactorization, k: str, l: str) -> complex:
    """Coupled impedance ``z_KL - z_KS Z_SE^-1 z_SL`` for ports K, L in {'T', 'R'}."""
    rows = _rows(iset)
    if k not in rows or l not in rows:
        raise ValueError("ports must be 'T' or 'R'")
    col = zse.solve(rows[l])
    if zse.counter is not None:
        zse.counter.add("objective", zse.n)
    return complex(_self_terms(iset)[k, l] - rows[k] @ col)


@dataclass(frozen=True, eq=False)
class ChannelEval:
    factorization: ZseFactorization
    phi_tt: complex
    phi_rr: complex
    phi_tr: complex
    z_tilde_t: complex
    z_tilde_r: complex
    h_e2e: complex
    a: complex
    objective: float
    # Z_SE^-1 z_SR and Z_SE^-1 z_ST, reused by the gradient
    v: np.ndarray
    p: np.ndarray

    @property
    def near_singular(self) -> bool:
        return self.factorization.near_singular


def transfer_function(iset: ImpedanceSet, load: RisLoad, counter: MultCounter | None = None) -> ChannelEval:
    fac = ZseFactorization(iset, load, counter)
    n = iset.n_ris
    both = fac.solve(np.column_stack([iset.z_sr, iset.z_st]))
    v, p = both[:, 0], both[:, 1]
    phi_tr = iset.z_tr - iset.z_ts @ v
    phi_tt = iset.z_tt - iset.z_ts @ p
    phi_rr = iset.z_rr - iset.z_rs @ v
    z_t = iset.z_g + phi_tt
    z_r = iset.z_l + phi_rr
    denom = z_t * z_r - phi_tr * phi_tr
    if denom == 0:
        raise DegenerateChannelError("z~_T z~_R - phi_TR^2 vanished")
    a = 1 / denom
    h = iset.z_l * phi_tr * a
    if counter is not None:
        # three inner products, then z_t*z_r, phi^2, z_l*phi, *a, |h|^2
        counter.add("objective", 3 * n + 5)
    return ChannelEval(
        factorization=fac, phi_tt=complex(phi_tt), phi_rr=complex(phi_rr), phi_tr=complex(phi_tr),
        z_tilde_t=complex(z_t), z_tilde_r=complex(z_r), h_e2e=complex(h), a=complex(a),
        objective=float(abs(h) ** 2), v=v, p=p,
    )


def objective(iset: ImpedanceSet, load: RisLoad) -> float:
    return transfer_function(iset, load).objective


def approx_transfer_function(iset: ImpedanceSet, load: RisLoad) -> complex:
    """Receiver-side approximation ``Y0 * phi_RT`` with ``Y0 = z_L / ((z_L+z_RR)(z_G+z_TT))``."""
    zl_rr = iset.z_l + iset.z_rr
    zg_tt = iset.z_g + iset.z_tt
    if zl_rr == 0 or zg_tt == 0:
        raise DegenerateChannelError("z_L + z_RR or z_G + z_TT vanished")
    y0 = iset.z_l / zl_rr / zg_tt
    fac = ZseFactorization(iset, load)
    phi_rt = iset.z_tr - iset.z_rs @ fac.solve(iset.z_st)
    return complex(y0 * phi_rt)


def phi_tr_bound(iset: ImpedanceSet, r0: float) -> float:
    """``|z_TR| + ||z_TS|| ||z_SR|| / R0``.

    Only a heuristic for complex symmetric ``Z_SS``; the optimizer logs it as a
    diagnostic and never enforces it.
    """
    if r0 == 0:
        return np.inf
    return float(abs(iset.z_tr) + np.linalg.norm(iset.z_ts) * np.linalg.norm(iset.z_sr) / r0)
