"""Exact gradient of the received power with respect to the load reactances.

With ``a = 1/(z~_T z~_R - phi_TR^2)`` the differential of the transfer
function is ``dh = sum_s E[s, s] dz_RIS[s]`` where

    E = z_L a Z_SE^-1 ((2 a phi_TR^2 + 1) z_SR z_TS
                       - a phi_TR z~_R z_ST z_TS
                       - a phi_TR z~_T z_SR z_RS) Z_SE^-1

Only the diagonal of E is needed.  Each outer product sandwiched between two
inverses has diagonal ``(Z^-1 c) * (Z^-T r)``, so four solves against the
shared factorization replace the dense triple product.  Because only the
imaginary part of the load moves, ``grad = 2 Im(h * conj(diag E))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelEval
from .em_model import ImpedanceSet


@dataclass(frozen=True, eq=False)
class GradientEval:
    e_diag: np.ndarray
    grad: np.ndarray


def e_diagonal(ceval: ChannelEval, iset: ImpedanceSet) -> np.ndarray:
    fac = ceval.factorization
    rows = fac.solve_transposed(np.column_stack([iset.z_ts, iset.z_rs]))
    u, q = rows[:, 0], rows[:, 1]
    v, p = ceval.v, ceval.p
    a, phi = ceval.a, ceval.phi_tr
    c_tr = 2 * a * phi * phi + 1
    c_tt = a * phi * ceval.z_tilde_r
    c_rr = a * phi * ceval.z_tilde_t
    if fac.counter is not None:
        # 3 elementwise products, 3 scalings, 1 final scaling, plus scalar coefficients
        fac.counter.add("gradient", 7 * fac.n + 7)
    return iset.z_l * a * (c_tr * (v * u) - c_tt * (p * u) - c_rr * (v * q))


def gradient(ceval: ChannelEval, iset: ImpedanceSet) -> GradientEval:
    e = e_diagonal(ceval, iset)
    if ceval.factorization.counter is not None:
        ceval.factorization.counter.add("gradient", e.size)
    grad = 2 * np.imag(ceval.h_e2e * np.conj(e))
    return GradientEval(e_diag=e, grad=grad)
