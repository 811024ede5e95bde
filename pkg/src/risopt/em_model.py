"""Thin-wire dipole geometry and impedance synthesis.

All dipoles are parallel to the z-axis.  Mutual and self impedances are
computed with the induced-EMF method for a sinusoidal current distribution,

    z_qp = j*eta/(4*pi*sin(k*h_p)*sin(k*h_q))
           * int_{-h_q}^{h_q} [exp(-jkR1)/R1 + exp(-jkR2)/R2
                               - 2*cos(k*h_p)*exp(-jkR0)/R0] * sin(k*(h_q-|s|)) ds

where h = l/2 and R0, R1, R2 are the distances from the field point on
dipole q to the centre and the two ends of dipole p.  The integral is done by
composite Gauss-Legendre quadrature, split at every point where the kernel
peaks, with node doubling until the relative change drops below ``rtol``.

RIS elements are stored row-major with y varying fastest: element
``row * cols + col`` sits at ``(0, y_col, z_row)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import epsilon_0, mu_0

from .errors import ConfigError, ImpedanceFileError, QuadratureError

if TYPE_CHECKING:
    from .config import ScenarioConfig

ETA_0 = math.sqrt(mu_0 / epsilon_0)

DEFAULT_NODES = 64
MAX_NODES = 1024
DEFAULT_RTOL = 1e-9
# upper bound on (pairs x subintervals x nodes) evaluated in one numpy batch
_BATCH_POINTS = 1 << 21

_leggauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _leggauss_cache:
        _leggauss_cache[n] = np.polynomial.legendre.leggauss(n)
    return _leggauss_cache[n]


@dataclass(frozen=True)
class Dipole:
    """A z-directed thin-wire dipole."""

    center: tuple[float, float, float]
    length: float
    radius: float

    def __post_init__(self):
        center = tuple(float(v) for v in self.center)
        if len(center) != 3 or not all(math.isfinite(v) for v in center):
            raise ConfigError(f"dipole center must be a finite 3-vector, got {self.center!r}")
        object.__setattr__(self, "center", center)
        if not self.length > 0 or not self.radius > 0:
            raise ConfigError("dipole length and radius must be positive")
        if not self.radius < self.length / 10:
            raise ConfigError(
                f"thin-wire model needs radius < length/10 (radius={self.radius}, length={self.length})"
            )

    @property
    def half_length(self) -> float:
        return self.length / 2

    @property
    def orientation(self) -> tuple[float, float, float]:
        return (0.0, 0.0, 1.0)


def _check_no_overlap(dipoles: Sequence[Dipole]) -> None:
    centers = np.array([d.center for d in dipoles])
    halves = np.array([d.half_length for d in dipoles])
    radii = np.array([d.radius for d in dipoles])
    diff = centers[:, None, :] - centers[None, :, :]
    rho = np.hypot(diff[..., 0], diff[..., 1])
    dz = np.abs(diff[..., 2])
    n = len(dipoles)
    off = ~np.eye(n, dtype=bool)
    if np.any(off & (rho == 0) & (dz == 0)):
        raise ConfigError("two dipoles share the same center")
    # wires closer than their radii are collinear; they may touch end-to-end but not overlap
    collinear = rho < radii[:, None] + radii[None, :]
    reach = (halves[:, None] + halves[None, :]) * (1 - 1e-12)
    if np.any(off & collinear & (dz < reach)):
        raise ConfigError("collinear dipoles overlap along z")


@dataclass(frozen=True)
class Scenario:
    tx: Dipole
    rx: Dipole
    ris_elements: tuple[Dipole, ...]
    wavelength: float
    z_g: complex
    z_l: complex

    def __post_init__(self):
        object.__setattr__(self, "ris_elements", tuple(self.ris_elements))
        if not self.ris_elements:
            raise ConfigError("scenario needs at least one RIS element")
        if not self.wavelength > 0:
            raise ConfigError("wavelength must be positive")
        if any(d.center[0] != 0.0 for d in self.ris_elements):
            raise ConfigError("RIS elements must lie in the x = 0 plane")
        _check_no_overlap((self.tx, self.rx, *self.ris_elements))

    @property
    def n_ris(self) -> int:
        return len(self.ris_elements)

    @property
    def frequency(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    def translated(self, offset: Sequence[float]) -> Scenario:
        """Rigidly shift TX, RX and the RIS; the RIS must stay in x = 0."""

        def move(d: Dipole) -> Dipole:
            return Dipole(tuple(c + o for c, o in zip(d.center, offset)), d.length, d.radius)

        return Scenario(
            move(self.tx), move(self.rx), tuple(move(d) for d in self.ris_elements),
            self.wavelength, self.z_g, self.z_l,
        )


@dataclass(frozen=True, eq=False)
class ImpedanceSet:
    """Every fixed impedance of the link (Ohm).

    ``z_ts``/``z_rs`` are the TX/RX-to-RIS rows; by reciprocity the
    RIS-to-TX/RX columns ``z_st``/``z_sr`` are the same numbers.
    """

    z_tt: complex
    z_rr: complex
    z_tr: complex
    z_ts: np.ndarray
    z_rs: np.ndarray
    z_ss: np.ndarray
    z_g: complex = 50 + 50j
    z_l: complex = 50 + 50j

    def __post_init__(self):
        for name in ("z_tt", "z_rr", "z_tr", "z_g", "z_l"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        z_ts = np.array(self.z_ts, dtype=complex).reshape(-1)
        z_rs = np.array(self.z_rs, dtype=complex).reshape(-1)
        z_ss = np.array(self.z_ss, dtype=complex)
        n = z_ts.size
        if z_rs.size != n or z_ss.shape != (n, n) or n == 0:
            raise ValueError(
                f"inconsistent shapes: z_ts {z_ts.shape}, z_rs {z_rs.shape}, z_ss {z_ss.shape}"
            )
        check_reciprocity(z_ss)
        for arr in (z_ts, z_rs, z_ss):
            arr.flags.writeable = False
        object.__setattr__(self, "z_ts", z_ts)
        object.__setattr__(self, "z_rs", z_rs)
        object.__setattr__(self, "z_ss", z_ss)

    @property
    def n_ris(self) -> int:
        return self.z_ts.size

    @property
    def z_st(self) -> np.ndarray:
        return self.z_ts

    @property
    def z_sr(self) -> np.ndarray:
        return self.z_rs

    def replace(self, **changes) -> ImpedanceSet:
        fields = dict(
            z_tt=self.z_tt, z_rr=self.z_rr, z_tr=self.z_tr, z_ts=self.z_ts,
            z_rs=self.z_rs, z_ss=self.z_ss, z_g=self.z_g, z_l=self.z_l,
        )
        fields.update(changes)
        return ImpedanceSet(**fields)

    def __eq__(self, other):
        if not isinstance(other, ImpedanceSet):
            return NotImplemented
        scalars = ("z_tt", "z_rr", "z_tr", "z_g", "z_l")
        return all(getattr(self, s) == getattr(other, s) for s in scalars) and all(
            np.array_equal(getattr(self, a), getattr(other, a)) for a in ("z_ts", "z_rs", "z_ss")
        )


def check_reciprocity(z_ss: np.ndarray, rtol: float = 1e-12) -> None:
    scale = np.max(np.abs(z_ss)) if z_ss.size else 0.0
    gap = np.max(np.abs(z_ss - z_ss.T)) if z_ss.size else 0.0
    if gap > rtol * scale:
        raise ImpedanceFileError(
            f"Z_SS is not reciprocal: max |Z(q,p) - Z(p,q)| = {gap:.3e} (scale {scale:.3e})"
        )


# --------------------------------------------------------------------------
# induced-EMF kernel


def _emf_integral(rho, dz, hp, hq, k, n):
    """Composite Gauss-Legendre value of the induced-EMF integral.

    All geometric arguments are 1-D arrays over pairs.  ``dz`` is the centre
    of the receiving dipole q minus the centre of the source dipole p.
    """
    t, w = _leggauss(n)
    lo, hi = -hq[:, None], hq[:, None]
    peaks = np.stack([np.zeros_like(dz), -dz, -dz - hp, -dz + hp], axis=1)
    breaks = np.sort(np.concatenate([lo, hi, np.clip(peaks, lo, hi)], axis=1), axis=1)
    a, b = breaks[:, :-1], breaks[:, 1:]
    mid = (0.5 * (a + b))[..., None]
    half = (0.5 * (b - a))[..., None]
    s = mid + half * t
    zr = dz[:, None, None] + s
    rho2 = (rho * rho)[:, None, None]
    hp3 = hp[:, None, None]
    r0 = np.sqrt(rho2 + zr * zr)
    r1 = np.sqrt(rho2 + (zr - hp3) ** 2)
    r2 = np.sqrt(rho2 + (zr + hp3) ** 2)
    kernel = (
        np.exp(-1j * k * r1) / r1
        + np.exp(-1j * k * r2) / r2
        - 2 * np.cos(k * hp3) * np.exp(-1j * k * r0) / r0
    )
    current = np.sin(k * (hq[:, None, None] - np.abs(s)))
    return np.sum(kernel * current * (half * w), axis=(1, 2))


def _pair_impedances(rho, dz, hp, hq, k, nodes=DEFAULT_NODES, rtol=DEFAULT_RTOL, max_nodes=MAX_NODES):
    rho, dz, hp, hq = (np.asarray(v, dtype=float).reshape(-1) for v in (rho, dz, hp, hq))
    denom = np.sin(k * hp) * np.sin(k * hq)
    if np.any(np.abs(denom) < 1e-9):
        raise ConfigError("dipole length is a multiple of the wavelength; sinusoidal current model breaks down")
    out = np.empty(rho.size, dtype=complex)
    chunk = max(1, _BATCH_POINTS // (5 * max_nodes))
    for start in range(0, rho.size, chunk):
        sl = slice(start, start + chunk)
        out[sl] = _adaptive(rho[sl], dz[sl], hp[sl], hq[sl], k, nodes, rtol, max_nodes)
    return 1j * ETA_0 / (4 * np.pi) * out / denom


def _adaptive(rho, dz, hp, hq, k, nodes, rtol, max_nodes):
    result = np.empty(rho.size, dtype=complex)
    active = np.arange(rho.size)
    n = nodes
    prev = _emf_integral(rho, dz, hp, hq, k, n)
    residual = math.inf
    while True:
        n *= 2
        if n > max_nodes:
            raise QuadratureError(
                f"induced-EMF quadrature did not converge with {max_nodes} nodes per panel",
                residual,
            )
        idx = active
        cur = _emf_integral(rho[idx], dz[idx], hp[idx], hq[idx], k, n)
        gap = cur - prev
        bad = np.abs(gap) > rtol * np.abs(cur)
        result[idx[~bad]] = cur[~bad]
        if not bad.any():
            return result
        residual = float(np.max(np.abs(gap[bad]) / np.abs(cur[bad])))
        active = idx[bad]
        prev = cur[bad]


def _geometry(p: Dipole, q: Dipole) -> tuple[float, float]:
    dx = q.center[0] - p.center[0]
    dy = q.center[1] - p.center[1]
    rho = math.hypot(dx, dy)
    # field is never evaluated inside a wire: collinear and self terms use the surface
    rho = max(rho, p.radius, q.radius)
    return rho, q.center[2] - p.center[2]


def mutual_impedance(p: Dipole, q: Dipole, wavelength: float, *, nodes: int = DEFAULT_NODES,
                     rtol: float = DEFAULT_RTOL, max_nodes: int = MAX_NODES) -> complex:
    """Voltage induced in dipole ``q`` per unit input current of dipole ``p``."""
    if not wavelength > 0:
        raise ConfigError("wavelength must be positive")
    rho, dz = _geometry(p, q)
    k = 2 * np.pi / wavelength
    z = _pair_impedances([rho], [dz], [p.half_length], [q.half_length], k, nodes, rtol, max_nodes)
    return complex(z[0])


def self_impedance(d: Dipole, wavelength: float, **kwargs) -> complex:
    return mutual_impedance(d, d, wavelength, **kwargs)


def _pairwise(sources: Sequence[Dipole], targets: Sequence[Dipole], wavelength: float, **kwargs) -> np.ndarray:
    rho, dz = zip(*(_geometry(p, q) for p, q in zip(sources, targets)))
    k = 2 * np.pi / wavelength
    hp = [p.half_length for p in sources]
    hq = [q.half_length for q in targets]
    return _pair_impedances(rho, dz, hp, hq, k, **kwargs)


def assemble_impedances(s: Scenario, include_direct_link: bool = False, **quad_kwargs) -> ImpedanceSet:
    """Compute every fixed impedance of the scenario.

    Each unordered pair is evaluated once and written to both triangle slots,
    so ``Z_SS`` is symmetric bit-for-bit.
    """
    ris = s.ris_elements
    n = len(ris)
    iu, ju = np.triu_indices(n)
    sources = [ris[i] for i in iu]
    targets = [ris[j] for j in ju]
    # one batch for RIS-RIS, TX/RX-RIS and the antenna self terms
    sources += [s.tx] * n + [s.rx] * n + [s.tx, s.rx, s.tx]
    targets += list(ris) + list(ris) + [s.tx, s.rx, s.rx]
    values = _pairwise(sources, targets, s.wavelength, **quad_kwargs)
    m = iu.size
    z_ss = np.empty((n, n), dtype=complex)
    z_ss[iu, ju] = values[:m]
    z_ss[ju, iu] = values[:m]
    z_ts = values[m:m + n]
    z_rs = values[m + n:m + 2 * n]
    z_tt, z_rr, z_tr = values[m + 2 * n:]
    return ImpedanceSet(
        z_tt=z_tt, z_rr=z_rr, z_tr=z_tr if include_direct_link else 0j,
        z_ts=z_ts, z_rs=z_rs, z_ss=z_ss, z_g=s.z_g, z_l=s.z_l,
    )


# --------------------------------------------------------------------------
# scenario construction


def grid_shape(config: ScenarioConfig) -> tuple[int, int, float]:
    """Rows, columns and spacing (m) of the RIS grid described by ``config``."""
    lam = config.wavelength
    ris = config.ris
    spacing = ris.spacing_wavelengths * lam
    if not spacing > 0:
        raise ConfigError("RIS spacing must be positive")
    if ris.aperture_m is not None:
        # each element occupies a spacing x spacing cell of the aperture
        per_side = int(math.floor(ris.aperture_m / spacing + 0.5))
        if per_side < 1:
            raise ConfigError("aperture smaller than one element cell")
        return per_side, per_side, spacing
    if ris.rows is None or ris.cols is None or ris.rows < 1 or ris.cols < 1:
        raise ConfigError("RIS grid needs positive rows and cols, or an aperture")
    return ris.rows, ris.cols, spacing


def build_grid_scenario(config: ScenarioConfig) -> Scenario:
    lam = config.wavelength
    rows, cols, spacing = grid_shape(config)
    elem = config.element
    length = spacing if elem.length_equals_spacing else elem.length_wavelengths * lam
    radius = elem.radius_wavelengths * lam
    ys = (np.arange(cols) - (cols - 1) / 2) * spacing
    zs = (np.arange(rows) - (rows - 1) / 2) * spacing
    elements = tuple(Dipole((0.0, float(y), float(z)), length, radius) for z in zs for y in ys)

    def antenna(spec) -> Dipole:
        return Dipole(tuple(spec.position_m), spec.length_wavelengths * lam, spec.radius_wavelengths * lam)

    return Scenario(antenna(config.tx), antenna(config.rx), elements, lam, config.z_g, config.z_l)


# --------------------------------------------------------------------------
# impedance files


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _unpair(v, what: str) -> complex:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ImpedanceFileError(f"{what}: expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def impedances_to_dict(iset: ImpedanceSet) -> dict:
    return {
        "n_ris": iset.n_ris,
        "z_tt": _pair(iset.z_tt),
        "z_rr": _pair(iset.z_rr),
        "z_tr": _pair(iset.z_tr),
        "z_ts": [_pair(z) for z in iset.z_ts],
        "z_rs": [_pair(z) for z in iset.z_rs],
        "z_ss": [[_pair(z) for z in row] for row in iset.z_ss],
        "z_g": _pair(iset.z_g),
        "z_l": _pair(iset.z_l),
    }


def impedances_from_dict(doc: dict) -> ImpedanceSet:
    try:
        n = int(doc["n_ris"])
        z_ts = [_unpair(v, "z_ts") for v in doc["z_ts"]]
        z_rs = [_unpair(v, "z_rs") for v in doc["z_rs"]]
        rows = doc["z_ss"]
        if len(z_ts) != n or len(z_rs) != n or len(rows) != n or any(len(r) != n for r in rows):
            raise ImpedanceFileError(
                f"dimension mismatch: n_ris={n} but z_ts/z_rs/z_ss have "
                f"{len(z_ts)}/{len(z_rs)}/{len(rows)} rows"
            )
        z_ss = np.array([[_unpair(v, "z_ss") for v in r] for r in rows], dtype=complex).reshape(n, n)
        extra = {k: _unpair(doc[k], k) for k in ("z_g", "z_l") if k in doc}
        return ImpedanceSet(
            z_tt=_unpair(doc["z_tt"], "z_tt"), z_rr=_unpair(doc["z_rr"], "z_rr"),
            z_tr=_unpair(doc["z_tr"], "z_tr"), z_ts=z_ts, z_rs=z_rs, z_ss=z_ss, **extra,
        )
    except KeyError as exc:
        raise ImpedanceFileError(f"missing field {exc}") from None


def save_impedances(iset: ImpedanceSet, path: str | Path) -> Path:
    """Write ``iset`` as JSON.  Python's float repr round-trips exactly."""
    path = Path(path)
    path.write_text(json.dumps(impedances_to_dict(iset)))
    return path


def load_impedances(path: str | Path) -> ImpedanceSet:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ImpedanceFileError(f"{path}: not valid JSON ({exc})") from None
    return impedances_from_dict(doc)


__all__ = [
    "ETA_0", "SPEED_OF_LIGHT", "Dipole", "Scenario", "ImpedanceSet", "mutual_impedance",
    "self_impedance", "assemble_impedances", "build_grid_scenario", "grid_shape",
    "save_impedances", "load_impedances", "impedances_to_dict", "impedances_from_dict",
    "check_reciprocity",
]
