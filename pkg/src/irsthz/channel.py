"""THz cascaded channels through passive reflecting surfaces.

Conventions
-----------
* Every AP-side segment is a ``K x N`` matrix ``G`` (antenna rows, element
  columns); every device-side segment is a length-``N`` vector ``g``. Both the
  uplink and the downlink cascade are ``h = G diag(kappa e^{j theta}) g``.
* Pathloss is evaluated at the IRS center. Per-element distances only enter
  the phase terms ``exp(-j omega d)``.
* Estimation-error variances are *relative*: a value ``s`` means an error
  whose per-entry variance is ``s`` times the mean per-entry power of the
  estimate it perturbs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ThzParams:
    """Carrier and surface parameters.

    ``gains`` holds ``(G_AP, G_elem_in, G_elem_out, G_dev)`` as linear factors.
    """

    carrier_freq: float = 300e9
    kappa_abs: float = 0.0033
    element_side_wl: float = 0.4
    gains: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.carrier_freq <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.kappa_abs < 0:
            raise ValueError("absorption coefficient must be >= 0")
        if self.element_side_wl <= 0:
            raise ValueError("element side must be positive")
        if len(self.gains) != 4 or min(self.gains) <= 0:
            raise ValueError("need four positive gain factors")

    @classmethod
    def from_dbi(cls, carrier_freq, kappa_abs=0.0033, gains_dbi=(0, 0, 0, 0), element_side_wl=0.4):
        gains = tuple(10.0 ** (g / 10.0) for g in gains_dbi)
        return cls(carrier_freq, kappa_abs, element_side_wl, gains)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def element_side(self) -> float:
        return self.element_side_wl * self.wavelength

    @property
    def element_area(self) -> float:
        return self.element_side ** 2


def pathloss_cascaded(d1, d2, params: ThzParams):
    """Device -> IRS -> AP power gain of one reflecting element.

    ``G_AP G_in G_out G_dev A^2 exp(-kappa (d1 + d2)) / (4 pi d1 d2)^2``.
    Accepts scalars or broadcastable arrays.
    """
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if np.any(d1 <= 0) or np.any(d2 <= 0):
        raise ValueError("distances must be positive")
    g = math.prod(params.gains)
    out = g * params.element_area ** 2 * np.exp(-params.kappa_abs * (d1 + d2)) / (4 * math.pi * d1 * d2) ** 2
    return out if out.ndim else float(out)


def segment_pathloss(d, params: ThzParams, side: str):
    """One factor of :func:`pathloss_cascaded`.

    The cascaded gain splits into ``A exp(-kappa d) / (4 pi d^2)`` per hop,
    times the two gains on that hop: device and incoming-element gain for
    ``side="device"``, outgoing-element and AP gain for ``side="ap"``.
    """
    g_ap, g_in, g_out, g_dev = params.gains
    gain = {"device": g_dev * g_in, "ap": g_out * g_ap}[side]
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    out = gain * params.element_area * np.exp(-params.kappa_abs * d) / (4 * math.pi * d ** 2)
    return out if out.ndim else float(out)


def segment_channel(distances, pathloss, wavenumber: float) -> np.ndarray:
    """Line-of-sight channel ``sqrt(l) exp(-j omega d)``, elementwise.

    ``pathloss`` broadcasts against ``distances`` (a scalar for center-based
    pathloss, or one value per entry).
    """
    distances = np.asarray(distances, dtype=float)
    if np.any(distances < 0):
        raise ValueError("distances must be non-negative")
    return np.sqrt(pathloss) * np.exp(-1j * wavenumber * distances)


def complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def inject_cee(g_hat, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Draw a channel consistent with the estimate ``g_hat``.

    Adds i.i.d. zero-mean complex Gaussian error with per-entry variance
    ``sigma2 * mean(|g_hat|^2)``, so the estimate/channel correlation is
    ``1 / sqrt(1 + sigma2)``.
    """
    if sigma2 < 0:
        raise ValueError("error variance must be >= 0")
    g_hat = np.asarray(g_hat)
    if sigma2 == 0:
        return g_hat.copy()
    scale = math.sqrt(sigma2 * float(np.mean(np.abs(g_hat) ** 2)))
    return g_hat + scale * complex_gaussian(g_hat.shape, rng)


@dataclass
class PhaseConfig:
    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        self.phase = np.mod(np.asarray(self.phase, dtype=float), 2 * math.pi)
        if self.amplitude.shape != self.phase.shape:
            raise ValueError("amplitude and phase must have the same length")
        if np.any(self.amplitude < 0) or np.any(self.amplitude > 1):
            raise ValueError("reflection amplitudes must lie in [0, 1]")

    @property
    def coefficients(self) -> np.ndarray:
        """Diagonal of the reflection matrix."""
        return self.amplitude * np.exp(1j * self.phase)

    def __len__(self):
        return self.amplitude.size


def optimal_phase_config(d_in, d_out, wavenumber: float) -> PhaseConfig:
    """Full-amplitude reflection that re-phases every element so the two-hop
    path lengths ``d_in[n] + d_out[n]`` all arrive with zero phase."""
    d_in = np.asarray(d_in, dtype=float)
    d_out = np.asarray(d_out, dtype=float)
    if d_in.shape != d_out.shape:
        raise ValueError("distance vectors must have the same length")
    return PhaseConfig(np.ones_like(d_in), wavenumber * (d_in + d_out))


@dataclass(frozen=True)
class CeeParams:
    sigma2_g: float = 0.0   # device <-> IRS hop
    sigma2_G: float = 0.0   # IRS <-> AP hop

    def __post_init__(self):
        if self.sigma2_g < 0 or self.sigma2_G < 0:
            raise ValueError("error variances must be >= 0")

    @property
    def perfect(self) -> bool:
        return self.sigma2_g == 0 and self.sigma2_G == 0


@dataclass
class CascadedChannel:
    """Estimated effective channel plus the statistics of its error.

    ``err_cov`` is ``s_g G Theta Theta^H G^H + s_G ||Theta g||^2 I``;
    ``cross_var`` is the variance ``s_g s_G ||theta||^2`` of the product of
    the two errors, which the SINR expressions add on top (``s_*`` are the
    absolute per-entry error variances).
    """

    h_hat: np.ndarray
    err_cov: np.ndarray
    cross_var: float = 0.0
    g_norm2: float = 0.0
    var_g: float = 0.0
    var_G: float = 0.0
    gram: np.ndarray | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return self.h_hat.size

    def effective_cov(self) -> np.ndarray:
        """Covariance used in the SINR denominators."""
        return self.err_cov + self.cross_var * np.eye(self.K)


def cascade(G_hat, phases: PhaseConfig, g_hat, cee: CeeParams = CeeParams(),
            gram: np.ndarray | None = None) -> CascadedChannel:
    """Effective channel ``G diag(theta) g`` and its estimation-error statistics.

    ``gram`` may carry a precomputed ``G G^H`` when many devices share the
    same IRS; it is used only when every element reflects at full amplitude.
    """
    G_hat = np.atleast_2d(np.asarray(G_hat))
    g_hat = np.asarray(g_hat).reshape(-1)
    K, N = G_hat.shape
    if g_hat.size != N or len(phases) != N:
        raise ValueError(f"dimension mismatch: G is {K}x{N}, g has {g_hat.size}, "
                         f"phase config has {len(phases)}")
    h_hat = G_hat @ (phases.coefficients * g_hat)
    var_g = cee.sigma2_g * float(np.mean(np.abs(g_hat) ** 2))
    var_G = cee.sigma2_G * float(np.mean(np.abs(G_hat) ** 2))
    power = phases.amplitude ** 2
    g_norm2 = float(power @ np.abs(g_hat) ** 2)
    if var_g and (gram is None or np.any(power != 1.0)):
        gram = (G_hat * power) @ G_hat.conj().T
    cov = var_G * g_norm2 * np.eye(K, dtype=complex)
    if var_g:
        cov = cov + var_g * gram
    cross = var_g * var_G * float(power.sum())
    return CascadedChannel(h_hat, cov, cross, g_norm2, var_g, var_G, gram)


# --------------------------------------------------------------------------
# Array geometry
# --------------------------------------------------------------------------

def element_grid(center, side: int, spacing: float) -> np.ndarray:
    """``side x side`` element positions in the horizontal plane, centered."""
    offs = (np.arange(side) - (side - 1) / 2.0) * spacing
    xx, yy = np.meshgrid(offs, offs, indexing="ij")
    pts = np.empty((side * side, 3))
    pts[:, 0] = center[0] + xx.ravel()
    pts[:, 1] = center[1] + yy.ravel()
    pts[:, 2] = center[2]
    return pts


def antenna_array(center, K: int, spacing: float) -> np.ndarray:
    """Uniform linear array of ``K`` antennas along x, centered on the AP."""
    pts = np.tile(np.asarray(center, dtype=float), (K, 1))
    pts[:, 0] += (np.arange(K) - (K - 1) / 2.0) * spacing
    return pts
