"""Linear receive/transmit processing and rates.

All SINR expressions account for channel estimation error through the
effective error covariance of each link (see
:meth:`irsthz.channel.CascadedChannel.effective_cov`), so for any unit-norm
filter ``v`` the error contribution of link ``i`` is ``v^H C_i v``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .channel import CascadedChannel


@dataclass
class LinkEnsemble:
    """Devices served through one IRS.

    Attributes:
        H: ``K x n`` estimated effective channels, one column per device.
        C: ``n x K x K`` effective error covariances.
        powers: per-device transmit powers (uplink) or power shares
            (downlink), watts.
        noise: receiver noise power, watts.
    """

    H: np.ndarray
    C: np.ndarray
    powers: np.ndarray
    noise: float

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=complex)
        if self.H.ndim == 1:
            self.H = self.H[:, None]
        self.C = np.asarray(self.C, dtype=complex)
        self.powers = np.asarray(self.powers, dtype=float).reshape(-1)
        K, n = self.H.shape
        if self.C.shape != (n, K, K):
            raise ValueError(f"covariances must be {n}x{K}x{K}, got {self.C.shape}")
        if self.powers.size != n:
            raise ValueError("one power per device required")
        if np.any(self.powers < 0):
            raise ValueError("powers must be non-negative")
        if not self.noise > 0:
            raise ValueError("noise power must be positive")

    @classmethod
    def from_channels(cls, channels: list[CascadedChannel], powers, noise: float) -> "LinkEnsemble":
        H = np.stack([c.h_hat for c in channels], axis=1)
        C = np.stack([c.effective_cov() for c in channels])
        return cls(H, C, powers, noise)

    @classmethod
    def perfect(cls, H, powers, noise: float) -> "LinkEnsemble":
        H = np.asarray(H, dtype=complex)
        if H.ndim == 1:
            H = H[:, None]
        K, n = H.shape
        return cls(H, np.zeros((n, K, K), dtype=complex), powers, noise)

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def n(self) -> int:
        return self.H.shape[1]

    def with_powers(self, powers) -> "LinkEnsemble":
        return LinkEnsemble(self.H, self.C, powers, self.noise)


def _unit_columns(V):
    norms = np.linalg.norm(V, axis=0)
    norms[norms == 0] = 1.0
    return V / norms


def _interference_plus_noise(ens: LinkEnsemble) -> np.ndarray:
    """``noise I + sum_i p_i C_i + sum_i p_i h_i h_i^H`` (all devices)."""
    p = ens.powers
    M = ens.noise * np.eye(ens.K, dtype=complex)
    M += np.tensordot(p, ens.C, axes=1)
    M += (ens.H * p) @ ens.H.conj().T
    return M


def _regularized_matrices(ens: LinkEnsemble):
    full = _interference_plus_noise(ens)
    for i in range(ens.n):
        h = ens.H[:, i]
        yield i, full - ens.powers[i] * np.outer(h, h.conj())


def mmse_receive_vectors(ens: LinkEnsemble) -> np.ndarray:
    """Unit-norm MMSE decoders, one column per device.

    ``v_i ~ (noise I + sum_i' p_i' C_i' + sum_{i' != i} p_i' h_i' h_i'^H)^{-1} h_i``.
    """
    V = np.empty_like(ens.H)
    for i, A in _regularized_matrices(ens):
        V[:, i] = sla.solve(A, ens.H[:, i], assume_a="pos")
    return _unit_columns(V)


def uplink_sinr(ens: LinkEnsemble, V) -> np.ndarray:
    """Per-device uplink SINR for arbitrary decoders ``V`` (``K x n``).

    Term by term: desired ``p_i |v^H h_i|^2`` over inter-device leakage,
    every device's estimation-error power seen through ``v`` and
    ``noise ||v||^2``.
    """
    V = np.asarray(V, dtype=complex).reshape(ens.K, ens.n)
    p = ens.powers
    cross = np.abs(V.conj().T @ ens.H) ** 2          # [i, i'] = |v_i^H h_i'|^2
    err = np.einsum("ki,jkl,li->ij", V.conj(), ens.C, V).real   # [i, i'] = v_i^H C_i' v_i
    vnorm2 = np.sum(np.abs(V) ** 2, axis=0)
    desired = p * np.diag(cross)
    interference = cross @ p - desired
    cee = err @ p
    return desired / (interference + cee + ens.noise * vnorm2)


def mmse_sinr(ens: LinkEnsemble) -> np.ndarray:
    """Closed-form SINR of the MMSE decoder, ``p_i h_i^H A_i^{-1} h_i``."""
    out = np.empty(ens.n)
    for i, A in _regularized_matrices(ens):
        h = ens.H[:, i]
        out[i] = ens.powers[i] * np.vdot(h, sla.solve(A, h, assume_a="pos")).real
    return out


def mmse_beamformers(ens: LinkEnsemble) -> np.ndarray:
    """Unit-norm downlink MMSE beam directions.

    Same regularized-inverse structure as the receiver, built from the
    downlink channels and error covariances of all served devices.
    """
    return mmse_receive_vectors(ens)


def mmse_downlink_sinr(ens: LinkEnsemble) -> np.ndarray:
    """Quadratic-form SINR attached to :func:`mmse_beamformers`."""
    return mmse_sinr(ens)


def downlink_dual_sinr(ens: LinkEnsemble, W) -> np.ndarray:
    """Leakage-form SINR of beam ``w_j``: desired power over the power the
    beam leaks to the other devices, the error power and the noise.

    This is the quantity the MMSE beam maximizes; at ``W = mmse_beamformers``
    it equals :func:`mmse_downlink_sinr`.
    """
    return uplink_sinr(ens, W)


def downlink_sinr(ens: LinkEnsemble, W, powers=None) -> np.ndarray:
    """Per-device SINR at the downlink receivers.

    For receiver ``j`` the interference is ``sum_{j' != j} p_j' |h_j^H w_j'|^2``,
    and its own channel-error power through every beam,
    ``sum_j' p_j' w_j'^H C_j w_j'``, counts as noise.
    """
    p = ens.powers if powers is None else np.asarray(powers, dtype=float)
    W = np.asarray(W, dtype=complex).reshape(ens.K, ens.n)
    cross = np.abs(ens.H.conj().T @ W) ** 2           # [j, j'] = |h_j^H w_j'|^2
    err = np.einsum("kb,jkl,lb->jb", W.conj(), ens.C, W).real   # [j, j'] = w_j'^H C_j w_j'
    desired = p * np.diag(cross)
    interference = cross @ p - desired
    return desired / (interference + err @ p + ens.noise)


def mrt_beamformers(ens: LinkEnsemble) -> np.ndarray:
    return _unit_columns(ens.H.copy())


def zf_beamformers(ens: LinkEnsemble) -> np.ndarray:
    return _unit_columns(ens.H @ np.linalg.pinv(ens.H.conj().T @ ens.H))


def sum_rate(sinrs) -> float:
    """Sum of ``log2(1 + sinr)`` in bits/s/Hz."""
    sinrs = np.asarray(sinrs, dtype=float)
    if np.any(sinrs < 0):
        raise ValueError("SINR must be non-negative")
    return float(np.sum(np.log1p(sinrs)) / np.log(2.0))


def e2e_rate(ul_sum: float, dl_sum: float, tau: float, T: float) -> float:
    """End-to-end rate of an uplink/downlink IRS pair after ``tau`` of the
    ``T`` coherence slots went to association signalling."""
    if T <= 0:
        raise ValueError("coherence interval must be positive")
    if not 0 <= tau <= T:
        raise ValueError(f"overhead tau={tau} outside [0, T={T}]")
    return (1.0 - tau / T) * min(ul_sum, dl_sum)
