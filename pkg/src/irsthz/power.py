"""Downlink power allocation by iterative water-filling.

Each device's power is the gap between a common water level (set by the
budget multiplier ``mu``) and its floor of interference plus noise, divided
by a factor that grows with the device's own estimation-error power:

    p_j = [ (1 / (mu ||w_j||^2 + u_j) - (iota_j + noise_j) / g_j) / (1 + X_j / g_j) ]^+

with ``g_j = |h_j^H w_j|^2`` and ``X_j`` the self error term. Interference
``iota_j`` depends on the other devices' powers, hence the fixed-point loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .linproc import LinkEnsemble


@dataclass
class WaterfillInstance:
    """Inputs of one power-allocation problem.

    Attributes:
        gains: ``|h_j^H w_j|^2`` per device.
        cross: ``J x J`` matrix, ``cross[j, j'] = |h_j^H w_j'|^2`` (diagonal unused).
        cee: ``J x J`` matrix of error powers, ``cee[j, j'] = w_j'^H C_j w_j'``;
            the diagonal is each device's self term ``X_j``.
        beam_norms: ``||w_j||^2``.
        noise: per-device noise power (scalar broadcasts).
        budget: total AP power.
    """

    gains: np.ndarray
    cross: np.ndarray
    cee: np.ndarray
    beam_norms: np.ndarray
    noise: np.ndarray
    budget: float

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float).reshape(-1)
        J = self.gains.size
        self.cross = np.asarray(self.cross, dtype=float).reshape(J, J)
        self.cee = np.asarray(self.cee, dtype=float).reshape(J, J)
        self.beam_norms = np.broadcast_to(np.asarray(self.beam_norms, dtype=float), (J,)).copy()
        self.noise = np.broadcast_to(np.asarray(self.noise, dtype=float), (J,)).copy()
        if np.any(self.gains < 0) or np.any(self.cross < 0) or np.any(self.cee < 0):
            raise ValueError("gains and error powers must be non-negative")
        if not self.budget > 0:
            raise ValueError("power budget must be positive")
        if np.any(self.beam_norms <= 0):
            raise ValueError("beam norms must be positive")

    @property
    def J(self) -> int:
        return self.gains.size

    @property
    def active(self) -> np.ndarray:
        """Devices that can be scheduled (non-zero effective gain)."""
        return self.gains > 0

    @classmethod
    def simple(cls, gains, noise=1.0, budget=1.0, cross=None, cee=None, beam_norms=1.0):
        gains = np.asarray(gains, dtype=float)
        J = gains.size
        return cls(gains,
                   np.zeros((J, J)) if cross is None else cross,
                   np.zeros((J, J)) if cee is None else cee,
                   beam_norms, noise, budget)

    @classmethod
    def from_beams(cls, ens: LinkEnsemble, W, budget: float) -> "WaterfillInstance":
        W = np.asarray(W, dtype=complex)
        cross = np.abs(ens.H.conj().T @ W) ** 2
        cee = np.einsum("kb,jkl,lb->jb", W.conj(), ens.C, W).real
        return cls(np.diag(cross).copy(), cross, np.maximum(cee, 0.0),
                   np.sum(np.abs(W) ** 2, axis=0), ens.noise, budget)

    def objective(self, p) -> float:
        """Downlink sum rate (bits/s/Hz) for power vector ``p``."""
        p = np.asarray(p, dtype=float)
        desired = p * self.gains
        interference = (self.cross + self.cee) @ p - np.diag(self.cross + self.cee) * p
        denom = interference + p * np.diag(self.cee) + self.noise
        return float(np.sum(np.log1p(desired / denom)) / math.log(2.0))


@dataclass
class PowerAllocation:
    p: np.ndarray
    mu: float
    upsilon: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


def interference_term(inst: WaterfillInstance, p, j: int) -> float:
    """Interference floor of device ``j``: leakage of the other beams plus the
    error power they carry through ``j``'s channel, each weighted by its power."""
    p = np.asarray(p, dtype=float)
    row = inst.cross[j] + inst.cee[j]
    return float(row @ p - row[j] * p[j])


def interference_vector(inst: WaterfillInstance, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    M = inst.cross + inst.cee
    return M @ p - np.diag(M) * p


def closed_form_power(inst: WaterfillInstance, iota: float, mu: float, upsilon: float, j: int) -> float:
    level = mu * inst.beam_norms[j] + upsilon
    if not level > 0:
        raise ValueError("mu * ||w||^2 + upsilon must be positive")
    g = inst.gains[j]
    if g <= 0:
        return 0.0
    floor = (iota + inst.noise[j]) / g
    shrink = 1.0 + inst.cee[j, j] / g
    return max((1.0 / level - floor) / shrink, 0.0)


def _powers_at(inst, iota, mu, upsilon):
    act = inst.active
    p = np.zeros(inst.J)
    g = inst.gains[act]
    level = mu * inst.beam_norms[act] + upsilon[act]
    p[act] = np.maximum((1.0 / level - (iota[act] + inst.noise[act]) / g)
                        / (1.0 + np.diag(inst.cee)[act] / g), 0.0)
    return p


def budget_used(inst: WaterfillInstance, iota, mu: float, upsilon) -> float:
    return float(inst.beam_norms @ _powers_at(inst, np.asarray(iota, float), mu, np.asarray(upsilon, float)))


def bisect_mu(inst: WaterfillInstance, iota, upsilon=None) -> float:
    """Budget multiplier that spends exactly the AP budget.

    Device ``j`` is on for ``mu`` below its switch-on point
    ``(g_j / (iota_j + noise_j) - upsilon_j) / ||w_j||^2`` and the spent power
    is continuous and strictly decreasing in ``mu`` while any device is on.
    The breakpoints are sorted to find the bracket where the active set is
    fixed; on it the budget equation is linear in ``1 / mu`` when no device
    is taxed, and otherwise solved by bracketed root finding. Returns 0 when
    taxation caps the total below the budget.
    """
    iota = np.asarray(iota, dtype=float)
    upsilon = np.zeros(inst.J) if upsilon is None else np.asarray(upsilon, dtype=float)
    act = inst.active
    if not act.any():
        raise ValueError("budget infeasible: every effective gain is zero")
    P = inst.budget
    g = inst.gains[act]
    w = inst.beam_norms[act]
    u = upsilon[act]
    f = (iota[act] + inst.noise[act]) / g
    d = 1.0 + np.diag(inst.cee)[act] / g

    switch_on = (1.0 / f - u) / w
    order = np.argsort(-switch_on, kind="stable")
    order = order[switch_on[order] > 0]
    if order.size == 0:
        return 0.0

    def spent(mu, on):
        return float(np.sum(w[on] * (1.0 / (mu * w[on] + u[on]) - f[on]) / d[on]))

    # walk down the breakpoints until the budget is reached
    hi = switch_on[order[0]]
    lo = 0.0
    n_on = order.size
    for k in range(1, order.size):
        b = switch_on[order[k]]
        if spent(b, order[:k]) >= P:
            lo = b
            n_on = k
            break
        hi = b
    on = order[:n_on]
    if not np.any(u[on]):
        x = (P + np.sum(w[on] * f[on] / d[on])) / np.sum(1.0 / d[on])
        return 1.0 / x
    if lo == 0.0:
        if np.all(u[on] > 0) and spent(0.0, on) <= P:
            return 0.0
        lo = hi
        while spent(lo, on) < P:
            lo *= 0.5
    return float(brentq(lambda m: spent(m, on) - P, lo, hi, xtol=1e-300, rtol=1e-15))


def taxation(inst: WaterfillInstance, p) -> np.ndarray:
    """Interference price each device pays at allocation ``p``.

    ``upsilon_j`` is the rate the other devices lose per extra watt given to
    ``j`` (through cross leakage and error power), plus the gap between the
    true marginal rate of ``j``'s own link and the water-filling marginal
    ``g_j / (p_j (g_j + X_j) + iota_j + noise_j)``, which grows with its own
    error term ``X_j``. With these prices the water-filling fixed point is a
    stationary point of the downlink sum rate.
    """
    p = np.asarray(p, dtype=float)
    M = inst.cross + inst.cee
    X = np.diag(inst.cee)
    iota = interference_vector(inst, p)
    floor = iota + p * X + inst.noise          # interference + own error + noise
    signal = p * inst.gains
    loss = signal / ((signal + floor) * floor)  # d rate_k / d interference_k, negated
    off = M - np.diag(np.diag(M))
    price = off.T @ loss
    D = iota + inst.noise
    self_gap = inst.gains * p * X / ((p * (inst.gains + X) + D) * (p * X + D))
    return price + self_gap


def _iterate(inst, p, eps, max_iters, priced, tax, polish_passes) -> PowerAllocation:
    act = inst.active
    converged = False
    it = 0
    history = []
    for it in range(1, max_iters + 1):
        previous = p.copy()
        for j in np.flatnonzero(act):
            iota = interference_vector(inst, p)
            if priced:
                tax = taxation(inst, p)
            mu = bisect_mu(inst, iota, tax)
            p[j] = closed_form_power(inst, iota[j], mu, tax[j], j)
        spent = inst.beam_norms @ p
        if spent > inst.budget:
            p *= inst.budget / spent
        change = float(np.max(np.abs(p - previous)))
        history.append(change)
        if change <= eps:
            converged = True
            break

    # common water level for everyone, refreshed until the floors settle
    for _ in range(polish_passes):
        iota = interference_vector(inst, p)
        if priced:
            tax = taxation(inst, p)
        mu = bisect_mu(inst, iota, tax)
        fresh = _powers_at(inst, iota, mu, tax)
        moved = float(np.max(np.abs(fresh - p)))
        p = fresh
        if moved <= 1e-13 * inst.budget:
            break
    spent = inst.beam_norms @ p
    if spent > inst.budget:
        p *= inst.budget / spent
    return PowerAllocation(p, mu, tax, it, converged, history)


def single_device_rates(inst: WaterfillInstance) -> np.ndarray:
    """Sum rate when the whole budget goes to one device, per device."""
    p = inst.budget / inst.beam_norms
    return np.log2(1.0 + p * inst.gains / (p * np.diag(inst.cee) + inst.noise))


def waterfill(inst: WaterfillInstance, eps: float = 1e-6, max_iters: int = 500,
              upsilon="pricing", p0=None, polish_passes: int = 50,
              corner_check: bool = True) -> PowerAllocation:
    """Iterative water-filling.

    Starts from an equal split, then sweeps the devices in order: refresh the
    interference floors and prices, re-solve the budget multiplier, update
    that device's power. After each sweep the allocation is scaled down if it
    overspends. Stops once no power moved by more than ``eps``; final passes
    put every device on the same water level so the budget is met with
    equality.

    The sum rate is not concave under interference, so the sweep can settle
    on a local optimum. With ``corner_check`` the result is compared with
    giving the whole budget to a single device; if one of those does better,
    the sweep is rerun from that device and the better of the two
    allocations is returned.

    Args:
        upsilon: ``"pricing"`` recomputes the prices of :func:`taxation`
            at every update, ``"zero"`` drops them (plain per-device
            water-filling), an array is used as a fixed taxation vector.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    J = inst.J
    if isinstance(upsilon, str):
        if upsilon not in ("pricing", "zero"):
            raise ValueError(f"unknown taxation rule {upsilon!r}")
        priced = upsilon == "pricing"
        tax = np.zeros(J)
    else:
        priced = False
        tax = np.broadcast_to(np.asarray(upsilon, dtype=float), (J,)).copy()
        if np.any(tax < 0):
            raise ValueError("taxation must be non-negative")
    act = inst.active
    if not act.any():
        return PowerAllocation(np.zeros(J), math.inf, tax, 0, False)
    if p0 is None:
        p = np.where(act, inst.budget / act.sum(), 0.0) / inst.beam_norms
    else:
        p = np.asarray(p0, dtype=float).copy()

    best = _iterate(inst, p, eps, max_iters, priced, tax.copy(), polish_passes)
    if not corner_check or J == 1:
        return best
    corners = single_device_rates(inst)
    corners[~act] = -math.inf
    j = int(np.argmax(corners))
    best_rate = inst.objective(best.p)
    if corners[j] > best_rate:
        start = np.zeros(J)
        start[j] = inst.budget / inst.beam_norms[j]
        other = _iterate(inst, start, eps, max_iters, priced, tax.copy(), polish_passes)
        if inst.objective(other.p) > best_rate:
            other.iterations += best.iterations
            return other
    return best


def kkt_residual(inst: WaterfillInstance, alloc: PowerAllocation) -> float:
    """Worst relative violation of the water-filling optimality conditions.

    On devices with power the stationarity identity
    ``p_j (1 + X_j/g_j) + (iota_j + noise_j)/g_j = 1/(mu ||w_j||^2 + u_j)``
    must hold; on devices without power the floor must sit at or above the
    water level.
    """
    p = alloc.p
    iota = interference_vector(inst, p)
    worst = 0.0
    for j in np.flatnonzero(inst.active):
        g = inst.gains[j]
        level = 1.0 / (alloc.mu * inst.beam_norms[j] + alloc.upsilon[j])
        floor = (iota[j] + inst.noise[j]) / g
        if p[j] > 0:
            lhs = p[j] * (1.0 + inst.cee[j, j] / g) + floor
            worst = max(worst, abs(lhs - level) / level)
        else:
            worst = max(worst, max(level - floor, 0.0) / level)
    return worst
