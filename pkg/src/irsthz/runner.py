"""Monte Carlo trials and parameter sweeps.

One trial: place (and optionally move) the devices, configure every IRS,
build the cascaded channels, run the uplink MMSE receivers and the downlink
MMSE beams with water-filling, form the IRS-pair rate matrix and hand it to
each association algorithm.

Trial ``i`` of a run uses seed ``base_seed + i``. Each seed is split into
independent streams for placement, mobility and the two randomized
association baselines, so trials do not depend on each other and a
perfect-CSI run shares its geometry with the imperfect-CSI run of the same
seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import association as assoc_mod
from .channel import (
    PhaseConfig,
    antenna_array,
    cascade,
    element_grid,
    optimal_phase_config,
    segment_channel,
    segment_pathloss,
)
from .config import SWEEP_AXES, ExperimentConfig
from .linproc import (
    LinkEnsemble,
    downlink_sinr,
    mmse_beamformers,
    mmse_sinr,
    sum_rate,
)
from .power import WaterfillInstance, waterfill
from .scenario import Topology, move_topology, sample_topology

STREAMS = ("topology", "mobility", "greedy", "random")


def trial_streams(seed: int) -> dict:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(s) for name, s in zip(STREAMS, children)}


def _pairwise_distances(a, b) -> np.ndarray:
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1))


@dataclass
class IrsLinks:
    """Channels of every device of one direction through one IRS."""

    channels: list
    phases: PhaseConfig
    target: int


def irs_links(devices, irs_center, ap_antennas, cfg: ExperimentConfig) -> IrsLinks:
    """Configure one IRS for its nearest device and build all device channels.

    The AP-side hop is a ``K x N`` matrix, the device-side hop an ``N``-vector
    per device. Pathloss uses the IRS center; phases use per-element paths.
    """
    params = cfg.thz()
    lam = params.wavelength
    omega = params.wavenumber
    elements = element_grid(irs_center, cfg.irs_side, cfg.element_spacing_wl * lam)

    d_ap = _pairwise_distances(ap_antennas, elements)                 # K x N
    d_ap_center = float(np.linalg.norm(irs_center - ap_antennas.mean(axis=0)))
    G = segment_channel(d_ap, segment_pathloss(d_ap_center, params, "ap"), omega)

    d_dev = _pairwise_distances(devices, elements)                    # n x N
    d_dev_center = np.linalg.norm(devices - irs_center, axis=1)
    loss = segment_pathloss(d_dev_center, params, "device")
    g = segment_channel(d_dev, loss[:, None], omega)

    target = int(np.argmin(d_dev_center))
    d_out = np.linalg.norm(elements - ap_antennas.mean(axis=0), axis=1)
    phases = optimal_phase_config(d_dev[target], d_out, omega)

    cee = cfg.cee()
    gram = G @ G.conj().T if cee.sigma2_g else None
    chans = [cascade(G, phases, g[i], cee, gram) for i in range(len(devices))]
    return IrsLinks(chans, phases, target)


@dataclass
class UplinkResult:
    sinr: np.ndarray
    sum_rate: float


@dataclass
class DownlinkResult:
    sinr: np.ndarray
    power: np.ndarray
    sum_rate: float
    iterations: int
    converged: bool


def uplink(links: IrsLinks, cfg: ExperimentConfig) -> UplinkResult:
    n = len(links.channels)
    ens = LinkEnsemble.from_channels(links.channels, np.full(n, cfg.power), cfg.noise)
    s = mmse_sinr(ens)
    return UplinkResult(s, sum_rate(s))


def downlink(links: IrsLinks, cfg: ExperimentConfig) -> DownlinkResult:
    n = len(links.channels)
    P = cfg.power
    ens = LinkEnsemble.from_channels(links.channels, np.full(n, P / n), cfg.noise)
    W = mmse_beamformers(ens)
    alloc = waterfill(WaterfillInstance.from_beams(ens, W, P), cfg.wf_eps, cfg.wf_max_iters)
    s = downlink_sinr(ens, W, alloc.p)
    return DownlinkResult(s, alloc.p, sum_rate(s), alloc.iterations, alloc.converged)


@dataclass
class AlgorithmOutcome:
    pairs: list
    tau: int
    rate: float           # sum over pairs at zero overhead
    e2e_rate: float       # after charging tau of the coherence interval
    stable: bool
    proposals: int
    evaluations: int


@dataclass
class TrialReport:
    seed: int
    topology: Topology
    ul_sums: np.ndarray
    dl_sums: np.ndarray
    ul_sinr: np.ndarray           # L x I
    dl_sinr: np.ndarray           # M x J
    dl_power: np.ndarray          # M x J
    wf_iterations: list
    wf_converged: list
    rate_matrix: np.ndarray
    algorithms: dict              # tag -> AlgorithmOutcome
    wall_clock: float = field(default=0.0, compare=False)

    def rate(self, algorithm: str, overhead: bool = False) -> float:
        out = self.algorithms[algorithm]
        return out.e2e_rate if overhead else out.rate


def _apply(tag, R, cfg, streams) -> AlgorithmOutcome:
    L, M = R.L, R.M
    rng = streams.get(tag)
    a = assoc_mod.associate(tag, R, rng, cfg.es_cap)
    T = cfg.coherence_slots
    tau = assoc_mod.overhead_slots(tag, L, M, T, a.proposals)
    rate = a.total(R)
    scale = 1.0 - tau / T
    e2e = math.fsum(scale * R.R[l, m] for l, m in a.pairs.items())
    return AlgorithmOutcome(a.to_list(), tau, rate, e2e, assoc_mod.is_stable(a, R),
                            a.proposals, a.evaluations)


def check_ordering(outcomes: dict, rtol: float = 1e-9) -> None:
    """Raise if a zero-overhead rate breaks ES >= GS >= random, ES >= greedy."""
    def bad(hi, lo):
        if hi in outcomes and lo in outcomes:
            a, b = outcomes[hi].rate, outcomes[lo].rate
            return a < b - rtol * max(abs(a), abs(b), 1e-300)
        return False
    for hi, lo in (("es", "gs"), ("gs", "random"), ("es", "random"), ("es", "greedy")):
        if bad(hi, lo):
            raise RuntimeError(f"rate ordering violated: {hi}={outcomes[hi].rate!r} < {lo}={outcomes[lo].rate!r}")


def run_trial(cfg: ExperimentConfig, seed: int, check: bool = True) -> TrialReport:
    start = time.perf_counter()
    streams = trial_streams(seed)
    topo = sample_topology(cfg.layout(), streams["topology"])
    topo = move_topology(topo, cfg.mobility(), cfg.mobility_slots, streams["mobility"])

    lam = cfg.thz().wavelength
    antennas = antenna_array(topo.ap, cfg.antennas, cfg.antenna_spacing_wl * lam)

    ul = [uplink(irs_links(topo.ud, c, antennas, cfg), cfg) for c in topo.ur]
    dl = [downlink(irs_links(topo.dd, c, antennas, cfg), cfg) for c in topo.dr]
    ul_sums = np.array([u.sum_rate for u in ul])
    dl_sums = np.array([d.sum_rate for d in dl])
    R = assoc_mod.rate_matrix(ul_sums, dl_sums)

    outcomes = {tag: _apply(tag, R, cfg, streams) for tag in cfg.algos}
    if check:
        check_ordering(outcomes)
    return TrialReport(
        seed=seed,
        topology=topo,
        ul_sums=ul_sums,
        dl_sums=dl_sums,
        ul_sinr=np.array([u.sinr for u in ul]),
        dl_sinr=np.array([d.sinr for d in dl]),
        dl_power=np.array([d.power for d in dl]),
        wf_iterations=[d.iterations for d in dl],
        wf_converged=[d.converged for d in dl],
        rate_matrix=R.R.copy(),
        algorithms=outcomes,
        wall_clock=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

@dataclass
class SweepRow:
    axis_value: float
    algorithm: str
    mean_rate: float
    stderr: float
    mean_tau: float
    trials: int


@dataclass
class SweepTable:
    axis: str
    values: list
    rows: list
    samples: dict = field(default_factory=dict, repr=False, compare=False)

    def row(self, value, algorithm) -> SweepRow:
        for r in self.rows:
            if r.axis_value == value and r.algorithm == algorithm:
                return r
        raise KeyError((value, algorithm))

    def means(self, algorithm) -> np.ndarray:
        return np.array([self.row(v, algorithm).mean_rate for v in self.values])


def _check_values(values) -> list:
    values = [float(v) for v in values]
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError(f"sweep values must be strictly ordered, got {values}")
    return values


def sweep(cfg: ExperimentConfig, axis: str, values, trials: int | None = None,
          progress=None) -> SweepTable:
    """Average :func:`run_trial` over ``trials`` paired seeds per axis value.

    Rates are spectral efficiencies, except on the ``carrier_ghz`` axis where
    they are multiplied by the bandwidth (bit/s). The reported rate includes
    the association overhead when ``cfg.overhead`` is set.
    """
    values = _check_values(values)
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    trials = cfg.trials if trials is None else int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    scale = cfg.bandwidth if axis == "carrier_ghz" else 1.0
    rows, samples = [], {}
    for v in values:
        c = cfg.with_axis(axis, v)
        rates = {a: np.empty(trials) for a in c.algos}
        taus = {a: np.empty(trials) for a in c.algos}
        for i in range(trials):
            rep = run_trial(c, cfg.seed + i)
            for a in c.algos:
                rates[a][i] = rep.rate(a, cfg.overhead) * scale
                taus[a][i] = rep.algorithms[a].tau
            if progress:
                progress(v, i)
        for a in c.algos:
            x = rates[a]
            se = float(x.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
            rows.append(SweepRow(v, a, float(x.mean()), se, float(taus[a].mean()), trials))
            samples[(v, a)] = x
    return SweepTable(axis, values, rows, samples)
