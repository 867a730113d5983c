"""Network geometry and device mobility.

Positions are plain ``(x, y, z)`` triples in meters. Devices live at a fixed
height and move in the horizontal plane; IRSs and the AP are static for the
lifetime of a run.

Mobility follows a two-level model: one group head per direction (uplink,
downlink) performs a random waypoint walk, and the remaining devices of the
group follow it with a randomly perturbed speed and heading (reference point
group mobility). Devices bounce specularly off the area walls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Point3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite coordinate in {self}")
        if self.z < 0:
            raise ValueError(f"negative height in {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, a) -> "Point3D":
        return cls(float(a[0]), float(a[1]), float(a[2]))


def distance(a, b) -> float:
    """Euclidean distance between two points (``Point3D`` or length-3 arrays)."""
    if isinstance(a, Point3D):
        a = (a.x, a.y, a.z)
    if isinstance(b, Point3D):
        b = (b.x, b.y, b.z)
    return math.dist(a, b)


# --------------------------------------------------------------------------
# Placement
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Layout:
    """Deployment parameters for :func:`sample_topology`.

    Horizontal coordinate ranges are the reference 40 x 40 m ranges expressed
    as fractions of the area, so they scale with ``width``/``height``.
    """

    width: float = 40.0
    height: float = 40.0
    n_uplink_devices: int = 10
    n_downlink_devices: int = 10
    n_uplink_irs: int = 4
    n_downlink_irs: int = 4
    device_height: float = 1.0
    irs_height: float = 10.0
    ap_height: float = 10.0
    # fractions of width for the x ranges; y always spans the full height
    ud_x: tuple = (0.0, 0.5)
    dd_x: tuple = (0.5, 1.0)
    ur_x: tuple = (0.125, 0.5)
    dr_x: tuple = (0.5, 0.875)

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("area must have positive width and height")
        counts = (self.n_uplink_devices, self.n_downlink_devices,
                  self.n_uplink_irs, self.n_downlink_irs)
        if min(counts) < 1:
            raise ValueError("device and IRS counts must be >= 1")

    @property
    def ap(self) -> np.ndarray:
        return np.array([self.width / 2, self.height / 2, self.ap_height])


@dataclass
class Topology:
    """Positions of every node, each an ``(n, 3)`` array; ``ap`` is ``(3,)``."""

    ud: np.ndarray
    dd: np.ndarray
    ur: np.ndarray
    dr: np.ndarray
    ap: np.ndarray

    def to_dict(self) -> dict:
        return {
            "ud": self.ud.tolist(),
            "dd": self.dd.tolist(),
            "ur": self.ur.tolist(),
            "dr": self.dr.tolist(),
            "ap": [self.ap.tolist()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        arr = {k: np.asarray(d[k], dtype=float) for k in ("ud", "dd", "ur", "dr")}
        return cls(ap=np.asarray(d["ap"], dtype=float).reshape(3), **arr)

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("ud", "dd", "ur", "dr", "ap"))


def _uniform_points(rng, n, xr, yr, z):
    pts = np.empty((n, 3))
    pts[:, 0] = rng.uniform(xr[0], xr[1], n)
    pts[:, 1] = rng.uniform(yr[0], yr[1], n)
    pts[:, 2] = z
    return pts


def sample_topology(layout: Layout, rng: np.random.Generator) -> Topology:
    w, h = layout.width, layout.height
    scale = lambda fr: (fr[0] * w, fr[1] * w)  # noqa: E731
    return Topology(
        ud=_uniform_points(rng, layout.n_uplink_devices, scale(layout.ud_x), (0, h), layout.device_height),
        dd=_uniform_points(rng, layout.n_downlink_devices, scale(layout.dd_x), (0, h), layout.device_height),
        ur=_uniform_points(rng, layout.n_uplink_irs, scale(layout.ur_x), (0, h), layout.irs_height),
        dr=_uniform_points(rng, layout.n_downlink_irs, scale(layout.dr_x), (0, h), layout.irs_height),
        ap=layout.ap,
    )


# --------------------------------------------------------------------------
# Mobility
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MobilityParams:
    """Speeds are in meters per slot; ``alpha_a``/``alpha_s`` bound the
    per-step deviation draws of group members to ``(-alpha, alpha)``."""

    v_min: float = 0.5
    v_max: float = 2.0
    pause_slots: int = 5
    alpha_a: float = 0.5
    alpha_s: float = 0.5
    area: tuple = (40.0, 40.0)
    slot: float = 1.0

    def __post_init__(self):
        if not 0 <= self.v_min <= self.v_max:
            raise ValueError("need 0 <= v_min <= v_max")
        if self.pause_slots < 0:
            raise ValueError("pause_slots must be >= 0")
        if not (abs(self.alpha_a) < 1 and abs(self.alpha_s) < 1):
            raise ValueError("deviation factors must lie in (-1, 1)")
        if self.slot <= 0:
            raise ValueError("slot interval must be positive")


@dataclass(frozen=True)
class HeadState:
    position: np.ndarray
    velocity: float
    direction: float
    slots_until_repick: int = 0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "direction", self.direction % TWO_PI)


def _reflect(pos, direction, area):
    """Fold a horizontal position back into ``[0, W] x [0, H]``, mirroring the
    heading at every wall it crosses."""
    x, y = pos[0], pos[1]
    w, h = area
    flip_x = flip_y = False
    while x < 0 or x > w:
        x = -x if x < 0 else 2 * w - x
        flip_x = not flip_x
    while y < 0 or y > h:
        y = -y if y < 0 else 2 * h - y
        flip_y = not flip_y
    if flip_x:
        direction = math.pi - direction
    if flip_y:
        direction = -direction
    return np.array([x, y, pos[2]]), direction % TWO_PI


def _advance(pos, velocity, direction, params: MobilityParams):
    step = velocity * params.slot
    moved = np.array([pos[0] + step * math.cos(direction),
                      pos[1] + step * math.sin(direction),
                      pos[2]])
    return _reflect(moved, direction, params.area)


def initial_head(position, params: MobilityParams, rng) -> HeadState:
    """Head at ``position`` that picks its first waypoint leg on the next step."""
    return HeadState(np.asarray(position, dtype=float), params.v_min, 0.0, 0)


def step_head_rwm(state: HeadState, params: MobilityParams, rng: np.random.Generator) -> HeadState:
    """One slot of random waypoint motion for a group head.

    When the pause counter has run out the head stays put for this slot and
    draws a fresh speed and heading; otherwise it moves ``velocity * slot``
    meters along its heading.
    """
    if state.slots_until_repick == 0:
        return HeadState(
            position=state.position.copy(),
            velocity=float(rng.uniform(params.v_min, params.v_max)),
            direction=float(rng.uniform(0.0, TWO_PI)),
            slots_until_repick=params.pause_slots,
        )
    pos, heading = _advance(state.position, state.velocity, state.direction, params)
    return replace(state, position=pos, direction=heading,
                   slots_until_repick=state.slots_until_repick - 1)


def member_motion(head: HeadState, params: MobilityParams, alpha_a: float, alpha_s: float):
    """Speed and heading of a group member for given deviation draws."""
    speed = max(abs(head.velocity) + alpha_s * params.v_max, 0.0)
    heading = (head.direction + alpha_a * params.v_max) % TWO_PI
    return speed, heading


def step_members_rpgm(head: HeadState, member, params: MobilityParams,
                      rng: np.random.Generator | None = None,
                      alpha_a: float | None = None, alpha_s: float | None = None) -> np.ndarray:
    """Advance one group member for one slot.

    Deviation factors are drawn uniformly from ``(-params.alpha, params.alpha)``
    unless given explicitly.
    """
    if alpha_a is None:
        alpha_a = rng.uniform(-params.alpha_a, params.alpha_a) if params.alpha_a else 0.0
    if alpha_s is None:
        alpha_s = rng.uniform(-params.alpha_s, params.alpha_s) if params.alpha_s else 0.0
    speed, heading = member_motion(head, params, alpha_a, alpha_s)
    pos, _ = _advance(np.asarray(member, dtype=float), speed, heading, params)
    return pos


@dataclass
class Group:
    """A mobile device group: ``positions[0]`` is the head."""

    head: HeadState
    positions: np.ndarray
    params: MobilityParams = field(repr=False)

    @classmethod
    def start(cls, positions, params: MobilityParams, rng) -> "Group":
        positions = np.array(positions, dtype=float)
        return cls(initial_head(positions[0], params, rng), positions, params)

    def step(self, rng: np.random.Generator) -> None:
        # members pause together with the head (synchronised pause time)
        pausing = self.head.slots_until_repick == 0
        self.head = step_head_rwm(self.head, self.params, rng)
        self.positions[0] = self.head.position
        if pausing:
            return
        for k in range(1, len(self.positions)):
            self.positions[k] = step_members_rpgm(self.head, self.positions[k], self.params, rng)


def move_topology(topo: Topology, params: MobilityParams, slots: int,
                  rng: np.random.Generator) -> Topology:
    """Topology after ``slots`` mobility steps; IRSs and the AP stay fixed."""
    if slots <= 0:
        return topo
    up = Group.start(topo.ud, params, rng)
    down = Group.start(topo.dd, params, rng)
    for _ in range(slots):
        up.step(rng)
        down.step(rng)
    return Topology(ud=up.positions, dd=down.positions, ur=topo.ur, dr=topo.dr, ap=topo.ap)
