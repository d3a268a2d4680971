"""Causal structure of flat spacetime in units with c = 1.

Times are seconds and distances light-seconds. Increasing t is the future.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dhq import errors
from dhq.enums import Separation, SurfaceSide

logger = logging.getLogger(__name__)

TOL_GEO = 1e-9


@dataclass(frozen=True)
class Event:
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        for name in ('t', 'x', 'y', 'z'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise errors.SpacetimeError(f'event coordinate {name} is not finite')
            object.__setattr__(self, name, value)

    @classmethod
    def parse(cls, text: str) -> 'Event':
        """``t,x,y,z`` with trailing spatial coordinates optional"""
        try:
            values = [float(v) for v in text.split(',')]
        except ValueError:
            raise errors.SpacetimeError(f'expected t,x,y,z, got {text!r}') from None
        if not 1 <= len(values) <= 4:
            raise errors.SpacetimeError(f'expected t,x,y,z, got {text!r}')
        return cls(*values)

    @property
    def four_vector(self) -> np.ndarray:
        return np.array([self.t, self.x, self.y, self.z])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def _velocity(values: Sequence[float]) -> tuple[float, float, float]:
    velocity = tuple(float(v) for v in values)
    if len(velocity) != 3:
        raise errors.SpacetimeError(f'velocity needs 3 components, got {len(velocity)}')
    speed = math.hypot(*velocity)
    if not speed < 1:
        raise errors.SuperluminalBoost(speed)
    return velocity


@dataclass(frozen=True)
class Boost:
    """Change to the frame moving with ``velocity`` relative to the current one"""
    velocity: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, 'velocity', _velocity(self.velocity))

    @classmethod
    def along(cls, v: float, axis: int = 0) -> 'Boost':
        velocity = [0.0, 0.0, 0.0]
        velocity[axis] = v
        return cls(tuple(velocity))

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)

    @property
    def matrix(self) -> np.ndarray:
        v = np.array(self.velocity)
        speed = self.speed
        g = gamma(speed)
        lam = np.eye(4)
        lam[0, 0] = g
        lam[0, 1:] = lam[1:, 0] = -g * v
        if speed > 0:
            lam[1:, 1:] += (g - 1) * np.outer(v, v) / speed ** 2
        return lam


def gamma(speed: float) -> float:
    """Lorentz factor 1/sqrt(1 - v^2)"""
    if not abs(speed) < 1:
        raise errors.SuperluminalBoost(abs(speed))
    return 1 / math.sqrt(1 - speed ** 2)


def interval(a: Event, b: Event) -> float:
    """s^2 = -(dt)^2 + |dx|^2"""
    d = b.four_vector - a.four_vector
    return float(-d[0] ** 2 + d[1:] @ d[1:])


def classify(a: Event, b: Event, *, tol: float = TOL_GEO) -> Separation:
    """Where ``b`` lies relative to the light cone of ``a``"""
    s2 = interval(a, b)
    if s2 > tol:
        return Separation.SPACELIKE
    future = b.t > a.t
    if s2 < -tol:
        return Separation.TIMELIKE_FUTURE if future else Separation.TIMELIKE_PAST
    if b == a:
        # a coincident pair is null; orient it to the future
        return Separation.NULL_FUTURE
    return Separation.NULL_FUTURE if future else Separation.NULL_PAST


def boost_event(event: Event, boost: Boost) -> Event:
    return Event(*(boost.matrix @ event.four_vector))


def happened_relative_to_surface(a: Event, b: Event, surface: Boost, *, tol: float = TOL_GEO) -> SurfaceSide:
    """Side of the constant-t' surface through ``a`` on which ``b`` lies.

    ``surface`` is the boost to the frame whose simultaneity slice defines the surface.
    """
    dt = boost_event(b, surface).t - boost_event(a, surface).t
    if abs(dt) <= tol:
        return SurfaceSide.ON
    return SurfaceSide.FUTURE if dt > 0 else SurfaceSide.PAST


@dataclass(frozen=True)
class OrderingBoosts:
    """Boosts putting ``b`` before, simultaneous with and after ``a``"""
    before: Boost
    simultaneous: Boost
    after: Boost


def ordering_boosts(a: Event, b: Event, *, tol: float = TOL_GEO) -> OrderingBoosts:
    """:raise SpacetimeError: unless the pair is spacelike"""
    if classify(a, b, tol=tol) is not Separation.SPACELIKE:
        raise errors.SpacetimeError('only spacelike pairs change order under boosts')
    dt = b.t - a.t
    dx = b.position - a.position
    distance = float(np.linalg.norm(dx))
    direction = dx / distance
    # t'(b) - t'(a) = gamma (dt - v.dx) changes sign at v = dt/|dx| along dx
    pivot = dt / distance
    margin = (1 - abs(pivot)) / 2

    def along_dx(speed: float) -> Boost:
        return Boost(tuple(speed * direction))

    return OrderingBoosts(
        before=along_dx(pivot + margin),
        simultaneous=along_dx(pivot),
        after=along_dx(pivot - margin),
    )


def relative_speed(u: Sequence[float], v: Sequence[float]) -> float:
    """Speed of one observer in the rest frame of the other"""
    u, v = np.array(_velocity(u)), np.array(_velocity(v))
    g = gamma(float(np.linalg.norm(u))) * gamma(float(np.linalg.norm(v))) * (1 - float(u @ v))
    return math.sqrt(max(0.0, 1 - 1 / g ** 2))


@dataclass(frozen=True)
class Igus:
    name: str
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        position = tuple(float(x) for x in self.position)
        if len(position) != 3 or not all(math.isfinite(x) for x in position):
            raise errors.SpacetimeError(f'IGUS {self.name!r} needs a finite 3-vector position')
        object.__setattr__(self, 'position', position)
        object.__setattr__(self, 'velocity', _velocity(self.velocity))


@dataclass(frozen=True)
class IgusGroup:
    """
    :param members: information gathering and utilizing systems
    :param tau_star: perception timescale in seconds
    :param env_timescale: timescale on which the environment varies, in seconds
    """
    members: tuple[Igus, ...]
    tau_star: float
    env_timescale: float

    def __post_init__(self):
        object.__setattr__(self, 'members', tuple(self.members))
        if not self.members:
            raise errors.SpacetimeError('an IGUS group needs at least one member')
        if not self.tau_star > 0 or not self.env_timescale > 0:
            raise errors.SpacetimeError('tau_star and env_timescale must be positive')


@dataclass(frozen=True)
class PresentThresholds:
    """
    :param v_max: largest relative speed, as a fraction of c
    :param ratio: factor f for "small compared to"
    """
    v_max: float = 0.01
    ratio: float = 0.1


@dataclass(frozen=True)
class Contingency:
    name: str
    value: float
    limit: float

    @property
    def passed(self) -> bool:
        return self.value <= self.limit


@dataclass(frozen=True)
class PresentCheck:
    contingencies: tuple[Contingency, ...]
    thresholds: PresentThresholds = field(default_factory=PresentThresholds)

    @property
    def common_present(self) -> bool:
        return all(c.passed for c in self.contingencies)

    def __getitem__(self, name: str) -> Contingency:
        for contingency in self.contingencies:
            if contingency.name == name:
                return contingency
        raise KeyError(name)


def common_present_check(group: IgusGroup, thresholds: PresentThresholds = PresentThresholds()) -> PresentCheck:
    """Whether a group of IGUSes shares an approximate present.

    1. relative speeds at most ``v_max``
    2. light travel time between members at most ``ratio * tau_star``
    3. ``tau_star`` at most ``ratio * env_timescale``
    """
    pairs = list(itertools.combinations(group.members, 2))
    speed = max((relative_speed(a.velocity, b.velocity) for a, b in pairs), default=0.0)
    light_time = max((math.dist(a.position, b.position) for a, b in pairs), default=0.0)
    check = PresentCheck(
        (
            Contingency('relative_speed', speed, thresholds.v_max),
            Contingency('light_travel_time', light_time, thresholds.ratio * group.tau_star),
            Contingency('perception_time', group.tau_star, thresholds.ratio * group.env_timescale),
        ),
        thresholds,
    )
    logger.debug('common present of %d IGUSes: %s', len(group.members), check.common_present)
    return check
