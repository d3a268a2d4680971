import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Pattern, Type

from dhq import errors, models
from dhq.config import DEFAULT_TOLERANCES, Tolerances
from dhq.enums import RealmKind
from dhq.realms import partition_by_time

from .scenario import Scenario


@dataclass(frozen=True)
class ModelOptions:
    realm: RealmKind = RealmKind.PAST_A
    bins: int = 8
    environment: bool = False
    n_env: int = 10
    theta: float = math.pi / 2
    tolerances: Tolerances = DEFAULT_TOLERANCES


class BuiltinModel(ABC):
    _name_re: Pattern = NotImplemented

    __models__: dict[Pattern, Type['BuiltinModel']] = {}

    def __init__(self, options: ModelOptions):
        self._options = options

    @abstractmethod
    def build(self) -> Scenario:
        pass

    def extras(self) -> dict[str, float]:
        """Model-specific values reported next to the grid"""
        return {}

    def __init_subclass__(cls, **kwargs):
        cls.__models__[cls._name_re] = cls


def get_model(name: str, options: ModelOptions) -> BuiltinModel:
    for name_re, model in BuiltinModel.__models__.items():
        if name_re.fullmatch(name):
            return model(options)
    else:
        raise errors.UnknownModel(name)


def model_names() -> tuple[str, ...]:
    return tuple(name_re.pattern for name_re in BuiltinModel.__models__)


class ThreeBox(BuiltinModel):
    _name_re = re.compile('three-box')

    def build(self) -> Scenario:
        scenario = models.three_box(self._options.realm, tolerances=self._options.tolerances)
        grid = scenario.grid
        partitions = {'past': partition_by_time(grid, grid.times[0]),
                      'data': partition_by_time(grid, scenario.data.time)}
        return Scenario(grid, partitions, scenario.data)


class TwoSlit(BuiltinModel):
    _name_re = re.compile('two-slit')

    def build(self) -> Scenario:
        scenario = models.two_slit(self._options.bins, self._options.environment,
                                   tolerances=self._options.tolerances)
        grid = scenario.grid
        partitions = {'slit': partition_by_time(grid, 1), 'screen': partition_by_time(grid, 2)}
        return Scenario(grid, partitions, scenario.data)


class SpinEnvironment(BuiltinModel):
    _name_re = re.compile('spin-env')

    def build(self) -> Scenario:
        self._scenario = models.spin_environment(self._options.n_env, self._options.theta,
                                                 tolerances=self._options.tolerances)
        grid = self._scenario.grid
        return Scenario(grid, {'x': partition_by_time(grid, 1)}, self._scenario.data)

    def extras(self) -> dict[str, float]:
        return {'record_overlap': self._scenario.record_overlap, 'closed_form': self._scenario.closed_form}
