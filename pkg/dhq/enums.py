from enum import Enum


class StrEnum(str, Enum):

    @classmethod
    def values(cls) -> tuple[str, ...]:
        return tuple(item.value for item in cls)

    def __str__(self) -> str:
        return self.value


class Compatibility(StrEnum):
    COMPATIBLE = 'compatible'
    INCOMPATIBLE = 'incompatible'
    UNDETERMINED = 'undetermined'


class RealmKind(StrEnum):
    PAST_A = 'past_A'
    PAST_B = 'past_B'
    PAST_PSI = 'past_Psi'
    JOINT_AB = 'joint_AB'


class Separation(StrEnum):
    TIMELIKE_FUTURE = 'timelike_future'
    TIMELIKE_PAST = 'timelike_past'
    NULL_FUTURE = 'null_future'
    NULL_PAST = 'null_past'
    SPACELIKE = 'spacelike'

    @property
    def is_causal(self) -> bool:
        return self is not Separation.SPACELIKE


class SurfaceSide(StrEnum):
    PAST = 'past_of_S'
    ON = 'on_S'
    FUTURE = 'future_of_S'


class OutputFormat(StrEnum):
    TEXT = 'text'
    JSON = 'json'


class RunCommand(StrEnum):
    CHECK = 'check'
    PROB = 'prob'
    RETRODICT = 'retrodict'
    PREDICT = 'predict'
