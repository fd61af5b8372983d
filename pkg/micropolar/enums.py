from enum import Enum, IntEnum


__all__ = ('Scheme', 'DataKind', 'FieldSelector', 'Verdict', 'Subcommand', 'ExitStatus')


class Scheme(Enum):
    ETD1 = 'ETD1'
    ETDRK2 = 'ETDRK2'
    REF_RK4 = 'REF_RK4'


class DataKind(Enum):
    GAUSSIAN = 'GAUSSIAN'
    CANNONE_OSC = 'CANNONE_OSC'
    SHELL_RANDOM = 'SHELL_RANDOM'


class FieldSelector(Enum):
    U = 'u'
    OMEGA = 'omega'
    BOTH = 'both'


class Verdict(Enum):
    PASS = 'pass'
    FAIL = 'fail'
    REPORT = 'report'


class Subcommand(Enum):
    SIMULATE = 'simulate'
    VERIFY_ANALYSIS = 'verify-analysis'
    VERIFY_GREEN = 'verify-green'
    VERIFY_DYNAMICS = 'verify-dynamics'
    NORMS = 'norms'


class ExitStatus(IntEnum):
    OK = 0
    FAILED = 1
    ERROR = 2
