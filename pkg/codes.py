from enum import Enum, IntEnum


class ExitCode(IntEnum):
    OK = 0  # also an audit pass
    ERROR = 1  # bad config or runtime failure
    AUDIT_FAIL = 2
    NOT_AUDITABLE = 3


class LearnerKind(str, Enum):
    FTL = "FTL"
    EW = "EW"
    FTPL = "FTPL"
    SDA = "SDA"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"


class Subcommand(str, Enum):
    LEARN = "learn"
    BANDIT = "bandit"
    GAME = "game"
    DYNAMICS = "dynamics"
    MANIPULATE = "manipulate"
    INFER = "infer"
    AUDIT = "audit"
    BENCHMARK = "benchmark"
