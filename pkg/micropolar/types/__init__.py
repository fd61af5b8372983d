from typing import Union

from .base import *
from .config import *
from .report import *

Payload = Union[
    ReportPayload,
    CheckPayload,
    BoundScanPayload,
    ConfigDocument,
]
