__author__ = 'micropolar developers'
__version__ = '0.1.0'


from .base import *
from .enums import *
from .errors import *
from .utils import *
from .grid import *
from .littlewood_paley import *
from .core import *
from .green import *
from .integrator import *
from .snapshot import *
from .config import *
from .verification import *
from .cli import *
