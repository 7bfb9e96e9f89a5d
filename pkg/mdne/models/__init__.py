from .base import *
from .config import *
from .experiment import *
from .report import *
