import logging

from .client import *
from .embeddings import *
from .errors import *
from .evaluation import *
from .graph import *
from .models import *
from .splits import *
from .trainer import *

__version__ = "1.0.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
