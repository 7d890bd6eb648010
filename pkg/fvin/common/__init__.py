from .config import Algorithm, ForceConvention
from .errors import FvinError

__all__ = ["Algorithm", "ForceConvention", "FvinError"]
