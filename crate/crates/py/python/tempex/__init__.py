from ._tempex import *  # noqa: F401,F403
from ._tempex import __all__
