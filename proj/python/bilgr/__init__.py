"""Critical-node classification on graphs with a learned graph estimate."""

from ._bilgr import *  # noqa: F401,F403
from ._bilgr import __doc__  # noqa: F401
