"""Statistical ranking of fuzzers from time-to-bug trials."""

from ._senf import *  # noqa: F401,F403
from ._senf import __doc__  # noqa: F401
