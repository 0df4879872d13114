"""Python interface to the diva C++ library."""

from ._diva import *  # noqa: F401,F403
from ._diva import __doc__  # noqa: F401
