"""Python bindings for the cbfrl C++ core."""

from ._cbfrl import *  # noqa: F401,F403
from ._cbfrl import __doc__  # noqa: F401
