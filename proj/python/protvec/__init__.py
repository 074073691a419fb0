"""Python bindings for the protvec C++ core."""

from ._protvec import *  # noqa: F401,F403
from ._protvec import DataError, InvalidArgument, NumericError, __doc__  # noqa: F401
