"""Python access to the duriano singing synthesis toolkit."""

try:
    from ._duriano import *  # noqa: F401,F403
    from ._duriano import InputError, NumericError  # noqa: F401
except ImportError:  # in-tree build: the extension sits next to the build outputs
    from _duriano import *  # noqa: F401,F403
    from _duriano import InputError, NumericError  # noqa: F401
