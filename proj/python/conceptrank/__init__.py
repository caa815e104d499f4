"""Python access to the conceptrank C++ engine."""

try:
    from ._conceptrank import *  # noqa: F401,F403
    from ._conceptrank import ConceptrankError
except ImportError:  # in-tree build: extension sits beside the package
    from _conceptrank import *  # type: ignore  # noqa: F401,F403
    from _conceptrank import ConceptrankError  # type: ignore  # noqa: F401
