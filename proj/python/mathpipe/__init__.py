"""Curation, packing and curriculum planning for long-form reasoning trace corpora."""

from ._mathpipe import *  # noqa: F401,F403
from ._mathpipe import __version__  # noqa: F401
