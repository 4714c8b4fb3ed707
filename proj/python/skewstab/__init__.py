"""Python access to the skewstab experiments."""

from ._core import (
    ConfigError,
    SkewstabError,
    __version__,
    config_digest,
    fixed_point_summary,
    run,
    subcommands,
    wk_distance,
)

__all__ = [
    "ConfigError",
    "SkewstabError",
    "__version__",
    "config_digest",
    "fixed_point_summary",
    "run",
    "subcommands",
    "wk_distance",
]
