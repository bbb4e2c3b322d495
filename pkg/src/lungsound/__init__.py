"""Respiratory sound classification toolkit."""

from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version("lung-sound-kit")
except PackageNotFoundError:
    __version__ = "0.1.0"  # Fallback for dev installs
