"""Exception types shared across the package."""

from __future__ import annotations


class InputError(Exception):
    """A caller-supplied path or value is unusable (missing repo, bad flag)."""


class ParseError(InputError):
    """A fixture or intelligence file is malformed; message names the culprit."""
