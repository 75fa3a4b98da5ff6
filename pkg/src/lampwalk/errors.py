"""Exceptions and resource caps shared across the library.

Caps are explicit configuration: exceeding one raises ResourceCapError,
never silent truncation.
"""
from __future__ import annotations

from dataclasses import dataclass


class LampwalkError(Exception):
    """Base class for library errors."""


class DomainError(LampwalkError):
    """An argument is outside the operation's domain (wrong group,
    malformed element, unsupported increment shape)."""


class ResourceCapError(LampwalkError):
    """A configured resource cap would be exceeded.

    Carries the cap name and value so callers (and the CLI) can report
    exactly which limit was hit.
    """

    def __init__(self, cap_name: str, cap_value: int, requested) -> None:
        self.cap_name = cap_name
        self.cap_value = cap_value
        self.requested = requested
        super().__init__(
            f"{cap_name} cap is {cap_value}, requested {requested}"
        )


@dataclass(frozen=True)
class Caps:
    """Resource limits. All limits are inclusive."""

    ball_elements: int = 10**7
    convolution_support: int = 10**7
    rational_steps: int = 400
    float_steps: int = 5000
    trajectory_steps: int = 10**7

    def check(self, cap_name: str, requested) -> None:
        cap_value = getattr(self, cap_name)
        if requested > cap_value:
            raise ResourceCapError(cap_name, cap_value, requested)


DEFAULT_CAPS = Caps()
