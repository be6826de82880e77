"""Compatibility shims for Python < 3.11."""
import enum

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11

    class StrEnum(str, enum.Enum):  # type: ignore[no-redef]
        """Backport of :class:`enum.StrEnum`: members are strings and format as their value."""

        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()


__all__ = ["StrEnum"]
