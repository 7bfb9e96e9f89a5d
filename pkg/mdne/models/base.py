from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, field_validator

__all__ = ("ConfigModel", "FrozenModel")


class FrozenModel(BaseModel):
    """Base model for immutable value objects such as report rows."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)


class ConfigModel(BaseModel):
    """Base model for every user-facing configuration section.

    Unknown keys are rejected so that typos in experiment files surface before any compute.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True, validate_assignment=True)

    @field_validator("*", mode="before")
    @classmethod
    def strip_strings(cls, v: Any) -> Any:
        """Strip surrounding whitespace from string values."""
        if isinstance(v, str):
            return v.strip()
        return v
