"""Renderer execution harness and the built-in parameterized script bank."""

from .bank import (
    COLOR_SCHEMES,
    FONTS,
    GRIDS,
    LEGENDS,
    MARK_TEXTURES,
    STYLE_TOKENS,
    BankError,
    bank_template,
    bank_templates,
    instantiate,
)
from .harness import main, shim_exec

__all__ = [
    "COLOR_SCHEMES",
    "FONTS",
    "GRIDS",
    "LEGENDS",
    "MARK_TEXTURES",
    "STYLE_TOKENS",
    "BankError",
    "bank_template",
    "bank_templates",
    "instantiate",
    "main",
    "shim_exec",
]
