"""Utility helpers for zetaforge."""

from .retry import execute_with_retry

__all__ = ["execute_with_retry"]
