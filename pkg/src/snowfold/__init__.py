"""Snowflake-and-fold Lipschitz light maps on finite metric spaces."""

__version__ = "0.1.0"
