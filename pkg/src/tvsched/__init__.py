"""Viewership forecasting and advertisement scheduling for linear TV."""

__version__ = "0.1.0"
