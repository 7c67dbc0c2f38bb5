"""Closed-form liability-tracking portfolio control with Monte Carlo evaluation."""

__version__ = "0.1.0"
