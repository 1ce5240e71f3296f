"""Memristive crossbar simulator."""
