"""Level-3 power MOSFET inverse modeling package."""

__version__ = '0.1dev'
