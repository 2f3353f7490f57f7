"""
Version tracker ssbgp.
"""
__version__ = "0.1.0"
