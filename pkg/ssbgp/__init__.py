"""
ssbgp; stateless secure path-vector routing with enhanced chain signatures.
"""
from ssbgp.version import __version__
