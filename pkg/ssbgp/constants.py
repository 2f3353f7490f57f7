"""
Constants for ssbgp
"""
from pathlib import Path

_data_path = Path(__file__).absolute().parent / "data"
_scenario_path = _data_path / "scenarios"

# domain separation tags
HASH_TO_G1_DST = b"ECS-SSBGP-v1"
PREFIX_TAG = b"ECS-PREFIX-v1"
SCALAR_TAG = b"ECS-SCALAR-v1"
BASELINE_TAG = b"BGP-STATEMENT-v1"

# wire sizes (bytes)
L_PT = 48  # compressed G1 point on BLS12-381
L_PT2 = 96  # compressed G2 point
L_PUBKEY = L_PT + L_PT2
SCALAR_BYTES = 32

# ecs signature markers
UNIT_MARKER = b"\x00"
POINT_MARKER = b"\x01"

# nominal security level of BLS12-381 (bits)
SECURITY_LEVEL = 128
RANDOMIZER_BITS = 128

# the constant string R_0 of the first BGP statement
R0 = "R0"

# simulation defaults, all in simulation milliseconds
DEFAULT_THRESHOLD_T = 1000
PROPAGATION_DELAY = 1
CONVERGENCE_WINDOW = 100
