from schottky_lab.mobius import MobiusMap
from schottky_lab.schottky import (
    Disk,
    SchottkyData,
    elementary_schottky,
    limit_points,
    paired_schottky,
    symmetric_schottky,
    validate_schottky,
)
from schottky_lab.transfer import assemble_transfer, bowen_dimension, zeta_det
from schottky_lab.zeros import Rectangle, find_zeros
from schottky_lab.fup import fup_scan



__version__ = "0.1.0"


__all__ = [
    "MobiusMap",
    "Disk",
    "SchottkyData",
    "elementary_schottky",
    "limit_points",
    "paired_schottky",
    "symmetric_schottky",
    "validate_schottky",
    "assemble_transfer",
    "bowen_dimension",
    "zeta_det",
    "Rectangle",
    "find_zeros",
    "fup_scan",
]
