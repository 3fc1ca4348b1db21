"""Serial-number logo watermarking that survives compressive-sensing transport."""

from .attacks import AttackSpec
from .bitplane import WatermarkKey, embed, extract, generate_key, load_key, save_key, split_layers
from .cs import CsMeasurements, SolverParams, cs_sample, tv_reconstruct
from .metrics import bit_error_rate, psnr
from .registry import Registry, Verdict, load_registry, verify_source
from .serial import (
    LogoSpec,
    SerialNumber,
    decode_serial,
    parse_serial_hex,
    serial_to_logo,
    tile_logo,
)

__version__ = "0.1.0"
