"""Polyglot DAP debugger backend."""

import os
from pathlib import Path

_bin = Path(__file__).with_name("bin")
if _bin.is_dir():
    os.environ.setdefault("POLYDBG_EXE_DIR", str(_bin))

from ._polydbg import (  # noqa: E402
    Error,
    decode_frames,
    encode_frame,
    fit_linear,
    format_float,
    generate_stress_program,
    parse_value,
    render_value,
    run,
)

__all__ = [
    "Error",
    "decode_frames",
    "encode_frame",
    "fit_linear",
    "format_float",
    "generate_stress_program",
    "parse_value",
    "render_value",
    "run",
]
