"""
Repository for NISW cascade weight files.

Layout: magic "NISW", u32 LE version, u32 LE module count, then for every
convolution of every module: u32 C_out, C_in, f, the (C_out, C_in, f, f)
weights and the C_out biases as little-endian complex128, row-major.
"""
import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from scatternet.exceptions import FormatError, StorageError
from scatternet.models.network import LAYERS_PER_MODULE, CascadeModel, CascadeModule, ConvLayer

logger = logging.getLogger(__name__)

WEIGHTS_MAGIC = b"NISW"
WEIGHTS_VERSION = 1
COMPLEX_LE = np.dtype("<c16")


class WeightsRepository:
    """Encodes and decodes CascadeModel weights."""

    def encode(self, model: CascadeModel) -> bytes:
        parts = [WEIGHTS_MAGIC, struct.pack("<II", WEIGHTS_VERSION, model.n_modules)]
        for module in model.modules:
            for layer in module.layers:
                parts.append(struct.pack("<III", layer.out_channels, layer.in_channels, layer.kernel))
                parts.append(np.ascontiguousarray(layer.weights, dtype=COMPLEX_LE).tobytes())
                parts.append(np.ascontiguousarray(layer.biases, dtype=COMPLEX_LE).tobytes())
        return b"".join(parts)

    def decode(self, payload: bytes, residual: bool = False) -> CascadeModel:
        """
        Rebuild a cascade from NISW bytes.

        The residual toggle is not part of the file and is supplied by the caller.
        """
        if payload[:4] != WEIGHTS_MAGIC:
            raise FormatError("Not an NISW file", expected=WEIGHTS_MAGIC, actual=payload[:4])
        if len(payload) < 12:
            raise FormatError("NISW preamble truncated", expected=12, actual=len(payload))
        version, n_modules = struct.unpack("<II", payload[4:12])
        if version != WEIGHTS_VERSION:
            raise FormatError(f"Unsupported NISW version {version}", expected=WEIGHTS_VERSION, actual=version)
        if n_modules < 1:
            raise FormatError("NISW file declares no modules", expected=">= 1", actual=n_modules)

        offset = 12
        modules = []
        try:
            for m in range(n_modules):
                layers = []
                for k in range(LAYERS_PER_MODULE):
                    if len(payload) < offset + 12:
                        raise FormatError(f"NISW truncated in module {m}, layer {k} header",
                                          expected=offset + 12, actual=len(payload))
                    c_out, c_in, f = struct.unpack("<III", payload[offset:offset + 12])
                    offset += 12
                    n_weights = c_out * c_in * f * f
                    needed = (n_weights + c_out) * COMPLEX_LE.itemsize
                    if len(payload) < offset + needed:
                        raise FormatError(f"NISW truncated in module {m}, layer {k} data",
                                          expected=offset + needed, actual=len(payload))
                    values = np.frombuffer(payload, dtype=COMPLEX_LE, count=n_weights + c_out, offset=offset)
                    offset += needed
                    layers.append(ConvLayer(
                        weights=values[:n_weights].astype(np.complex128).reshape(c_out, c_in, f, f),
                        biases=values[n_weights:].astype(np.complex128),
                    ))
                modules.append(CascadeModule(layers=layers, residual=residual))
            model = CascadeModel(modules=modules)
        except PydanticValidationError as e:
            raise FormatError(f"Inconsistent NISW layer shapes: {e}") from e

        if offset != len(payload):
            raise FormatError("Trailing bytes after the last NISW layer", expected=offset, actual=len(payload))
        spec = model.spec
        for module in model.modules[1:]:
            shapes = [(l.out_channels, l.in_channels, l.kernel) for l in module.layers]
            if shapes != spec.layer_shapes():
                raise FormatError("NISW modules disagree on layer shapes", expected=spec.layer_shapes(), actual=shapes)
        return model

    def save(self, model: CascadeModel, path: Union[str, Path]) -> None:
        try:
            Path(path).write_bytes(self.encode(model))
        except OSError as e:
            logger.error(f"Cannot write weights {path}: {e}")
            raise StorageError(f"Cannot write weights ({e.strerror})", path=str(path)) from e
        logger.info(f"Saved {model.n_modules}-module cascade to {path}")

    def load(self, path: Union[str, Path], residual: bool = False) -> CascadeModel:
        try:
            payload = Path(path).read_bytes()
        except OSError as e:
            logger.error(f"Cannot read weights {path}: {e}")
            raise StorageError(f"Cannot read weights ({e.strerror})", path=str(path)) from e
        model = self.decode(payload, residual=residual)
        logger.info(f"Loaded {model.n_modules}-module cascade from {path}")
        return model


weights_repository = WeightsRepository()


def save_weights(model: CascadeModel, path: Union[str, Path]) -> None:
    weights_repository.save(model, path)


def load_weights(path: Union[str, Path], residual: bool = False) -> CascadeModel:
    return weights_repository.load(path, residual=residual)
