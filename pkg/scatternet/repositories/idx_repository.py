"""
Repository for IDX image files (the MNIST distribution format).
"""
import logging
import struct
from pathlib import Path
from typing import List, Union

import numpy as np

from scatternet.exceptions import FormatError, StorageError

logger = logging.getLogger(__name__)

IDX_UBYTE = 0x08
IMAGE_RANK = 3
IDX_IMAGE_MAGIC = (IDX_UBYTE << 8) | IMAGE_RANK  # 0x00000803


class IdxRepository:
    """Reads and writes unsigned-byte rank-3 IDX files."""

    def parse(self, payload: bytes) -> List[np.ndarray]:
        """
        Parse an in-memory IDX image file.

        Args:
            payload: Whole file content

        Returns:
            List of (rows, cols) uint8 images

        Raises:
            FormatError: Wrong magic, unsupported rank or truncated data
        """
        if len(payload) < 4:
            raise FormatError("IDX file shorter than its magic number", expected=4, actual=len(payload))
        (magic,) = struct.unpack(">I", payload[:4])
        if magic >> 16 != 0 or (magic >> 8) & 0xFF != IDX_UBYTE:
            raise FormatError(f"Bad IDX magic 0x{magic:08x}", expected=f"0x{IDX_IMAGE_MAGIC:08x}", actual=f"0x{magic:08x}")
        rank = magic & 0xFF
        if rank != IMAGE_RANK:
            raise FormatError(f"IDX unsupported rank {rank}; expected image files of rank {IMAGE_RANK}",
                              expected=IMAGE_RANK, actual=rank)

        header_size = 4 + 4 * rank
        if len(payload) < header_size:
            raise FormatError(f"IDX header truncated: expected {header_size} bytes, got {len(payload)}",
                              expected=header_size, actual=len(payload))
        count, rows, cols = struct.unpack(">III", payload[4:header_size])

        expected = count * rows * cols
        actual = len(payload) - header_size
        if actual != expected:
            raise FormatError(f"IDX payload size mismatch: expected {expected} bytes, got {actual}",
                              expected=expected, actual=actual)

        data = np.frombuffer(payload, dtype=np.uint8, offset=header_size).reshape(count, rows, cols)
        return [image.copy() for image in data]

    def encode(self, images: List[np.ndarray]) -> bytes:
        """Serialize equally sized uint8 images as an IDX file."""
        stack = np.asarray(images, dtype=np.uint8)
        if stack.ndim != 3:
            raise FormatError("IDX images must share one (rows, cols) shape", expected=3, actual=stack.ndim)
        count, rows, cols = stack.shape
        return struct.pack(">IIII", IDX_IMAGE_MAGIC, count, rows, cols) + stack.tobytes(order="C")

    def read(self, path: Union[str, Path]) -> List[np.ndarray]:
        try:
            payload = Path(path).read_bytes()
        except OSError as e:
            logger.error(f"Cannot read IDX file {path}: {e}")
            raise StorageError(f"Cannot read IDX file ({e.strerror})", path=str(path)) from e
        images = self.parse(payload)
        logger.info(f"Read {len(images)} IDX images from {path}")
        return images

    def write(self, images: List[np.ndarray], path: Union[str, Path]) -> None:
        try:
            Path(path).write_bytes(self.encode(images))
        except OSError as e:
            logger.error(f"Cannot write IDX file {path}: {e}")
            raise StorageError(f"Cannot write IDX file ({e.strerror})", path=str(path)) from e


idx_repository = IdxRepository()


def read_idx(path: Union[str, Path]) -> List[np.ndarray]:
    """Images of an IDX file, row-major, one (rows, cols) uint8 array each."""
    return idx_repository.read(path)


def write_idx(images: List[np.ndarray], path: Union[str, Path]) -> None:
    idx_repository.write(images, path)
