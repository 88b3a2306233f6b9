"""Minimal multi-page TIFF codec for binary instance masks.

Deliberately small surface: single-channel 8-bit grayscale pages, strip
layout, Deflate or LZMA compression. Anything else is rejected with an
explicit error instead of being half-read. The writer emits classic
little-endian TIFF with one strip per page, readable by mainstream tools.
"""

from __future__ import annotations

import lzma
import struct
import zlib
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, UnsupportedCompressionError

DEFLATE = "deflate"
LZMA = "lzma"

# Compression tag values: 8 = Adobe Deflate, 32946 = legacy Deflate, 34925 = LZMA2.
_DEFLATE_TAGS = (8, 32946)
_LZMA_TAG = 34925

_TAG_WIDTH = 256
_TAG_HEIGHT = 257
_TAG_BITS = 258
_TAG_COMPRESSION = 259
_TAG_PHOTOMETRIC = 262
_TAG_STRIP_OFFSETS = 273
_TAG_SAMPLES = 277
_TAG_ROWS_PER_STRIP = 278
_TAG_STRIP_COUNTS = 279
_TAG_PLANAR = 284

_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}
_SHORT, _LONG = 3, 4

_MAX_PAGES = 10_000
_MAX_PIXELS = 1 << 28  # per page; guards fuzzed dimension fields


def _slice(data: bytes, offset: int, size: int) -> bytes:
    if offset < 0 or size < 0 or offset + size > len(data):
        raise FormatError("TIFF structure points outside the file")
    return data[offset : offset + size]


def _read_values(data: bytes, order: str, type_: int, count: int, raw: bytes) -> list[int]:
    if type_ not in (_SHORT, _LONG):
        raise FormatError(f"unexpected TIFF field type {type_}")
    size = _TYPE_SIZES[type_] * count
    if size <= 4:
        buf = raw[:size]
    else:
        (offset,) = struct.unpack(order + "I", raw)
        buf = _slice(data, offset, size)
    fmt = "H" if type_ == _SHORT else "I"
    return list(struct.unpack(f"{order}{count}{fmt}", buf))


def _decompress(compressed: bytes, tag: int, expected: int) -> bytes:
    try:
        if tag in _DEFLATE_TAGS:
            dec = zlib.decompressobj()
            out = dec.decompress(compressed, expected + 1)
            done = dec.eof
        else:
            lz = lzma.LZMADecompressor(format=lzma.FORMAT_AUTO)
            out = lz.decompress(compressed, expected + 1)
            done = lz.eof
    except (zlib.error, lzma.LZMAError) as exc:
        raise FormatError(f"corrupt compressed strip: {exc}") from exc
    if len(out) != expected or not done:
        raise FormatError(f"strip decompressed to {len(out)} bytes, expected {expected}")
    return out


def _single(values: list[int], name: str) -> int:
    if len(values) != 1:
        raise FormatError(f"TIFF tag {name} must hold a single value")
    return values[0]


def _read_page(data: bytes, order: str, ifd_offset: int) -> tuple[np.ndarray, int]:
    (n_entries,) = struct.unpack(order + "H", _slice(data, ifd_offset, 2))
    entries_raw = _slice(data, ifd_offset + 2, n_entries * 12)
    (next_offset,) = struct.unpack(order + "I", _slice(data, ifd_offset + 2 + n_entries * 12, 4))

    fields: dict[int, tuple[int, int, bytes]] = {}
    for i in range(n_entries):
        tag, type_, count = struct.unpack(order + "HHI", entries_raw[i * 12 : i * 12 + 8])
        fields[tag] = (type_, count, entries_raw[i * 12 + 8 : i * 12 + 12])

    def get(tag: int, name: str, default: int | None = None) -> int:
        if tag not in fields:
            if default is None:
                raise FormatError(f"TIFF page lacks required tag {name}")
            return default
        type_, count, raw = fields[tag]
        return _single(_read_values(data, order, type_, count, raw), name)

    def get_list(tag: int, name: str) -> list[int]:
        if tag not in fields:
            raise FormatError(f"TIFF page lacks required tag {name}")
        type_, count, raw = fields[tag]
        return _read_values(data, order, type_, count, raw)

    compression = get(_TAG_COMPRESSION, "Compression", default=1)
    if compression not in _DEFLATE_TAGS and compression != _LZMA_TAG:
        raise UnsupportedCompressionError(f"unsupported compression tag {compression}")
    width = get(_TAG_WIDTH, "ImageWidth")
    height = get(_TAG_HEIGHT, "ImageLength")
    if width < 1 or height < 1 or width * height > _MAX_PIXELS:
        raise FormatError(f"implausible page dimensions {width}x{height}")
    if get(_TAG_BITS, "BitsPerSample", default=1) != 8:
        raise FormatError("only 8-bit mask pages are supported")
    if get(_TAG_SAMPLES, "SamplesPerPixel", default=1) != 1:
        raise FormatError("only single-channel mask pages are supported")
    if get(_TAG_PHOTOMETRIC, "PhotometricInterpretation", default=1) not in (0, 1):
        raise FormatError("only grayscale mask pages are supported")
    if get(_TAG_PLANAR, "PlanarConfiguration", default=1) != 1:
        raise FormatError("only chunky planar configuration is supported")

    offsets = get_list(_TAG_STRIP_OFFSETS, "StripOffsets")
    counts = get_list(_TAG_STRIP_COUNTS, "StripByteCounts")
    if len(offsets) != len(counts):
        raise FormatError("StripOffsets and StripByteCounts lengths differ")
    rows_per_strip = get(_TAG_ROWS_PER_STRIP, "RowsPerStrip", default=height)
    rows_per_strip = min(rows_per_strip, height)
    if rows_per_strip < 1:
        raise FormatError("RowsPerStrip must be positive")
    n_strips = -(-height // rows_per_strip)
    if len(offsets) != n_strips:
        raise FormatError(f"expected {n_strips} strips, found {len(offsets)}")

    pixels = bytearray()
    for i, (offset, count) in enumerate(zip(offsets, counts)):
        rows = min(rows_per_strip, height - i * rows_per_strip)
        pixels += _decompress(_slice(data, offset, count), compression, rows * width)
    page = np.frombuffer(bytes(pixels), dtype=np.uint8).reshape(height, width)
    return page != 0, next_offset


def read_prediction_masks(path: str | Path) -> list[np.ndarray]:
    """Decode a multi-page TIFF into one boolean mask per page, in page order.

    Any nonzero pixel is foreground. Masks from different pages may overlap
    freely. Raises FormatError on malformed input and
    UnsupportedCompressionError for codecs outside Deflate/LZMA.
    """
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise FormatError("file too short to be a TIFF")
    if data[:2] == b"II":
        order = "<"
    elif data[:2] == b"MM":
        order = ">"
    else:
        raise FormatError("not a TIFF file (bad byte-order mark)")
    magic, first_ifd = struct.unpack(order + "HI", data[2:8])
    if magic != 42:
        raise FormatError("not a TIFF file (bad magic number)")

    masks: list[np.ndarray] = []
    offset = first_ifd
    seen: set[int] = set()
    while offset != 0:
        if offset in seen:
            raise FormatError("TIFF page chain contains a cycle")
        seen.add(offset)
        if len(masks) >= _MAX_PAGES:
            raise FormatError(f"more than {_MAX_PAGES} pages")
        mask, offset = _read_page(data, order, offset)
        masks.append(mask)
    if not masks:
        raise FormatError("TIFF file contains no pages")
    return masks


def _compress(page: bytes, compression: str) -> tuple[bytes, int]:
    if compression == DEFLATE:
        return zlib.compress(page, 6), 8
    if compression == LZMA:
        return lzma.compress(page, format=lzma.FORMAT_XZ, check=lzma.CHECK_NONE), _LZMA_TAG
    raise ValueError(f"unknown compression: {compression!r}")


def write_prediction_masks(
    masks: Sequence[np.ndarray], path: str | Path, compression: str = DEFLATE
) -> None:
    """Write binary masks as a little-endian multi-page TIFF, one strip per page.

    All masks must share one shape; foreground pixels are stored as 255.
    An empty mask list is rejected: a zero-page TIFF is not a usable mask file.
    """
    if len(masks) == 0:
        raise ValueError("cannot write a TIFF with zero pages")
    pages = [np.asarray(m) for m in masks]
    shape = pages[0].shape
    for page in pages:
        if page.ndim != 2:
            raise ValueError("masks must be two-dimensional")
        if page.shape != shape:
            raise ValueError(f"mask shapes differ: {page.shape} vs {shape}")
    height, width = shape

    payloads = []
    for page in pages:
        raw = np.where(page != 0, np.uint8(255), np.uint8(0)).tobytes()
        payloads.append(_compress(raw, compression))
    comp_tag = payloads[0][1]

    # Layout: 8-byte header, then all strip data (word-aligned), then the IFD chain.
    data_offsets = []
    cursor = 8
    for payload, _ in payloads:
        data_offsets.append(cursor)
        cursor += len(payload) + (len(payload) & 1)
    ifd_size = 2 + 9 * 12 + 4
    ifd_offsets = [cursor + i * ifd_size for i in range(len(pages))]

    def entry(tag: int, type_: int, value: int) -> bytes:
        raw = struct.pack("<HH", value, 0) if type_ == _SHORT else struct.pack("<I", value)
        return struct.pack("<HHI", tag, type_, 1) + raw

    out = bytearray(struct.pack("<2sHI", b"II", 42, ifd_offsets[0]))
    for payload, _ in payloads:
        out += payload
        if len(payload) & 1:
            out += b"\x00"
    for i, (payload, _) in enumerate(payloads):
        next_ifd = ifd_offsets[i + 1] if i + 1 < len(pages) else 0
        out += struct.pack("<H", 9)
        out += entry(_TAG_WIDTH, _LONG, width)
        out += entry(_TAG_HEIGHT, _LONG, height)
        out += entry(_TAG_BITS, _SHORT, 8)
        out += entry(_TAG_COMPRESSION, _SHORT, comp_tag)
        out += entry(_TAG_PHOTOMETRIC, _SHORT, 1)
        out += entry(_TAG_STRIP_OFFSETS, _LONG, data_offsets[i])
        out += entry(_TAG_SAMPLES, _SHORT, 1)
        out += entry(_TAG_ROWS_PER_STRIP, _LONG, height)
        out += entry(_TAG_STRIP_COUNTS, _LONG, len(payload))
        out += struct.pack("<I", next_ifd)
    Path(path).write_bytes(bytes(out))
