import json
import struct
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Sequence, BinaryIO

import numpy as np

FORMAT_VERSION = 1

_HEADER_LEN = struct.Struct("<I")
_MAGIC_LEN = 8


class FramingError(ValueError):
    pass


class Frame(NamedTuple):
    header: Dict[str, Any]
    arrays: List[np.ndarray]


class HeaderEncoder(json.JSONEncoder):

    def default(self, obj):
        if isinstance(obj, Enum):
            return obj.value
        elif isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, tuple):
            return list(obj)
        return super().default(obj)


def _check_magic(magic: bytes) -> None:
    if len(magic) != _MAGIC_LEN:
        raise ValueError(f"Magic must be exactly {_MAGIC_LEN} bytes.")


def write_frame(out: BinaryIO, magic: bytes, header: Dict[str, Any], arrays: Sequence[np.ndarray]) -> int:
    """
    Writes `magic`, a u32 header length, a UTF-8 JSON header and then every array as raw little-endian scalars in the
    order given.  Array shapes and dtypes are recorded in the header under `arrays`.
    :return: num bytes written
    """
    _check_magic(magic)
    descriptors = list()
    payloads = list()
    for arr in arrays:
        arr = np.asarray(arr)
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        descriptors.append({"dtype": le.dtype.str, "shape": list(arr.shape)})
        payloads.append(np.ascontiguousarray(le).tobytes())
    full_header = {**header, "format_version": FORMAT_VERSION, "arrays": descriptors}
    header_b = json.dumps(full_header, cls=HeaderEncoder, sort_keys=True).encode()
    written = out.write(magic)
    written += out.write(_HEADER_LEN.pack(len(header_b)))
    written += out.write(header_b)
    for payload in payloads:
        written += out.write(payload)
    return written


def read_frame(src: BinaryIO, magic: bytes) -> Frame:
    """
    Reads a single frame written by `write_frame`.
    :raise: FramingError on a magic mismatch, truncated data or an unsupported version
    """
    _check_magic(magic)
    found_magic = src.read(_MAGIC_LEN)
    if found_magic != magic:
        raise FramingError(f"Bad magic: expected {magic!r}, found {found_magic!r}.")
    raw_len = src.read(_HEADER_LEN.size)
    if len(raw_len) != _HEADER_LEN.size:
        raise FramingError("Truncated header length.")
    (header_len,) = _HEADER_LEN.unpack(raw_len)
    raw_header = src.read(header_len)
    if len(raw_header) != header_len:
        raise FramingError("Truncated header.")
    try:
        header = json.loads(raw_header.decode())
    except Exception as e:
        raise FramingError("Unable to decode header.") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise FramingError(f"Unsupported format version: {header.get('format_version')}")
    arrays = list()
    for descriptor in header["arrays"]:
        dtype = np.dtype(descriptor["dtype"])
        shape = tuple(descriptor["shape"])
        n_bytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
        payload = src.read(n_bytes)
        if len(payload) != n_bytes:
            raise FramingError("Truncated array payload.")
        arr = np.frombuffer(payload, dtype=dtype).reshape(shape)
        arrays.append(arr.astype(dtype.newbyteorder("="), copy=True))
    return Frame(header=header, arrays=arrays)


def write_file(path: str | Path, magic: bytes, header: Dict[str, Any], arrays: Sequence[np.ndarray]) -> int:
    with Path(path).open("wb") as f:
        return write_frame(f, magic, header, arrays)


def read_file(path: str | Path, magic: bytes) -> Frame:
    with Path(path).open("rb") as f:
        frame = read_frame(f, magic)
        if f.read(1):
            raise FramingError(f"Trailing data after frame in {path}.")
        return frame
