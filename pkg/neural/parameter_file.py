from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Sequence

import numpy as np

from common import framing

PARAM_MAGIC = b"FQNPARAM"


class ParameterFile(NamedTuple):
    architecture: str
    layer_dims: List[Any]
    hyperparameters: Dict[str, Any]
    arrays: List[np.ndarray]


def write_parameters(path: str | Path, architecture: str, layer_dims: List[Any], arrays: Sequence[np.ndarray],
                     hyperparameters: Dict[str, Any] | None = None) -> int:
    """
    Magic, JSON header (architecture id, layer dims, hyperparameters), then every parameter array as raw
    little-endian scalars in layer order.
    """
    header = {"architecture": architecture, "layer_dims": layer_dims,
              "hyperparameters": hyperparameters or dict()}
    return framing.write_file(path, PARAM_MAGIC, header, arrays)


def read_parameters(path: str | Path) -> ParameterFile:
    frame = framing.read_file(path, PARAM_MAGIC)
    header = frame.header
    try:
        return ParameterFile(architecture=header["architecture"], layer_dims=header["layer_dims"],
                             hyperparameters=header.get("hyperparameters", dict()), arrays=frame.arrays)
    except KeyError as e:
        raise framing.FramingError(f"Parameter file {path} is missing header field {e}.") from e
