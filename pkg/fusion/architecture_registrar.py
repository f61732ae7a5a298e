import importlib
import logging
import pkgutil
from pathlib import Path
from typing import Callable, Dict, Iterator, Optional

import numpy as np

import fusion.builders
from fusion.architecture import ARCHITECTURE_DIMS, PUBLISHED_PARAM_COUNTS, ArchitectureDims, ArchitectureId
from fusion.network import FusionNetwork
from neural.parameter_file import read_parameters

Builder = Callable[[ArchitectureDims, np.random.Generator, np.dtype], FusionNetwork]


class ArchitectureMismatchError(ValueError):
    pass


class ArchitectureRegistrar:
    """
    Discovery and registration of architecture builders.  Builder modules live in the `fusion.builders` package and
    expose a `register(registrar)` function that hands one or more builders to `accept`.
    """

    _REGISTER_FUNCTION_NAME = "register"

    def __init__(self):
        self._builders: Dict[ArchitectureId, Builder] = dict()
        self._log = logging.getLogger(type(self).__name__)
        self._scanned = False

    def __contains__(self, item: ArchitectureId) -> bool:
        return item in self._builders

    def __len__(self) -> int:
        return len(self._builders)

    def __iter__(self) -> Iterator[ArchitectureId]:
        return iter(self._builders)

    def accept(self, architecture: ArchitectureId, builder: Builder) -> None:
        """
        :raises: ValueError if a builder for the architecture is already registered
        """
        if architecture in self:
            raise ValueError(f"Architecture: {architecture.value} has already been registered.")
        self._log.debug(f"Registering {architecture.value}")
        self._builders[architecture] = builder

    def scan(self) -> None:
        """
        Imports every module of `fusion.builders`, calling its `register` function when found.
        """
        importlib.invalidate_caches()
        for _finder, name, _ispkg in pkgutil.iter_modules(path=fusion.builders.__path__,
                                                          prefix=fusion.builders.__name__ + "."):
            module = importlib.import_module(name)
            if self._REGISTER_FUNCTION_NAME in dir(module):
                num_builders = len(self)
                try:
                    module.register(self)
                except Exception as e:
                    self._log.warning(f"Failed to register architecture(s) from: {name}.", exc_info=e)
                    continue
                self._log.debug(f"Added {len(self) - num_builders} architecture(s) from: {name}.")
        self._scanned = True

    def builder(self, architecture: ArchitectureId) -> Builder:
        if not self._scanned:
            self.scan()
        if architecture not in self:
            raise ValueError(f"No builder registered for {architecture.value}.")
        return self._builders[architecture]

    def clear(self) -> None:
        """
        Clear all builders from the registrar.  Probably only useful for testing.
        """
        self._builders.clear()
        self._scanned = False


registrar = ArchitectureRegistrar()


def build(arch: ArchitectureId, rng_seed: int = 0, dtype: np.dtype = np.float32,
          droppath_rate: float = 0.0, ray_dropout_rate: float = 0.0) -> FusionNetwork:
    """
    Builds a freshly initialised network.  The parameter count must equal the published count.
    :raise: ValueError on a parameter count mismatch or DropPath requested for an architecture without it
    """
    rng = np.random.default_rng(rng_seed)
    net = registrar.builder(arch)(ARCHITECTURE_DIMS[arch], rng, np.dtype(dtype))
    if net.param_count != PUBLISHED_PARAM_COUNTS[arch]:
        raise ValueError(f"{arch.value} built with {net.param_count} parameters, "
                         f"expected {PUBLISHED_PARAM_COUNTS[arch]}.")
    net.set_dropout(droppath_rate, ray_dropout_rate)
    return net


def load_network(path: str | Path, expected: Optional[ArchitectureId] = None) -> FusionNetwork:
    """
    Rebuilds a network from a parameter file, keeping the stored precision.
    :raise: ArchitectureMismatchError if the file holds another architecture than `expected` or its layer dims do not
    match the registered builder
    """
    stored = read_parameters(path)
    try:
        arch = ArchitectureId.parse(stored.architecture)
    except ValueError as e:
        raise ArchitectureMismatchError(str(e)) from e
    if expected is not None and arch is not expected:
        raise ArchitectureMismatchError(f"Checkpoint {path} holds {arch.value}, expected {expected.value}.")
    dtype = stored.arrays[0].dtype if stored.arrays else np.float32
    net = build(arch, dtype=dtype)
    if net.layer_dims() != stored.layer_dims:
        raise ArchitectureMismatchError(f"Layer dims in {path} do not match the {arch.value} architecture.")
    try:
        net.load_parameters(stored.arrays)
    except ValueError as e:
        raise ArchitectureMismatchError(f"Parameters in {path} do not fit {arch.value}: {e}") from e
    hp = stored.hyperparameters
    droppath_rate = float(hp.get("droppath_rate", 0.0))
    net.set_dropout(droppath_rate if net.supports_droppath else 0.0, float(hp.get("ray_dropout_rate", 0.0)))
    return net
