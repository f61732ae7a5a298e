import logging
from pathlib import Path
from typing import Optional, Dict, List, Any, Callable, Mapping

import yaml

_config_path: Optional[Path] = None
_config_yml: dict = {}

_log = logging.getLogger("config_provider")

_Loader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)


class ConfigError(ValueError):
    """
    Raised for configuration problems: unknown keys, values that cannot be cast or values that violate
    documented invariants.  The CLI maps this to its own exit code.
    """
    pass


def load_file(path: str | Path) -> None:
    if type(path) is not Path:
        path = Path(path)
    global _config_yml, _config_path
    _config_path = path
    with _config_path.open() as f:
        _config_yml = yaml.load(f, Loader=_Loader) or {}
    if type(_config_yml) is not dict:
        raise ConfigError(f"Config file {path} does not contain a mapping at its root.")


def _load_string(yml_str: str) -> None:
    global _config_yml
    _config_yml = yaml.load(yml_str, Loader=_Loader) or {}


def config_path() -> Optional[Path]:
    return _config_path


def snapshot() -> Dict:
    """
    A deep copy of the loaded config, including any overrides.  Written into run manifests.
    """
    return yaml.load(yaml.safe_dump(_config_yml), Loader=_Loader) or {}


def get_value(key_path: list[str], default: Optional[Any] = None, cast_fn: Callable[[Any], Any] = str) -> Any:
    """
    Retrieves a scalar from the loaded config.  The optional default is returned (uncast) if the key is not found.
    If the query would traverse through a scalar value an error is raised, as this indicates not a missing key, but
    a misconfiguration.
    :param key_path: a list of key elements, *i.e.* `["train", "gamma"]`
    :param default: value returned when the key is absent
    :param cast_fn: transforms the raw yaml scalar into the desired type
    :return: found value (cast) or default
    :raise: ConfigError if the path traverses a scalar, the value is not a scalar, the key is absent and no default
    was provided, or the cast fails.
    """
    if type(key_path) is not list:
        raise ValueError("key_path should be a list of path elements.")

    val = _config_yml
    for element in key_path[:-1]:
        if val is None:
            break
        if type(val) is not dict:
            raise ConfigError(f"Yaml schema contained a scalar/list at {'.'.join(key_path)} where a dict was expected.")
        val = val.get(element)

    found_val = val.get(key_path[-1]) if type(val) is dict else None
    if found_val is None:
        if default is not None:
            _log.debug(f"Unable to find value for key: {'.'.join(key_path)}, using default value {default}")
            return default
        raise ConfigError(f"Unable to find a value for key: {'.'.join(key_path)}.")
    if type(found_val) not in {int, float, str, bool}:
        raise ConfigError(f"Yaml schema contained a dict or list at {'.'.join(key_path)} where a scalar was expected.")
    try:
        return cast_fn(found_val)
    except Exception as e:
        raise ConfigError(f"Unable to cast key {'.'.join(key_path)}: {found_val!r}") from e


def get_object(key_path: list[str], default: Optional[List | Dict] = None) -> List | Dict:
    """
    Gets a non-scalar value (list or dict) from the config.  Traversing *through* a scalar raises irrespective of
    whether a default was provided.
    :param key_path: List[str] of path elements i.e. ["eval", "seeds"]
    :param default: value to be returned if key is not found
    :return:
    """
    if type(key_path) is not list:
        raise ValueError("key_path should be a list of path elements.")
    cur_val = _config_yml
    for element in key_path:
        if cur_val is None:
            break
        if type(cur_val) is not dict:
            _log.warning("Encountered a scalar value while traversing to key.  Check your config.")
            raise ConfigError("YAML schema is incorrect.")
        cur_val = cur_val.get(element)
    if cur_val is None:
        cur_val = default
    if cur_val is None:
        raise ConfigError(f"Unable to find a value for path {key_path}")
    if type(cur_val) not in (list, dict):
        raise ConfigError(f"Expected a list or dict at {key_path}, found a scalar.")
    return cur_val


def set_value(key_path: list[str], value: Any) -> None:
    """
    Overrides (or creates) a key.  Used to apply command line flags on top of the config file.
    """
    if type(key_path) is not list or not key_path:
        raise ValueError("key_path should be a non-empty list of path elements.")
    cur_val = _config_yml
    for element in key_path[:-1]:
        nxt = cur_val.get(element)
        if nxt is None:
            nxt = dict()
            cur_val[element] = nxt
        elif type(nxt) is not dict:
            raise ConfigError(f"Cannot set {'.'.join(key_path)}: {element} is a scalar.")
        cur_val = nxt
    cur_val[key_path[-1]] = value


def validate_keys(schema: Mapping[str, Any]) -> None:
    """
    Fails fast on keys the schema does not know about (usually typos).  The schema mirrors the config layout: a
    section maps to a collection of allowed key names (or a nested mapping), a scalar key maps to `None`.
    :raise: ConfigError naming every unknown key
    """
    unknown = list()
    _collect_unknown(_config_yml, schema, [], unknown)
    if unknown:
        raise ConfigError(f"Unknown config key(s): {', '.join(unknown)}")


def _collect_unknown(node: Any, schema: Any, path: List[str], unknown: List[str]) -> None:
    if type(node) is not dict or schema is None:
        return
    for key, val in node.items():
        if key not in schema:
            unknown.append(".".join([*path, str(key)]))
        elif isinstance(schema, Mapping):
            _collect_unknown(val, schema[key], [*path, str(key)], unknown)


class CastFn:
    """
    Cast Functions intended to be used with get_value
    """

    @staticmethod
    def to_int(val: Any) -> int:
        if type(val) is bool:
            raise ValueError("Expected an integer, found a boolean.")
        as_float = float(val)
        if not as_float.is_integer():
            raise ValueError(f"Expected an integer, found {val}.")
        return int(as_float)

    @staticmethod
    def to_float(val: Any) -> float:
        if type(val) is bool:
            raise ValueError("Expected a number, found a boolean.")
        return float(val)

    @staticmethod
    def to_bool(val: Any) -> bool:
        if type(val) is bool:
            return val
        lowered = str(val).strip().lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"Not a boolean: {val}")

    @staticmethod
    def to_probability(val: Any) -> float:
        p = CastFn.to_float(val)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Probability out of range [0, 1]: {p}")
        return p
