"""Network descriptors: JSON ingestion, validation, and bundled benchmarks.

A network is a linear chain of deconvolution layers. The file schema is
deliberately rigid (unknown fields rejected, integers only) so a typo in a
benchmark file fails loudly instead of silently simulating something else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import SchemaError
from .layers import LayerDescriptor, output_shape, validate_layer

_NET_KEYS = {"name", "dims", "layers"}
_LAYER_KEYS = {"name", "in_channels", "out_channels", "in_size", "kernel", "stride", "crop"}
_LAYER_REQUIRED = _LAYER_KEYS - {"crop"}

# bundled files, in the order the benchmarks are conventionally listed
_BUILTIN_FILES = {
    "dcgan": "dcgan.json",
    "gp-gan": "gp_gan.json",
    "3d-gan": "threed_gan.json",
    "vnet": "vnet.json",
}


@dataclass
class NetworkDescriptor:
    name: str
    dims: int
    layers: list

    def __iter__(self):
        return iter(self.layers)


def _want_int(obj: dict, key: str, where: str) -> int:
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    v = obj[key]
    # bool is an int subclass; the schema says integers, not flags
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: field {key!r} must be an integer, got {v!r}")
    return v


def _parse_layer(obj, dims: int, where: str) -> LayerDescriptor:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: layer entry must be an object")
    unknown = set(obj) - _LAYER_KEYS
    if unknown:
        raise SchemaError(f"{where}: unknown fields {sorted(unknown)}")
    missing = _LAYER_REQUIRED - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing fields {sorted(missing)}")
    if not isinstance(obj["name"], str):
        raise SchemaError(f"{where}: field 'name' must be a string")
    size = obj["in_size"]
    if not isinstance(size, list) or not size:
        raise SchemaError(f"{where}: field 'in_size' must be a non-empty list")
    for v in size:
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError(f"{where}: in_size entries must be integers, got {v!r}")
    layer = LayerDescriptor(
        name=obj["name"],
        dims=dims,
        in_channels=_want_int(obj, "in_channels", where),
        out_channels=_want_int(obj, "out_channels", where),
        in_size=tuple(size),
        kernel=_want_int(obj, "kernel", where),
        stride=_want_int(obj, "stride", where),
        crop=_want_int(obj, "crop", where) if "crop" in obj else 0,
    )
    problems = validate_layer(layer)
    if problems:
        raise SchemaError(f"{where} ({layer.name}): " + "; ".join(problems))
    return layer


def _check_chain(net: NetworkDescriptor) -> None:
    for prev, nxt in zip(net.layers, net.layers[1:]):
        _, cropped = output_shape(prev)
        if prev.out_channels != nxt.in_channels:
            raise SchemaError(
                f"{net.name}: {prev.name} feeds {nxt.name} but out_channels "
                f"{prev.out_channels} != in_channels {nxt.in_channels}"
            )
        if cropped != nxt.in_size:
            raise SchemaError(
                f"{net.name}: {prev.name} output {cropped} does not match "
                f"{nxt.name} in_size {nxt.in_size}"
            )


def parse_network_dict(obj) -> NetworkDescriptor:
    if not isinstance(obj, dict):
        raise SchemaError("network file must hold a JSON object")
    unknown = set(obj) - _NET_KEYS
    if unknown:
        raise SchemaError(f"network: unknown fields {sorted(unknown)}")
    missing = _NET_KEYS - set(obj)
    if missing:
        raise SchemaError(f"network: missing fields {sorted(missing)}")
    if not isinstance(obj["name"], str):
        raise SchemaError("network: field 'name' must be a string")
    dims = obj["dims"]
    if isinstance(dims, bool) or dims not in (2, 3):
        raise SchemaError(f"network: dims must be 2 or 3, got {dims!r}")
    if not isinstance(obj["layers"], list) or not obj["layers"]:
        raise SchemaError("network: field 'layers' must be a non-empty list")
    layers = [
        _parse_layer(entry, dims, f"layers[{k}]")
        for k, entry in enumerate(obj["layers"])
    ]
    net = NetworkDescriptor(name=obj["name"], dims=dims, layers=layers)
    _check_chain(net)
    return net


def parse_network(source) -> NetworkDescriptor:
    """Load and fully validate a network descriptor.

    ``source`` may be a path, a JSON string starting with '{', or an open
    text file. Raises SchemaError with a field-level message on any
    violation, including a broken layer chain (both layer names included).
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        s = str(source)
        text = s if s.lstrip().startswith("{") else Path(s).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return parse_network_dict(obj)


def serialize(net: NetworkDescriptor) -> dict:
    """Inverse of parse_network_dict; parse(serialize(n)) == n."""
    return {
        "name": net.name,
        "dims": net.dims,
        "layers": [
            {
                "name": layer.name,
                "in_channels": layer.in_channels,
                "out_channels": layer.out_channels,
                "in_size": list(layer.in_size),
                "kernel": layer.kernel,
                "stride": layer.stride,
                "crop": layer.crop,
            }
            for layer in net.layers
        ],
    }


def builtin_names() -> list[str]:
    return list(_BUILTIN_FILES)


def builtin_network(name: str) -> NetworkDescriptor:
    key = name.lower()
    if key not in _BUILTIN_FILES:
        raise SchemaError(
            f"unknown builtin network {name!r}; choices: {', '.join(_BUILTIN_FILES)}"
        )
    text = (
        resources.files("deconvsim").joinpath("data", _BUILTIN_FILES[key]).read_text()
    )
    return parse_network(text)


def builtin_benchmarks() -> list[NetworkDescriptor]:
    """The four bundled benchmark networks (reconstructed shapes, see data/README.md)."""
    return [builtin_network(name) for name in _BUILTIN_FILES]
