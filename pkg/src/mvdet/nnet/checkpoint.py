"""Checkpoint format: one JSON header line, then raw float64 parameter blocks.

Layout:
    line 1   compact JSON header terminated by "\\n"
    then     concatenated little-endian float64 blocks

The header lists every block with its shape, byte offset (relative to the
first byte after the header newline), and byte length, grouped per named
network in layer order.  A single network is stored under the name "net";
multi-stream models store one entry per stream plus the head.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigError
from .network import Network

MAGIC = "mvdet-checkpoint"
VERSION = 1


def save_networks(path, nets: dict[str, Network], meta: dict | None = None):
    """Write named networks and metadata to a single checkpoint file."""
    header: dict = {
        "format": MAGIC,
        "version": VERSION,
        "nets": {},
        "blocks": [],
        "meta": meta or {},
    }
    payload = bytearray()
    for name, net in nets.items():
        header["nets"][name] = {"layers": net.specs(), "seed": net.seed}
        for li, layer in enumerate(net.layers):
            for pi, param in enumerate(layer.params()):
                raw = np.ascontiguousarray(param, dtype="<f8").tobytes()
                header["blocks"].append(
                    {
                        "net": name,
                        "layer": li,
                        "param": pi,
                        "shape": list(param.shape),
                        "offset": len(payload),
                        "nbytes": len(raw),
                    }
                )
                payload.extend(raw)
    with open(path, "wb") as f:
        f.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        f.write(b"\n")
        f.write(bytes(payload))


def load_networks(path) -> tuple[dict[str, Network], dict]:
    """Read a checkpoint; returns ({name: Network}, meta)."""
    with open(path, "rb") as f:
        header_line = f.readline()
        data = f.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"not a checkpoint file: {e}") from e
    if header.get("format") != MAGIC:
        raise ConfigError(f"unexpected checkpoint format {header.get('format')!r}")
    if header.get("version") != VERSION:
        raise ConfigError(f"unsupported checkpoint version {header.get('version')!r}")

    nets = {
        name: Network(entry["layers"], seed=entry.get("seed", 0))
        for name, entry in header["nets"].items()
    }
    for block in header["blocks"]:
        net = nets[block["net"]]
        param = net.layers[block["layer"]].params()[block["param"]]
        raw = data[block["offset"]:block["offset"] + block["nbytes"]]
        arr = np.frombuffer(raw, dtype="<f8").reshape(block["shape"])
        if arr.shape != param.shape:
            raise ConfigError(f"block shape {arr.shape} != parameter shape {param.shape}")
        param[...] = arr
    return nets, header.get("meta", {})


def save_network(path, net: Network, meta: dict | None = None):
    save_networks(path, {"net": net}, meta)


def load_network(path) -> tuple[Network, dict]:
    nets, meta = load_networks(path)
    if "net" not in nets:
        raise ConfigError(f"checkpoint holds {sorted(nets)}, expected a single 'net'")
    return nets["net"], meta
