"""Binary checkpoint format for :class:`~mdne.model.ModelParams`.

Byte layout (all integers and floats little-endian)::

    offset  size  field
    0       8     magic  b"MDNECKPT"
    8       4     uint32 format version (2)
    12      8     uint64 n
    20      8     uint64 m
    28      8     float64 structure scale (largest training edge weight, or 1)
    36      8     float64 attribute scale (largest training attribute value, or 1)
    44      1     uint8  preprocess flag (1 = per-modality pre-processing layers)
    45      4     uint32 pre_struct_dim
    49      4     uint32 pre_attr_dim
    53      4     uint32 K, number of hidden layers
    57      4*K   uint32 hidden_dims
    ...           float64 arrays, row-major, in this order:
                  for group in (inputs, encoder, decoder, outputs):
                      for each layer: weight (fan_in x fan_out), then bias (fan_out)

Array shapes are implied by the header (see :func:`mdne.model.layer_shapes`).
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError
from .model import Layer, ModelParams, layer_shapes
from .models.config import LayerSpec

__all__ = ("FORMAT_VERSION", "MAGIC", "load_checkpoint", "save_checkpoint")

MAGIC = b"MDNECKPT"
FORMAT_VERSION = 2
_HEAD = struct.Struct("<8sIQQddBIII")
_F8 = np.dtype("<f8")


def save_checkpoint(params: ModelParams, path: Path | str) -> None:
    """Write ``params`` to ``path``."""
    spec = params.spec
    chunks = [
        _HEAD.pack(
            MAGIC,
            FORMAT_VERSION,
            params.n,
            params.m,
            params.structure_scale,
            params.attribute_scale,
            int(spec.preprocess),
            spec.pre_struct_dim,
            spec.pre_attr_dim,
            len(spec.hidden_dims),
        ),
        struct.pack(f"<{len(spec.hidden_dims)}I", *spec.hidden_dims),
    ]
    chunks.extend(
        np.ascontiguousarray(array, dtype=_F8).tobytes() for _, array in params.named_arrays()
    )
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: Path | str) -> ModelParams:
    """Read parameters written by :func:`save_checkpoint`.

    Raises
    ------
    CheckpointError
        On a wrong magic number, unsupported version, or truncated/oversized payload.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        msg = f"{path}: file too short for a checkpoint header"
        raise CheckpointError(msg)
    (
        magic,
        version,
        n,
        m,
        structure_scale,
        attribute_scale,
        preprocess,
        struct_dim,
        attr_dim,
        depth,
    ) = _HEAD.unpack_from(raw)
    if magic != MAGIC:
        msg = f"{path}: not an mdne checkpoint"
        raise CheckpointError(msg)
    if version != FORMAT_VERSION:
        msg = f"{path}: unsupported checkpoint version {version}"
        raise CheckpointError(msg)
    if not all(math.isfinite(x) and x >= 1.0 for x in (structure_scale, attribute_scale)):
        msg = f"{path}: invalid input scales {structure_scale}, {attribute_scale}"
        raise CheckpointError(msg)
    offset = _HEAD.size
    try:
        hidden = list(struct.unpack_from(f"<{depth}I", raw, offset))
    except struct.error as exc:
        msg = f"{path}: header truncated in hidden layer widths"
        raise CheckpointError(msg) from exc
    offset += 4 * depth
    try:
        spec = LayerSpec(
            pre_struct_dim=struct_dim,
            pre_attr_dim=attr_dim,
            hidden_dims=hidden,
            preprocess=bool(preprocess),
        )
    except ValueError as exc:
        msg = f"{path}: invalid layer structure in header"
        raise CheckpointError(msg) from exc

    groups: dict[str, list[Layer]] = {}
    for name, shapes in layer_shapes(spec, n, m).items():
        layers: list[Layer] = []
        for fan_in, fan_out in shapes:
            try:
                weight = np.frombuffer(raw, dtype=_F8, count=fan_in * fan_out, offset=offset)
                offset += weight.nbytes
                bias = np.frombuffer(raw, dtype=_F8, count=fan_out, offset=offset)
                offset += bias.nbytes
            except ValueError as exc:
                msg = f"{path}: payload truncated in {name}"
                raise CheckpointError(msg) from exc
            layers.append(
                Layer(weight.reshape(fan_in, fan_out).astype(np.float64), bias.astype(np.float64)),
            )
        groups[name] = layers
    if offset != len(raw):
        msg = f"{path}: {len(raw) - offset} trailing byte(s) after the last array"
        raise CheckpointError(msg)
    try:
        spec.validate_for(n, m)
    except ConfigError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    return ModelParams(
        spec=spec,
        n=n,
        m=m,
        **groups,
        structure_scale=structure_scale,
        attribute_scale=attribute_scale,
    )
