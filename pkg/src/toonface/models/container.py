"""One file format for every trained model.

A plain-text manifest (format version, kind tag, JSON metadata, tensor
table, payload checksum) is followed by a blank line and the raw
little-endian float64 payload. Round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..shallow.gb import GbModel
from ..shallow.scaler import MinMaxScaler
from ..shallow.svm import SvmModel
from .hcnn import Hcnn
from .landmark_net import LandmarkNet

FORMAT_VERSION = 1
MAGIC = "toonface-model"

KIND_REGISTRY = {
    "hcnn": Hcnn,
    "landmark": LandmarkNet,
    "svm": SvmModel,
    "gb": GbModel,
    "scaler": MinMaxScaler,
}


class ModelFormatError(ValueError):
    """Unreadable, corrupt, or incompatible model file."""


def model_kind(model):
    for kind, cls in KIND_REGISTRY.items():
        if isinstance(model, cls):
            return kind
    raise ModelFormatError(f"no kind registered for {type(model).__name__}")


def save_payload(path, kind, meta, tensors):
    if kind not in KIND_REGISTRY:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"kind {kind}",
             "meta " + json.dumps(meta, separators=(",", ":"))]
    chunks = []
    offset = 0
    seen = set()
    for name, array in tensors.items():
        if name in seen:
            raise ModelFormatError(f"duplicate tensor name {name!r}")
        seen.add(name)
        if any(ch.isspace() for ch in name):
            raise ModelFormatError(f"tensor name {name!r} contains whitespace")
        array = np.ascontiguousarray(array, dtype="<f8")
        shape = "x".join(str(d) for d in array.shape) or "1"
        lines.append(f"tensor {name} {shape} {offset}")
        chunks.append(array.tobytes())
        offset += array.size
    payload = b"".join(chunks)
    lines.append(f"sha256 {hashlib.sha256(payload).hexdigest()}")
    lines.append(f"payload {len(payload)}")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n\n").encode("utf-8"))
        fh.write(payload)


def load_payload(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    split = raw.find(b"\n\n")
    if split < 0:
        raise ModelFormatError(f"{path}: no manifest/payload separator")
    try:
        manifest = raw[:split].decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"{path}: manifest is not utf-8") from exc
    payload = raw[split + 2:]

    if not manifest:
        raise ModelFormatError(f"{path}: empty manifest")
    magic = manifest[0].split()
    if len(magic) != 2 or magic[0] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    if magic[1] != str(FORMAT_VERSION):
        raise ModelFormatError(f"{path}: format version {magic[1]} not "
                               f"supported (expected {FORMAT_VERSION})")

    kind = None
    meta = None
    entries = []
    checksum = None
    declared = None
    for line in manifest[1:]:
        tag, _, rest = line.partition(" ")
        if tag == "kind":
            kind = rest
        elif tag == "meta":
            meta = json.loads(rest)
        elif tag == "tensor":
            name, shape, offset = rest.rsplit(" ", 2)
            dims = tuple(int(d) for d in shape.split("x"))
            entries.append((name, dims, int(offset)))
        elif tag == "sha256":
            checksum = rest
        elif tag == "payload":
            declared = int(rest)
        else:
            raise ModelFormatError(f"{path}: unknown manifest entry {tag!r}")
    if kind not in KIND_REGISTRY:
        raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
    if meta is None or checksum is None or declared is None:
        raise ModelFormatError(f"{path}: incomplete manifest")
    if len(payload) != declared:
        raise ModelFormatError(f"{path}: payload is {len(payload)} bytes, "
                               f"manifest declares {declared}")
    if hashlib.sha256(payload).hexdigest() != checksum:
        raise ModelFormatError(f"{path}: payload checksum mismatch")

    tensors = {}
    for name, dims, offset in entries:
        count = int(np.prod(dims)) if dims else 1
        start = offset * 8
        if start + count * 8 > len(payload):
            raise ModelFormatError(f"{path}: tensor {name} overruns payload")
        flat = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        tensors[name] = flat.reshape(dims).copy()
    return kind, meta, tensors


def save_model(model, path):
    kind = model_kind(model)
    meta, tensors = model.to_payload()
    save_payload(path, kind, meta, tensors)


def load_model(path, expect_kind=None):
    kind, meta, tensors = load_payload(path)
    if expect_kind is not None and kind != expect_kind:
        raise ModelFormatError(f"{path}: holds a {kind!r} model, expected "
                               f"{expect_kind!r}")
    return KIND_REGISTRY[kind].from_payload(meta, tensors)
