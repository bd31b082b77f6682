"""The PPCT1 binary container.

Layout (all little-endian)::

    b"PPCT1"            5 bytes magic
    kind                u8   1 image, 2 parallel sinogram, 3 fan sinogram,
                             4 cone sinogram, 5 pseudo-polar data, 6 weights
    ndim                u32
    dims                ndim x u32
    geometry            kind-dependent f64 fields, see below
    payload             f64, row-major; complex data as (re, im) pairs

Geometry blocks:

* image: 2-D has none; a 3-D volume has ``z_spacing``.
* parallel: ``angles`` (dims[0] values) then ``offsets`` (dims[1] values).
* fan: ``R, gamma_max, has_weights`` then ``betas`` (dims[0] values).  When
  ``has_weights`` is 1 the payload holds the data followed by the weights.
* cone: ``R, D, P, gamma_max, row_spacing`` then ``phis`` (dims[0] values);
  dims are ``(views, rows, cols)``.
* pseudo-polar data and weights: none; dims are ``(2, 2n, n)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .phantoms import Volume
from .projector import (ConeSinogram, FanGeometry, FanSinogram, HelixGeometry,
                        ParallelSinogram)

MAGIC = b"PPCT1"
KIND_IMAGE, KIND_PARALLEL, KIND_FAN, KIND_CONE, KIND_PPDATA, KIND_WEIGHTS = range(1, 7)
KIND_NAMES = {1: "image", 2: "parallel-sino", 3: "fan-sino", 4: "cone-sino", 5: "ppdata", 6: "weights"}

_F64 = np.dtype("<f8")


@dataclass
class PPData:
    """Complex pseudo-polar samples, shape ``(2, 2n, n)``."""

    y: np.ndarray

    @property
    def n(self):
        return self.y.shape[2]


@dataclass
class Weights:
    c: np.ndarray

    @property
    def n(self):
        return self.c.shape[2]


def _kind_of(obj):
    if isinstance(obj, Volume):
        return KIND_IMAGE
    if isinstance(obj, ParallelSinogram):
        return KIND_PARALLEL
    if isinstance(obj, FanSinogram):
        return KIND_FAN
    if isinstance(obj, ConeSinogram):
        return KIND_CONE
    if isinstance(obj, PPData):
        return KIND_PPDATA
    if isinstance(obj, Weights):
        return KIND_WEIGHTS
    if isinstance(obj, np.ndarray) and obj.ndim == 2 and not np.iscomplexobj(obj):
        return KIND_IMAGE
    raise InvalidArgumentError(f"cannot serialise {type(obj).__name__}")


def _f64(a):
    return np.ascontiguousarray(a, dtype=_F64).tobytes()


def to_bytes(obj):
    kind = _kind_of(obj)
    geom = []
    extra = None
    if kind == KIND_IMAGE:
        if isinstance(obj, Volume):
            data = obj.slices
            geom = [obj.z_spacing]
        else:
            data = obj
    elif kind == KIND_PARALLEL:
        data = obj.data
        geom = [*obj.angles, *obj.offsets]
    elif kind == KIND_FAN:
        g = obj.geometry
        data = obj.data
        has_w = obj.weights is not None
        geom = [g.R, g.gamma_max, float(has_w), *g.betas]
        extra = obj.weights if has_w else None
    elif kind == KIND_CONE:
        g = obj.geometry
        data = obj.data
        geom = [g.R, g.D, g.P, g.gamma_max, g.row_spacing, *g.phis]
    elif kind == KIND_PPDATA:
        y = np.asarray(obj.y, dtype=complex)
        data = y
    else:
        data = obj.c
    data = np.asarray(data)
    parts = [MAGIC, struct.pack("<B", kind), struct.pack("<I", data.ndim),
             struct.pack(f"<{data.ndim}I", *data.shape), _f64(geom)]
    if kind == KIND_PPDATA:
        parts.append(_f64(np.stack([data.real, data.imag], axis=-1)))
    else:
        parts.append(_f64(data))
    if extra is not None:
        parts.append(_f64(extra))
    return b"".join(parts)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, nbytes):
        if self.pos + nbytes > len(self.buf):
            raise FormatError("file is truncated")
        out = self.buf[self.pos:self.pos + nbytes]
        self.pos += nbytes
        return out

    def f64(self, count):
        return np.frombuffer(self.take(8 * count), dtype=_F64).astype(float)


def from_bytes(buf):
    r = _Reader(bytes(buf))
    if r.take(5) != MAGIC:
        raise FormatError("not a PPCT1 file (bad magic)")
    kind = r.take(1)[0]
    if kind not in KIND_NAMES:
        raise FormatError(f"unknown kind byte {kind}")
    ndim = struct.unpack("<I", r.take(4))[0]
    if not 1 <= ndim <= 8:
        raise FormatError(f"implausible dimension count {ndim}")
    dims = struct.unpack(f"<{ndim}I", r.take(4 * ndim))
    size = int(np.prod(dims, dtype=np.int64))
    try:
        if kind == KIND_IMAGE:
            if ndim == 2:
                out = r.f64(size).reshape(dims)
            elif ndim == 3:
                z = r.f64(1)[0]
                out = Volume(r.f64(size).reshape(dims), z)
            else:
                raise FormatError("image must be 2-D or 3-D")
        elif kind == KIND_PARALLEL:
            _need(ndim == 2, "parallel sinogram must be 2-D")
            angles = r.f64(dims[0])
            offsets = r.f64(dims[1])
            out = ParallelSinogram(angles, offsets, r.f64(size).reshape(dims))
        elif kind == KIND_FAN:
            _need(ndim == 2, "fan sinogram must be 2-D")
            R, gmax, has_w = r.f64(3)
            betas = r.f64(dims[0])
            data = r.f64(size).reshape(dims)
            w = r.f64(size).reshape(dims) if has_w else None
            out = FanSinogram(FanGeometry(R, gmax, dims[1], betas), data, w)
        elif kind == KIND_CONE:
            _need(ndim == 3, "cone sinogram must be 3-D")
            R, D, P, gmax, rs = r.f64(5)
            phis = r.f64(dims[0])
            geom = HelixGeometry(R, D, P, gmax, dims[2], dims[1], rs, phis)
            out = ConeSinogram(geom, r.f64(size).reshape(dims))
        elif kind == KIND_PPDATA:
            _need(ndim == 3 and dims[0] == 2 and dims[1] == 2 * dims[2], "ppdata must be (2, 2n, n)")
            pairs = r.f64(2 * size).reshape(*dims, 2)
            out = PPData(pairs[..., 0] + 1j * pairs[..., 1])
        else:
            _need(ndim == 3 and dims[0] == 2 and dims[1] == 2 * dims[2], "weights must be (2, 2n, n)")
            out = Weights(r.f64(size).reshape(dims))
    except InvalidArgumentError as exc:
        raise FormatError(f"invalid {KIND_NAMES[kind]} content: {exc}") from exc
    if r.pos != len(r.buf):
        raise FormatError(f"{len(r.buf) - r.pos} trailing bytes after payload")
    for arr in _payload_arrays(out):
        if not np.all(np.isfinite(arr)):
            raise FormatError("payload contains non-finite values")
    return out


def _payload_arrays(obj):
    if isinstance(obj, np.ndarray):
        return [obj]
    if isinstance(obj, Volume):
        return [obj.slices]
    if isinstance(obj, PPData):
        return [obj.y]
    if isinstance(obj, Weights):
        return [obj.c]
    if isinstance(obj, FanSinogram) and obj.weights is not None:
        return [obj.data, obj.weights]
    return [obj.data]


def _need(cond, msg):
    if not cond:
        raise FormatError(msg)


def write(path, obj):
    with open(path, "wb") as fh:
        fh.write(to_bytes(obj))


def read(path):
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    return from_bytes(buf)


def kind_name(obj):
    return KIND_NAMES[_kind_of(obj)]
