"""Loading and saving images.

PNG (8-bit gray, RGB, RGBA) through Pillow for 2D grids, and a self-contained
NIfTI-1 single-file reader/writer (``.nii`` and ``.nii.gz``) for 2D and 3D
grids. Orientation matrices are ignored; only extents and voxel sizes are
kept.
"""

from dataclasses import dataclass
import gzip
import io
import os

import numpy as np
from PIL import Image

from .errors import ImageIOError
from .grid import DEFAULT_ADJACENCY, BoolField, GridGeometry, NumField

HEADER_SIZE = 348
DATA_OFFSET = 352

NIFTI_HEADER = np.dtype([
    ("sizeof_hdr", "<i4"), ("data_type", "S10"), ("db_name", "S18"),
    ("extents", "<i4"), ("session_error", "<i2"), ("regular", "S1"),
    ("dim_info", "u1"), ("dim", "<i2", (8,)), ("intent_p1", "<f4"),
    ("intent_p2", "<f4"), ("intent_p3", "<f4"), ("intent_code", "<i2"),
    ("datatype", "<i2"), ("bitpix", "<i2"), ("slice_start", "<i2"),
    ("pixdim", "<f4", (8,)), ("vox_offset", "<f4"), ("scl_slope", "<f4"),
    ("scl_inter", "<f4"), ("slice_end", "<i2"), ("slice_code", "u1"),
    ("xyzt_units", "u1"), ("cal_max", "<f4"), ("cal_min", "<f4"),
    ("slice_duration", "<f4"), ("toffset", "<f4"), ("glmax", "<i4"),
    ("glmin", "<i4"), ("descrip", "S80"), ("aux_file", "S24"),
    ("qform_code", "<i2"), ("sform_code", "<i2"), ("quatern_b", "<f4"),
    ("quatern_c", "<f4"), ("quatern_d", "<f4"), ("qoffset_x", "<f4"),
    ("qoffset_y", "<f4"), ("qoffset_z", "<f4"), ("srow_x", "<f4", (4,)),
    ("srow_y", "<f4", (4,)), ("srow_z", "<f4", (4,)), ("intent_name", "S16"),
    ("magic", "S4"),
])
assert NIFTI_HEADER.itemsize == HEADER_SIZE

NIFTI_DTYPES = {
    2: np.dtype("u1"), 4: np.dtype("<i2"), 8: np.dtype("<i4"), 16: np.dtype("<f4"),
    64: np.dtype("<f8"), 256: np.dtype("i1"), 512: np.dtype("<u2"),
}
NIFTI_UNITS_MM = 2

LUMA = (0.2126, 0.7152, 0.0722)


@dataclass(frozen=True, eq=False)
class ModelImage:
    """A loaded image: its grid and 1, 3 or 4 channels of float64 values."""

    geometry: GridGeometry
    channels: tuple
    path: str = None
    source_dtype: str = None

    def channel_field(self, i):
        return NumField(self.geometry, self.channels[i])


def _is_nifti(path):
    low = path.lower()
    return low.endswith(".nii") or low.endswith(".nii.gz")


def load_model(path, adjacency=DEFAULT_ADJACENCY):
    """Load a ``.png``, ``.nii`` or ``.nii.gz`` file."""
    if not os.path.isfile(path):
        raise ImageIOError(f"no such image file: {path}")
    low = path.lower()
    if low.endswith(".png"):
        return _load_png(path, adjacency)
    if _is_nifti(path):
        return _load_nifti(path, adjacency)
    raise ImageIOError(f"unsupported image format: {path}")


def _load_png(path, adjacency):
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("1", "L", "I", "I;16", "F"):
                arr = np.asarray(im.convert("F") if mode in ("I", "I;16") else im, dtype=np.float64)
                chans = (arr,)
            elif mode == "LA":
                chans = (np.asarray(im.convert("L"), dtype=np.float64),)
            else:
                if mode not in ("RGB", "RGBA"):
                    im = im.convert("RGBA" if "A" in mode or "transparency" in im.info else "RGB")
                arr = np.asarray(im, dtype=np.float64)
                chans = tuple(arr[..., i] for i in range(arr.shape[-1]))
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"cannot read PNG {path}: {exc}") from exc
    # Pillow rows are y; fields are indexed [x, y]
    chans = tuple(np.ascontiguousarray(c.T) for c in chans)
    for c in chans:
        c.flags.writeable = False
    g = GridGeometry(chans[0].shape, (1.0, 1.0), adjacency)
    return ModelImage(g, chans, path, "uint8")


def _read_bytes(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.lower().endswith(".gz"):
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise ImageIOError(f"corrupt gzip stream in {path}: {exc}") from exc
    return raw


def parse_nifti_header(raw, path="<bytes>"):
    """Decode the 348-byte header, detecting byte order. Returns ``(header, byteorder)``."""
    if len(raw) < HEADER_SIZE:
        raise ImageIOError(f"{path}: file too short for a NIfTI-1 header")
    hdr = np.frombuffer(raw, NIFTI_HEADER, count=1)[0]
    order = "<"
    if int(hdr["sizeof_hdr"]) != HEADER_SIZE:
        hdr = np.frombuffer(raw, NIFTI_HEADER.newbyteorder(">"), count=1)[0]
        order = ">"
        if int(hdr["sizeof_hdr"]) != HEADER_SIZE:
            raise ImageIOError(f"{path}: bad sizeof_hdr, not a NIfTI-1 file")
    if hdr["magic"] not in (b"n+1", b"ni1"):
        raise ImageIOError(f"{path}: bad NIfTI-1 magic {bytes(hdr['magic'])!r}")
    return hdr, order


def _load_nifti(path, adjacency):
    raw = _read_bytes(path)
    hdr, order = parse_nifti_header(raw, path)
    dim = [int(d) for d in hdr["dim"]]
    ndim = dim[0]
    if ndim == 4 and dim[4] == 1:
        ndim = 3
    if ndim not in (2, 3):
        raise ImageIOError(f"{path}: unsupported dimensionality dim[0]={dim[0]}")
    dims = tuple(dim[1:ndim + 1])
    code = int(hdr["datatype"])
    if code not in NIFTI_DTYPES:
        raise ImageIOError(f"{path}: unsupported NIfTI datatype {code}")
    dtype = NIFTI_DTYPES[code].newbyteorder(order) if NIFTI_DTYPES[code].itemsize > 1 else NIFTI_DTYPES[code]
    offset = max(int(hdr["vox_offset"]), HEADER_SIZE)
    count = int(np.prod(dims))
    if len(raw) < offset + count * dtype.itemsize:
        raise ImageIOError(f"{path}: truncated voxel data")
    data = np.frombuffer(raw, dtype, count=count, offset=offset).reshape(dims, order="F")
    data = data.astype(np.float64)
    slope, inter = float(hdr["scl_slope"]), float(hdr["scl_inter"])
    if np.isfinite(slope) and slope != 0 and (slope != 1 or inter != 0):
        data = data * slope + inter
    spacing = tuple(abs(float(p)) or 1.0 for p in hdr["pixdim"][1:ndim + 1])
    data = np.ascontiguousarray(data)
    data.flags.writeable = False
    return ModelImage(GridGeometry(dims, spacing, adjacency), (data,), path, str(NIFTI_DTYPES[code]))


def channel(kind, model):
    """``intensity`` (luminance, or the single channel of a gray image) or one colour component."""
    chans = model.channels
    if kind == "intensity":
        if len(chans) == 1:
            return NumField(model.geometry, chans[0])
        r, g, b = chans[:3]
        return NumField(model.geometry, LUMA[0] * r + LUMA[1] * g + LUMA[2] * b)
    index = {"red": 0, "green": 1, "blue": 2}[kind]
    if len(chans) < 3:
        raise ImageIOError(f"{kind}: image {model.path or ''} has no colour channels")
    return NumField(model.geometry, chans[index])


def nifti_bytes(field):
    """Serialise a field as a single-file NIfTI-1 image (uncompressed bytes)."""
    g = field.geometry
    if isinstance(field, BoolField):
        data, code = field.data.astype(np.uint8), 2
    else:
        data, code = field.data.astype("<f4"), 16
    hdr = np.zeros(1, NIFTI_HEADER)[0]
    hdr["sizeof_hdr"] = HEADER_SIZE
    hdr["regular"] = b"r"
    dim = [g.ndim, *g.dims] + [1] * (7 - g.ndim)
    hdr["dim"] = dim
    hdr["datatype"] = code
    hdr["bitpix"] = data.dtype.itemsize * 8
    hdr["pixdim"] = [1.0, *g.spacing] + [1.0] * (7 - g.ndim)
    hdr["vox_offset"] = DATA_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["xyzt_units"] = NIFTI_UNITS_MM
    hdr["qform_code"] = 1
    hdr["magic"] = b"n+1"
    if data.size:
        hdr["cal_min"] = float(data.min())
        hdr["cal_max"] = float(data.max())
    buf = io.BytesIO()
    buf.write(hdr.tobytes())
    buf.write(b"\0\0\0\0")
    buf.write(data.tobytes(order="F"))
    return buf.getvalue()


def png_bytes(field):
    """8-bit gray PNG: booleans as 255/0, numbers min-max scaled (halves round down)."""
    g = field.geometry
    if g.ndim != 2:
        raise ImageIOError(f"PNG needs a 2D grid, got dims {g.dims}")
    if isinstance(field, BoolField):
        pix = np.where(field.data, 255, 0).astype(np.uint8)
    else:
        pix = scale_to_uint8(field.data)
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(pix.T), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def scale_to_uint8(values):
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return np.where(values > 0, 255, 0).astype(np.uint8)
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        scaled = np.zeros(values.shape)
    else:
        scaled = np.ceil((np.clip(values, lo, hi) - lo) / (hi - lo) * 255.0 - 0.5)
    scaled[values == np.inf] = 255
    scaled[values == -np.inf] = 0
    return np.clip(scaled, 0, 255).astype(np.uint8)


def save_field(path, field):
    """Write ``field`` to ``path``; the format follows the extension."""
    low = path.lower()
    if low.endswith(".png"):
        payload = png_bytes(field)
    elif low.endswith(".nii"):
        payload = nifti_bytes(field)
    elif low.endswith(".nii.gz"):
        buf = io.BytesIO()
        with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
            gz.write(nifti_bytes(field))
        payload = buf.getvalue()
    else:
        raise ImageIOError(f"unsupported output format: {path}")
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
