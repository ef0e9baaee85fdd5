"""Point cloud file IO: ASCII XYZ and ASCII PLY.

XYZ files carry one ``x y z`` triple per line; ``#`` starts a comment.
PLY support covers the ASCII 1.0 flavour with a vertex element whose
properties include x, y and z in any column order; extra scalar
properties and trailing elements (faces and the like) are ignored on
read.  Binary PLY is rejected.  Writers emit 9 significant digits.
"""

from __future__ import annotations

import numpy as np

from .errors import CloudFormatError
from .perception import PointCloud

__all__ = [
    "read_xyz",
    "write_xyz",
    "read_ply",
    "write_ply",
    "read_cloud",
    "write_cloud",
]


def _read_text(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except UnicodeDecodeError:
        raise CloudFormatError(f"{path}: not an ASCII cloud file") from None


def read_xyz(path) -> PointCloud:
    """Read an ASCII XYZ file."""
    rows = []
    for i, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise CloudFormatError(f"{path}:{i}: expected 3 columns, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise CloudFormatError(f"{path}:{i}: non-numeric coordinate") from None
    if not rows:
        return PointCloud.empty()
    return PointCloud(np.array(rows))


def write_xyz(cloud: PointCloud, path) -> None:
    """Write an ASCII XYZ file with 9 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in cloud.xyz:
            fh.write("%.9g %.9g %.9g\n" % (x, y, z))


_SCALAR_TYPES = {
    "char", "uchar", "short", "ushort", "int", "uint",
    "int8", "uint8", "int16", "uint16", "int32", "uint32",
    "float", "double", "float32", "float64",
}


def read_ply(path) -> PointCloud:
    """Read the vertex positions from an ASCII PLY file."""
    lines = _read_text(path).splitlines()
    if not lines or lines[0].strip() != "ply":
        raise CloudFormatError(f"{path}: missing 'ply' magic line")

    fmt = None
    elements = []  # (name, count, property names)
    current = None
    body_start = None
    for i, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        fields = line.split()
        if fields[0] == "format":
            if len(fields) != 3 or fields[2] != "1.0":
                raise CloudFormatError(f"{path}:{i}: unsupported PLY format line")
            fmt = fields[1]
        elif fields[0] == "element":
            if len(fields) != 3:
                raise CloudFormatError(f"{path}:{i}: malformed element line")
            try:
                count = int(fields[2])
            except ValueError:
                raise CloudFormatError(f"{path}:{i}: bad element count") from None
            if count < 0:
                raise CloudFormatError(f"{path}:{i}: negative element count")
            current = (fields[1], count, [])
            elements.append(current)
        elif fields[0] == "property":
            if current is None:
                raise CloudFormatError(f"{path}:{i}: property before any element")
            if fields[1] == "list":
                current[2].append(None)
            elif len(fields) == 3 and fields[1] in _SCALAR_TYPES:
                current[2].append(fields[2])
            else:
                raise CloudFormatError(f"{path}:{i}: malformed property line")
        elif fields[0] == "end_header":
            body_start = i
            break
        else:
            raise CloudFormatError(f"{path}:{i}: unexpected header line {line!r}")
    if body_start is None:
        raise CloudFormatError(f"{path}: missing end_header")
    if fmt is None:
        raise CloudFormatError(f"{path}: missing format line")
    if fmt != "ascii":
        raise CloudFormatError(f"{path}: only ASCII PLY is supported, got {fmt!r}")

    body = [ln.strip() for ln in lines[body_start:]]
    body = [ln for ln in body if ln]
    offset = 0
    for name, count, props in elements:
        if name == "vertex":
            if None in props:
                raise CloudFormatError(f"{path}: list property in vertex element")
            try:
                cols = [props.index(axis) for axis in ("x", "y", "z")]
            except ValueError:
                raise CloudFormatError(
                    f"{path}: vertex element lacks x/y/z properties"
                ) from None
            if offset + count > len(body):
                raise CloudFormatError(f"{path}: truncated vertex data")
            if count == 0:
                return PointCloud.empty()
            rows = np.empty((count, 3))
            for j in range(count):
                parts = body[offset + j].split()
                if len(parts) != len(props):
                    raise CloudFormatError(
                        f"{path}: vertex row {j} has {len(parts)} fields,"
                        f" expected {len(props)}"
                    )
                try:
                    for k, c in enumerate(cols):
                        rows[j, k] = float(parts[c])
                except ValueError:
                    raise CloudFormatError(
                        f"{path}: non-numeric coordinate in vertex row {j}"
                    ) from None
            return PointCloud(rows)
        offset += count
    raise CloudFormatError(f"{path}: no vertex element")


def write_ply(cloud: PointCloud, path) -> None:
    """Write an ASCII PLY file with 9 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "ply\nformat ascii 1.0\n"
            f"element vertex {len(cloud)}\n"
            "property float x\nproperty float y\nproperty float z\n"
            "end_header\n"
        )
        for x, y, z in cloud.xyz:
            fh.write("%.9g %.9g %.9g\n" % (x, y, z))


def _dispatch(path):
    suffix = str(path).lower().rsplit(".", 1)
    ext = suffix[1] if len(suffix) == 2 else ""
    if ext == "xyz":
        return read_xyz, write_xyz
    if ext == "ply":
        return read_ply, write_ply
    raise CloudFormatError(
        f"{path}: unknown cloud extension {ext!r} (expected .xyz or .ply)"
    )


def read_cloud(path) -> PointCloud:
    """Read a cloud, picking the format from the file extension."""
    return _dispatch(path)[0](path)


def write_cloud(cloud: PointCloud, path) -> None:
    """Write a cloud, picking the format from the file extension."""
    _dispatch(path)[1](cloud, path)
