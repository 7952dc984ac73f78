#!/usr/bin/env python3
# Copyright 2026 The utg Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the 5000-image MNIST subset shipped inside the mlxtend wheel as IDX files.

Usage: fetch_mnist_subset.py OUT_DIR

Downloads the wheel with pip (no install), extracts mnist_5k.csv.gz and writes
images-idx3-ubyte / labels-idx1-ubyte in the standard big-endian IDX layout.
"""
import gzip
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    out = pathlib.Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "mlxtend==0.24.0", "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("mlxtend-*.whl"))
        raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    rows = [line.split(",") for line in gzip.decompress(raw).decode().splitlines() if line]
    pixels = bytearray()
    labels = bytearray()
    for row in rows:
        pixels.extend(int(float(v)) for v in row[:784])
        labels.append(int(float(row[784])))
    n = len(rows)
    (out / "images-idx3-ubyte").write_bytes(struct.pack(">IIII", 0x00000803, n, 28, 28) + bytes(pixels))
    (out / "labels-idx1-ubyte").write_bytes(struct.pack(">II", 0x00000801, n) + bytes(labels))
    print(f"wrote {n} images to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
