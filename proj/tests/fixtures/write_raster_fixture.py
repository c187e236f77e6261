# Copyright 2026 The hsfuse Authors
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

"""Writes a raster fixture with an independent writer for the interop test.

Values come from a 32-bit LCG so the C++ side can regenerate them.
"""

import os
import struct
import sys

ROWS, COLS, BANDS = 16, 16, 8


def lcg_values(count, state=12345):
    out = []
    for _ in range(count):
        state = (1664525 * state + 1013904223) % (1 << 32)
        out.append((state >> 8) / 65536.0 - 128.0)
    return out


def main():
    base = sys.argv[1]
    os.makedirs(os.path.dirname(base), exist_ok=True)
    values = lcg_values(ROWS * COLS * BANDS)
    values[5] = -9999.0  # one nodata cell in band 1
    with open(base + ".bin", "wb") as f:
        f.write(struct.pack("<%df" % len(values), *values))
    names = ",".join("b%d" % (i + 1) for i in range(BANDS))
    with open(base + ".hdr", "w") as f:
        f.write("# written by write_raster_fixture.py\n")
        f.write("rows = %d\ncols = %d\nbands = %d\n" % (ROWS, COLS, BANDS))
        f.write("nodata = -9999\norigin_x = 500000.5\norigin_y = 4300000\npixel_size = 2\n")
        f.write("interleave = bsq\ndtype = f32le\nband_names = %s\nsource = python\n" % names)


if __name__ == "__main__":
    main()
