# Regenerates golden_10band.bsqf: 10 bands, 64x64, f32, value = band*10000 + row*64 + col.
import struct
from pathlib import Path

W, H, B = 64, 64, 10
header = (
    "BSQF1\n"
    f"width={W}\nheight={H}\nbands={B}\n"
    "gsd=10\norigin_x=600000\norigin_y=5800000\nscale=10000\nnodata=-9999\ndtype=f32\n\n"
)
values = [b * 10000 + r * W + c for b in range(B) for r in range(H) for c in range(W)]
out = Path(__file__).with_name("golden_10band.bsqf")
out.write_bytes(header.encode("ascii") + struct.pack(f"<{len(values)}f", *values))
