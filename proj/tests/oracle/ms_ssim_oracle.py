"""Reference MS-SSIM values for tests/metrics_test.cpp.

Pairs are built from integer 8-bit levels with a 64-bit LCG so the C++ side
reproduces them exactly. Scores come from pytorch_msssim in float64.
"""
import numpy as np
import torch
from pytorch_msssim import ms_ssim

MASK = (1 << 64) - 1


class Lcg:
    def __init__(self, seed):
        self.s = seed & MASK

    def next(self):
        self.s = (self.s * 6364136223846793005 + 1442695040888963407) & MASK
        return self.s


def make_pair(i, size=256):
    rng = Lcg(1000 + i)
    k = 8 * (i + 1)
    a = np.zeros((3, size, size), dtype=np.int64)
    b = np.zeros_like(a)
    for c in range(3):
        for y in range(size):
            for x in range(size):
                base = ((x * 3 + y * 5 + c * 7 + i * 11) % 64) * 2 + (rng.next() >> 57)
                noise = (rng.next() >> 56) % (2 * k + 1) - k
                a[c, y, x] = base
                b[c, y, x] = min(255, max(0, base + noise))
    return a, b


def main():
    for i in range(10):
        a, b = make_pair(i)
        ta = torch.from_numpy(a / 255.0).unsqueeze(0)
        tb = torch.from_numpy(b / 255.0).unsqueeze(0)
        v = ms_ssim(ta, tb, data_range=1.0, size_average=True).item()
        print(f"{v:.10f},")


if __name__ == "__main__":
    main()
