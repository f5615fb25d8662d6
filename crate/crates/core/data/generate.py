"""Regenerates the bundled spectral tables.

Run from this directory: python3 generate.py

Kd is the classic Jerlov diffuse attenuation table (25 nm spacing),
linearly interpolated onto the 10 nm grid. a and b are reconstructed
from a simple bio-optical closure (see README.md); they are not a
verbatim transcription of any single published table.
"""

import math

GRID = list(range(400, 701, 10))
KD_GRID = list(range(400, 701, 25))

# Diffuse attenuation Kd (1/m), 400..700 nm every 25 nm.
KD = {
    "I":   [0.028, 0.022, 0.019, 0.018, 0.027, 0.043, 0.063, 0.089, 0.235, 0.305, 0.350, 0.430, 0.610],
    "IA":  [0.032, 0.026, 0.023, 0.022, 0.031, 0.048, 0.067, 0.094, 0.240, 0.310, 0.360, 0.440, 0.610],
    "IB":  [0.038, 0.030, 0.027, 0.026, 0.036, 0.052, 0.071, 0.100, 0.240, 0.310, 0.360, 0.440, 0.620],
    "II":  [0.051, 0.042, 0.038, 0.035, 0.045, 0.060, 0.079, 0.110, 0.250, 0.320, 0.370, 0.450, 0.620],
    "III": [0.096, 0.073, 0.061, 0.057, 0.068, 0.078, 0.097, 0.120, 0.260, 0.330, 0.380, 0.460, 0.630],
    "1C":  [0.220, 0.150, 0.110, 0.094, 0.100, 0.110, 0.120, 0.140, 0.290, 0.360, 0.400, 0.480, 0.660],
    "3C":  [0.340, 0.240, 0.170, 0.140, 0.140, 0.140, 0.150, 0.170, 0.310, 0.380, 0.430, 0.510, 0.690],
    "5C":  [0.500, 0.340, 0.250, 0.200, 0.190, 0.180, 0.190, 0.210, 0.350, 0.420, 0.470, 0.550, 0.730],
    "7C":  [0.700, 0.480, 0.350, 0.280, 0.260, 0.250, 0.260, 0.280, 0.410, 0.490, 0.540, 0.620, 0.790],
    "9C":  [1.000, 0.670, 0.480, 0.390, 0.340, 0.330, 0.330, 0.350, 0.480, 0.570, 0.630, 0.710, 0.880],
}

# Particle scattering at 550 nm (1/m) per type.
BP550 = {
    "I": 0.017, "IA": 0.047, "IB": 0.072, "II": 0.195, "III": 0.386,
    "1C": 0.50, "3C": 1.00, "5C": 1.60, "7C": 2.30, "9C": 3.20,
}

# Pure water absorption (1/m), 400..700 nm every 10 nm.
A_WATER = [
    0.00663, 0.00473, 0.00454, 0.00495, 0.00635, 0.00922, 0.00979, 0.01060,
    0.01270, 0.01500, 0.02040, 0.03250, 0.04090, 0.04340, 0.04740, 0.05650,
    0.06190, 0.06950, 0.08960, 0.13510, 0.22240, 0.26440, 0.27550, 0.29160,
    0.31080, 0.34000, 0.41000, 0.43900, 0.46500, 0.51600, 0.62400,
]

MU_D = 0.85
BB_PARTICLE = 0.018


def interp(xs, ys, x):
    for i in range(len(xs) - 1):
        if xs[i] <= x <= xs[i + 1]:
            t = (x - xs[i]) / (xs[i + 1] - xs[i])
            return ys[i] + t * (ys[i + 1] - ys[i])
    raise ValueError(x)


def water_scattering(lam):
    return 0.0058 * (400.0 / lam) ** 4.32


def tables(name):
    rows = []
    for i, lam in enumerate(GRID):
        kd = interp(KD_GRID, KD[name], lam)
        bw = water_scattering(lam)
        bp = BP550[name] * (550.0 / lam)
        b = bw + bp
        bb = 0.5 * bw + BB_PARTICLE * bp
        a = max(A_WATER[i], MU_D * kd - bb)
        rows.append((lam, a, b, kd))
    return rows


def camera():
    rows = []
    for lam in GRID:
        r = math.exp(-((lam - 600.0) ** 2) / (2 * 50.0 ** 2))
        g = math.exp(-((lam - 530.0) ** 2) / (2 * 50.0 ** 2))
        b = math.exp(-((lam - 470.0) ** 2) / (2 * 50.0 ** 2))
        rows.append((lam, r, g, b))
    return rows


def main():
    for name in KD:
        with open(f"jerlov/{name}.csv", "w") as f:
            f.write("wavelength_nm,a,b,kd\n")
            for lam, a, b, kd in tables(name):
                f.write(f"{lam},{a:.5f},{b:.5f},{kd:.5f}\n")
    with open("camera_gaussian.csv", "w") as f:
        f.write("wavelength_nm,r,g,b\n")
        for lam, r, g, b in camera():
            f.write(f"{lam},{r:.6f},{g:.6f},{b:.6f}\n")


if __name__ == "__main__":
    main()
