"""Color-space conversion, CIEDE2000 difference, and palette nearest-color mapping.

All conversions assume sRGB input with D65 white point and the 2-degree
standard observer. CIEDE2000 is implemented in full, including the
rotation term, with kL = kC = kH = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# D65 reference white (X, Y, Z scaled so Y = 100)
_WHITE = np.array([95.047, 100.0, 108.883])

# linear sRGB -> XYZ, D65
_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])

_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


class ColorRangeError(ValueError):
    """An sRGB channel fell outside [0, 255]."""


@dataclass(frozen=True)
class LabColor:
    """A CIE L*a*b* color. L in [0, 100] for in-gamut sRGB inputs."""

    L: float
    a: float
    b: float

    @property
    def chroma(self) -> float:
        return float(np.hypot(self.a, self.b))


@dataclass(frozen=True)
class NearBlackBias:
    """Thresholds below which a color preferentially maps to black.

    A color with lightness < l_max and chroma < c_max is pulled to the
    palette's black entry (when one exists) instead of the globally
    nearest color, which stabilizes dark shadow tones.
    """

    l_max: float = 20.0
    c_max: float = 10.0


@dataclass(frozen=True)
class PaletteColor:
    srgb: tuple[int, int, int]
    lab: LabColor
    is_black: bool


@dataclass
class Palette:
    """Ordered reference colors extracted from an input document."""

    colors: list[PaletteColor]
    source: str = ""

    def __post_init__(self):
        if not self.colors:
            raise EmptyPaletteError("palette must contain at least one color")

    def __len__(self) -> int:
        return len(self.colors)


class EmptyPaletteError(ValueError):
    """Raised when an operation requires a nonempty palette."""


def srgb_to_lab_array(rgb) -> np.ndarray:
    """Vectorized sRGB (0..255, shape (..., 3)) to L*a*b* (shape (..., 3))."""
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = np.where(arr <= 0.04045, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _SRGB_TO_XYZ.T * 100.0
    t = xyz / _WHITE
    f = np.where(t > _EPS, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def srgb_to_lab(c) -> LabColor:
    """Convert one sRGB triple (channels 0..255) to LabColor."""
    c = tuple(c)[:3]
    for ch in c:
        if not np.isfinite(ch) or ch < 0 or ch > 255:
            raise ColorRangeError(f"sRGB channel out of range: {c!r}")
    L, a, b = srgb_to_lab_array(np.asarray(c, dtype=np.float64))
    return LabColor(float(L), float(a), float(b))


def ciede2000_array(lab1, lab2) -> np.ndarray:
    """Vectorized CIEDE2000 over broadcastable (..., 3) Lab arrays."""
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    L1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    L2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    C1 = np.hypot(a1, b1)
    C2 = np.hypot(a2, b2)
    Cbar = 0.5 * (C1 + C2)
    c7 = Cbar ** 7
    G = 0.5 * (1.0 - np.sqrt(c7 / (c7 + 25.0 ** 7)))
    a1p = (1.0 + G) * a1
    a2p = (1.0 + G) * a2
    C1p = np.hypot(a1p, b1)
    C2p = np.hypot(a2p, b2)

    # hue angles in degrees, 0 where chroma is 0 (arctan2(0, 0) == 0)
    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0

    dLp = L2 - L1
    dCp = C2p - C1p

    zero_chroma = (C1p * C2p) == 0.0
    hdiff = h2p - h1p
    dhp = np.where(np.abs(hdiff) <= 180.0, hdiff,
                   np.where(hdiff > 180.0, hdiff - 360.0, hdiff + 360.0))
    dhp = np.where(zero_chroma, 0.0, dhp)
    dHp = 2.0 * np.sqrt(C1p * C2p) * np.sin(np.radians(dhp) / 2.0)

    Lbp = 0.5 * (L1 + L2)
    Cbp = 0.5 * (C1p + C2p)
    hsum = h1p + h2p
    hbp = np.where(np.abs(hdiff) <= 180.0, 0.5 * hsum,
                   np.where(hsum < 360.0, 0.5 * (hsum + 360.0), 0.5 * (hsum - 360.0)))
    hbp = np.where(zero_chroma, hsum, hbp)

    T = (1.0
         - 0.17 * np.cos(np.radians(hbp - 30.0))
         + 0.24 * np.cos(np.radians(2.0 * hbp))
         + 0.32 * np.cos(np.radians(3.0 * hbp + 6.0))
         - 0.20 * np.cos(np.radians(4.0 * hbp - 63.0)))

    dtheta = 30.0 * np.exp(-(((hbp - 275.0) / 25.0) ** 2))
    cb7 = Cbp ** 7
    Rc = 2.0 * np.sqrt(cb7 / (cb7 + 25.0 ** 7))
    Sl = 1.0 + (0.015 * (Lbp - 50.0) ** 2) / np.sqrt(20.0 + (Lbp - 50.0) ** 2)
    Sc = 1.0 + 0.045 * Cbp
    Sh = 1.0 + 0.015 * Cbp * T
    Rt = -np.sin(np.radians(2.0 * dtheta)) * Rc

    tL = dLp / Sl
    tC = dCp / Sc
    tH = dHp / Sh
    return np.sqrt(tL ** 2 + tC ** 2 + tH ** 2 + Rt * tC * tH)


def ciede2000(x: LabColor, y: LabColor) -> float:
    """CIEDE2000 color difference between two Lab colors."""
    return float(ciede2000_array(np.array([x.L, x.a, x.b]),
                                 np.array([y.L, y.a, y.b])))


def delta_e_srgb(c1, c2) -> float:
    """CIEDE2000 between two sRGB triples, as a convenience."""
    return ciede2000(srgb_to_lab(c1), srgb_to_lab(c2))


def is_black_entry(lab: LabColor) -> bool:
    """Palette 'black' detection: very low lightness and chroma."""
    return lab.L < 5.0 and lab.chroma < 5.0


def build_palette(colors: list[tuple[int, int, int]], areas=None, source: str = "") -> Palette:
    """Assemble a palette from sRGB triples ordered by descending area.

    Near-identical entries (CIEDE2000 < 1e-6) are collapsed onto the
    first occurrence, with their areas pooled.
    """
    if areas is None:
        areas = [0.0] * len(colors)
    merged: list[list] = []  # [srgb, lab, area]
    for c, area in zip(colors, areas):
        lab = srgb_to_lab(c)
        for entry in merged:
            if ciede2000(lab, entry[1]) < 1e-6:
                entry[2] += area
                break
        else:
            merged.append([tuple(int(v) for v in c), lab, float(area)])
    merged.sort(key=lambda e: -e[2])
    entries = [PaletteColor(srgb=e[0], lab=e[1], is_black=is_black_entry(e[1]))
               for e in merged]
    return Palette(colors=entries, source=source)


def nearest_palette_color(c, palette: Palette, bias: NearBlackBias = NearBlackBias()) -> PaletteColor:
    """Pick the palette entry for an sRGB color (alpha, if present, is ignored).

    Dark low-chroma colors go to the palette's black entry when one exists;
    everything else goes to the CIEDE2000-nearest non-black entry. Ties are
    broken by palette order.
    """
    lab = srgb_to_lab(tuple(c)[:3])
    blacks = [p for p in palette.colors if p.is_black]
    if blacks and lab.L < bias.l_max and lab.chroma < bias.c_max:
        return blacks[0]
    candidates = [p for p in palette.colors if not p.is_black] or palette.colors
    best = candidates[0]
    best_d = ciede2000(lab, best.lab)
    for p in candidates[1:]:
        d = ciede2000(lab, p.lab)
        if d < best_d:
            best, best_d = p, d
    return best


def map_color(rgba, palette: Palette, bias: NearBlackBias = NearBlackBias()):
    """Map an (r, g, b[, a]) color onto the palette, passing alpha through."""
    entry = nearest_palette_color(rgba, palette, bias)
    rgba = tuple(rgba)
    if len(rgba) >= 4:
        return entry.srgb + (rgba[3],)
    return entry.srgb
