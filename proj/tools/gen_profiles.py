#!/usr/bin/env python3
"""Generate the synthetic per-emotion profiles used by the simulator and the
training datasets.

Writes data/templates/profiles.json containing, for every emotion label:
  face   68 landmark template in normalized image coordinates (x right, y down)
  voice  26 band-energy means, pitch and rms
  gait   cadence / tiptoe / speed means

The face layout follows the common 68-point convention: jaw 0-16, brows
17-26, nose 27-35, eyes 36-47, outer lips 48-59, inner lips 60-67. Every
template is mirror-symmetric about x = 0.5.

Usage: tools/gen_profiles.py [output-path]
"""

import json
import math
import pathlib
import sys

EMOTIONS = ["happy", "sad", "angry", "fear", "surprise", "neutral"]

# Shape parameters per emotion.
#   mouth_w   half-width of the mouth
#   lip_up    upper lip height above mouth centre
#   lip_lo    lower lip height below mouth centre
#   corner    corner elevation (positive = raised)
#   open      inner-lip opening
#   eye_h     eyelid half-opening
#   brow      overall brow raise
#   brow_in   extra raise of the inner brow end
#   jaw       chin drop
FACE = {
    "neutral":  dict(mouth_w=0.090, lip_up=0.020, lip_lo=0.025, corner=0.000, open=0.000,
                     eye_h=0.018, brow=0.000, brow_in=0.000, jaw=0.000),
    "happy":    dict(mouth_w=0.125, lip_up=0.018, lip_lo=0.030, corner=0.035, open=0.012,
                     eye_h=0.012, brow=0.005, brow_in=0.000, jaw=0.005),
    "sad":      dict(mouth_w=0.085, lip_up=0.020, lip_lo=0.022, corner=-0.030, open=0.000,
                     eye_h=0.013, brow=0.000, brow_in=0.025, jaw=0.000),
    "angry":    dict(mouth_w=0.080, lip_up=0.013, lip_lo=0.015, corner=-0.010, open=0.000,
                     eye_h=0.022, brow=-0.020, brow_in=-0.025, jaw=0.000),
    "fear":     dict(mouth_w=0.105, lip_up=0.020, lip_lo=0.030, corner=-0.015, open=0.022,
                     eye_h=0.028, brow=0.030, brow_in=0.020, jaw=0.010),
    "surprise": dict(mouth_w=0.075, lip_up=0.030, lip_lo=0.045, corner=0.000, open=0.060,
                     eye_h=0.032, brow=0.045, brow_in=0.000, jaw=0.040),
}

# Gaussian bump over 26 bands: centre, width, peak; plus pitch and rms.
VOICE = {
    "happy":    dict(centre=10.0, width=4.0, peak=8.0, floor=0.6, pitch=285.0, rms=0.55),
    "sad":      dict(centre=5.0,  width=3.0, peak=5.0, floor=0.3, pitch=175.0, rms=0.25),
    "angry":    dict(centre=15.0, width=6.0, peak=12.0, floor=1.0, pitch=240.0, rms=0.85),
    "fear":     dict(centre=19.0, width=2.5, peak=7.0, floor=0.4, pitch=330.0, rms=0.45),
    "surprise": dict(centre=22.0, width=4.5, peak=9.0, floor=0.8, pitch=360.0, rms=0.65),
    "neutral":  dict(centre=8.0,  width=9.0, peak=3.0, floor=0.5, pitch=205.0, rms=0.35),
}

GAIT = {
    "happy":    dict(cadence=125.0, tiptoe=0.20, speed=1.20),
    "sad":      dict(cadence=90.0,  tiptoe=0.10, speed=0.70),
    "angry":    dict(cadence=135.0, tiptoe=0.35, speed=1.40),
    "fear":     dict(cadence=140.0, tiptoe=0.60, speed=1.50),
    "surprise": dict(cadence=110.0, tiptoe=0.40, speed=1.00),
    "neutral":  dict(cadence=105.0, tiptoe=0.15, speed=1.00),
}

CX = 0.5


def mirror(p):
    return [round(2 * CX - p[0], 6), round(p[1], 6)]


def face_template(prm):
    pts = [None] * 68
    # Jaw: half ellipse under the face, 0 (left) .. 16 (right).
    for i in range(17):
        theta = math.pi * i / 16.0
        drop = prm["jaw"] * math.sin(theta) ** 4
        pts[i] = [CX - 0.32 * math.cos(theta), 0.45 + (0.35 + drop) * math.sin(theta)]

    # Left brow 17 (outer) .. 21 (inner); right brow is the mirror, 22 (inner) .. 26 (outer).
    for j in range(5):
        x = 0.25 + j * (0.19 / 4.0)
        arch = 0.025 * math.sin(math.pi * j / 4.0)
        y = 0.33 - arch - prm["brow"] - prm["brow_in"] * (j / 4.0)
        pts[17 + j] = [x, y]
    for j in range(5):
        pts[22 + j] = mirror(pts[21 - j])

    # Nose bridge 27-30 and base 31-35.
    for j in range(4):
        pts[27 + j] = [CX, 0.39 + j * 0.05]
    base = [(-0.045, 0.565), (-0.022, 0.575), (0.0, 0.58), (0.022, 0.575), (0.045, 0.565)]
    for j, (dx, y) in enumerate(base):
        pts[31 + j] = [CX + dx, y]

    # Left eye 36 outer, 37-38 upper lid, 39 inner, 40-41 lower lid.
    ex, ey, hw, h = 0.36, 0.41, 0.05, prm["eye_h"]
    pts[36] = [ex - hw, ey]
    pts[37] = [ex - hw / 3, ey - h]
    pts[38] = [ex + hw / 3, ey - h]
    pts[39] = [ex + hw, ey]
    pts[40] = [ex + hw / 3, ey + h]
    pts[41] = [ex - hw / 3, ey + h]
    # Right eye 42 inner, 43-44 upper lid, 45 outer, 46-47 lower lid.
    for a, b in [(42, 39), (43, 38), (44, 37), (45, 36), (46, 41), (47, 40)]:
        pts[a] = mirror(pts[b])

    # Mouth.
    my = 0.68 + prm["jaw"] * 0.5
    w, up, lo, c, o = prm["mouth_w"], prm["lip_up"], prm["lip_lo"], prm["corner"], prm["open"]
    pts[48] = [CX - w, my - c]
    pts[49] = [CX - 0.6 * w, my - 0.8 * up - 0.5 * c - o / 2]
    pts[50] = [CX - 0.25 * w, my - up - o / 2]
    pts[51] = [CX, my - 0.9 * up - o / 2]
    pts[57] = [CX, my + lo + o / 2]
    pts[58] = [CX - 0.25 * w, my + lo + o / 2]
    pts[59] = [CX - 0.6 * w, my + 0.8 * lo - 0.5 * c + o / 2]
    pts[60] = [CX - 0.8 * w, my - 0.8 * c]
    pts[61] = [CX - 0.35 * w, my - o / 2 - 0.2 * c]
    pts[62] = [CX, my - o / 2]
    pts[66] = [CX, my + o / 2]
    pts[67] = [CX - 0.35 * w, my + o / 2 - 0.2 * c]
    for a, b in [(52, 50), (53, 49), (54, 48), (55, 59), (56, 58), (63, 61), (64, 60),
                 (65, 67)]:
        pts[a] = mirror(pts[b])

    return [[round(p[0], 6), round(p[1], 6)] for p in pts]


def voice_profile(prm):
    bands = []
    for k in range(26):
        bump = prm["peak"] * math.exp(-((k - prm["centre"]) ** 2) / (2 * prm["width"] ** 2))
        bands.append(round(prm["floor"] + bump, 6))
    return dict(bands=bands, pitch_hz=prm["pitch"], rms=prm["rms"])


def main():
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else (
        pathlib.Path(__file__).resolve().parent.parent / "data" / "templates" / "profiles.json")
    doc = {
        "format": "smarttoy-profiles",
        "version": 1,
        "emotions": {
            e: dict(face=face_template(FACE[e]), voice=voice_profile(VOICE[e]), gait=GAIT[e])
            for e in EMOTIONS
        },
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
