#!/usr/bin/env python3
"""Full codec round trip on a synthetic stereo clip.

Builds a two-second "melodic" clip (a few shared atoms per block plus a
noise floor), writes it as 16-bit WAV, encodes to a target SNR, decodes,
and prints the rate/quality table.  Everything lands in ./_demo_out.

Run:  python demos/codec_roundtrip.py
"""

import os
from pathlib import Path

import numpy as np

from tdcodec import MultichannelSignal, TrigDictionary, read_wav, snr, write_wav
from tdcodec.cli import EncodeConfig, cmd_compare, cmd_decode, cmd_encode, cmd_info


def synth_clip(rng, seconds=2, rate=8000, nb=256, atoms_per_block=4):
    d = TrigDictionary(nb)
    n = seconds * rate
    blocks = []
    for _ in range(-(-n // nb)):
        idx = rng.choice(np.arange(1, d.num_atoms + 1), size=atoms_per_block,
                         replace=False)
        coef = rng.normal(size=(atoms_per_block, 2)) * 0.2
        blocks.append(sum(np.outer(d.atom(k), coef[i]) for i, k in enumerate(idx)))
    clean = np.vstack(blocks)[:n]
    rms = float(np.sqrt(np.mean(clean**2)))
    noisy = clean + 10 ** (-45 / 20) * rms * rng.normal(size=clean.shape)
    return noisy * (0.7 / np.abs(noisy).max())


def main():
    out_dir = Path("_demo_out")
    out_dir.mkdir(exist_ok=True)
    wav = out_dir / "clip.wav"
    tdc = out_dir / "clip.tdc"
    dec = out_dir / "clip_decoded.wav"

    rng = np.random.default_rng(7)
    write_wav(wav, MultichannelSignal(synth_clip(rng), 8000))
    raw = os.path.getsize(wav)

    print("== encode (target 33 dB, block 256) ==")
    cmd_encode(EncodeConfig(str(wav), str(tdc), block_size=256,
                            target_snr_db=33.0))

    print("\n== container info ==")
    cmd_info(str(tdc))

    print("\n== decode and verify ==")
    cmd_decode(str(tdc), str(dec))
    measured = snr(read_wav(wav).samples, read_wav(dec).samples)
    size = os.path.getsize(tdc)
    print(f"decoded snr {measured:.3f} dB, {size} bytes "
          f"({raw / size:.0f}x smaller than the WAV)")

    print("\n== comparison table ==")
    cmd_compare(str(wav), [str(dec), str(tdc)],
                csv_path=str(out_dir / "table.csv"))
    print(f"(CSV written to {out_dir / 'table.csv'})")


if __name__ == "__main__":
    main()
