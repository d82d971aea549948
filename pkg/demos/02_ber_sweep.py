"""
A small BER sweep at 5 dB SNR on a shortened frame (24 packets).

Pilot jamming with a 4-symbol pilot should roughly double the data BER, while
a 512-symbol pilot is indistinguishable from barrage jamming at these energies.
Takes a couple of minutes; the full-size run is ``mimojam sweep --config
demos/configs/ber_sweep.json``.
"""
import os

from mimojam.cli import parse_config, run_ber_sweep

cfg = parse_config({
    "schema": 1, "mode": "ber_sweep", "seed": 1,
    "link": {"N_0": 10 ** -0.5},
    "frame": {"packets_per_frame": 24},
    "grid": {"schemes": ["barrage", "pilot", "ack"], "energies": [0, 10, 20], "pilot_lengths": [4, 512]},
    "frames": 300,
})
rows = run_ber_sweep(cfg, threads=os.cpu_count() or 1)

print(f"{'K':>4} {'E':>4} {'scheme':>8} {'data BER':>18} {'ACK BER':>18}")
for d, a in zip(rows[::2], rows[1::2]):
    print(f"{d['K']:4d} {d['energy']:4g} {d['scheme']:>8} "
          f"{d['ber']:.4f} +- {d['ci95']:.4f}   {a['ber']:.5f} +- {a['ci95']:.5f}")
