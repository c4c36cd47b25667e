#!/usr/bin/env python3
"""Convert a raw gait-EMG recording set into the emgait dataset layout.

The output is what `emgait --data-dir` reads:

    <out>/manifest.json
    <out>/<subject>_<leg>/emg.csv      t_s,VL,BF,MH,GL,GM
    <out>/<subject>_<leg>/events.csv   t_s,leg      (leg: self | opposite)

Only `read_source` depends on the layout of the source files. It is a stub:
fill it in for the archive at hand, then run

    python3 scripts/import_dataset.py --src <raw dir> --out <dataset dir>

Everything else (validation, CSV and manifest writing) is complete.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

CHANNELS = ["VL", "BF", "MH", "GL", "GM"]
LEGS = ("dominant", "nondominant")
SAMPLE_RATE_HZ = 1500.0


@dataclass
class SourceRecording:
    subject_id: str
    leg: str
    # one list per channel, in CHANNELS order
    channels: list
    heel_strikes_s: list
    opposite_heel_strikes_s: list
    injury_history: bool = False
    extra: dict = field(default_factory=dict)


def read_source(src: Path):
    """Yield a SourceRecording for every subject and leg under `src`.

    Per recording this needs the five channels resampled or stored at
    SAMPLE_RATE_HZ, heel-strike times of the recorded leg and of the other
    leg in seconds from the first sample, and whether the subject reports a
    knee injury.
    """
    raise NotImplementedError(
        f"read_source is a stub: teach it the file layout under {src} "
        "(see the module docstring for what each recording needs)"
    )


def check(rec: SourceRecording):
    if rec.leg not in LEGS:
        raise ValueError(f"{rec.subject_id}: leg {rec.leg!r} not in {LEGS}")
    if len(rec.channels) != len(CHANNELS):
        raise ValueError(f"{rec.subject_id} {rec.leg}: {len(rec.channels)} channels, expected {len(CHANNELS)}")
    n = len(rec.channels[0])
    if n < 2 or any(len(c) != n for c in rec.channels):
        raise ValueError(f"{rec.subject_id} {rec.leg}: channels must share one length of at least 2")
    duration = (n - 1) / SAMPLE_RATE_HZ
    for name, events in (("self", rec.heel_strikes_s), ("opposite", rec.opposite_heel_strikes_s)):
        if any(b <= a for a, b in zip(events, events[1:])):
            raise ValueError(f"{rec.subject_id} {rec.leg}: {name} events not strictly ascending")
        if any(not (0.0 <= t <= duration) or math.isnan(t) for t in events):
            raise ValueError(f"{rec.subject_id} {rec.leg}: {name} event outside [0, {duration}] s")


def write(rec: SourceRecording, out: Path) -> dict:
    sub = f"{rec.subject_id}_{rec.leg}"
    d = out / sub
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "emg.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t_s"] + CHANNELS)
        for i, row in enumerate(zip(*rec.channels)):
            w.writerow([repr(i / SAMPLE_RATE_HZ)] + [repr(float(v)) for v in row])
    events = [(t, "self") for t in rec.heel_strikes_s] + [(t, "opposite") for t in rec.opposite_heel_strikes_s]
    with open(d / "events.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t_s", "leg"])
        for t, leg in sorted(events):
            w.writerow([repr(float(t)), leg])
    return {
        "subject_id": rec.subject_id,
        "leg": rec.leg,
        "file_path": f"{sub}/emg.csv",
        "injury_history": bool(rec.injury_history),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--src", type=Path, required=True, help="directory with the raw recordings")
    ap.add_argument("--out", type=Path, required=True, help="dataset directory to create")
    args = ap.parse_args(argv)

    entries = []
    seen = set()
    for rec in read_source(args.src):
        check(rec)
        key = (rec.subject_id, rec.leg)
        if key in seen:
            raise ValueError(f"duplicate recording {key}")
        seen.add(key)
        entries.append(write(rec, args.out))
        print(f"{rec.subject_id} {rec.leg}: {len(rec.channels[0])} samples", file=sys.stderr)

    manifest = {"entries": entries, "sample_rate_hz": SAMPLE_RATE_HZ, "channel_names": CHANNELS}
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
    print(f"wrote {len(entries)} recordings to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
