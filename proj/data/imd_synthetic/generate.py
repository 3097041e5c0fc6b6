"""Regenerates the synthetic stand-in for the IMD surveillance snapshot.

The public dataset could not be bundled, so this writes data with the same
shape: 413 districts in 16 states, finetype B and C cases 2002-2008, one
elevated group of districts around Aachen in 2004-2005. Output is fully
determined by the seed. Run from any directory:

    python3 data/imd_synthetic/generate.py
"""

import csv
import json
import zlib
from datetime import date, timedelta
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
SEED = 20020101
N_DISTRICTS = 413
N_STATES = 16
AACHEN = (6.0839, 50.7753)
FIRST, LAST = date(2002, 1, 1), date(2008, 12, 31)


def districts(rng):
    # States as jittered blocks of a 4 x 4 lattice over the German bounding box.
    lon = rng.uniform(6.0, 15.0, N_DISTRICTS)
    lat = rng.uniform(47.4, 54.9, N_DISTRICTS)
    lon[0], lat[0] = AACHEN
    col = np.minimum(((lon - 6.0) / 9.0 * 4).astype(int), 3)
    row = np.minimum(((lat - 47.4) / 7.5 * 4).astype(int), 3)
    state = row * 4 + col
    pop = np.round(np.exp(rng.normal(np.log(170_000), 0.55, N_DISTRICTS))).astype(int)
    pop[0] = 245_000
    return lon, lat, state, pop


def cluster_members(lon, lat):
    # Aachen and its three nearest districts.
    d = np.hypot((lon - AACHEN[0]) * np.cos(np.radians(AACHEN[1])), lat - AACHEN[1])
    return set(np.argsort(d)[:4].tolist())


def events(rng, lon, lat, pop, members):
    days = (LAST - FIRST).days + 1
    weights = pop / pop.sum()
    out = []
    for day in range(days):
        when = FIRST + timedelta(days=day)
        season = 1.0 + 0.35 * np.cos(2 * np.pi * (when.timetuple().tm_yday - 40) / 365.25)
        for finetype, rate in (("B", 0.13), ("C", 0.12)):
            for _ in range(rng.poisson(rate * season)):
                d = rng.choice(N_DISTRICTS, p=weights)
                out.append((when, finetype, d))
        # Extra finetype B cases in the cluster districts during 2004-2005.
        if date(2004, 1, 1) <= when <= date(2005, 12, 31):
            for _ in range(rng.poisson(0.02)):
                out.append((when, "B", int(rng.choice(sorted(members)))))
    rows = []
    for when, finetype, d in out:
        jitter = rng.normal(0.0, 0.05, 2)
        rows.append((when.isoformat(), finetype, d, lon[d] + jitter[0], lat[d] + jitter[1]))
    return rows


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return len(rows)


def main():
    rng = np.random.default_rng(SEED)
    lon, lat, state, pop = districts(rng)
    ids = [f"D{i + 1:03d}" for i in range(N_DISTRICTS)]
    names = ["Aachen"] + [f"district {i + 1}" for i in range(1, N_DISTRICTS)]
    members = cluster_members(lon, lat)
    ev = events(rng, lon, lat, pop, members)

    months = [f"{y}-{m:02d}" for y in range(2002, 2009) for m in range(1, 13)]
    counts = {(i, m): 0 for i in ids for m in months}
    for when, _, d, _, _ in ev:
        counts[(ids[d], when[:7])] += 1  # calendar month of the event date

    files = {}
    files["geometry.csv"] = write_csv(
        HERE / "geometry.csv",
        ["region", "name", "lon", "lat", "population"],
        [(ids[i], names[i], f"{lon[i]:.4f}", f"{lat[i]:.4f}", int(pop[i])) for i in range(N_DISTRICTS)],
    )
    files["states.csv"] = write_csv(
        HERE / "states.csv", ["region", "group"], [(ids[i], f"S{state[i] + 1:02d}") for i in range(N_DISTRICTS)]
    )
    files["counts.csv"] = write_csv(
        HERE / "counts.csv", ["region", "time", "count"], [(i, m, counts[(i, m)]) for i in ids for m in months]
    )
    b_events = [(e[0], f"{e[3]:.4f}", f"{e[4]:.4f}", ids[e[2]]) for e in ev if e[1] == "B"]
    files["events_b.csv"] = write_csv(HERE / "events_b.csv", ["date", "lon", "lat", "region"], b_events)

    manifest = {
        "name": "imd_synthetic",
        "faithful": False,
        "provenance": "Synthetic stand-in generated by generate.py (seed %d). Shapes follow the public IMD "
        "surveillance data (413 districts, 16 states, monthly counts 2002-2008, finetype B events) but no "
        "values are taken from it." % SEED,
        "month_rule": "event date's calendar month",
        "districts": N_DISTRICTS,
        "states": len(set(state.tolist())),
        "count_total": int(sum(counts.values())),
        "event_count": len(b_events),
        "cluster_regions": sorted(ids[i] for i in members),
        "files": [
            {"path": p, "rows": n, "crc32": "%08x" % (zlib.crc32((HERE / p).read_bytes()) & 0xFFFFFFFF)}
            for p, n in files.items()
        ],
    }
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
