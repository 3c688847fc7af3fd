"""Regenerates the bundled fixtures. Output is deterministic."""

import csv
import datetime as dt
import json
import math
import random
from pathlib import Path

HERE = Path(__file__).parent
CATEGORIES = [
    "retail_and_recreation_percent_change_from_baseline",
    "grocery_and_pharmacy_percent_change_from_baseline",
    "parks_percent_change_from_baseline",
    "transit_stations_percent_change_from_baseline",
    "workplaces_percent_change_from_baseline",
    "residential_percent_change_from_baseline",
]
HEADER = [
    "country_region_code", "country_region", "sub_region_1", "sub_region_2",
    "metro_area", "iso_3166_2_code", "census_fips_code", "date",
] + CATEGORIES


def days(start, n):
    d0 = dt.date.fromisoformat(start)
    return [d0 + dt.timedelta(days=k) for k in range(n)]


def row(cc, country, sub, date, values):
    cells = ["" if v is None else str(v) for v in values]
    return [cc, country, sub, "", "", "", "", date.isoformat()] + cells


def write_csv(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)


def grid_geojson(path, rows, cols, name, lon0, lat0, size):
    features = []
    for r in range(rows):
        for c in range(cols):
            x, y = lon0 + c * size, lat0 - r * size
            ring = [[x, y], [x + size, y], [x + size, y - size], [x, y - size], [x, y]]
            features.append({
                "type": "Feature",
                "properties": {"name": name(r, c), "row": r, "col": c},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            })
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"type": "FeatureCollection", "features": features}, indent=1) + "\n")


def synthetic():
    """5x6 provinces with an east-west mobility gradient and weekly cycle."""
    rng = random.Random(2020)
    rows, cols = 5, 6
    name = lambda r, c: f"Province {r * cols + c + 1:02d}"
    grid_geojson(HERE / "synthetic" / "regions.geojson", rows, cols, name, -60.0, -25.0, 1.0)
    lockdown = dt.date(2020, 3, 20)
    scale = [1.0, 0.5, 1.2, 1.1, 0.8, -0.3]
    out = []
    dates = days("2020-02-15", 92)
    national = {d: [[] for _ in CATEGORIES] for d in dates}
    for r in range(rows):
        for c in range(cols):
            sub = name(r, c)
            east = (c - (cols - 1) / 2) / cols
            for d in dates:
                t = (d - lockdown).days
                drop = 0.0 if t < 0 else 55.0 * math.exp(-t / 90.0)
                week = 6.0 * math.sin(2 * math.pi * d.weekday() / 7)
                vals = []
                for k, s in enumerate(scale):
                    v = -s * drop * (1.0 + 0.6 * east) + (week if k != 5 else -week / 3) + rng.gauss(0, 2.5)
                    v = max(-99, round(v))
                    if k in (2, 3) and rng.random() < 0.03:
                        v = None
                    vals.append(v)
                    if v is not None:
                        national[d][k].append(v)
                out.append(row("ZZ", "Synthland", sub, d, vals))
    for d in dates:
        out.append(row("ZZ", "Synthland", "", d, [round(sum(v) / len(v)) for v in national[d]]))
    write_csv(HERE / "synthetic" / "mobility.csv", out)


def checkerboard():
    """6x6 cells alternating +20/-20 on every day."""
    n = 6
    name = lambda r, c: f"Cell {r}{c}"
    grid_geojson(HERE / "checkerboard" / "regions.geojson", n, n, name, 10.0, 5.0, 1.0)
    out = []
    for r in range(n):
        for c in range(n):
            v = 20 if (r + c) % 2 == 0 else -20
            for d in days("2020-02-15", 92):
                out.append(row("XC", "Checkerland", name(r, c), d, [v, v, v, v, v, -v // 2]))
    write_csv(HERE / "checkerboard" / "mobility.csv", out)


def colombia_shaped():
    """25 departments x 100 days with blank counts at the reported rates."""
    rng = random.Random(57)
    depts = [f"Departamento {k:02d}" for k in range(1, 26)]
    dates = days("2020-02-15", 100)
    cells = [(s, d) for s in depts for d in dates]
    # 2500 cells per category: 7.35% -> 184, 2.07% -> 52, 20.60% -> 515, 18.28% -> 457
    blanks = {0: 184, 1: 184, 2: 0, 3: 515, 4: 52, 5: 457}
    holes = {k: set(rng.sample(range(len(cells)), m)) for k, m in blanks.items()}
    out = []
    for idx, (s, d) in enumerate(cells):
        vals = []
        for k in range(6):
            lo, hi = (0, 30) if k == 5 else (-80, 10)
            vals.append(None if idx in holes[k] else rng.randint(lo, hi))
        out.append(row("CO", "Colombia", s, d, vals))
    write_csv(HERE / "colombia_shaped.csv", out)


def argentina_transit():
    """One province over 67 days; a single transit cell is blank."""
    rng = random.Random(1)
    out = []
    for k, d in enumerate(days("2020-02-15", 67)):
        vals = [rng.randint(-90, 0) for _ in range(5)] + [rng.randint(0, 30)]
        if k == 40:
            vals[3] = None
        out.append(row("AR", "Argentina", "Buenos Aires", d, vals))
    write_csv(HERE / "argentina_transit.csv", out)


if __name__ == "__main__":
    synthetic()
    checkerboard()
    colombia_shaped()
    argentina_transit()
