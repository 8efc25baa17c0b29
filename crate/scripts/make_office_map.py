"""Regenerates crates/core/data/office_map.json (80-area office floor plan)."""
import json
from pathlib import Path

W, H = 100, 60

# (x0, y0, x1, y1, category, subcategory, name)
AREAS = []


def add(x0, y0, x1, y1, cat, sub=None, name=None):
    AREAS.append((x0, y0, x1, y1, cat, sub, name))


# north rooms, y 48..60
add(0, 48, 10, 60, "room", "office")
add(10, 48, 20, 60, "room", "meeting", "tahoe")
add(20, 48, 25, 60, "room", "phone")
add(25, 48, 35, 60, "room", "office")
add(35, 48, 45, 60, "room", "meeting", "sierra")
add(45, 48, 50, 60, "exit")
add(50, 48, 55, 60, "room", "phone")
add(55, 48, 65, 60, "room", "meeting", "yosemite")
add(65, 48, 75, 60, "room", "office")
add(75, 54, 80, 60, "printer")
add(75, 48, 80, 54, "room", "storage")
add(80, 48, 90, 60, "room", "office")
add(90, 48, 100, 60, "room", "meeting", "golden gate")

# north corridor, y 44..48
for x in range(0, 100, 20):
    add(x, 44, x + 20, 48, "corridor")

# central band, upper row y 30..44
add(0, 30, 10, 44, "area", "working")
add(10, 37, 15, 44, "printer")
add(15, 37, 20, 44, "room", "phone")
add(10, 30, 15, 37, "room", "phone")
add(15, 30, 20, 37, "room", "storage")
add(20, 30, 30, 44, "area", "working")
add(30, 37, 35, 44, "room", "phone")
add(35, 37, 40, 44, "room", "phone")
add(30, 30, 40, 37, "room", "meeting", "sequoia")
add(40, 30, 50, 44, "area", "entertainment")
add(50, 30, 60, 44, "area", "kitchen")
add(60, 37, 65, 44, "printer")
add(65, 37, 70, 44, "room", "phone")
add(60, 30, 65, 37, "room", "server")
add(65, 30, 70, 37, "room", "phone")
add(70, 30, 80, 44, "area", "working")
add(80, 37, 90, 44, "room", "meeting", "redwood")
add(80, 30, 90, 37, "area", "hardware")
add(90, 37, 95, 44, "room", "phone")
add(95, 37, 100, 44, "printer")
add(90, 30, 95, 37, "room", "storage")
add(95, 30, 100, 37, "room", "phone")

# central band, lower row y 16..30
add(0, 26, 10, 30, "room", "storage")
add(0, 20, 10, 26, "exit")
add(0, 16, 10, 20, "room", "phone")
add(10, 16, 20, 30, "area", "working")
add(20, 23, 25, 30, "printer")
add(25, 23, 30, 30, "room", "phone")
add(20, 16, 25, 23, "room", "storage")
add(25, 16, 30, 23, "room", "phone")
add(30, 16, 40, 30, "area", "working")
add(40, 23, 50, 30, "room", "meeting", "shasta")
add(40, 16, 50, 23, "area", "reception")
add(50, 23, 60, 30, "area", "working")
add(50, 16, 60, 23, "area", "working")
add(60, 16, 70, 30, "area", "working")
add(70, 23, 75, 30, "printer")
add(75, 23, 80, 30, "room", "phone")
add(70, 16, 75, 23, "room", "phone")
add(75, 16, 80, 23, "room", "storage")
add(80, 16, 90, 30, "area", "working")
add(90, 26, 100, 30, "room", "storage")
add(90, 20, 100, 26, "exit")
add(90, 16, 100, 20, "room", "phone")

# south corridor, y 12..16
for x in range(0, 100, 20):
    add(x, 12, x + 20, 16, "corridor")

# south rooms, y 0..12
add(0, 0, 10, 12, "room", "meeting", "big sur")
add(10, 0, 20, 12, "room", "office")
add(20, 0, 30, 12, "room", "meeting", "mojave")
add(30, 0, 35, 12, "room", "phone")
add(35, 0, 40, 12, "room", "phone")
add(40, 0, 50, 12, "room", "office")
add(50, 0, 55, 12, "exit")
add(55, 0, 65, 12, "room", "meeting", "sonoma")
add(65, 6, 70, 12, "printer")
add(65, 0, 70, 6, "room", "storage")
add(70, 0, 80, 12, "room", "office")
add(80, 0, 90, 12, "room", "meeting", "napa")
add(90, 0, 100, 12, "room", "office")


def ids():
    # per-band id blocks: north 120.., corridors 200../210.., center 300.., south 400..
    out = []
    counters = {"n": 120, "c1": 200, "b": 300, "c2": 210, "s": 400}
    for (x0, y0, x1, y1, *_rest) in AREAS:
        if y0 >= 48:
            band = "n"
        elif y0 >= 44:
            band = "c1"
        elif y0 >= 16:
            band = "b"
        elif y0 >= 12:
            band = "c2"
        else:
            band = "s"
        out.append(str(counters[band]))
        counters[band] += 1
    return out


def main():
    assert len(AREAS) == 80, len(AREAS)
    grid = [[None] * W for _ in range(H)]
    for k, (x0, y0, x1, y1, *_r) in enumerate(AREAS):
        for y in range(y0, y1):
            for x in range(x0, x1):
                assert grid[y][x] is None, (k, x, y)
                grid[y][x] = k
    assert all(c is not None for row in grid for c in row)
    area_ids = ids()
    by_id = dict(zip(area_ids, AREAS))
    assert by_id["124"][5] == "meeting"
    assert by_id["305"][4] == "area"
    doc = {
        "boundary": [[0, 0], [W, 0], [W, H], [0, H]],
        "resolution": 1.0,
        "areas": [],
    }
    for aid, (x0, y0, x1, y1, cat, sub, name) in zip(area_ids, AREAS):
        area = {"id": aid, "category": cat}
        if sub:
            area["subcategory"] = sub
        if name:
            area["name"] = name
        area["polygon"] = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
        doc["areas"].append(area)
    out = Path(__file__).resolve().parent.parent / "crates/core/data/office_map.json"
    lines = ["{", f'  "boundary": {json.dumps(doc["boundary"])},', f'  "resolution": {doc["resolution"]},', '  "areas": [']
    for i, a in enumerate(doc["areas"]):
        sep = "," if i + 1 < len(doc["areas"]) else ""
        lines.append("    " + json.dumps(a) + sep)
    lines += ["  ]", "}"]
    out.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
