"""Run painleve_lab commands and validate each document against docs/schema."""

import json
import pathlib
import subprocess
import sys

import jsonschema
from referencing import Registry, Resource

lab, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])

resources = []
for path in schema_dir.glob("*.schema.json"):
    doc = json.loads(path.read_text())
    resources.append((doc["$id"], Resource.from_contents(doc)))
registry = Registry().with_resources(resources)

runs = [
    ["atlas", "--recipe", "w1", "--rmax", "40"],
    ["atlas", "--recipe", "riccati+", "--rmax", "30"],
    ["atlas", "--recipe", "rational", "--alpha", "1", "--rmax", "20"],
    ["backlund", "--recipe", "w1", "--steps", "up", "down", "reflect"],
    ["airy", "--recipe", "w1", "--alpha", "3/2", "--rmax", "20"],
    ["rescale", "--recipe", "w1", "--h", "30", "--radius", "2", "--density", "2"],
    ["classify", "--recipe", "w1", "--rmax", "40"],
    ["verify-series", "--draws", "10"],
]

failures = 0


def fail(msg):
    global failures
    failures += 1
    print("FAIL", msg)


for args in runs:
    proc = subprocess.run([lab, *args], capture_output=True, text=True)
    label = " ".join(args)
    if proc.returncode not in (0, 1):
        fail(f"{label}: exit {proc.returncode}: {proc.stderr.strip()}")
        continue
    doc = json.loads(proc.stdout)
    name = doc.get("schema", "?").split("/")[0].removeprefix("painleve-")
    schema = registry.contents(f"https://painleve-lab.invalid/schema/{name}.schema.json")
    validator = jsonschema.Draft202012Validator(schema, registry=registry)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    for e in errors[:5]:
        fail(f"{label}: {'/'.join(map(str, e.path))}: {e.message[:200]}")
    if name == "atlas":
        n = len(doc["poles"])
        for s in doc["strings"]:
            if any(m >= n for m in s["members"]):
                fail(f"{label}: string member out of range")
        if any(u >= n for u in doc["unassigned"]):
            fail(f"{label}: unassigned index out of range")
        for row in doc["counting"]["rows"]:
            inside = [p for p in doc["poles"] if (p["p"][0] ** 2 + p["p"][1] ** 2) ** 0.5 <= row["r"]]
            if row["n"] != len(inside) or row["n_plus"] + row["n_minus"] != row["n"]:
                fail(f"{label}: counting row r={row['r']} disagrees with the pole list")
                break
    if not errors:
        print("ok", label)

sys.exit(1 if failures else 0)
