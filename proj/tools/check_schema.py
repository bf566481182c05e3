#!/usr/bin/env python3
"""Validate config documents and mission plans against the published schemas.

usage: check_schema.py CONFIG_DIR
Files under missions/ are checked as plans, everything else as configs.
"""
import json
import pathlib
import sys

import jsonschema
from referencing import Registry, Resource


def main() -> int:
    root = pathlib.Path(sys.argv[1])
    config = json.loads((root / "schema.json").read_text())
    plan = json.loads((root / "mission.schema.json").read_text())
    for s in (config, plan):
        jsonschema.Draft202012Validator.check_schema(s)
    registry = Registry().with_resources(
        [(s["$id"], Resource.from_contents(s)) for s in (config, plan)])
    validators = {
        "config": jsonschema.Draft202012Validator(config, registry=registry),
        "plan": jsonschema.Draft202012Validator(plan, registry=registry),
    }
    failed = 0
    for f in sorted(root.rglob("*.json")):
        if f.name.endswith("schema.json"):
            continue
        kind = "plan" if "missions" in f.parts else "config"
        errors = list(validators[kind].iter_errors(json.loads(f.read_text())))
        for e in errors:
            print(f"{f}: /{'/'.join(map(str, e.absolute_path))}: {e.message}")
        failed += bool(errors)
        print(f"{'FAIL' if errors else 'ok  '} {kind:6} {f.relative_to(root)}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
