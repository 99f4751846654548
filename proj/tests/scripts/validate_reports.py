"""Runs the CLI in every mode and validates each report against the schema."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def main():
    exe, schema_path, fixture = sys.argv[1:4]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft7Validator.check_schema(schema)
    validator = jsonschema.Draft7Validator(schema)

    with tempfile.TemporaryDirectory() as tmp:
        centers = pathlib.Path(tmp, "c.json")
        centers.write_text("[0, 4]")
        fl = pathlib.Path(tmp, "fl.json")
        fl.write_text(json.dumps({
            "p": 1,
            "facilities": [{"id": 0, "cost": 1, "coords": [0, 0]},
                           {"id": 1, "cost": 1, "coords": [5, 0]}],
            "clients": [{"id": 2, "demand": 1, "coords": [1, 0]},
                        {"id": 3, "demand": 2, "coords": [4, 0]}],
            "matroid": {"parts": [[0, 1]], "caps": [1]},
        }))
        runs = [
            ["--mode", "lp-round", "--k", "2", "--alpha", "1", "--p", "2", "--emit-timings"],
            ["--mode", "lp-round", "--k", "8"],
            ["--mode", "kcenter", "--k", "2", "--alpha", "1.5"],
            ["--mode", "oracle", "--k", "2", "--p", "2"],
            ["--mode", "oracle", "--k", "3", "--objective", "radius"],
            ["--mode", "audit", "--k", "2", "--centers", str(centers)],
        ]
        failures = 0
        for args in runs + [["fl", str(fl)]]:
            if args[0] == "fl":
                cmd = [exe, "--input", args[1], "--mode", "fl"]
            else:
                cmd = [exe, "--input", fixture] + args
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode not in (0, 2):
                print("FAIL", cmd, proc.stderr)
                failures += 1
                continue
            errors = list(validator.iter_errors(json.loads(proc.stdout)))
            for e in errors:
                print("FAIL", " ".join(cmd[3:]), e.message)
            failures += bool(errors)
            if not errors:
                print("ok", " ".join(cmd[3:]))
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
