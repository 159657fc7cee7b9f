"""Runs each JSON-producing subcommand and validates its output against schemas/."""

import json
import pathlib
import subprocess
import sys

import jsonschema
from referencing import Registry, Resource


def load_registry(schema_dir):
    resources = []
    for path in sorted(schema_dir.glob("*.json")):
        contents = json.loads(path.read_text())
        resources.append((contents["$id"], Resource.from_contents(contents)))
    return Registry().with_resources(resources)


def main():
    exe, schema_dir, out_dir = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    out_dir.mkdir(parents=True, exist_ok=True)
    registry = load_registry(schema_dir)

    def run(*args):
        proc = subprocess.run([exe, *args], capture_output=True, text=True, check=False)
        if proc.returncode != 0:
            raise SystemExit(f"{' '.join(args)} exited {proc.returncode}: {proc.stderr}")
        return json.loads(proc.stdout)

    def check(name, instance):
        schema = json.loads((schema_dir / f"{name}.json").read_text())
        jsonschema.Draft202012Validator(schema, registry=registry).validate(instance)
        print(f"ok {name}")

    net = out_dir / "net.json"
    config = out_dir / "config.json"
    config.write_text(json.dumps({
        "d": 1, "m": [8], "teacher_class": {"arch": [1, 3, 1], "c": 0.5, "q": "inf"}, "n_teachers": 1,
        "student_archs": [[1, 4, 1]], "batch_sizes": [4], "n_seeds": 1, "n_eval": 500, "epochs": 3,
    }))

    bounds = run("bounds", "--d", "3", "--q", "2", "--p", "1", "--m", "100")
    check("bounds", bounds)
    try:
        check("bounds", {**bounds, "omega": -1.0})
    except jsonschema.ValidationError:
        print("ok bounds rejects a negative omega")
    else:
        raise SystemExit("bounds schema accepted a negative omega")
    check("construct_report", run("construct", "--d", "2", "--s", "2", "--B", "6", "--M", "4", "--y", "0.3,0.6",
                                  "--q", "1.5", "--out", str(net)))
    check("network", json.loads(net.read_text()))
    check("verify_file", run("verify", str(net)))
    check("verify_smoke", run("verify"))
    check("attack", run("attack", "--method", "grid", "--d", "2", "--s", "2", "--m", "9", "--p", "1",
                        "--samples", "5000"))
    check("attack", run("attack", "--method", "zero", "--u0", f"net:{net}", "--d", "2", "--m", "3",
                        "--samples", "2000"))
    check("recover", run("recover", "--net", str(net), "--m", "16", "--c", "1", "--q", "1.5", "--samples", "2000"))
    check("err_hat", run("experiment", "--config", str(config), "--no-timing"))


if __name__ == "__main__":
    main()
