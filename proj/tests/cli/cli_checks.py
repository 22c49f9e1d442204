"""Command-line checks: exit codes, determinism, schema validity and the demo fit.

usage: cli_checks.py <facegen binary> <repo root> <work dir> <case>
"""
import filecmp
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent


class Check:
    def __init__(self, binary, root, work):
        self.binary = binary
        self.root = Path(root)
        self.work = Path(work)

    def run(self, *args, env=None, expect=0):
        full_env = dict(os.environ)
        full_env.pop("FACEGEN_THREADS", None)
        full_env.update(env or {})
        proc = subprocess.run([self.binary, *map(str, args)], capture_output=True, text=True, env=full_env)
        if proc.returncode != expect:
            sys.stderr.write(proc.stdout + proc.stderr)
            raise AssertionError(f"{args}: exit {proc.returncode}, expected {expect}")
        return proc

    def fresh(self, name):
        path = self.work / name
        shutil.rmtree(path, ignore_errors=True)
        return path


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    if mismatch or errors:
        return False
    return all(same_tree(Path(a) / d, Path(b) / d) for d in cmp.common_dirs)


def case_help(c):
    out = c.run("fit", "--help").stdout
    assert "--scans" in out and "--base" in out, out
    c.run("--help")


def case_usage(c):
    c.run(expect=1)
    c.run("fit", expect=1)
    c.run("sample", "--count", "0", expect=1)
    c.run("--sigma-mode", "cube", "sample", expect=1)
    c.run("no-such-command", expect=1)


def case_data_errors(c):
    err = c.run("fit", "--scans", c.work / "missing_scan.obj", "--base", "m.json", "-m", "2", "--out", c.work / "x",
                expect=2).stderr
    assert "missing_scan.obj" in err, err
    err = c.run("--json-logs", "subdivide", "--in", c.work / "absent.obj", "--out", c.work / "y.obj",
                expect=2).stderr
    record = json.loads(err.strip().splitlines()[-1])
    assert record["level"] == "error" and record["code"] == "IoError" and "absent.obj" in record["message"], record


def case_numeric_error(c):
    data = c.work / "constant.csv"
    c.work.mkdir(parents=True, exist_ok=True)
    data.write_text("1,2,3\n1,2,3\n1,2,3\n")
    c.run("fit-pca", data, "-k", "1", "--out", c.work / "pca.json", expect=3)


def case_determinism(c):
    runs = []
    for name, args, env in [("t1a", ["--threads", "1"], None), ("t1b", ["--threads", "1"], None),
                            ("t4", ["--threads", "4"], None), ("env4", [], {"FACEGEN_THREADS": "4"})]:
        out = c.fresh(name)
        c.run(*args, "sample", "--seed", "7", "--count", "3", "--levels", "2", "--out", out, env=env)
        runs.append(out)
    for other in runs[1:]:
        assert same_tree(runs[0], other), f"{runs[0]} and {other} differ"
    other_seed = c.fresh("seed8")
    c.run("sample", "--seed", "8", "--count", "3", "--levels", "2", "--out", other_seed)
    assert not same_tree(runs[0], other_seed)


def case_schema(c):
    import jsonschema

    scene_schema = json.loads((c.root / "docs/scene.schema.json").read_text())
    config_schema = json.loads((c.root / "docs/config.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(scene_schema)
    jsonschema.Draft202012Validator.check_schema(config_schema)
    out = c.fresh("schema")
    c.run("sample", "--seed", "11", "--count", "4", "--levels", "0", "--out", out)
    scenes = sorted(out.glob("scene_*/scene.json"))
    assert len(scenes) == 4
    for path in scenes:
        jsonschema.validate(json.loads(path.read_text()), scene_schema)
    demo = c.fresh("schema_demo")
    c.run("demo-assets", "--out", demo)
    jsonschema.validate(json.loads((demo / "fit_config.json").read_text()), config_schema)
    sample_config = {"sigma": 0.5, "sigma_mode": "var", "camera": {"vertical_fov_deg": 25, "framing": 1.2},
                     "render": {"width": 512, "height": 512, "samples_per_pixel": 16}}
    jsonschema.validate(sample_config, config_schema)
    cfg = c.work / "sample_config.json"
    cfg.write_text(json.dumps(sample_config))
    configured = c.fresh("configured")
    c.run("--config", cfg, "sample", "--seed", "3", "--count", "1", "--levels", "0", "--out", configured)
    scene = json.loads((configured / "scene_000/scene.json").read_text())
    jsonschema.validate(scene, scene_schema)
    assert scene["render"] == {"resolution": [512, 512], "samples_per_pixel": 16}, scene["render"]


def case_export(c):
    out = c.fresh("export_src")
    c.run("sample", "--seed", "5", "--count", "1", "--levels", "1", "--out", out)
    again = c.fresh("export_again")
    c.run("export", "--scene", out / "scene_000/scene.json", "--levels", "1", "--out", again)
    assert same_tree(out / "scene_000", again)


def case_demo_fit(c):
    demo = c.fresh("fit_demo")
    c.run("--seed", "3", "demo-assets", "--out", demo)
    fitted = c.fresh("fit_out")
    c.run("--config", demo / "fit_config.json", "fit", "--scans", demo / "scans", "--base", demo / "model.json",
          "-m", "3", "--out", fitted)
    report = json.loads((fitted / "fit_report.json").read_text())
    assert report["iterations"] <= 2000
    lines = (fitted / "loss.csv").read_text().splitlines()
    assert lines[0].startswith("iteration,total") and len(lines) == report["iterations"] + 1
    proc = subprocess.run([sys.executable, HERE / "principal_angles.py", fitted / "model.json",
                           demo / "scans/truth.json", "5"], capture_output=True, text=True)
    print(proc.stdout.strip())
    assert proc.returncode == 0, proc.stdout + proc.stderr


def case_hair(c):
    demo = c.fresh("hair_demo")
    c.run("demo-assets", "--out", demo)
    code = c.work / "hair/code.json"
    report = c.work / "hair/report.json"
    c.run("encode-hair", "--groom", demo / "grooms/scalp_000.json", "--out", code, "--report", report)
    r = json.loads(report.read_text())
    assert r["density_rms_delta"] < 0.1 and r["length_rms_delta"] < 0.1, r
    assert r["mean_endpoint_error_cell_diagonals"] < 1.5, r
    assert len(r["endpoint_error_m"]) == 200
    c.run("decode-hair", "--code", code, "--strands", "50", "--out", c.work / "hair/decoded.json")
    c.run("fit-pca", "--kind", "hair", code, demo / "grooms/scalp_001_code.json", "-k", "1",
          "--out", c.work / "hair/pca.json")


def case_tools(c):
    demo = c.fresh("tools_demo")
    c.run("demo-assets", "--out", demo)
    c.run("subdivide", "--in", demo / "scans/scan_000.obj", "--levels", "1", "--out", c.work / "tools/sub.obj")
    c.run("--seed", "2", "fit-pca", "--kind", "hdr", *sorted(demo.glob("hdr/*.hdr")), "-k", "3",
          "--out", c.work / "tools/hdr_pca.json")
    c.run("--seed", "1", "fit-gmm", "--data", demo / "identity_gmm.json", "--tensor", "gmm.means", "-k", "1",
          "--ridge", "1e-3", "--out", c.work / "tools/gmm.json")
    pgm = c.work / "tools/flat.pgm"
    pgm.write_bytes(b"P5\n16 16\n255\n" + bytes([128] * 256))
    c.run("pore-map", "--in", pgm, "--sigma", "1.5", "--out", c.work / "tools/pores.pgm",
          "--extrema", c.work / "tools/extrema.json")
    assert json.loads((c.work / "tools/extrema.json").read_text()) == []


CASES = {name[5:]: fn for name, fn in globals().items() if name.startswith("case_")}


def main():
    binary, root, work, case = sys.argv[1:5]
    CASES[case](Check(binary, root, Path(work) / case))
    print(f"{case}: ok")


if __name__ == "__main__":
    main()
