import json
import os
import subprocess
import tempfile

WORLD = {"width_m": 240, "height_m": 80, "pier_count": 24, "pier_length_min_m": 18,
         "pier_length_max_m": 24, "pier_edges": ["south", "north"], "movable_count": 4, "seed": 2}
TRAJ = {"waypoints": [[12, 32], [90, 32]]}
NOISE = {"odom_velocity_bias": 0.05, "odom_velocity_std": 0.02, "compass_std": 0.02,
         "sonar_intensity_std": 0.05, "sonar_dropout": 0.02}


def run(cli, *args):
    return subprocess.run([cli, *map(str, args)], capture_output=True, text=True).returncode


def write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f)
    return path


def pipeline(cli, d):
    """World, simulated log and a localization result under d."""
    write_json(os.path.join(d, "world.json"), WORLD)
    write_json(os.path.join(d, "traj.json"), TRAJ)
    write_json(os.path.join(d, "noise.json"), NOISE)
    steps = [
        ("gen-world", "--spec", f"{d}/world.json", "--out", f"{d}/map"),
        ("simulate", "--world", f"{d}/map", "--traj", f"{d}/traj.json", "--noise", f"{d}/noise.json",
         "--seed", 4, "--out", f"{d}/log"),
        ("localize", "--log", f"{d}/log", "--map", f"{d}/map", "--out", f"{d}/result.csv"),
    ]
    for s in steps:
        rc = run(cli, *s)
        if rc != 0:
            raise SystemExit(f"{s[0]} failed with {rc}")


def tempdir():
    return tempfile.TemporaryDirectory(prefix="xvloc_cli_")
