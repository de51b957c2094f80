"""Run a packaged experiment in-process and look at its report rows.

Every experiment produces a flat list of BoundReport rows -- one verified
inequality instance each -- which the CLI serialises to JSONL and CSV.  The
pass rule is uniform: lhs <= rhs + 3*stderr + tolerance.  Reports carry the
constants used, so a row is auditable without re-running anything.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from mflab import build_config, run_experiment

raw = {"experiment": "ot-selftest", "seed": 5, "n_clouds": 6, "max_support": 5, "dims": [2]}
rows = run_experiment(build_config(dict(raw)))
print(f"ot-selftest produced {len(rows)} rows, all passed: {all(r.passed for r in rows)}")
print("first row as JSON:")
print(json.dumps(json.loads(rows[0].to_json()), indent=2))

# the same run through the CLI: exit code 0 and byte-stable outputs
with tempfile.TemporaryDirectory() as tmp:
    cfg_path = Path(tmp) / "ot.json"
    cfg_path.write_text(json.dumps(raw))
    out_dir = Path(tmp) / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "mflab.cli", "run", str(cfg_path), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    print(f"CLI exit code: {proc.returncode}")
    print(f"CLI summary  : {proc.stdout.strip()}")
    for artifact in sorted(out_dir.iterdir()):
        print(f"  wrote {artifact.name}  ({artifact.stat().st_size} bytes)")
