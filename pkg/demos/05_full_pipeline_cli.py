"""End-to-end CLI pipeline on a small synthetic corpus.

Run:  python demos/05_full_pipeline_cli.py
Equivalent shell commands are printed as they execute; everything lands in
demos/out/pipeline/.
"""

import shutil
from pathlib import Path

from causalpairs.cli import main

out = Path(__file__).parent / "out" / "pipeline"
if out.exists():
    shutil.rmtree(out)
out.mkdir(parents=True)

tiny_channels = "4,4,8,8,8,8,8,8,8,8"
steps = [
    ["generate", "--out", out, "--count", "120", "--n-obs", "300", "--seed", "8"],
    ["ingest", "--pairs", out / "pairs.csv", "--info", out / "info.csv",
     "--target", out / "target.csv", "--out", out, "--seed", "8"],
    ["rasterize", "--pairs", out / "pairs.csv", "--info", out / "info.csv",
     "--target", out / "target.csv", "--out", out, "--side", "32"],
    ["train", "cnn", "--pairs", out / "pairs.csv", "--info", out / "info.csv",
     "--target", out / "target.csv", "--out", out, "--side", "32",
     "--channels", tiny_channels, "--epochs", "6", "--lr", "0.05",
     "--seed", "8", "--augment"],
    ["train", "gbc", "--pairs", out / "pairs.csv", "--info", out / "info.csv",
     "--target", out / "target.csv", "--out", out, "--n-estimators", "80",
     "--max-depth", "4", "--min-samples-split", "4", "--seed", "8", "--augment"],
    ["evaluate", "--pairs", out / "pairs.csv", "--info", out / "info.csv",
     "--target", out / "target.csv", "--out", out,
     "--model", out / "models" / "cnn.model",
     "--model2", out / "models" / "gbc.model", "--weight", "tune"],
]

for argv in steps:
    argv = [str(a) for a in argv]
    print("\n$ causalpairs " + " ".join(argv))
    code = main(argv)
    assert code == 0, f"step failed with exit code {code}"

print("\nreport.txt:")
print((out / "reports" / "report.txt").read_text())
