from pathlib import Path

import matplotlib

matplotlib.use("Agg")

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)
COLORS = [[1, 1, 1], [0.78, 0.78, 0.78], [0.85, 0.33, 0.1], [0.0, 0.45, 0.74]]
