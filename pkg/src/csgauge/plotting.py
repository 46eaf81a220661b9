"""Generate a standalone matplotlib script that plots the CSV files of a run.

matplotlib is only needed to execute the generated script, never to produce it.
"""

from __future__ import annotations

from pathlib import Path

_HEADER = '''"""Plots for a csgauge {kind} run. Usage: python plot.py"""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def col(rows, key, cast=float):
    return [cast(r[key]) for r in rows if r[key] != ""]

'''

_BODIES = {
    "meissner_faces.csv": '''
rows = read("meissner_faces.csv")
fig, ax = plt.subplots()
sc = ax.scatter(col(rows, "x"), col(rows, "y"), c=col(rows, "B"), s=8, marker="s")
fig.colorbar(sc, ax=ax, label="B")
ax.set_xlabel("x"); ax.set_ylabel("y"); ax.set_aspect("equal")
fig.savefig(HERE / "meissner_faces.png", dpi=150)
''',
    "meissner_edges.csv": '''
rows = read("meissner_edges.csv")
fig, ax = plt.subplots()
sc = ax.scatter(col(rows, "x"), col(rows, "y"), c=col(rows, "j"), s=4, cmap="coolwarm")
fig.colorbar(sc, ax=ax, label="j (edge flux)")
ax.set_xlabel("x"); ax.set_ylabel("y"); ax.set_aspect("equal")
fig.savefig(HERE / "meissner_edges.png", dpi=150)
''',
    "cs_ohm.csv": '''
rows = read("cs_ohm.csv")
fig, ax = plt.subplots()
ax.plot(col(rows, "rhs"), col(rows, "lhs"), ".", ms=2)
ax.set_xlabel("sigma_H * B"); ax.set_ylabel("lam * curl j")
fig.savefig(HERE / "cs_ohm.png", dpi=150)
''',
    "cs_state.csv": '''
rows = [r for r in read("cs_state.csv") if r["cell_kind"] == "face"]
fig, ax = plt.subplots()
sc = ax.scatter(col(rows, "x"), col(rows, "y"), c=col(rows, "B"), s=8, marker="s")
fig.colorbar(sc, ax=ax, label="dA per face")
ax.set_aspect("equal")
fig.savefig(HERE / "cs_state.png", dpi=150)
''',
    "regime_points.csv": '''
rows = read("regime_points.csv")
fig, ax = plt.subplots()
labels = sorted(set(r["label"] for r in rows))
for lab in labels:
    sub = [r for r in rows if r["label"] == lab]
    ax.plot(col(sub, "omega_c_tau"), col(sub, "sigma_H"), "o", ms=3, label=lab)
ax.set_xscale("log"); ax.set_xlabel("omega_c tau"); ax.set_ylabel("sigma_H")
ax.legend()
fig.savefig(HERE / "regime_points.png", dpi=150)
''',
    "squid_curve.csv": '''
rows = read("squid_curve.csv")
fig, ax = plt.subplots()
ax.plot(col(rows, "phi_ext"), col(rows, "phi_int"), "-")
ax.plot(col(rows, "phi_ext"), col(rows, "phi_ext"), ":", lw=0.8)
ax.set_xlabel("external flux / flux quantum"); ax.set_ylabel("internal flux / flux quantum")
fig.savefig(HERE / "squid_curve.png", dpi=150)
''',
    "pure_gauge_edges.csv": '''
rows = read("pure_gauge_edges.csv")
fig, ax = plt.subplots()
sc = ax.scatter(col(rows, "x"), col(rows, "y"), c=col(rows, "A"), s=4, cmap="coolwarm")
fig.colorbar(sc, ax=ax, label="A (edge)")
ax.set_aspect("equal")
fig.savefig(HERE / "pure_gauge_edges.png", dpi=150)
''',
    "pure_gauge_vertices.csv": '''
rows = read("pure_gauge_vertices.csv")
fig, ax = plt.subplots()
sc = ax.scatter(col(rows, "x"), col(rows, "y"), c=col(rows, "rho"), s=4)
fig.colorbar(sc, ax=ax, label="rho")
ax.set_aspect("equal")
fig.savefig(HERE / "pure_gauge_vertices.png", dpi=150)
''',
}

_GENERIC = '''
rows = read("{name}")
print("{name}:", len(rows), "rows, columns", list(rows[0]) if rows else [])
'''


def write_plot_script(kind: str, csv_files, path) -> Path:
    """Write a script plotting exactly the given CSV files (names relative to ``path``)."""
    parts = [_HEADER.format(kind=kind)]
    for name in csv_files:
        parts.append(_BODIES.get(name, _GENERIC.format(name=name)))
    parts.append("\nplt.show()\n")
    path = Path(path)
    path.write_text("".join(parts), encoding="utf-8")
    return path
