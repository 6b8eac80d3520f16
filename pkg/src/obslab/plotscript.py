"""gnuplot scripts that render the standard panels from a trace CSV."""
from __future__ import annotations

from typing import Dict, List, Sequence

HEADER = """# generated by obslab; render with: gnuplot {name}
set datafile separator ","
set datafile commentschars "#"
set key autotitle columnhead
set terminal pngcairo size 900,{height}
set output "{png}"
"""


def _col(columns: Sequence[str], name: str) -> int:
    return list(columns).index(name) + 1


def _panels(columns: Sequence[str], csv: str, label: str = "") -> List[str]:
    c = lambda name: _col(columns, name)  # noqa: E731
    tag = f" ({label})" if label else ""
    panels = [
        f'set title "position tracking{tag}"\n'
        f'plot "{csv}" using {c("t")}:{c("x1")} with lines title "x1", '
        f'"" using {c("t")}:{c("yd0")} with lines dt 2 title "y_d"',
        f'set title "control input{tag}"\n'
        f'plot "{csv}" using {c("t")}:{c("u")} with lines title "u"',
        f'set title "uncertainty and its estimate{tag}"\n'
        f'plot "{csv}" using {c("t")}:{c("f")} with lines title "f", '
        f'"" using {c("t")}:{c("fhat")} with lines dt 2 title "f_hat"',
    ]
    if "xhat1" in columns:
        panels.append(
            f'set title "position estimate{tag}"\n'
            f'plot "{csv}" using {c("t")}:{c("x1")} with lines title "x1", '
            f'"" using {c("t")}:{c("xhat1")} with lines dt 2 title "xhat1"')
        panels.append(
            f'set title "velocity estimate{tag}"\n'
            f'plot "{csv}" using {c("t")}:{c("x2")} with lines title "x2", '
            f'"" using {c("t")}:{c("xhat2")} with lines dt 2 title "xhat2"')
    return panels


def trace_plot_script(columns: Sequence[str], csv: str = "trace.csv", png: str = "trace.png",
                      estimates: bool = True) -> str:
    cols = list(columns) if estimates else [c for c in columns if not c.startswith("xhat")]
    panels = _panels(cols, csv)
    head = HEADER.format(name="plot.gp", height=300 * len(panels), png=png)
    body = f"set multiplot layout {len(panels)},1\n" + "\n".join(panels) + "\nunset multiplot\n"
    return head + body


def compare_plot_script(runs: Dict[str, Sequence[str]], png: str = "compare.png") -> str:
    """One column of panels per run; ``runs`` maps a name to its trace columns."""
    blocks = []
    for name, cols in runs.items():
        blocks.extend(_panels(cols, f"{name}/trace.csv", name)[:3])
    head = HEADER.format(name="compare.gp", height=300 * 3, png=png)
    return head + f"set multiplot layout 3,{len(runs)} columnsfirst\n" + "\n".join(blocks) + "\nunset multiplot\n"
