"""Parameterized renderer-script bank.

One self-contained matplotlib program per chart type. Each template exposes
the five style slots (color scheme, legend, grid, font, mark texture) plus
the annotated flag as __TOKEN__ placeholders, reads a JSON payload path from
sys.argv[1], and writes a PNG to sys.argv[2]. Scripts also write a
``<out>.txt`` sidecar listing every string they drew, one per line, which
serves as a deterministic mock-OCR channel; value labels appear in it
exactly when the style is annotated.
"""

from __future__ import annotations

import textwrap

from ..model import StyleDescriptor

COLOR_SCHEMES = ("tab10", "Set2", "Paired", "viridis", "plasma", "coolwarm")
LEGENDS = ("best", "upper-right", "lower-left", "hidden")
GRIDS = ("both", "x", "y", "off")
FONTS = ("sans", "serif", "mono")
MARK_TEXTURES = ("solid", "striped", "dotted", "crossed")

STYLE_TOKENS = {
    "color_scheme": COLOR_SCHEMES,
    "legend": LEGENDS,
    "grid": GRIDS,
    "font": FONTS,
    "mark_texture": MARK_TEXTURES,
}


class BankError(KeyError):
    pass


_HEADER = r'''import json
import math
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

STYLE = {
    "color_scheme": "__COLOR_SCHEME__",
    "legend": "__LEGEND__",
    "grid": "__GRID__",
    "font": "__FONT__",
    "mark_texture": "__MARK_TEXTURE__",
    "annotated": __ANNOTATED__,
}

FONTS = {"sans": "DejaVu Sans", "serif": "DejaVu Serif", "mono": "DejaVu Sans Mono"}
HATCHES = {"solid": None, "striped": "//", "dotted": "..", "crossed": "xx"}
LINESTYLES = {"solid": "-", "striped": "--", "dotted": ":", "crossed": "-."}
MARKERS = {"solid": "o", "striped": "s", "dotted": "^", "crossed": "D"}

plt.rcParams["font.family"] = FONTS[STYLE["font"]]

drawn = []


def note(text):
    text = str(text).replace("\n", " ").strip()
    if text:
        drawn.append(text)
    return text


def fmt(v):
    v = float(v)
    if v == int(v):
        return str(int(v))
    return repr(float("%.6g" % v))


def colors(n):
    cmap = plt.get_cmap(STYLE["color_scheme"])
    return [cmap((i + 0.5) / n) for i in range(n)]


def hatch():
    return HATCHES[STYLE["mark_texture"]]


def show_grid(ax):
    if STYLE["grid"] != "off":
        ax.grid(True, axis=STYLE["grid"] if STYLE["grid"] != "both" else "both",
                alpha=0.4, linewidth=0.6)
    ax.set_axisbelow(True)


def show_legend(ax, handles=None, labels=None):
    if STYLE["legend"] == "hidden":
        return
    if handles is None:
        handles, labels = ax.get_legend_handles_labels()
    if not handles:
        return
    ax.legend(handles, labels, loc=STYLE["legend"].replace("-", " "), fontsize=8)
    for s in labels:
        note(s)


def caption(fig, text):
    fig.text(0.5, 0.01, note(text), ha="center", fontsize=8)


def main():
    if len(sys.argv) < 3:
        raise SystemExit("usage: script DATA OUT")
    with open(sys.argv[1], "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    out_path = sys.argv[2]
    title = str(payload.get("title", ""))
    x_label = str(payload.get("x_axis", {}).get("label", ""))
    y_label = str(payload.get("y_axis", {}).get("label", ""))
    unit = str(payload.get("y_axis", {}).get("unit", ""))
    y_full = y_label + (" (" + unit + ")" if unit else "")
    d = payload["data"]
'''

_FOOTER = r'''    try:
        fig.tight_layout()
    except Exception:
        pass
    fig.savefig(out_path, dpi=100)
    with open(out_path + ".txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(drawn) + "\n")


main()
'''


def _categorical_prelude() -> str:
    return """
    cats = [str(c) for c in d["categories"]]
    vals = [float(v) for v in d["values"]]
    xs = list(range(len(cats)))
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    ax.set_xlabel(note(x_label))
    ax.set_ylabel(note(y_full))
    ax.set_xticks(xs)
    ax.set_xticklabels([note(c) for c in cats], rotation=20, ha="right", fontsize=8)
"""


def _axis_annotate() -> str:
    return """
    if STYLE["annotated"]:
        for i, v in enumerate(vals):
            ax.annotate(note(fmt(v)), (i, v), ha="center", va="bottom", fontsize=7)
    show_grid(ax)
"""


_PIE_COMMON = """
    cats = [str(c) for c in d["categories"]]
    vals = [float(v) for v in d["values"]]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    wedges = ax.pie(vals, labels=[note(c) for c in cats], colors=colors(len(cats)),
                    startangle=90, textprops={"fontsize": 8},
                    wedgeprops={"hatch": hatch(), "edgecolor": "white"%(extra)s})[0]
    caption(fig, y_full + " by " + x_label)
    if STYLE["annotated"]:
        for w, v in zip(wedges, vals):
            ang = math.radians((w.theta1 + w.theta2) / 2)
            ax.text(%(radius)s * math.cos(ang), %(radius)s * math.sin(ang),
                    note(fmt(v)), ha="center", va="center", fontsize=7)
"""

_BODIES: dict[str, str] = {}

_BODIES["bar"] = _categorical_prelude() + """
    ax.bar(xs, vals, color=colors(len(cats)), hatch=hatch(), edgecolor="black", linewidth=0.5)
""" + _axis_annotate()

_BODIES["line"] = _categorical_prelude() + """
    ax.plot(xs, vals, color=colors(1)[0], linestyle=LINESTYLES[STYLE["mark_texture"]],
            marker="o", label=y_label)
    show_legend(ax)
""" + _axis_annotate()

_BODIES["step-line"] = _categorical_prelude() + """
    ax.step(xs, vals, where="mid", color=colors(1)[0],
            linestyle=LINESTYLES[STYLE["mark_texture"]], marker="o", label=y_label)
    show_legend(ax)
""" + _axis_annotate()

_BODIES["area"] = _categorical_prelude() + """
    c = colors(1)[0]
    ax.plot(xs, vals, color=c, linestyle=LINESTYLES[STYLE["mark_texture"]], marker="o", label=y_label)
    ax.fill_between(xs, vals, color=c, alpha=0.35, hatch=hatch())
    show_legend(ax)
""" + _axis_annotate()

_BODIES["histogram"] = _categorical_prelude() + """
    ax.bar(xs, vals, width=1.0, color=colors(len(cats)), hatch=hatch(),
           edgecolor="black", linewidth=0.5)
""" + _axis_annotate()

_BODIES["pie"] = _PIE_COMMON % {"extra": "", "radius": "0.6"}

_BODIES["ring"] = _PIE_COMMON % {"extra": ', "width": 0.45', "radius": "0.775"}

_BODIES["funnel"] = """
    cats = [str(c) for c in d["categories"]]
    vals = [float(v) for v in d["values"]]
    order = sorted(range(len(cats)), key=lambda i: -vals[i])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    top = max(vals)
    cs = colors(len(cats))
    for rank, i in enumerate(order):
        ax.barh(-rank, vals[i], left=(top - vals[i]) / 2, height=0.8, color=cs[rank],
                hatch=hatch(), edgecolor="black", linewidth=0.5)
        ax.text(top / 2, -rank + 0.08, note(cats[i]), ha="center", va="bottom", fontsize=8)
        if STYLE["annotated"]:
            ax.text(top / 2, -rank - 0.12, note(fmt(vals[i])), ha="center", va="top", fontsize=7)
    ax.set_yticks([])
    ax.set_xticks([])
    caption(fig, y_full + " by " + x_label)
"""

_BODIES["treemap"] = """
    cats = [str(c) for c in d["categories"]]
    vals = [float(v) for v in d["values"]]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    x, y, w, h = 0.0, 0.0, 1.0, 1.0
    remaining = sum(vals)
    cs = colors(len(cats))
    for i, (cat, v) in enumerate(zip(cats, vals)):
        frac = v / remaining if remaining else 0.0
        if w >= h:
            rw = w * frac
            rect = plt.Rectangle((x, y), rw, h, facecolor=cs[i], edgecolor="white",
                                 hatch=hatch(), linewidth=1.2)
            cx, cy = x + rw / 2, y + h / 2
            x, w = x + rw, w - rw
        else:
            rh = h * frac
            rect = plt.Rectangle((x, y), w, rh, facecolor=cs[i], edgecolor="white",
                                 hatch=hatch(), linewidth=1.2)
            cx, cy = x + w / 2, y + rh / 2
            y, h = y + rh, h - rh
        remaining -= v
        ax.add_patch(rect)
        ax.text(cx, cy + 0.02, note(cat), ha="center", va="center", fontsize=7)
        if STYLE["annotated"]:
            ax.text(cx, cy - 0.04, note(fmt(v)), ha="center", va="center", fontsize=7)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xticks([])
    ax.set_yticks([])
    caption(fig, y_full + " by " + x_label)
"""

_BODIES["rose"] = """
    cats = [str(c) for c in d["categories"]]
    vals = [float(v) for v in d["values"]]
    n = len(cats)
    theta = [2 * math.pi * i / n for i in range(n)]
    fig = plt.figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot(111, polar=True)
    ax.set_title(note(title))
    ax.bar(theta, vals, width=2 * math.pi / n * 0.9, color=colors(n), hatch=hatch(),
           edgecolor="black", linewidth=0.4, alpha=0.85)
    ax.set_xticks(theta)
    ax.set_xticklabels([note(c) for c in cats], fontsize=8)
    if STYLE["annotated"]:
        for t, v in zip(theta, vals):
            ax.text(t, v, note(fmt(v)), ha="center", va="bottom", fontsize=7)
    caption(fig, y_full + " by " + x_label)
"""

_BODIES["scatter"] = """
    pts = d["points"]
    xs = [float(p["x"]) for p in pts]
    ys = [float(p["y"]) for p in pts]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    ax.set_xlabel(note(x_label))
    ax.set_ylabel(note(y_full))
    ax.scatter(xs, ys, c=colors(len(pts)), marker=MARKERS[STYLE["mark_texture"]],
               s=70, edgecolor="black", linewidth=0.4)
    for p in pts:
        ax.annotate(note(p["label"]), (float(p["x"]), float(p["y"])),
                    xytext=(5, 5), textcoords="offset points", fontsize=7)
        if STYLE["annotated"]:
            ax.annotate(note(fmt(p["x"])), (float(p["x"]), float(p["y"])),
                        xytext=(5, -7), textcoords="offset points", fontsize=6)
            ax.annotate(note(fmt(p["y"])), (float(p["x"]), float(p["y"])),
                        xytext=(5, -14), textcoords="offset points", fontsize=6)
    show_grid(ax)
"""

_BODIES["bubble"] = """
    pts = d["points"]
    xs = [float(p["x"]) for p in pts]
    ys = [float(p["y"]) for p in pts]
    sizes = [float(p.get("size", 10.0)) for p in pts]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    ax.set_xlabel(note(x_label))
    ax.set_ylabel(note(y_full))
    ax.scatter(xs, ys, s=[s * 7 for s in sizes], c=colors(len(pts)),
               marker=MARKERS[STYLE["mark_texture"]], alpha=0.7, edgecolor="black", linewidth=0.4)
    for p in pts:
        ax.annotate(note(p["label"]), (float(p["x"]), float(p["y"])),
                    xytext=(6, 6), textcoords="offset points", fontsize=7)
        if STYLE["annotated"]:
            ax.annotate(note(fmt(p["x"])), (float(p["x"]), float(p["y"])),
                        xytext=(6, -7), textcoords="offset points", fontsize=6)
            ax.annotate(note(fmt(p["y"])), (float(p["x"]), float(p["y"])),
                        xytext=(6, -14), textcoords="offset points", fontsize=6)
            ax.annotate(note(fmt(p.get("size", 10.0))), (float(p["x"]), float(p["y"])),
                        xytext=(6, -21), textcoords="offset points", fontsize=6)
    caption(fig, "Bubble size: " + str(d.get("size_label", "Size")))
    show_grid(ax)
"""

_BODIES["box"] = """
    groups = d["groups"]
    names = [str(g["name"]) for g in groups]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    ax.set_xlabel(note(x_label))
    ax.set_ylabel(note(y_full))
    bp = ax.boxplot([[float(s) for s in g["samples"]] for g in groups], patch_artist=True)
    for patch, c in zip(bp["boxes"], colors(len(groups))):
        patch.set_facecolor(c)
        patch.set_hatch(hatch())
    ax.set_xticks(range(1, len(names) + 1))
    ax.set_xticklabels([note(nm) for nm in names], rotation=20, ha="right", fontsize=8)
    if STYLE["annotated"]:
        for i, g in enumerate(groups):
            srt = sorted(float(s) for s in g["samples"])
            n = len(srt)
            med = (srt[(n - 1) // 2] + srt[n // 2]) / 2
            for v, va in ((srt[0], "top"), (med, "bottom"), (srt[-1], "bottom")):
                ax.text(i + 1.28, v, note(fmt(v)), ha="left", va=va, fontsize=6)
    show_grid(ax)
"""

_BODIES["heatmap"] = """
    rows = [str(r) for r in d["rows"]]
    cols = [str(c) for c in d["cols"]]
    vals = [[float(v) for v in row] for row in d["values"]]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    im = ax.imshow(vals, cmap=STYLE["color_scheme"], aspect="auto")
    ax.set_xticks(range(len(cols)))
    ax.set_xticklabels([note(c) for c in cols], fontsize=8)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels([note(r) for r in rows], fontsize=8)
    ax.set_ylabel(note(x_label))
    cbar = fig.colorbar(im, ax=ax)
    cbar.set_label(note(y_full), fontsize=8)
    if STYLE["annotated"]:
        for i, row in enumerate(vals):
            for j, v in enumerate(row):
                ax.text(j, i, note(fmt(v)), ha="center", va="center", fontsize=6)
"""

_BODIES["3d-bar"] = """
    rows = [str(r) for r in d["rows"]]
    cols = [str(c) for c in d["cols"]]
    vals = [[float(v) for v in row] for row in d["values"]]
    fig = plt.figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot(111, projection="3d")
    ax.set_title(note(title))
    cs = colors(len(rows))
    for i, row in enumerate(vals):
        for j, v in enumerate(row):
            ax.bar3d(j, i, 0, 0.6, 0.6, v, color=cs[i], edgecolor="black",
                     linewidth=0.2, shade=True)
            if STYLE["annotated"]:
                ax.text(j + 0.3, i + 0.3, v, note(fmt(v)), fontsize=6, ha="center")
    ax.set_xticks([j + 0.3 for j in range(len(cols))])
    ax.set_xticklabels([note(c) for c in cols], fontsize=7)
    ax.set_yticks([i + 0.3 for i in range(len(rows))])
    ax.set_yticklabels([note(r) for r in rows], fontsize=7)
    ax.set_ylabel(note(x_label))
    ax.set_zlabel(note(y_full), fontsize=8)
"""

_BODIES["radar"] = """
    cats = [str(c) for c in d["categories"]]
    series = d["series"]
    n = len(cats)
    angles = [2 * math.pi * i / n for i in range(n)]
    fig = plt.figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot(111, polar=True)
    ax.set_title(note(title))
    for s, c in zip(series, colors(len(series))):
        vals = [float(v) for v in s["values"]]
        closed_a = angles + [angles[0]]
        closed_v = vals + [vals[0]]
        ax.plot(closed_a, closed_v, color=c, linestyle=LINESTYLES[STYLE["mark_texture"]],
                label=str(s["name"]))
        ax.fill(closed_a, closed_v, color=c, alpha=0.15)
        if STYLE["annotated"]:
            for a, v in zip(angles, vals):
                ax.text(a, v, note(fmt(v)), fontsize=6, ha="center")
    ax.set_xticks(angles)
    ax.set_xticklabels([note(c) for c in cats], fontsize=8)
    show_legend(ax)
    caption(fig, y_full + " by " + x_label)
"""

_MULTI_BAR = """
    cats = [str(c) for c in d["categories"]]
    series = d["series"]
    xs = list(range(len(cats)))
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    ax.set_xlabel(note(x_label))
    ax.set_ylabel(note(y_full))
    ax.set_xticks(xs)
    ax.set_xticklabels([note(c) for c in cats], rotation=20, ha="right", fontsize=8)
    cs = colors(len(series))
"""

_BODIES["stacked-bar"] = _MULTI_BAR + """
    bottoms = [0.0] * len(cats)
    for s, c in zip(series, cs):
        vals = [float(v) for v in s["values"]]
        ax.bar(xs, vals, bottom=bottoms, color=c, label=str(s["name"]),
               hatch=hatch(), edgecolor="black", linewidth=0.4)
        if STYLE["annotated"]:
            for i, v in enumerate(vals):
                ax.text(i, bottoms[i] + v / 2, note(fmt(v)), ha="center", va="center", fontsize=6)
        bottoms = [b + v for b, v in zip(bottoms, vals)]
    show_legend(ax)
    show_grid(ax)
"""

_BODIES["grouped-bar"] = _MULTI_BAR + """
    m = len(series)
    width = 0.8 / m
    for k, (s, c) in enumerate(zip(series, cs)):
        vals = [float(v) for v in s["values"]]
        offs = [i - 0.4 + width * (k + 0.5) for i in xs]
        ax.bar(offs, vals, width=width, color=c, label=str(s["name"]),
               hatch=hatch(), edgecolor="black", linewidth=0.4)
        if STYLE["annotated"]:
            for x, v in zip(offs, vals):
                ax.text(x, v, note(fmt(v)), ha="center", va="bottom", fontsize=6)
    show_legend(ax)
    show_grid(ax)
"""

_BODIES["multi-axis-line"] = """
    cats = [str(c) for c in d["categories"]]
    series = d["series"]
    xs = list(range(len(cats)))
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    ax.set_xlabel(note(x_label))
    ax.set_xticks(xs)
    ax.set_xticklabels([note(c) for c in cats], rotation=20, ha="right", fontsize=8)
    ax2 = ax.twinx()
    c1, c2 = colors(2)
    left, right = series[0], series[1]
    lv = [float(v) for v in left["values"]]
    rv = [float(v) for v in right["values"]]
    ls = LINESTYLES[STYLE["mark_texture"]]
    h1 = ax.plot(xs, lv, color=c1, linestyle=ls, marker="o", label=str(left["name"]))[0]
    h2 = ax2.plot(xs, rv, color=c2, linestyle=ls, marker="s", label=str(right["name"]))[0]
    ax.set_ylabel(note(str(left["name"])), color=c1)
    ax2.set_ylabel(note(str(right["name"])), color=c2)
    if STYLE["annotated"]:
        for i, v in enumerate(lv):
            ax.annotate(note(fmt(v)), (i, v), xytext=(0, 5), textcoords="offset points",
                        ha="center", fontsize=6, color=c1)
        for i, v in enumerate(rv):
            ax2.annotate(note(fmt(v)), (i, v), xytext=(0, -10), textcoords="offset points",
                         ha="center", fontsize=6, color=c2)
    show_legend(ax, [h1, h2], [str(left["name"]), str(right["name"])])
    show_grid(ax)
    caption(fig, y_full + " by " + x_label)
"""

_BODIES["candlestick"] = """
    periods = [str(p) for p in d["periods"]]
    opens = [float(v) for v in d["open"]]
    highs = [float(v) for v in d["high"]]
    lows = [float(v) for v in d["low"]]
    closes = [float(v) for v in d["close"]]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_title(note(title))
    ax.set_xlabel(note(x_label))
    ax.set_ylabel(note(y_full))
    up, down = colors(2)
    span = max(highs) - min(lows)
    for i in range(len(periods)):
        ax.vlines(i, lows[i], highs[i], color="black", linewidth=1.0)
        body = max(abs(closes[i] - opens[i]), span * 0.01)
        ax.bar(i, body, bottom=min(opens[i], closes[i]), width=0.6,
               color=up if closes[i] >= opens[i] else down,
               hatch=hatch(), edgecolor="black", linewidth=0.5)
        if STYLE["annotated"]:
            ax.text(i - 0.38, opens[i], note(fmt(opens[i])), ha="right", va="center", fontsize=6)
            ax.text(i + 0.38, closes[i], note(fmt(closes[i])), ha="left", va="center", fontsize=6)
            ax.text(i, highs[i] + span * 0.02, note(fmt(highs[i])), ha="center", va="bottom", fontsize=6)
            ax.text(i, lows[i] - span * 0.02, note(fmt(lows[i])), ha="center", va="top", fontsize=6)
    ax.set_xticks(range(len(periods)))
    ax.set_xticklabels([note(p) for p in periods], rotation=20, ha="right", fontsize=8)
    show_grid(ax)
"""


def _assemble(name: str) -> str:
    body = textwrap.indent(textwrap.dedent(_BODIES[name]).strip("\n"), "    ")
    return _HEADER + body + "\n" + _FOOTER


def bank_templates() -> dict[str, str]:
    """All parameterized script templates, keyed by chart type."""
    return {name: _assemble(name) for name in sorted(_BODIES)}


def bank_template(chart_type: str) -> str:
    if chart_type not in _BODIES:
        raise BankError(f"no bank script for chart type {chart_type!r}")
    return _assemble(chart_type)


def instantiate(chart_type: str, style: StyleDescriptor) -> str:
    """Fill a bank template's style slots, yielding a runnable program."""
    source = bank_template(chart_type)
    for token, value in style.tokens().items():
        source = source.replace(f"__{token.upper()}__", value)
    return source.replace("__ANNOTATED__", "True" if style.annotated else "False")
