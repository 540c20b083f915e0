"""Built-in chart type registry.

Each of the 20 supported chart types maps onto one of seven payload
archetypes (categorical, multiseries, matrix, points, sized points,
distribution, ohlc). The archetype fixes the shape of the raw-data section;
the registry supplies the JSON template exemplar, the README documenting its
keys, a deterministic payload synthesizer, the flattening into a
(row, column, value) table, and the text strings a rendered chart is
expected to show.

The registry is the substance behind the offline expert backend: payloads,
QA sets, and expected-string sets are all pure functions of (seed, chart
type, topic).
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass

from .model import (
    ChartTypeSpec,
    JsonTemplate,
    KeyPath,
    QALevel,
    QAPair,
    format_number,
    kind_of,
    parse_numeric,
)

DEFAULT_CHART_TYPES = [
    "bar",
    "line",
    "pie",
    "scatter",
    "area",
    "histogram",
    "box",
    "bubble",
    "radar",
    "heatmap",
    "rose",
    "treemap",
    "funnel",
    "ring",
    "candlestick",
    "stacked-bar",
    "grouped-bar",
    "multi-axis-line",
    "3d-bar",
    "step-line",
]

BASIC_CHART_TYPES = ("bar", "line", "pie")


class ChartSpecError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Topics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TopicInfo:
    name: str
    row_kind: str
    entities: tuple[str, ...]
    measure: str
    unit: str
    periods: tuple[str, ...]
    lo: float
    hi: float


_QUARTERS = ("Q1", "Q2", "Q3", "Q4")
_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun")
_WEEKS = ("Week 1", "Week 2", "Week 3", "Week 4", "Week 5")


def _topic(name, row_kind, entities, measure, unit, periods=_QUARTERS, lo=10.0, hi=100.0):
    return TopicInfo(name, row_kind, tuple(entities), measure, unit, periods, lo, hi)


TOPICS: dict[str, TopicInfo] = {
    t.name: t
    for t in [
        _topic("market share", "Company", ["Nexora", "Veltrix", "BluePeak", "Quanta", "Harborline", "Syntella", "Corewave", "Primatech"], "Market Share", "%", lo=5, hi=40),
        _topic("energy production", "Source", ["Solar", "Wind", "Hydro", "Coal", "Natural Gas", "Nuclear", "Biomass", "Geothermal"], "Energy Output", "TWh", lo=50, hi=900),
        _topic("healthcare trends", "Department", ["Cardiology", "Oncology", "Pediatrics", "Neurology", "Orthopedics", "Radiology", "Emergency", "Dermatology"], "Patient Visits", "thousand visits", _MONTHS, 10, 95),
        _topic("retail sales", "Store", ["Downtown", "Uptown", "Riverside", "Mall Outlet", "Airport", "Suburban", "Harbor", "Midtown"], "Sales", "thousand USD", lo=20, hi=400),
        _topic("website traffic", "Channel", ["Organic Search", "Paid Search", "Social Media", "Email", "Referral", "Direct", "Video Ads", "Affiliates"], "Sessions", "thousand sessions", _WEEKS, 5, 120),
        _topic("climate data", "City", ["Oslo", "Cairo", "Mumbai", "Lima", "Toronto", "Sydney", "Nairobi", "Prague"], "Rainfall", "mm", _MONTHS, 20, 300),
        _topic("education statistics", "Subject", ["Mathematics", "Physics", "Chemistry", "Biology", "History", "Literature", "Geography", "Economics"], "Average Score", "points", lo=45, hi=98),
        _topic("transportation usage", "Mode", ["Bus", "Subway", "Tram", "Bicycle", "Car Share", "Ferry", "Commuter Rail", "Scooter"], "Daily Riders", "thousand riders", _MONTHS, 8, 250),
        _topic("population growth", "Region", ["Northland", "Southvale", "Eastmoor", "Westbrook", "Central Plains", "Highlands", "Coastal Strip", "Lakeview"], "Population", "thousand residents", lo=30, hi=800),
        _topic("agricultural yield", "Crop", ["Wheat", "Corn", "Soybean", "Rice", "Barley", "Potato", "Cotton", "Sunflower"], "Yield", "tonnes per hectare", lo=1.5, hi=12),
        _topic("financial markets", "Asset", ["Tech Stocks", "Utilities", "Bonds", "Gold", "Real Estate", "Commodities", "Small Caps", "Emerging Markets"], "Annual Return", "%", lo=2, hi=18),
        _topic("employment rates", "Sector", ["Manufacturing", "Services", "Agriculture", "Construction", "Technology", "Retail", "Education", "Healthcare"], "Employment Rate", "%", lo=40, hi=95),
        _topic("tourism arrivals", "Destination", ["Island Bay", "Old Town", "Mountain Pass", "Lakeshore", "Desert Springs", "Harbor City", "Vineyard Hills", "Glacier Point"], "Arrivals", "thousand visitors", lo=15, hi=450),
        _topic("manufacturing output", "Plant", ["Plant Alpha", "Plant Beta", "Plant Gamma", "Plant Delta", "Plant Epsilon", "Plant Zeta", "Plant Eta", "Plant Theta"], "Output", "thousand units", lo=25, hi=600),
        _topic("social media engagement", "Platform", ["Chirper", "SnapGrid", "StreamHub", "PixelBoard", "EchoChat", "WaveCast", "LoopReel", "NestFeed"], "Engagement", "thousand interactions", _WEEKS, 10, 300),
        _topic("real estate prices", "District", ["Harbor District", "Old Quarter", "Tech Corridor", "Green Belt", "University Row", "Riverside Walk", "Market Square", "Hillcrest"], "Median Price", "thousand USD", lo=120, hi=950),
        _topic("food consumption", "Category", ["Dairy", "Grains", "Vegetables", "Fruits", "Meat", "Seafood", "Legumes", "Snacks"], "Consumption", "kg per capita", lo=5, hi=90),
        _topic("sports performance", "Team", ["Falcons", "Mariners", "Comets", "Rangers", "Titans", "Wolves", "Pioneers", "Stallions"], "Points Scored", "points", _WEEKS, 60, 120),
        _topic("streaming viewership", "Genre", ["Drama", "Comedy", "Documentary", "Thriller", "Animation", "Sci-Fi", "Reality", "Horror"], "Watch Time", "million hours", _WEEKS, 3, 85),
        _topic("supply chain costs", "Stage", ["Raw Materials", "Processing", "Assembly", "Packaging", "Warehousing", "Freight", "Distribution", "Returns"], "Cost", "million USD", lo=2, hi=60),
        _topic("renewable adoption", "Country", ["Norvia", "Soleria", "Ventland", "Aquitera", "Petrosia", "Carbonia", "Electra", "Thermia"], "Renewable Share", "%", lo=8, hi=85),
        _topic("customer satisfaction", "Product Line", ["Starter Kit", "Pro Suite", "Home Bundle", "Travel Pack", "Office Set", "Studio Line", "Outdoor Gear", "Premium Tier"], "Satisfaction Score", "points", lo=55, hi=97),
        _topic("research funding", "Field", ["Astronomy", "Genetics", "Robotics", "Neuroscience", "Materials Science", "Ecology", "Quantum Computing", "Linguistics"], "Funding", "million USD", lo=5, hi=160),
        _topic("crime statistics", "Precinct", ["Precinct North", "Precinct South", "Precinct East", "Precinct West", "Precinct Central", "Precinct Harbor", "Precinct Hills", "Precinct Park"], "Reported Incidents", "cases", _MONTHS, 12, 340),
        _topic("water usage", "Use", ["Residential", "Industrial", "Irrigation", "Commercial", "Municipal", "Recreation", "Livestock", "Energy Cooling"], "Water Use", "million liters", _MONTHS, 6, 140),
    ]
}

DEFAULT_TOPICS = list(TOPICS)


# ---------------------------------------------------------------------------
# Flattened tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Table:
    """A chart payload flattened to labelled cells."""

    row_kind: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def cells(self) -> list[tuple[str, str, float]]:
        out = []
        for r, row in zip(self.row_labels, self.values):
            for c, v in zip(self.col_labels, row):
                out.append((r, c, float(v)))
        return out

    def col(self, index: int) -> list[tuple[str, float]]:
        return [(r, float(row[index])) for r, row in zip(self.row_labels, self.values)]


# ---------------------------------------------------------------------------
# Archetypes
# ---------------------------------------------------------------------------

def _axes(topic: TopicInfo, x_label: str, y_label: str, unit: str) -> dict:
    return {
        "x_axis": {"label": x_label},
        "y_axis": {"label": y_label, "unit": unit},
    }


def _values(rng: random.Random, topic: TopicInfo, n: int) -> list[float]:
    return [round(rng.uniform(topic.lo, topic.hi), 1) for _ in range(n)]


def _rows(rng: random.Random, topic: TopicInfo, lo: int = 5, hi: int = 7) -> list[str]:
    k = rng.randint(lo, min(hi, len(topic.entities)))
    return rng.sample(list(topic.entities), k)


def _synth_categorical(rng: random.Random, topic: TopicInfo) -> dict:
    rows = _rows(rng, topic)
    payload = {"title": f"{topic.measure} by {topic.row_kind}"}
    payload.update(_axes(topic, topic.row_kind, topic.measure, topic.unit))
    payload["data"] = {"categories": rows, "values": _values(rng, topic, len(rows))}
    return payload


def _synth_histogram(rng: random.Random, topic: TopicInfo) -> dict:
    width = rng.choice([10, 20, 25])
    start = rng.choice([0, 5]) if width == 10 else 0
    nbins = rng.randint(5, 7)
    labels = [f"{start + i * width}-{start + (i + 1) * width}" for i in range(nbins)]
    counts = [rng.randint(3, 9) for _ in range(nbins)]
    payload = {
        "title": f"Distribution of {topic.measure}",
        "x_axis": {"label": f"{topic.measure} range"},
        "y_axis": {"label": "Frequency", "unit": "count"},
        "data": {"categories": labels, "values": counts},
    }
    return payload


def _synth_multiseries(rng: random.Random, topic: TopicInfo, n_series: tuple[int, int] = (2, 3)) -> dict:
    rows = _rows(rng, topic, 4, 6)
    m = rng.randint(*n_series)
    names = list(topic.periods[:m])
    payload = {"title": f"{topic.measure} by {topic.row_kind} and Period"}
    payload.update(_axes(topic, topic.row_kind, topic.measure, topic.unit))
    payload["data"] = {
        "categories": rows,
        "series": [{"name": name, "values": _values(rng, topic, len(rows))} for name in names],
    }
    return payload


def _synth_two_series(rng: random.Random, topic: TopicInfo) -> dict:
    return _synth_multiseries(rng, topic, (2, 2))


def _synth_matrix(rng: random.Random, topic: TopicInfo) -> dict:
    rows = _rows(rng, topic, 4, 6)
    cols = list(topic.periods[: rng.randint(3, min(4, len(topic.periods)))])
    payload = {"title": f"{topic.measure} by {topic.row_kind} and Period"}
    payload.update(_axes(topic, topic.row_kind, topic.measure, topic.unit))
    payload["data"] = {
        "rows": rows,
        "cols": cols,
        "values": [_values(rng, topic, len(cols)) for _ in rows],
    }
    return payload


def _synth_points(rng: random.Random, topic: TopicInfo, sized: bool = False) -> dict:
    rows = _rows(rng, topic, 6, 8)
    x_label = f"{topic.measure} last year"
    y_label = f"{topic.measure} this year"
    payload = {
        "title": f"{topic.measure}: last year vs this year by {topic.row_kind}",
        "x_axis": {"label": x_label},
        "y_axis": {"label": y_label, "unit": topic.unit},
    }
    points = []
    for label in rows:
        point = {
            "label": label,
            "x": round(rng.uniform(topic.lo, topic.hi), 1),
            "y": round(rng.uniform(topic.lo, topic.hi), 1),
        }
        if sized:
            point["size"] = round(rng.uniform(10, 50), 1)
        points.append(point)
    payload["data"] = {"points": points, "subject": topic.row_kind}
    if sized:
        payload["data"]["size_label"] = "Growth Index"
    return payload


def _synth_sized_points(rng: random.Random, topic: TopicInfo) -> dict:
    return _synth_points(rng, topic, sized=True)


def _synth_distribution(rng: random.Random, topic: TopicInfo) -> dict:
    rows = _rows(rng, topic, 3, 5)
    payload = {"title": f"{topic.measure} distribution by {topic.row_kind}"}
    payload.update(_axes(topic, topic.row_kind, topic.measure, topic.unit))
    groups = []
    for name in rows:
        center = rng.uniform(topic.lo, topic.hi)
        spread = (topic.hi - topic.lo) / 8
        samples = sorted(round(rng.uniform(center - spread, center + spread), 1) for _ in range(rng.randint(9, 13)))
        groups.append({"name": name, "samples": samples})
    payload["data"] = {"groups": groups}
    return payload


def _synth_ohlc(rng: random.Random, topic: TopicInfo) -> dict:
    n = rng.randint(5, 7)
    periods = [f"Day {i + 1}" for i in range(n)]
    payload = {"title": f"{topic.measure} range by day"}
    payload.update(_axes(topic, "Day", topic.measure, topic.unit))
    opens, highs, lows, closes = [], [], [], []
    level = rng.uniform(topic.lo, topic.hi)
    span = (topic.hi - topic.lo) / 10
    for _ in range(n):
        o = round(level, 1)
        c = round(level + rng.uniform(-span, span), 1)
        hi = round(max(o, c) + rng.uniform(0.5, span), 1)
        lo = round(min(o, c) - rng.uniform(0.5, span), 1)
        opens.append(o)
        highs.append(hi)
        lows.append(lo)
        closes.append(c)
        level = max(c, topic.lo / 2)
    payload["data"] = {"periods": periods, "open": opens, "high": highs, "low": lows, "close": closes}
    return payload


def _flat_categorical(payload: dict) -> Table:
    d = payload["data"]
    return Table(
        row_kind=payload["x_axis"]["label"],
        row_labels=tuple(d["categories"]),
        col_labels=(payload["y_axis"]["label"],),
        values=tuple((float(v),) for v in d["values"]),
    )


def _flat_multiseries(payload: dict) -> Table:
    d = payload["data"]
    names = tuple(s["name"] for s in d["series"])
    rows = tuple(d["categories"])
    values = tuple(tuple(float(s["values"][i]) for s in d["series"]) for i in range(len(rows)))
    return Table(payload["x_axis"]["label"], rows, names, values)


def _flat_matrix(payload: dict) -> Table:
    d = payload["data"]
    return Table(
        row_kind=payload["x_axis"]["label"],
        row_labels=tuple(d["rows"]),
        col_labels=tuple(d["cols"]),
        values=tuple(tuple(float(v) for v in row) for row in d["values"]),
    )


def _flat_points(payload: dict) -> Table:
    d = payload["data"]
    cols = [payload["x_axis"]["label"], payload["y_axis"]["label"]]
    sized = any("size" in p for p in d["points"])
    if sized:
        cols.append(d.get("size_label", "Size"))
    rows, values = [], []
    for p in d["points"]:
        rows.append(p["label"])
        row = [float(p["x"]), float(p["y"])]
        if sized:
            row.append(float(p.get("size", 0)))
        values.append(tuple(row))
    return Table(d.get("subject", "Item"), tuple(rows), tuple(cols), tuple(values))


def _flat_distribution(payload: dict) -> Table:
    d = payload["data"]
    rows, values = [], []
    for g in d["groups"]:
        samples = [float(s) for s in g["samples"]]
        rows.append(g["name"])
        values.append((min(samples), statistics.median(samples), max(samples)))
    return Table(payload["x_axis"]["label"], tuple(rows), ("minimum", "median", "maximum"), tuple(values))


def _flat_ohlc(payload: dict) -> Table:
    d = payload["data"]
    rows = tuple(d["periods"])
    values = tuple(
        (float(d["open"][i]), float(d["high"][i]), float(d["low"][i]), float(d["close"][i]))
        for i in range(len(rows))
    )
    return Table(payload["x_axis"]["label"], rows, ("open", "high", "low", "close"), values)


@dataclass(frozen=True)
class Archetype:
    name: str
    data_exemplar: dict
    synthesize: object
    flatten: object
    legend_cols: bool  # column labels appear on the canvas (legend or ticks)


ARCHETYPES: dict[str, Archetype] = {
    "categorical": Archetype(
        "categorical",
        {"categories": ["Alpha", "Beta"], "values": [12.5, 30.0]},
        _synth_categorical,
        _flat_categorical,
        legend_cols=False,
    ),
    "multiseries": Archetype(
        "multiseries",
        {"categories": ["Alpha", "Beta"], "series": [{"name": "Q1", "values": [12.5, 30.0]}]},
        _synth_multiseries,
        _flat_multiseries,
        legend_cols=True,
    ),
    "two_series": Archetype(
        "two_series",
        {"categories": ["Alpha", "Beta"], "series": [{"name": "Q1", "values": [12.5, 30.0]}]},
        _synth_two_series,
        _flat_multiseries,
        legend_cols=True,
    ),
    "matrix": Archetype(
        "matrix",
        {"rows": ["Alpha", "Beta"], "cols": ["Q1", "Q2"], "values": [[1.0, 2.0], [3.0, 4.0]]},
        _synth_matrix,
        _flat_matrix,
        legend_cols=True,
    ),
    "points": Archetype(
        "points",
        {"points": [{"label": "Alpha", "x": 1.0, "y": 2.0}], "subject": "Item"},
        _synth_points,
        _flat_points,
        legend_cols=False,
    ),
    "sized_points": Archetype(
        "sized_points",
        {"points": [{"label": "Alpha", "x": 1.0, "y": 2.0, "size": 3.0}], "subject": "Item", "size_label": "Size"},
        _synth_sized_points,
        _flat_points,
        legend_cols=False,
    ),
    "distribution": Archetype(
        "distribution",
        {"groups": [{"name": "Alpha", "samples": [1.0, 2.0, 3.0]}]},
        _synth_distribution,
        _flat_distribution,
        legend_cols=False,
    ),
    "ohlc": Archetype(
        "ohlc",
        {"periods": ["Day 1"], "open": [10.0], "high": [12.0], "low": [9.0], "close": [11.0]},
        _synth_ohlc,
        _flat_ohlc,
        legend_cols=False,
    ),
}


# ---------------------------------------------------------------------------
# Chart types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartTypeInfo:
    name: str
    archetype: str
    definition: str


_DATA_DOCS = {
    "categorical": 'Contains "categories" (array of labels) and "values" (array of numbers, one per category).',
    "multiseries": 'Contains "categories" (array of labels) and "series" (array of objects, each with a "name" and a "values" array aligned with the categories).',
    "two_series": 'Contains "categories" (array of labels) and "series" (exactly two objects, each with a "name" and a "values" array aligned with the categories).',
    "matrix": 'Contains "rows" and "cols" (arrays of labels) and "values" (a 2D array with one row of numbers per row label).',
    "points": 'Contains "points" (array of objects with "label", "x", and "y") and "subject" naming what each point is.',
    "sized_points": 'Contains "points" (array of objects with "label", "x", "y", and "size"), "subject" naming what each point is, and "size_label" naming the size measure.',
    "distribution": 'Contains "groups" (array of objects, each with a "name" and a "samples" array of raw observations).',
    "ohlc": 'Contains "periods" (array of labels) plus aligned "open", "high", "low", and "close" arrays of numbers.',
}

CHART_TYPES: dict[str, ChartTypeInfo] = {
    t.name: t
    for t in [
        ChartTypeInfo("bar", "categorical", "A bar chart draws one vertical bar per category; bar height encodes the value."),
        ChartTypeInfo("line", "categorical", "A line chart connects one point per category with straight segments to show progression."),
        ChartTypeInfo("pie", "categorical", "A pie chart divides a disc into wedges whose angles are proportional to each category's value."),
        ChartTypeInfo("scatter", "points", "A scatter plot places one marker per item at its (x, y) coordinates."),
        ChartTypeInfo("area", "categorical", "An area chart draws a line per category value and fills the region down to the axis."),
        ChartTypeInfo("histogram", "categorical", "A histogram shows how often observations fall into each consecutive value range; categories are the bin ranges."),
        ChartTypeInfo("box", "distribution", "A box plot summarizes each group's sample distribution with its quartiles and extremes."),
        ChartTypeInfo("bubble", "sized_points", "A bubble chart is a scatter plot whose marker areas encode a third measure."),
        ChartTypeInfo("radar", "multiseries", "A radar chart plots each series as a closed polygon over axes arranged in a circle, one axis per category."),
        ChartTypeInfo("heatmap", "matrix", "A heatmap colors each cell of a row-by-column grid according to its value."),
        ChartTypeInfo("rose", "categorical", "A rose chart draws wedges of equal angle whose radii encode each category's value."),
        ChartTypeInfo("treemap", "categorical", "A treemap tiles a rectangle with nested rectangles whose areas are proportional to the values."),
        ChartTypeInfo("funnel", "categorical", "A funnel chart stacks horizontal bars of decreasing width to show progressive reduction across stages."),
        ChartTypeInfo("ring", "categorical", "A ring chart is a pie chart with a hollow center; arc length encodes each category's value."),
        ChartTypeInfo("candlestick", "ohlc", "A candlestick chart shows, per period, the open/close range as a box and the low/high range as a wick."),
        ChartTypeInfo("stacked-bar", "multiseries", "A stacked bar chart piles the series values for each category into a single bar."),
        ChartTypeInfo("grouped-bar", "multiseries", "A grouped bar chart draws the series values for each category as adjacent bars."),
        ChartTypeInfo("multi-axis-line", "two_series", "A multi-axis line chart plots two series as lines against independent left and right value axes."),
        ChartTypeInfo("3d-bar", "matrix", "A 3D bar chart raises one cuboid per grid cell; height encodes the cell value."),
        ChartTypeInfo("step-line", "categorical", "A step line chart connects category values with horizontal-then-vertical segments."),
    ]
}


def chart_type_info(name: str) -> ChartTypeInfo:
    try:
        return CHART_TYPES[name]
    except KeyError:
        raise ChartSpecError(f"unknown chart type {name!r}") from None


def derive_template(exemplar: dict) -> JsonTemplate:
    """Derive the required key paths from an exemplar document. Walks nested
    objects only; arrays are terminal."""
    paths: list[KeyPath] = []

    def walk(node: dict, prefix: str) -> None:
        for key, value in node.items():
            path = f"{prefix}{key}"
            kd = kind_of(value)
            if kd == "object":
                paths.append(KeyPath(path, "object"))
                walk(value, path + ".")
            elif kd in ("string", "number", "array"):
                paths.append(KeyPath(path, kd))

    walk(exemplar, "")
    return JsonTemplate(exemplar=exemplar, required_paths=tuple(paths))


def template_exemplar(name: str) -> dict:
    info = chart_type_info(name)
    arch = ARCHETYPES[info.archetype]
    return {
        "title": "Example Values by Group",
        "x_axis": {"label": "Group"},
        "y_axis": {"label": "Value", "unit": "units"},
        "data": arch.data_exemplar,
    }


def readme_text(name: str) -> str:
    info = chart_type_info(name)
    return (
        f"# {name} chart\n\n"
        f"{info.definition}\n\n"
        "## Keys\n"
        '- "title": string drawn as the chart heading.\n'
        '- "x_axis": object whose "label" names what the entries are.\n'
        '- "y_axis": object whose "label" names the measured quantity and whose "unit" gives its unit.\n'
        f'- "data": object holding the raw data. {_DATA_DOCS[info.archetype]}\n'
    )


def build_chart_type_spec(name: str) -> ChartTypeSpec:
    return ChartTypeSpec(name=name, template=derive_template(template_exemplar(name)), readme=readme_text(name))


def synthesize_payload(rng: random.Random, name: str, topic_name: str) -> dict:
    info = chart_type_info(name)
    try:
        topic = TOPICS[topic_name]
    except KeyError:
        raise ChartSpecError(f"unknown topic {topic_name!r}") from None
    return ARCHETYPES[info.archetype].synthesize(rng, topic)


def flatten_table(name: str, payload: dict) -> Table:
    info = chart_type_info(name)
    return ARCHETYPES[info.archetype].flatten(payload)


def expected_text_strings(name: str, payload: dict) -> list[str]:
    """Text the rendered chart is expected to show: title, axis labels, and
    row labels, plus column labels for types that draw a legend or column
    ticks. Labels that parse as bare numbers are excluded; tick formatting
    varies legitimately across styles."""
    info = chart_type_info(name)
    table = flatten_table(name, payload)
    out = [payload["title"], payload["x_axis"]["label"], payload["y_axis"]["label"]]
    out.extend(table.row_labels)
    if ARCHETYPES[info.archetype].legend_cols:
        out.extend(table.col_labels)
    seen, uniq = set(), []
    for s in out:
        s = str(s).strip()
        if not s or parse_numeric(s) is not None or s.lower() in seen:
            continue
        seen.add(s.lower())
        uniq.append(s)
    return uniq


# ---------------------------------------------------------------------------
# QA synthesis
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format_number(float(v))


def synthesize_qas(rng: random.Random, name: str, payload: dict) -> list[QAPair]:
    """Build the 17-QA set (1 description, 1 summary, 5 literal,
    5 inferential, 5 reasoning) for a payload. Every answer is computed from
    the flattened table, so short answers are exact."""
    table = flatten_table(name, payload)
    title = payload["title"]
    unit = payload["y_axis"].get("unit", "")
    unit_sfx = f" {unit}" if unit else ""
    cells = table.cells()
    rows = list(table.row_labels)
    c0 = table.col_labels[0]
    col0 = table.col(0)
    single = len(table.col_labels) == 1
    kind = table.row_kind.lower()

    def phrase(r: str, c: str) -> str:
        return f"{c} for {r}" if single else f"{c} value for {r}"

    qas: list[QAPair] = []

    multi_sfx = "" if single else f" across {len(table.col_labels)} value columns"
    qas.append(
        QAPair(
            QALevel.DESCRIPTION,
            "Describe what this chart shows.",
            f"This is a {name} chart titled '{title}'. It shows {payload['y_axis']['label']}"
            f"{unit_sfx} for {len(rows)} {kind} entries{multi_sfx}.",
        )
    )

    all_values = [v for _, _, v in cells]
    top_row, top_v = max(col0, key=lambda rv: rv[1])
    low_row, low_v = min(col0, key=lambda rv: rv[1])
    qas.append(
        QAPair(
            QALevel.SUMMARY,
            "Summarize the main findings of this chart.",
            f"{title}: values range from {_fmt(min(all_values))} to {_fmt(max(all_values))}{unit_sfx}, "
            f"averaging {_fmt(sum(all_values) / len(all_values))}. {top_row} is highest and "
            f"{low_row} lowest by {c0}.",
        )
    )

    for r, c, v in rng.sample(cells, 5):
        qas.append(
            QAPair(
                QALevel.LITERAL,
                f"What is the {phrase(r, c)}?",
                f"The {phrase(r, c)} is {_fmt(v)}{unit_sfx}.",
                _fmt(v),
            )
        )

    a_row, a_v = rng.choice(col0)
    b_candidates = [(r, v) for r, v in col0 if r != a_row]
    b_row, b_v = rng.choice(b_candidates)
    qas.extend(
        [
            QAPair(
                QALevel.INFERENTIAL,
                f"Which {kind} has the highest {c0}?",
                f"{top_row} has the highest {c0} at {_fmt(top_v)}{unit_sfx}.",
                top_row,
            ),
            QAPair(
                QALevel.INFERENTIAL,
                f"Which {kind} has the lowest {c0}?",
                f"{low_row} has the lowest {c0} at {_fmt(low_v)}{unit_sfx}.",
                low_row,
            ),
            QAPair(
                QALevel.INFERENTIAL,
                f"How many {kind} entries are shown in the chart?",
                f"The chart shows {len(rows)} {kind} entries.",
                str(len(rows)),
            ),
            QAPair(
                QALevel.INFERENTIAL,
                f"Is the {c0} for {a_row} greater than the {c0} for {b_row}?",
                (
                    f"Yes, {a_row} ({_fmt(a_v)}) is greater than {b_row} ({_fmt(b_v)})."
                    if a_v > b_v
                    else f"No, {a_row} ({_fmt(a_v)}) is not greater than {b_row} ({_fmt(b_v)})."
                ),
                "yes" if a_v > b_v else "no",
            ),
            QAPair(
                QALevel.INFERENTIAL,
                f"What is the difference between the highest and lowest {c0} values?",
                f"The {c0} values span from {_fmt(low_v)} to {_fmt(top_v)}, a difference of "
                f"{_fmt(top_v - low_v)}{unit_sfx}.",
                _fmt(top_v - low_v),
            ),
        ]
    )

    total = sum(v for _, v in col0)
    mean = total / len(col0)
    d_row, d_v = rng.choice(b_candidates)
    hi_pair, lo_pair = (a_row, a_v), (d_row, d_v)
    if lo_pair[1] > hi_pair[1]:
        hi_pair, lo_pair = lo_pair, hi_pair
    qas.extend(
        [
            QAPair(
                QALevel.REASONING,
                f"What is the total {c0} across all {kind} entries?",
                f"Summing the {c0} of all {len(rows)} entries gives {_fmt(total)}{unit_sfx}.",
                _fmt(total),
            ),
            QAPair(
                QALevel.REASONING,
                f"What is the average {c0} across all {kind} entries?",
                f"The average {c0} is {_fmt(total)} divided by {len(rows)}, i.e. {_fmt(mean)}{unit_sfx}.",
                _fmt(mean),
            ),
            QAPair(
                QALevel.REASONING,
                f"How much larger is the {c0} for {hi_pair[0]} than for {lo_pair[0]}?",
                f"{hi_pair[0]} ({_fmt(hi_pair[1])}) exceeds {lo_pair[0]} ({_fmt(lo_pair[1])}) by "
                f"{_fmt(hi_pair[1] - lo_pair[1])}{unit_sfx}.",
                _fmt(hi_pair[1] - lo_pair[1]),
            ),
            QAPair(
                QALevel.REASONING,
                f"What is the ratio of the {c0} for {a_row} to the {c0} for {b_row}?",
                f"The ratio is {_fmt(a_v)} / {_fmt(b_v)} = {_fmt(a_v / b_v)}.",
                _fmt(a_v / b_v),
            ),
            QAPair(
                QALevel.REASONING,
                f"If the {c0} for {a_row} increased by 10%, what would it be?",
                f"A 10% increase on {_fmt(a_v)} gives {_fmt(a_v * 1.1)}{unit_sfx}.",
                _fmt(a_v * 1.1),
            ),
        ]
    )
    return qas
