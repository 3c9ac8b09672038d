import dataclasses
import math
import re
from pathlib import Path
from typing import Final, Iterable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np
from kutil.file import save_file
from kutil.logger import get_logger

from cherryyield.errors import DomainError, EmptyInputError, NotFoundError
from cherryyield.forecast import CalibrationTable, calibrate, pair_stage_with_harvest
from cherryyield.phenology import SeasonLedger, aggregate_by_tree, trajectory, WHOLE_TREE
from cherryyield.regression import predict_with_interval

_logger = get_logger(__name__)


TRAJECTORY: Final[str] = "trajectory"
TREE_AGGREGATE: Final[str] = "tree_aggregate"
REGRESSION_GRID: Final[str] = "regression_grid"

_MARGIN: Final[int] = 50
_PALETTE: Final[tuple[str, ...]] = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
_QUOTE: Final[dict[str, str]] = {"\"": "&quot;"}


@dataclasses.dataclass(frozen=True)
class PlotSpec:
    """
    What to draw and where to write it.

    Attributes:
        kind (str): Registered renderer name: trajectory, tree_aggregate or regression_grid.
        output_path (str): Destination SVG file.
        width (int): Canvas width in pixels.
        height (int): Canvas height in pixels.
        level (float): Coverage of the prediction bands on regression panels.
    """

    kind: str
    output_path: str
    width: int = 800
    height: int = 600
    level: float = 0.95

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DomainError(f"Plot dimensions must be positive, got {self.width}x{self.height}.")

        if not 0.0 < self.level < 1.0:
            raise DomainError(f"Coverage level must lie in (0, 1), got {self.level}.")


def _demangle(key: str) -> str:
    return key.rstrip("_").replace("_", "-")


def _rounder(value, precision: int = 2):
    if isinstance(value, float):
        rounded = round(value, precision)
        return int(rounded) if rounded % 1 == 0 else rounded
    return value


def _props(attributes: dict) -> str:
    return " ".join(f'{_demangle(key)}="{escape(str(_rounder(value)), _QUOTE)}"' for key, value in attributes.items())


def element(tag: str, *children: str, **attributes) -> str:
    """
    Serializes one SVG element; keyword underscores become dashes and a
    trailing underscore escapes Python keywords (class_).
    """

    props = _props(attributes)
    opening = f"<{tag} {props}" if props else f"<{tag}"

    if not children:
        return opening + "/>"

    return opening + ">" + "".join(children) + f"</{tag}>"


def text(content: str, **attributes) -> str:
    return element("text", escape(content), **attributes)


def scale(values: Iterable[float], domain: tuple[float, float], target: tuple[float, float]) -> np.ndarray:
    """
    Maps values linearly from domain onto target; a zero-width domain maps onto the target's middle.
    """

    values = np.asarray(list(values), dtype=float)
    low, high = domain

    if high == low:
        return np.full(values.shape, (target[0] + target[1]) / 2.0)

    return target[0] + (values - low) * (target[1] - target[0]) / (high - low)


def _nice_max(value: float) -> float:
    if value <= 0:
        return 1.0

    magnitude = 10 ** math.floor(math.log10(value))
    return math.ceil(value / magnitude) * magnitude


def document(spec: PlotSpec, *children: str, title: str = "") -> str:
    body = [element("rect", width=spec.width, height=spec.height, fill="white")]

    if title:
        body.append(text(title, x=spec.width / 2, y=_MARGIN / 2, text_anchor="middle", font_size=16))

    return element(
        "svg", *body, *children,
        xmlns="http://www.w3.org/2000/svg",
        width=spec.width,
        height=spec.height,
        viewBox=f"0 0 {spec.width} {spec.height}",
    ) + "\n"


def _axes(left: float, top: float, right: float, bottom: float, y_max: float, x_label: str, y_label: str) -> str:
    return element(
        "g",
        element("line", x1=left, y1=bottom, x2=right, y2=bottom, stroke="black"),
        element("line", x1=left, y1=top, x2=left, y2=bottom, stroke="black"),
        text(f"{_rounder(float(y_max))}", x=left - 4, y=top + 4, text_anchor="end", font_size=10),
        text("0", x=left - 4, y=bottom, text_anchor="end", font_size=10),
        text(x_label, x=(left + right) / 2, y=bottom + 30, text_anchor="middle", font_size=12),
        text(y_label, x=left - 30, y=(top + bottom) / 2, text_anchor="middle", font_size=12,
             transform=f"rotate(-90 {_rounder(float(left - 30))} {_rounder(float((top + bottom) / 2))})"),
        class_="axes",
    )


def _series_plot(spec: PlotSpec, series: Sequence[tuple[str, Optional[str], list]], title: str,
                 css_class: str) -> str:
    """
    Draws one polyline per (label, color, [(date, count), ...]) series over a shared date axis.
    """

    ordinals = [date.toordinal() for _, _, points in series for date, _ in points]
    counts = [count for _, _, points in series for _, count in points]
    y_max = _nice_max(max(counts))

    left, top = _MARGIN, _MARGIN
    right, bottom = spec.width - _MARGIN, spec.height - _MARGIN
    lines = []

    for index, (label, color, points) in enumerate(series):
        xs = scale([date.toordinal() for date, _ in points], (min(ordinals), max(ordinals)), (left, right))
        ys = scale([count for _, count in points], (0.0, y_max), (bottom, top))
        coordinates = " ".join(f"{_rounder(float(x))},{_rounder(float(y))}" for x, y in zip(xs, ys))

        lines.append(element(
            "polyline",
            element("title", escape(label)),
            points=coordinates,
            fill="none",
            stroke=color or _PALETTE[index % len(_PALETTE)],
            stroke_width=1.5,
            class_=css_class,
            data_label=label,
        ))

    first = min(date for _, _, points in series for date, _ in points)
    last = max(date for _, _, points in series for date, _ in points)
    x_label = f"{first.isoformat()} to {last.isoformat()}"

    return document(spec, _axes(left, top, right, bottom, y_max, x_label, "count"), *lines, title=title)


class PlotRenderer:
    """
    Base class of plot kinds. Each renderer turns a ledger and/or a
    calibration into an SVG document.
    """

    def render(self, spec: PlotSpec, ledger: Optional[SeasonLedger],
               calibration: Optional[CalibrationTable]) -> str:  # pragma: no cover
        """
        Returns the SVG document for the given inputs.

        Raises:
            EmptyInputError: If there is nothing to draw.
        """
        pass


class TrajectoryPlot(PlotRenderer):
    """
    One line per branch showing its counts through the season.
    """

    def render(self, spec, ledger, calibration):
        if ledger is None or ledger.is_empty:
            raise EmptyInputError("empty input: a trajectory plot needs a non-empty ledger")

        series = []

        for tree_id, branch_id in ledger.branches():
            if branch_id == WHOLE_TREE:
                continue

            color = next((record.branch_color for record in ledger.records_for(tree_id, branch_id)
                          if record.branch_color), None)

            try:
                points = [(point.date, point.count) for point in trajectory(ledger, tree_id, branch_id)]
            except NotFoundError:
                continue

            series.append((f"{tree_id}/{branch_id}", _css_color(color), points))

        if not series:
            raise EmptyInputError("empty input: the ledger has no branch records")

        return _series_plot(spec, series, "Counts per branch", "branch")


class TreeAggregatePlot(PlotRenderer):
    """
    One line per tree, summing its branches per measurement day.
    """

    def render(self, spec, ledger, calibration):
        if ledger is None or ledger.is_empty:
            raise EmptyInputError("empty input: a tree aggregate plot needs a non-empty ledger")

        trees = aggregate_by_tree(ledger)

        if not trees:
            raise EmptyInputError("empty input: the ledger has no branch records")

        series = [(tree_id, None, [(point.date, point.count) for point in points])
                  for tree_id, points in trees.items()]

        return _series_plot(spec, series, "Counts per tree", "tree")


class RegressionGridPlot(PlotRenderer):
    """
    One panel per calibrated stage: branch scatter, fitted line, prediction
    band where the fit allows one, and the slope and R² of the fit.

    Without a calibration, one is fitted from the ledger.
    """

    def render(self, spec, ledger, calibration):
        if calibration is None:
            if ledger is None or ledger.is_empty:
                raise EmptyInputError("empty input: a regression grid needs a calibration or a ledger")

            calibration = calibrate(ledger)

        if not calibration.entries:
            raise EmptyInputError("empty input: the calibration has no entries")

        count = len(calibration.entries)
        columns = math.ceil(math.sqrt(count))
        rows = math.ceil(count / columns)
        panel_width = (spec.width - _MARGIN) / columns
        panel_height = (spec.height - _MARGIN) / rows
        panels = []

        for index, (stage, fit) in enumerate(calibration.entries.items()):
            pairs = pair_stage_with_harvest(ledger, stage, calibration.target) if ledger is not None else []
            origin_x = _MARGIN / 2 + (index % columns) * panel_width
            origin_y = _MARGIN + (index // columns) * panel_height
            panels.append(self.__panel(spec, stage, fit, pairs, origin_x, origin_y, panel_width, panel_height))

        return document(spec, *panels, title=f"Harvest {calibration.target} against stage counts")

    @staticmethod
    def __panel(spec: PlotSpec, stage, fit, pairs, origin_x: float, origin_y: float,
                width: float, height: float) -> str:
        pad = 20
        left, top, right, bottom = pad, pad, width - pad, height - pad

        xs = [pair.x for pair in pairs]
        ys = [pair.y for pair in pairs]
        x_max = _nice_max(max(xs + [fit.mean_x * 2 if fit.mean_x else 0.0, 1.0]))
        line_x = np.linspace(0.0, x_max, 25)
        line_y = fit.slope * line_x + fit.intercept

        band = []
        if fit.has_interval_statistics and fit.residual_se > 0:
            intervals = [predict_with_interval(fit, float(x), spec.level) for x in line_x]
            band = [(interval.lower, interval.upper) for interval in intervals]

        y_values = ys + [float(value) for value in line_y] + [upper for _, upper in band]
        y_max = _nice_max(max(y_values + [1.0]))

        def px(values):
            return scale(values, (0.0, x_max), (left, right))

        def py(values):
            return scale(np.clip(np.asarray(values, dtype=float), 0.0, None), (0.0, y_max), (bottom, top))

        children = [element("rect", x=0, y=0, width=width, height=height, fill="none", stroke="#cccccc")]

        if band:
            upper_points = zip(px(line_x), py([upper for _, upper in band]))
            lower_points = zip(px(line_x[::-1]), py([lower for lower, _ in band[::-1]]))
            children.append(element(
                "polygon",
                points=" ".join(f"{_rounder(float(x))},{_rounder(float(y))}"
                                for x, y in [*upper_points, *lower_points]),
                fill="#1f77b4",
                fill_opacity=0.15,
                class_="band",
            ))

        (x1, x2), (y1, y2) = px([line_x[0], line_x[-1]]), py([line_y[0], line_y[-1]])
        children.append(element("line", x1=float(x1), y1=float(y1), x2=float(x2), y2=float(y2),
                                stroke="#d62728", class_="fit"))

        for cx, cy in zip(px(xs), py(ys)):
            children.append(element("circle", cx=float(cx), cy=float(cy), r=3, fill="#1f77b4", class_="point"))

        r_squared = "n/a" if fit.r_squared is None else f"{fit.r_squared:.2f}"
        children.extend([
            text(f"{stage.label} BBCH {stage.bbch.code}", x=width / 2, y=14, text_anchor="middle", font_size=12),
            text(f"slope={fit.slope:.2f}", x=left + 4, y=top + 12, font_size=10, class_="slope"),
            text(f"R²={r_squared}", x=left + 4, y=top + 24, font_size=10, class_="r-squared"),
        ])

        return element("g", *children, class_="panel",
                       transform=f"translate({_rounder(float(origin_x))},{_rounder(float(origin_y))})")


def _css_color(name: Optional[str]) -> Optional[str]:
    if name is None or not re.fullmatch(r"#?[A-Za-z0-9]+", name):
        return None
    return name


def renderer_name(renderer: PlotRenderer) -> str:
    """
    Registry name of a renderer: its class name without 'Plot', in snake case.
    """

    name = renderer.__class__.__name__.replace("Plot", "")
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


DEFAULT_RENDERERS: Final[tuple[PlotRenderer, ...]] = (TrajectoryPlot(), TreeAggregatePlot(), RegressionGridPlot())


def render_plot(spec: PlotSpec, ledger: Optional[SeasonLedger] = None,
                calibration: Optional[CalibrationTable] = None,
                renderer: Optional[PlotRenderer] = None) -> str:
    """
    Renders a plot and writes it to spec.output_path.

    Args:
        spec (PlotSpec): Kind, destination and size.
        ledger (Optional[SeasonLedger]): Counts to draw.
        calibration (Optional[CalibrationTable]): Fits to draw on regression grids.
        renderer (Optional[PlotRenderer]): Renderer to use instead of the built-in one for spec.kind.

    Returns:
        str: The written SVG document.

    Raises:
        DomainError: If no renderer is known for spec.kind.
        EmptyInputError: If there is nothing to draw.
    """

    if renderer is None:
        renderer = next((item for item in DEFAULT_RENDERERS if renderer_name(item) == spec.kind), None)

    if renderer is None:
        raise DomainError(f"Unknown plot kind '{spec.kind}'.")

    content = renderer.render(spec, ledger, calibration)

    output_path = Path(spec.output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    save_file(str(output_path), content)

    _logger.info("Wrote %s plot: %s", spec.kind, output_path)
    return content
