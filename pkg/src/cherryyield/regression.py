import dataclasses
import math
import sys
from typing import Final, Optional, Sequence

import numpy as np

from cherryyield.errors import DegeneratePredictorError, DomainError, InsufficientDataError


_CF_EPSILON: Final[float] = 1e-15
_CF_MAX_ITERATIONS: Final[int] = 10_000
_FPMIN: Final[float] = 1e-300
_QUANTILE_TOLERANCE: Final[float] = 1e-12
_MAX_BISECTIONS: Final[int] = 400
_SMALLEST_P: Final[float] = sys.float_info.min

P_VALUE_BANDS: Final[tuple[tuple[float, str], ...]] = (
    (0.001, "P<.001"),
    (0.01, "P<.01"),
    (0.05, "P<.05"),
)
NOT_SIGNIFICANT: Final[str] = "n.s."


@dataclasses.dataclass(frozen=True)
class RegressionFit:
    """
    Result of a simple least-squares fit together with the sufficient
    statistics needed for prediction intervals.

    ``None`` in r_squared or p_value marks a degenerate statistic (zero total
    or zero residual variation). Fits loaded from published summary tables
    may lack residual_se, sxx, mean_x and mean_y; such fits still predict
    points but not intervals.
    """

    slope: float
    intercept: float
    r_squared: Optional[float]
    p_value: Optional[float]
    n: int
    residual_se: Optional[float] = None
    sxx: Optional[float] = None
    mean_x: Optional[float] = None
    mean_y: Optional[float] = None

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"A fit needs at least one degree of freedom, got n={self.n}.")

        if self.r_squared is not None and not 0.0 <= self.r_squared <= 1.0:
            raise DomainError(f"R² must lie in [0, 1], got {self.r_squared}.")

        if self.p_value is not None and not 0.0 < self.p_value <= 1.0:
            raise DomainError(f"p-value must lie in (0, 1], got {self.p_value}.")

    @property
    def df(self) -> int:
        return self.n - 2

    @property
    def has_interval_statistics(self) -> bool:
        return None not in (self.residual_se, self.sxx, self.mean_x, self.mean_y)

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


@dataclasses.dataclass(frozen=True)
class PredictionInterval:
    point: float
    lower: float
    upper: float
    level: float
    annotations: tuple[str, ...] = ()

    @property
    def is_degenerate(self) -> bool:
        return self.lower == self.upper


def fit_ols(points: Sequence[tuple[float, float]]) -> RegressionFit:
    """
    Fits y = slope·x + intercept by ordinary least squares.

    Sums are accumulated around the means so large counts don't cancel.
    The p-value is the two-sided t-test of slope = 0 with n − 2 degrees of freedom.

    Args:
        points: (x, y) pairs.

    Returns:
        RegressionFit: The fitted line and its inference statistics.

    Raises:
        InsufficientDataError: If fewer than three points are given.
        DegeneratePredictorError: If all x values are equal.
    """

    n = len(points)

    if n < 3:
        raise InsufficientDataError(f"insufficient data: {n} points given, at least 3 are required")

    data = np.asarray(points, dtype=float).reshape(n, 2)
    x, y = data[:, 0], data[:, 1]
    mean_x, mean_y = float(x.mean()), float(y.mean())
    dx, dy = x - mean_x, y - mean_y

    sxx = float(dx @ dx)

    if sxx == 0.0:
        raise DegeneratePredictorError("degenerate predictor: all x values are equal")

    sxy = float(dx @ dy)
    sst = float(dy @ dy)
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x

    residuals = dy - slope * dx
    sse = float(residuals @ residuals)
    df = n - 2

    r_squared = None if sst == 0.0 else min(1.0, max(0.0, 1.0 - sse / sst))
    residual_se = math.sqrt(sse / df)
    p_value = None

    if residual_se > 0.0:
        t_statistic = slope / (residual_se / math.sqrt(sxx))
        p_value = p_value_two_sided(t_statistic, df)

    return RegressionFit(
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        p_value=p_value,
        n=n,
        residual_se=residual_se,
        sxx=sxx,
        mean_x=mean_x,
        mean_y=mean_y,
    )


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """
    Regularized incomplete beta function I_x(a, b).

    Evaluated with the modified Lentz continued fraction; for
    x > (a + 1) / (a + b + 2) the symmetry I_x(a, b) = 1 − I_{1−x}(b, a)
    keeps the fraction in its fast-converging region.

    Raises:
        DomainError: Unless 0 ≤ x ≤ 1, a > 0 and b > 0.
    """

    if not all(math.isfinite(value) for value in (x, a, b)) or not 0.0 <= x <= 1.0 or a <= 0.0 or b <= 0.0:
        raise DomainError(f"domain error: incomplete beta needs 0 <= x <= 1, a > 0, b > 0 (x={x}, a={a}, b={b})")

    if x == 0.0:
        return 0.0

    if x == 1.0:
        return 1.0

    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)

    if x > (a + 1.0) / (a + b + 2.0):
        return 1.0 - math.exp(log_front) * _beta_continued_fraction(1.0 - x, b, a) / b

    return math.exp(log_front) * _beta_continued_fraction(x, a, b) / a


def _beta_continued_fraction(x: float, a: float, b: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0

    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (_FPMIN if abs(d) < _FPMIN else d)
    h = d

    for m in range(1, _CF_MAX_ITERATIONS + 1):
        m2 = 2 * m

        # Even step.
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (_FPMIN if abs(d) < _FPMIN else d)
        c = 1.0 + aa / c
        c = _FPMIN if abs(c) < _FPMIN else c
        h *= d * c

        # Odd step.
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (_FPMIN if abs(d) < _FPMIN else d)
        c = 1.0 + aa / c
        c = _FPMIN if abs(c) < _FPMIN else c
        delta = d * c
        h *= delta

        if abs(delta - 1.0) < _CF_EPSILON:
            return h

    raise DomainError(f"Incomplete beta continued fraction did not converge (x={x}, a={a}, b={b}).")


def p_value_two_sided(t: float, df: float) -> float:
    """
    Two-sided tail probability of Student's t distribution, P(|T| ≥ |t|).

    Raises:
        DomainError: If df < 1 or t isn't finite.
    """

    if not math.isfinite(df) or df < 1:
        raise DomainError(f"domain error: degrees of freedom must be >= 1, got {df}")

    if not math.isfinite(t):
        raise DomainError(f"domain error: t statistic must be finite, got {t}")

    p = regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5)
    return min(1.0, max(p, _SMALLEST_P))


def student_t_quantile(level: float, df: float) -> float:
    """
    Critical value t with P(|T| ≤ t) = level, found by bisection on
    p_value_two_sided.

    Raises:
        DomainError: Unless 0 < level < 1 and df ≥ 1.
    """

    if not 0.0 < level < 1.0:
        raise DomainError(f"domain error: coverage level must lie in (0, 1), got {level}")

    alpha = 1.0 - level
    low, high = 0.0, 1.0

    while p_value_two_sided(high, df) > alpha:
        low, high = high, high * 2.0

    for _ in range(_MAX_BISECTIONS):
        middle = (low + high) / 2.0

        if p_value_two_sided(middle, df) > alpha:
            low = middle
        else:
            high = middle

        if high - low <= _QUANTILE_TOLERANCE * max(1.0, high):
            break

    return (low + high) / 2.0


def predict_with_interval(fit: RegressionFit, x: float, level: float = 0.95) -> PredictionInterval:
    """
    Predicts the response at x with a prediction interval for a single new observation.

    Fits with zero residual error, or without interval statistics, return an
    interval collapsed onto the point and say so in the annotations.

    Raises:
        DomainError: Unless 0 < level < 1.
    """

    if not 0.0 < level < 1.0:
        raise DomainError(f"domain error: coverage level must lie in (0, 1), got {level}")

    point = fit.predict(x)

    if not fit.has_interval_statistics:
        return PredictionInterval(point, point, point, level, (
            "degenerate: fit carries no residual statistics, interval collapsed to the point",
        ))

    if fit.residual_se == 0.0:
        return PredictionInterval(point, point, point, level, (
            "degenerate: zero residual standard error, interval collapsed to the point",
        ))

    t = student_t_quantile(level, fit.df)
    half_width = t * fit.residual_se * math.sqrt(1.0 + 1.0 / fit.n + (x - fit.mean_x) ** 2 / fit.sxx)

    return PredictionInterval(point, point - half_width, point + half_width, level)


def p_value_band(p: float) -> str:
    """
    Reports a p-value the way result tables do: 'P<.001', 'P<.01', 'P<.05' or 'n.s.'.

    Raises:
        DomainError: Unless 0 < p ≤ 1.
    """

    if p is None or not 0.0 < p <= 1.0:
        raise DomainError(f"domain error: p-value must lie in (0, 1], got {p}")

    for threshold, label in P_VALUE_BANDS:
        if p < threshold:
            return label

    return NOT_SIGNIFICANT
