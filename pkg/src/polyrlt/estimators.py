"""scikit-learn style wrappers around reduction and branch-and-bound.

Inputs are :class:`~polyrlt.problem.PolynomialProgram` objects (or a list
of them) rather than arrays, so these classes follow the estimator
protocol (constructor-only hyperparameters, ``get_params``/``set_params``,
trailing-underscore fitted attributes) without feature-matrix checks.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .bnb import SolveOptions, solve
from .exceptions import InvalidConfig
from .problem import PolynomialProgram
from .reduction import DEFAULT_CAP, SCHEMES, reduce_program


def check_programs(X) -> tuple[list[PolynomialProgram], bool]:
    """Normalize ``X`` to a list; the flag says whether a single program was given."""
    if isinstance(X, PolynomialProgram):
        return [X], True
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"expected a PolynomialProgram or a sequence of them, got {type(X).__name__}") from None
    if not items:
        raise ValueError("no programs given")
    for p in items:
        if not isinstance(p, PolynomialProgram):
            raise TypeError(f"expected PolynomialProgram, got {type(p).__name__}")
    return items, False


def _check_scheme(scheme: str, degree: int):
    if scheme not in SCHEMES:
        raise InvalidConfig(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if degree < 2:
        raise InvalidConfig("degree must be at least 2")


class Quadrifier(TransformerMixin, BaseEstimator):
    """Reduce programs to degree ``degree`` with ``scheme``.

    Stateless: ``fit`` only validates hyperparameters.
    """

    def __init__(self, scheme: str = "quadrlt", degree: int = 2, cap: int = DEFAULT_CAP):
        self.scheme = scheme
        self.degree = degree
        self.cap = cap

    def fit(self, X=None, y=None):
        _check_scheme(self.scheme, self.degree)
        self.is_fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self)
        items, single = check_programs(X)
        out = [reduce_program(p, self.scheme, self.degree, self.cap) for p in items]
        return out[0] if single else out


class RLTSolver(BaseEstimator):
    """Global minimizer; ``fit`` runs branch-and-bound, ``predict`` returns the incumbent."""

    def __init__(
        self,
        scheme: str = "quadrlt",
        degree: int = 2,
        time_limit: float = 3600.0,
        rel_gap: float = 1e-3,
        node_limit: int | None = None,
        cap: int = DEFAULT_CAP,
        backend: str | None = None,
    ):
        self.scheme = scheme
        self.degree = degree
        self.time_limit = time_limit
        self.rel_gap = rel_gap
        self.node_limit = node_limit
        self.cap = cap
        self.backend = backend

    def _options(self) -> SolveOptions:
        return SolveOptions(
            scheme=self.scheme,
            degree=self.degree,
            time_limit=self.time_limit,
            rel_gap=self.rel_gap,
            node_limit=self.node_limit,
            cap=self.cap,
            backend=self.backend,
        )

    def fit(self, X, y=None):
        _check_scheme(self.scheme, self.degree)
        if self.rel_gap < 0 or self.time_limit <= 0:
            raise InvalidConfig("rel_gap must be >= 0 and time_limit > 0")
        items, single = check_programs(X)
        self.reports_ = [solve(p, self._options()) for p in items]
        self.single_ = single
        return self

    @property
    def report_(self):
        check_is_fitted(self, "reports_")
        return self.reports_[0]

    def predict(self, X=None):
        """Incumbent point(s) found by ``fit`` (``None`` where no incumbent exists)."""
        check_is_fitted(self, "reports_")
        pts = [r.incumbent for r in self.reports_]
        return pts[0] if self.single_ else pts

    def score(self, X=None, y=None):
        """Negated best objective value (higher is better)."""
        check_is_fitted(self, "reports_")
        vals = [r.upper_bound for r in self.reports_]
        if any(v is None for v in vals):
            raise NotFittedError("no incumbent for at least one program")
        return -sum(vals) / len(vals)
