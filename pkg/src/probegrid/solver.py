"""Exact multi-target least squares with ridge stabilization.

One centered Gram matrix and one Cholesky factorization per (source, layer)
serve every target: fitting target k costs two triangular solves instead of
a fresh O(n d^2) accumulation. Stabilization is explicit and audited: the
solver first attempts a plain Cholesky (lambda = 0) and only on failure
walks a fixed ridge schedule, recording the lambda that succeeded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import cho_solve

from .errors import DegenerateInputError, SingularDesignError, ValidationError

# Ridge schedule: multiples of trace(gram)/d tried in order after lambda=0.
DEFAULT_RIDGE_SCALES: tuple[float, ...] = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


class TargetColumn(NamedTuple):
    """One regression target: values aligned to feature rows plus a
    presence mask (True where the label exists)."""

    name: str
    values: np.ndarray
    present: np.ndarray


@dataclass(frozen=True)
class GramCache:
    """Sufficient statistics of the centered train design, shared across
    all targets of one (source, layer).

    ``factor`` is lower-triangular with factor @ factor.T = gram + lambda*I.
    Built only from rows flagged in ``train_mask``; target labels play no
    role here (see fit_targets for how missing labels are handled).
    """

    feature_mean: np.ndarray  # [d]
    gram: np.ndarray  # [d, d]
    n_train_full: int
    factor: np.ndarray  # [d, d] lower-triangular
    lambda_: float


@dataclass(frozen=True)
class LinearProbe:
    """A fitted linear probe: score(x) = weights @ (x - feature_mean) + intercept."""

    weights: np.ndarray  # [d]
    intercept: float
    feature_mean: np.ndarray  # [d]
    target: str
    source_key: str
    lambda_used: float


def ridge_schedule(gram: np.ndarray, scales: Sequence[float] = DEFAULT_RIDGE_SCALES) -> list[float]:
    """Absolute ridge values tried after the plain (lambda=0) attempt.

    Scales multiply trace(gram)/d so the schedule adapts to feature
    magnitude; a zero-trace Gram (all-constant features) falls back to the
    scales themselves so the fallback can still succeed.
    """
    d = gram.shape[0]
    base = float(np.trace(gram)) / d
    if base <= 0.0:
        base = 1.0
    return [float(s) * base for s in scales]


def _pivots_well_conditioned(factor: np.ndarray) -> bool:
    """LAPACK-style rank check on the Cholesky pivots (squared diagonal)."""
    pivots = np.diag(factor) ** 2
    d = pivots.shape[0]
    return bool(pivots.min() > d * np.finfo(np.float64).eps * pivots.max())


def build_gram(
    features: np.ndarray,
    train_mask: np.ndarray,
    ridge_scales: Sequence[float] = DEFAULT_RIDGE_SCALES,
    label: str = "design",
) -> GramCache:
    """Accumulate the centered Gram over train rows and factor it.

    Raises DegenerateInputError for fewer than 2 train rows and
    SingularDesignError when no lambda in the schedule makes the matrix
    positive definite. ``label`` names the (source, layer) in errors.
    """
    features = np.asarray(features, dtype=np.float64)
    train_mask = np.asarray(train_mask, dtype=bool)
    if features.ndim != 2:
        raise ValidationError(f"features must be 2-D, got shape {features.shape}")
    if train_mask.shape != (features.shape[0],):
        raise ValidationError("train_mask must be one flag per feature row")

    train_rows = features[train_mask]
    n_train = train_rows.shape[0]
    if n_train < 2:
        raise DegenerateInputError(f"{label}: {n_train} train row(s); need at least 2")

    mean = train_rows.mean(axis=0)
    centered = train_rows - mean
    gram = centered.T @ centered
    gram = (gram + gram.T) / 2.0  # kill accumulation asymmetry

    d = gram.shape[0]
    factor = None
    lambda_used = 0.0
    for lam in [0.0] + ridge_schedule(gram, ridge_scales):
        try:
            candidate = np.linalg.cholesky(gram + lam * np.eye(d))
        except np.linalg.LinAlgError:
            continue
        if lam == 0.0 and not _pivots_well_conditioned(candidate):
            # Rounding can let Cholesky "succeed" on a rank-deficient Gram;
            # treat that as a failure so stabilization stays explicit.
            continue
        factor = candidate
        lambda_used = lam
        break
    if factor is None:
        raise SingularDesignError(f"{label}: Gram not positive definite at any ridge level")

    return GramCache(
        feature_mean=mean,
        gram=gram,
        n_train_full=n_train,
        factor=factor,
        lambda_=lambda_used,
    )


def fit_targets(
    cache: GramCache,
    features: np.ndarray,
    targets: Sequence[TargetColumn],
    train_mask: np.ndarray,
    exact_masks: bool = False,
    ridge_scales: Sequence[float] = DEFAULT_RIDGE_SCALES,
    source_key: str = "design",
) -> list[LinearProbe | None]:
    """Fit one probe per target against a shared factorization.

    Fast path (default): cross-products sum only rows where the target is
    present, against the cache's Gram built over all train rows; one
    factorization serves every target. Exact path (``exact_masks``):
    rebuilds the Gram per target over exactly the usable rows.

    A target with fewer than 2 usable train rows yields None in its slot;
    other targets are unaffected.
    """
    features = np.asarray(features, dtype=np.float64)
    train_mask = np.asarray(train_mask, dtype=bool)
    probes: list[LinearProbe | None] = [None] * len(targets)

    if exact_masks:
        for i, target in enumerate(targets):
            usable = train_mask & np.asarray(target.present, dtype=bool)
            if int(usable.sum()) < 2:
                continue
            sub_cache = build_gram(features, usable, ridge_scales, label=f"{source_key}:{target.name}")
            y = np.asarray(target.values, dtype=np.float64)[usable]
            intercept = float(y.mean())
            rhs = (features[usable] - sub_cache.feature_mean).T @ (y - intercept)
            probes[i] = LinearProbe(
                weights=cho_solve((sub_cache.factor, True), rhs),
                intercept=intercept,
                feature_mean=sub_cache.feature_mean,
                target=target.name,
                source_key=source_key,
                lambda_used=sub_cache.lambda_,
            )
        return probes

    # Fast path: the centering and the cross-product GEMM are shared by all
    # targets with the same usable-row pattern (with complete labels, that is
    # every target at once).
    groups: dict[bytes, list[int]] = {}
    masks: list[np.ndarray] = []
    for i, target in enumerate(targets):
        usable = train_mask & np.asarray(target.present, dtype=bool)
        masks.append(usable)
        groups.setdefault(usable.tobytes(), []).append(i)

    for indices in groups.values():
        usable = masks[indices[0]]
        if int(usable.sum()) < 2:
            continue
        centered = features[usable] - cache.feature_mean
        stacked = np.column_stack(
            [np.asarray(targets[i].values, dtype=np.float64)[usable] for i in indices]
        )
        intercepts = stacked.mean(axis=0)
        rhs = centered.T @ (stacked - intercepts)
        weights = cho_solve((cache.factor, True), rhs)
        for j, i in enumerate(indices):
            probes[i] = LinearProbe(
                weights=weights[:, j],
                intercept=float(intercepts[j]),
                feature_mean=cache.feature_mean,
                target=targets[i].name,
                source_key=source_key,
                lambda_used=cache.lambda_,
            )
    return probes


def predict(probe: LinearProbe, features: np.ndarray) -> np.ndarray:
    """Apply the probe's affine map to feature rows."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != probe.weights.shape[0]:
        raise ValidationError(
            f"features shaped {features.shape} do not match probe dimension {probe.weights.shape[0]}"
        )
    return (features - probe.feature_mean) @ probe.weights + probe.intercept
