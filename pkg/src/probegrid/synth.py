"""Synthetic label tables, predictions, and layered embeddings with
controllable cross-task structure.

Generative model. Each image carries k latent factors z ~ N(0, I). A task t
with loading vector l_t and noise sigma_t has underlying score
g_t = l_t.z + sigma_t*eps; continuous labels are g_t, binary labels are
1{g_t > 0}. The embedding of source s at layer L has three column blocks:

* signal (channels - nuisance - 1 columns): a * (rotation of z) plus
  sqrt(1 - a^2) white noise, with a = relevance(L) * fidelity(s). The
  rotation is a seeded semi-orthogonal matrix per (source, layer), so the
  information content depends only on a and probe recoverability peaks
  where the layer's relevance peaks.
* one own-score column: c * g_s/||l_s|| plus sqrt(1 - c^2) noise, with
  c = own_signal(L) * fidelity(s). This is what keeps a source's
  same-task performance up at late layers even when relevance has decayed.
* nuisance columns: pure white noise.

fidelity(s) defaults to the correlation between the source's ideal score
and its noisy label, sqrt(||l_s||^2 / (||l_s||^2 + sigma_s^2)): sources
with noisier labels yield weaker embeddings across the board.

Because everything is jointly Gaussian, the best linear probe's R^2 (and,
for thresholded binary targets, its AUC) has a closed form; see
analytic_best_r2 / analytic_best_auc. Tests use these as quantitative
ceilings for grid output.

Randomness comes from a 64-bit counter-based generator (Philox) whose raw
output feeds Box-Muller, with one named key per stream, so identical
scenarios produce byte-identical files on every platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError
from .ingest import (
    write_container,
    write_labels_csv,
    write_predictions_csv,
    write_variable_meta,
)
from .stablehash import seeded_hash
from .types import LabelTable, TaskVariable, VariableKind, check_identifier

_SPATIAL_JITTER = 0.05


# ---------------------------------------------------------------------------
# Deterministic sampling streams


def _raw_bits(key: int, count: int) -> np.ndarray:
    return np.random.Philox(key=key).random_raw(count)


def uniforms(key: int, count: int) -> np.ndarray:
    """count draws in [0, 1) from the keyed Philox stream."""
    bits = _raw_bits(key, count)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normals(key: int, shape) -> np.ndarray:
    """Standard normals via Box-Muller over keyed Philox uniforms."""
    n = int(np.prod(shape)) if not np.isscalar(shape) else int(shape)
    pairs = (n + 1) // 2
    bits = _raw_bits(key, 2 * pairs)
    u1 = ((bits[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
    u2 = (bits[pairs:] >> np.uint64(11)).astype(np.float64) * 2.0**-53  # [0, 1)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    draws = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    return draws.reshape(shape) if not np.isscalar(shape) else draws


# ---------------------------------------------------------------------------
# Scenario spec


@dataclass(frozen=True)
class SynthTask:
    name: str
    kind: VariableKind
    loadings: tuple[float, ...]
    noise: float = 0.0
    missing_rate: float = 0.0
    prediction_noise: float = 0.25
    embedding_fidelity: float | None = None  # None = derived from noise

    def __post_init__(self):
        check_identifier(self.name, "task name")
        if not isinstance(self.kind, VariableKind):
            object.__setattr__(self, "kind", VariableKind(self.kind))
        object.__setattr__(self, "loadings", tuple(float(x) for x in self.loadings))
        if not all(math.isfinite(x) for x in self.loadings):
            raise ValidationError(f"task {self.name!r}: loadings must be finite")
        if self.noise < 0 or self.prediction_noise < 0:
            raise ValidationError(f"task {self.name!r}: noise levels must be >= 0")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ValidationError(f"task {self.name!r}: missing_rate must be in [0, 1)")
        if self.embedding_fidelity is not None and not 0.0 <= self.embedding_fidelity <= 1.0:
            raise ValidationError(f"task {self.name!r}: embedding_fidelity must be in [0, 1]")

    @property
    def signal_power(self) -> float:
        return float(sum(x * x for x in self.loadings))

    @property
    def fidelity(self) -> float:
        if self.embedding_fidelity is not None:
            return self.embedding_fidelity
        power = self.signal_power
        if power == 0.0:
            return 0.0
        return math.sqrt(power / (power + self.noise**2))


@dataclass(frozen=True)
class SynthLayer:
    layer_id: int
    channels: int
    relevance: float
    nuisance: int = 0
    own_signal: float = 0.0
    spatial: tuple[int, int] | None = None

    def __post_init__(self):
        if self.layer_id < 0:
            raise ValidationError("layer_id must be >= 0")
        if not 0.0 <= self.relevance <= 1.0 or not 0.0 <= self.own_signal <= 1.0:
            raise ValidationError(f"layer {self.layer_id}: relevance/own_signal must be in [0, 1]")
        if self.nuisance < 0:
            raise ValidationError(f"layer {self.layer_id}: nuisance must be >= 0")
        if self.spatial is not None:
            spatial = (int(self.spatial[0]), int(self.spatial[1]))
            if spatial[0] < 1 or spatial[1] < 1:
                raise ValidationError(f"layer {self.layer_id}: spatial dims must be >= 1")
            object.__setattr__(self, "spatial", spatial)

    @property
    def signal_dims(self) -> int:
        return self.channels - self.nuisance - 1  # one column is the own score


@dataclass(frozen=True)
class SynthScenario:
    name: str
    tasks: tuple[SynthTask, ...]
    layers: tuple[SynthLayer, ...]
    n_patients: int
    images_per_patient: int = 1
    seed: int = 1
    source_names: tuple[str, ...] | None = None  # None = every task is a source

    def __post_init__(self):
        check_identifier(self.name, "scenario name")
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.n_patients < 1 or self.images_per_patient < 1:
            raise ValidationError("n_patients and images_per_patient must be >= 1")
        names = [t.name for t in self.tasks]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate task name in scenario")
        if not self.tasks:
            raise ValidationError("scenario needs at least one task")
        dims = {len(t.loadings) for t in self.tasks}
        if len(dims) != 1:
            raise ValidationError(f"all loading vectors must share one latent dimension; got lengths {sorted(dims)}")
        k = dims.pop()
        if k < 1:
            raise ValidationError("latent dimension must be >= 1")
        if not self.layers:
            raise ValidationError("scenario needs at least one layer")
        previous = -1
        for layer in self.layers:
            if layer.layer_id <= previous:
                raise ValidationError("layer_ids must be strictly increasing")
            previous = layer.layer_id
            if layer.signal_dims < k:
                raise ValidationError(
                    f"layer {layer.layer_id}: channels={layer.channels} too small for "
                    f"{k} latent dims + 1 own-score column + {layer.nuisance} nuisance"
                )
        if self.source_names is not None:
            object.__setattr__(self, "source_names", tuple(self.source_names))
            unknown = [s for s in self.source_names if s not in names]
            if unknown:
                raise ValidationError(f"source_names not among tasks: {unknown}")

    @property
    def latent_dim(self) -> int:
        return len(self.tasks[0].loadings)

    @property
    def sources(self) -> tuple[str, ...]:
        if self.source_names is not None:
            return self.source_names
        return tuple(t.name for t in self.tasks)

    @property
    def n_images(self) -> int:
        return self.n_patients * self.images_per_patient

    def task(self, name: str) -> SynthTask:
        for t in self.tasks:
            if t.name == name:
                return t
        raise KeyError(f"no task named {name!r}")

    def layer(self, layer_id: int) -> SynthLayer:
        for layer in self.layers:
            if layer.layer_id == layer_id:
                return layer
        raise KeyError(f"no layer with id {layer_id}")


def scenario_to_dict(scenario: SynthScenario) -> dict:
    return {
        "name": scenario.name,
        "seed": scenario.seed,
        "n_patients": scenario.n_patients,
        "images_per_patient": scenario.images_per_patient,
        "source_names": list(scenario.source_names) if scenario.source_names else None,
        "tasks": [
            {
                "name": t.name,
                "kind": t.kind.value,
                "loadings": list(t.loadings),
                "noise": t.noise,
                "missing_rate": t.missing_rate,
                "prediction_noise": t.prediction_noise,
                "embedding_fidelity": t.embedding_fidelity,
            }
            for t in scenario.tasks
        ],
        "layers": [
            {
                "layer_id": l.layer_id,
                "channels": l.channels,
                "relevance": l.relevance,
                "nuisance": l.nuisance,
                "own_signal": l.own_signal,
                "spatial": list(l.spatial) if l.spatial else None,
            }
            for l in scenario.layers
        ],
    }


def scenario_from_dict(data: dict) -> SynthScenario:
    try:
        tasks = tuple(
            SynthTask(
                name=t["name"],
                kind=VariableKind(t["kind"]),
                loadings=tuple(t["loadings"]),
                noise=float(t.get("noise", 0.0)),
                missing_rate=float(t.get("missing_rate", 0.0)),
                prediction_noise=float(t.get("prediction_noise", 0.25)),
                embedding_fidelity=t.get("embedding_fidelity"),
            )
            for t in data["tasks"]
        )
        layers = tuple(
            SynthLayer(
                layer_id=int(l["layer_id"]),
                channels=int(l["channels"]),
                relevance=float(l["relevance"]),
                nuisance=int(l.get("nuisance", 0)),
                own_signal=float(l.get("own_signal", 0.0)),
                spatial=tuple(l["spatial"]) if l.get("spatial") else None,
            )
            for l in data["layers"]
        )
        return SynthScenario(
            name=data["name"],
            tasks=tasks,
            layers=layers,
            n_patients=int(data["n_patients"]),
            images_per_patient=int(data.get("images_per_patient", 1)),
            seed=int(data.get("seed", 1)),
            source_names=tuple(data["source_names"]) if data.get("source_names") else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad scenario spec: {exc}") from exc


def load_scenario(path: Path | str) -> SynthScenario:
    return scenario_from_dict(json.loads(Path(path).read_text("utf-8")))


def write_scenario(scenario: SynthScenario, path: Path | str) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n", "utf-8")


# ---------------------------------------------------------------------------
# Generation


@dataclass(frozen=True)
class SynthOutput:
    out_dir: Path
    manifest_path: Path
    labels_path: Path
    meta_path: Path
    predictions_path: Path
    scenario: SynthScenario


def _key(scenario: SynthScenario, *parts: str) -> int:
    return seeded_hash(scenario.seed, scenario.name, *parts)


def _latents(scenario: SynthScenario) -> np.ndarray:
    return normals(_key(scenario, "latents"), (scenario.n_images, scenario.latent_dim))


def _underlying_scores(scenario: SynthScenario, z: np.ndarray) -> dict[str, np.ndarray]:
    scores = {}
    for task in scenario.tasks:
        eps = normals(_key(scenario, "label_noise", task.name), scenario.n_images)
        scores[task.name] = z @ np.asarray(task.loadings) + task.noise * eps
    return scores


def build_label_table(scenario: SynthScenario) -> LabelTable:
    """The scenario's label table, identical to what generate() writes."""
    z = _latents(scenario)
    scores = _underlying_scores(scenario, z)
    n = scenario.n_images
    image_ids = tuple(f"img{i:06d}" for i in range(n))
    patient_ids = tuple(f"pat{i // scenario.images_per_patient:06d}" for i in range(n))
    values = np.empty((n, len(scenario.tasks)))
    present = np.ones((n, len(scenario.tasks)), dtype=bool)
    for j, task in enumerate(scenario.tasks):
        g = scores[task.name]
        values[:, j] = (g > 0.0).astype(np.float64) if task.kind is VariableKind.BINARY else g
        if task.missing_rate > 0.0:
            miss = uniforms(_key(scenario, "missing", task.name), n) < task.missing_rate
            present[:, j] = ~miss
    return LabelTable(
        image_ids=image_ids,
        patient_ids=patient_ids,
        variables=tuple(TaskVariable(t.name, t.kind) for t in scenario.tasks),
        values=values,
        present=present,
    )


def _rotation(scenario: SynthScenario, source: str, layer: SynthLayer) -> np.ndarray:
    """Seeded semi-orthogonal [signal_dims, k] matrix, sign-normalized."""
    k = scenario.latent_dim
    gaussian = normals(_key(scenario, "rotation", source, str(layer.layer_id)), (layer.signal_dims, k))
    q, r = np.linalg.qr(gaussian)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def _embedding_matrix(scenario: SynthScenario, source: str, layer: SynthLayer, z: np.ndarray) -> np.ndarray:
    task = scenario.task(source)
    n = scenario.n_images
    fidelity = task.fidelity
    a = layer.relevance * fidelity
    c = layer.own_signal * fidelity

    rotation = _rotation(scenario, source, layer)
    signal_noise = normals(_key(scenario, "signal_noise", source, str(layer.layer_id)), (n, layer.signal_dims))
    signal = a * (z @ rotation.T) + math.sqrt(max(0.0, 1.0 - a * a)) * signal_noise

    # The own column tracks the source's ideal (noise-free) score direction;
    # label noise is already priced into fidelity.
    power = task.signal_power
    ideal = (z @ np.asarray(task.loadings)) / math.sqrt(power) if power > 0.0 else np.zeros(n)
    own_noise = normals(_key(scenario, "own_noise", source, str(layer.layer_id)), n)
    own = c * ideal + math.sqrt(max(0.0, 1.0 - c * c)) * own_noise

    columns = [signal, own.reshape(-1, 1)]
    if layer.nuisance > 0:
        columns.append(normals(_key(scenario, "nuisance", source, str(layer.layer_id)), (n, layer.nuisance)))
    return np.concatenate(columns, axis=1)


def _spatialize(scenario: SynthScenario, source: str, layer: SynthLayer, matrix: np.ndarray) -> np.ndarray:
    """Expand [n, c] to [n, h, w, c] whose spatial mean equals the matrix."""
    h, w = layer.spatial
    n, c = matrix.shape
    jitter = normals(_key(scenario, "spatial", source, str(layer.layer_id)), (n, h, w, c))
    jitter = jitter - jitter.mean(axis=(1, 2), keepdims=True)
    return matrix[:, None, None, :] + _SPATIAL_JITTER * jitter


def generate(scenario: SynthScenario, out_dir: Path | str) -> SynthOutput:
    """Write the complete container: manifest + matrices, labels CSV,
    variable meta JSON, predictions CSV. Same scenario, same bytes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    z = _latents(scenario)
    table = build_label_table(scenario)

    labels_path = out_dir / "labels.csv"
    write_labels_csv(table, labels_path)
    meta_path = out_dir / "variables.json"
    write_variable_meta({t.name: t.kind for t in scenario.tasks}, meta_path)

    # The source model scores every image whether or not its label was
    # recorded, so predictions derive from the underlying scores.
    scores = _underlying_scores(scenario, z)
    predictions = {}
    for source in scenario.sources:
        task = scenario.task(source)
        g = scores[source]
        label_values = (g > 0.0).astype(np.float64) if task.kind is VariableKind.BINARY else g
        noise = normals(_key(scenario, "prediction_noise", source), scenario.n_images)
        values = label_values + task.prediction_noise * noise
        predictions[source] = (values, np.ones(scenario.n_images, dtype=bool))
    predictions_path = out_dir / "predictions.csv"
    write_predictions_csv(list(table.image_ids), predictions, predictions_path)

    container: dict[str, list[tuple[int, str, np.ndarray]]] = {}
    for source in scenario.sources:
        entries = []
        for layer in scenario.layers:
            matrix = _embedding_matrix(scenario, source, layer, z)
            if layer.spatial is not None:
                matrix = _spatialize(scenario, source, layer, matrix)
            entries.append((layer.layer_id, f"layer_{layer.layer_id}", matrix))
        container[source] = entries
    manifest_path = write_container(
        out_dir,
        dataset_name=scenario.name,
        image_ids=list(table.image_ids),
        sources=container,
        notes=f"synthetic scenario {scenario.name!r}, seed {scenario.seed}; "
        f"predictions are labels plus calibrated Gaussian noise",
    )
    return SynthOutput(
        out_dir=out_dir,
        manifest_path=manifest_path,
        labels_path=labels_path,
        meta_path=meta_path,
        predictions_path=predictions_path,
        scenario=scenario,
    )


# ---------------------------------------------------------------------------
# Analytic ceilings for the best linear probe


def _explained_power(scenario: SynthScenario, source: str, target: str, layer_id: int) -> float:
    """Variance of the target's signal recoverable by the best linear map
    from the (source, layer) embedding."""
    src = scenario.task(source)
    tgt = scenario.task(target)
    layer = scenario.layer(layer_id)
    k = scenario.latent_dim
    l_t = np.asarray(tgt.loadings)
    l_s = np.asarray(src.loadings)

    a = layer.relevance * src.fidelity
    c = layer.own_signal * src.fidelity
    norm_s = math.sqrt(src.signal_power)
    e_s = l_s / norm_s if norm_s > 0.0 else np.zeros(k)

    # Informative coordinates: k rotated-signal dims (unit covariance by
    # construction) plus the own column (unit variance).
    cov = np.eye(k + 1)
    cov[:k, k] = a * c * e_s
    cov[k, :k] = a * c * e_s
    cross = np.concatenate([a * l_t, [c * float(l_t @ e_s)]])
    solution, *_ = np.linalg.lstsq(cov, cross, rcond=None)
    return float(cross @ solution)


def analytic_best_r2(scenario: SynthScenario, source: str, target: str, layer_id: int) -> float:
    """Population R^2 of the best linear probe for a continuous target."""
    tgt = scenario.task(target)
    total = tgt.signal_power + tgt.noise**2
    if total == 0.0:
        raise ValidationError(f"target {target!r} has zero variance")
    return _explained_power(scenario, source, target, layer_id) / total


def gaussian_threshold_auc(rho: float) -> float:
    """AUC of a Gaussian score with correlation rho to the underlying
    variable whose sign defines the binary label.

    With G+ and -G- half-normal, AUC = E[Phi(rho (|A|+|B|) / sqrt(2(1-rho^2)))].
    Evaluated by Gauss-Legendre quadrature over the two half-normals.
    """
    if rho <= 0.0:
        return 0.5
    if rho >= 1.0 - 1e-12:
        return 1.0
    nodes, weights = np.polynomial.legendre.leggauss(96)
    upper = 8.0
    x = 0.5 * upper * (nodes + 1.0)
    w = 0.5 * upper * weights
    half_normal = np.sqrt(2.0 / math.pi) * np.exp(-0.5 * x * x)
    scale = rho / math.sqrt(2.0 * (1.0 - rho * rho))
    inner = ndtr(scale * (x[:, None] + x[None, :]))
    return float(w @ (half_normal[:, None] * half_normal[None, :] * inner) @ w)


def analytic_best_auc(scenario: SynthScenario, source: str, target: str, layer_id: int) -> float:
    """Population AUC of the best linear probe for a binary target."""
    tgt = scenario.task(target)
    total = tgt.signal_power + tgt.noise**2
    if total == 0.0:
        raise ValidationError(f"target {target!r} has zero variance")
    rho = math.sqrt(min(1.0, _explained_power(scenario, source, target, layer_id) / total))
    return gaussian_threshold_auc(rho)


# ---------------------------------------------------------------------------
# Built-in scenarios (used by the CLI demo, the test suite, and the docs)


def demo_scenario(seed: int = 7, n_patients: int = 1200, images_per_patient: int = 2) -> SynthScenario:
    """4 tasks x 3 layers; one spatial layer; mid-depth relevance peak with
    an own-score column that keeps same-task curves up at the final layer."""
    return SynthScenario(
        name="demo_small",
        seed=seed,
        n_patients=n_patients,
        images_per_patient=images_per_patient,
        tasks=(
            SynthTask("eye_position", VariableKind.BINARY, (1.2, 0.0, 0.0, 0.0), noise=0.3,
                      prediction_noise=0.4),
            SynthTask("age", VariableKind.CONTINUOUS, (0.0, 1.0, 0.25, 0.0), noise=0.4,
                      missing_rate=0.03, prediction_noise=0.3),
            SynthTask("smoker", VariableKind.BINARY, (0.0, 0.3, 1.0, 0.0), noise=0.8,
                      prediction_noise=0.5),
            SynthTask("systolic_bp", VariableKind.CONTINUOUS, (0.0, 0.5, 0.2, 0.8), noise=0.7,
                      missing_rate=0.02, prediction_noise=0.5),
        ),
        layers=(
            SynthLayer(0, channels=12, relevance=0.35, nuisance=2, spatial=(2, 2)),
            SynthLayer(1, channels=16, relevance=1.0, nuisance=3),
            SynthLayer(2, channels=14, relevance=0.45, nuisance=2, own_signal=1.0),
        ),
    )


def height_like_scenario(seed: int = 11, n_patients: int = 32000) -> SynthScenario:
    """A hard continuous target (self R^2 ceiling 0.3) sharing a latent with
    an easy, correlated source whose embeddings predict it better."""
    hard_noise = math.sqrt(7.0 / 3.0)  # ||l||=1 -> ceiling 1/(1+noise^2) = 0.3
    return SynthScenario(
        name="height_like",
        seed=seed,
        n_patients=n_patients,
        tasks=(
            SynthTask("height_like", VariableKind.CONTINUOUS, (1.0, 0.0), noise=hard_noise,
                      prediction_noise=1.0),
            SynthTask("testosterone_like", VariableKind.CONTINUOUS, (0.5, math.sqrt(0.75)), noise=0.1,
                      prediction_noise=0.2),
            SynthTask("sex_like", VariableKind.BINARY, (0.55, 0.75), noise=0.2,
                      prediction_noise=0.3),
        ),
        layers=(
            SynthLayer(0, channels=8, relevance=0.3, nuisance=2),
            SynthLayer(1, channels=10, relevance=1.0, nuisance=2),
            SynthLayer(2, channels=8, relevance=0.6, nuisance=2),
        ),
    )


def midpeak_scenario(seed: int = 13, n_patients: int = 20000) -> SynthScenario:
    """Six near-orthogonal tasks whose cross-task recoverability peaks at
    the middle layer while own-score columns hold same-task curves up."""
    tasks = []
    kinds = [VariableKind.BINARY, VariableKind.CONTINUOUS] * 3
    noises = [0.45, 0.55, 0.5, 0.65, 0.6, 0.4]
    for i, (kind, noise) in enumerate(zip(kinds, noises)):
        loadings = [0.0] * 6
        loadings[i] = 1.0
        loadings[(i + 3) % 6] = 0.1  # slight cross-talk, far from collinear
        tasks.append(SynthTask(f"task_{i}", kind, tuple(loadings), noise=noise, prediction_noise=0.4))
    return SynthScenario(
        name="midpeak",
        seed=seed,
        n_patients=n_patients,
        tasks=tuple(tasks),
        layers=(
            SynthLayer(0, channels=10, relevance=0.25, nuisance=2),
            SynthLayer(1, channels=12, relevance=1.0, nuisance=2),
            SynthLayer(2, channels=10, relevance=0.45, nuisance=2, own_signal=1.0),
        ),
    )


def plateau_scenario(seed: int = 17, n_patients: int = 4000) -> SynthScenario:
    """Noiseless tasks with full relevance from the middle layer onward:
    same-task recovery is exact at both the middle and the final layer."""
    return SynthScenario(
        name="plateau",
        seed=seed,
        n_patients=n_patients,
        tasks=(
            SynthTask("pure_a", VariableKind.CONTINUOUS, (1.0, 0.0), noise=0.0, prediction_noise=0.1),
            SynthTask("pure_b", VariableKind.BINARY, (0.0, 1.0), noise=0.0, prediction_noise=0.1),
        ),
        layers=(
            SynthLayer(0, channels=6, relevance=0.3, nuisance=2),
            SynthLayer(1, channels=6, relevance=1.0, nuisance=2),
            SynthLayer(2, channels=6, relevance=1.0, nuisance=2),
        ),
    )


BUILTIN_SCENARIOS = {
    "demo": demo_scenario,
    "height_like": height_like_scenario,
    "midpeak": midpeak_scenario,
    "plateau": plateau_scenario,
}
