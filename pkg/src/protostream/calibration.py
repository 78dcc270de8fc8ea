"""Support-set calibration of every decision threshold.

The labeled support set is the only supervision the stream ever sees, so
all operating points are read off proxy tasks built from it:

* routing margins separate confident base assignments from ambiguous ones,
* birth statistics separate in-distribution peaks from background level,
* a replayed pseudo-novel episode calibrates the attach-versus-create
  boundary for clusters that are born online.

Each proxy task yields a positive and a negative response set; a shared
balanced-accuracy threshold optimizer picks the operating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch, EmptyInput, TooFewClasses, ZeroVector
from .geometry import (
    SpaceConfig,
    ZERO_NORM_TOL,
    log_uniform_density,
    vmf_concentration,
)

UNIT_NORM_TOL = 1e-6


def _as_unit_rows(embeddings, what: str) -> np.ndarray:
    arr = np.asarray(embeddings, dtype=np.float64)
    if arr.ndim != 2:
        raise DimMismatch(f"{what} must be a 2-D array, got ndim={arr.ndim}")
    norms = np.linalg.norm(arr, axis=1)
    if arr.shape[0] and np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
        worst = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(
            f"{what} row {worst} has norm {norms[worst]:.8f}; expected unit vectors"
        )
    return arr


@dataclass(frozen=True)
class LabeledSupportSet:
    """Standardized support embeddings with dense integer class labels."""

    embeddings: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        emb = _as_unit_rows(self.embeddings, "support embeddings")
        labels = np.asarray(self.labels, dtype=np.int64)
        if emb.shape[0] == 0:
            raise EmptyInput("support set is empty")
        if labels.ndim != 1 or labels.shape[0] != emb.shape[0]:
            raise DimMismatch(
                f"{labels.shape[0] if labels.ndim == 1 else labels.shape} labels for "
                f"{emb.shape[0]} embeddings"
            )
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise ValueError("labels must lie in [0, num_classes)")
        counts = np.bincount(labels, minlength=self.num_classes)
        if np.any(counts == 0):
            missing = int(np.flatnonzero(counts == 0)[0])
            raise ValueError(f"class {missing} has no support samples")
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def d(self) -> int:
        return self.embeddings.shape[1]

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


@dataclass(frozen=True)
class BaseReferenceBank:
    """One unit reference direction per base class plus size statistics."""

    references: np.ndarray
    class_sizes: np.ndarray
    median_class_size: float
    source_flags: tuple

    def __post_init__(self) -> None:
        refs = _as_unit_rows(self.references, "reference bank")
        sizes = np.asarray(self.class_sizes, dtype=np.int64)
        if refs.shape[0] != sizes.shape[0] or refs.shape[0] != len(self.source_flags):
            raise DimMismatch("references, class_sizes and source_flags disagree")
        if np.any(sizes < 1):
            raise ValueError("class sizes must be >= 1")
        if not self.median_class_size > 0:
            raise ValueError("median_class_size must be positive")
        object.__setattr__(self, "references", refs)
        object.__setattr__(self, "class_sizes", sizes)
        object.__setattr__(self, "source_flags", tuple(self.source_flags))

    @property
    def num_classes(self) -> int:
        return self.references.shape[0]

    @property
    def d(self) -> int:
        return self.references.shape[1]


@dataclass(frozen=True)
class ThresholdSet:
    """All calibrated operating points consumed by the streaming engine."""

    tau_hi: float
    tau_lo: float
    tau_birth_raw: float
    sigma_pos: float
    tau_birth_sup: float
    tau_create: float

    def __post_init__(self) -> None:
        vals = [
            self.tau_hi,
            self.tau_lo,
            self.tau_birth_raw,
            self.sigma_pos,
            self.tau_birth_sup,
            self.tau_create,
        ]
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("thresholds must be finite")
        if self.tau_lo > self.tau_hi:
            raise ValueError("tau_lo must not exceed tau_hi")
        if self.sigma_pos < 0:
            raise ValueError("sigma_pos must be non-negative")
        if self.tau_birth_sup > self.tau_birth_raw:
            raise ValueError("tau_birth_sup must not exceed tau_birth_raw")


@dataclass(frozen=True)
class CalibrationReport:
    """Raw proxy-task responses and the quality achieved on each of them."""

    margin_positive: list = field(default_factory=list)
    margin_negative: list = field(default_factory=list)
    base_affinity_positive: list = field(default_factory=list)
    birth_positive: list = field(default_factory=list)
    birth_negative: list = field(default_factory=list)
    create_positive: list = field(default_factory=list)
    create_negative: list = field(default_factory=list)
    routing_balanced_accuracy: float = 0.0
    birth_balanced_accuracy: float = 0.0
    create_balanced_accuracy: float = 0.0
    routing_candidate_count: int = 0
    birth_candidate_count: int = 0
    create_candidate_count: int = 0
    replay_passes: int = 0
    replay_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("routing", "birth", "create"):
            value = getattr(self, f"{name}_balanced_accuracy")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} balanced accuracy {value} outside [0, 1]")


def build_class_prototypes(support: LabeledSupportSet) -> np.ndarray:
    """Normalized per-class resultant directions of the support embeddings."""
    sums = np.zeros((support.num_classes, support.d), dtype=np.float64)
    np.add.at(sums, support.labels, support.embeddings)
    norms = np.linalg.norm(sums, axis=1)
    degenerate = np.flatnonzero(norms < ZERO_NORM_TOL)
    if degenerate.size:
        raise ZeroVector(
            f"class {int(degenerate[0])} support sums to a near-zero resultant"
        )
    return sums / norms[:, None]


def _bank_quality(support: LabeledSupportSet, refs: np.ndarray) -> tuple:
    """(top-1 accuracy, mean top1-top2 margin) of a candidate bank."""
    cos = support.embeddings @ refs.T
    predicted = np.argmax(cos, axis=1)
    accuracy = float(np.mean(predicted == support.labels))
    if refs.shape[0] < 2:
        return accuracy, 0.0
    top2 = np.partition(cos, -2, axis=1)[:, -2:]
    margin = float(np.mean(top2[:, 1] - top2[:, 0]))
    return accuracy, margin


def select_base_references(
    support: LabeledSupportSet,
    prototypes: np.ndarray,
    classifier_dirs: np.ndarray | None = None,
) -> BaseReferenceBank:
    """Pick the reference bank that best discriminates the support set.

    The choice is made at bank level: either all per-class prototype
    directions or all (externally whitened and normalized) classifier
    directions. Support top-1 accuracy decides; an exact tie falls back
    to the larger mean top1-top2 margin, and a tie on both keeps the
    prototype bank.
    """
    protos = _as_unit_rows(prototypes, "prototype bank")
    if protos.shape != (support.num_classes, support.d):
        raise DimMismatch(
            f"prototypes shaped {protos.shape}, expected "
            f"({support.num_classes}, {support.d})"
        )
    sizes = support.class_sizes()
    median_size = float(np.median(sizes))

    chosen, flag = protos, "prototype"
    if classifier_dirs is not None:
        cls = _as_unit_rows(classifier_dirs, "classifier bank")
        if cls.shape != protos.shape:
            raise DimMismatch(
                f"classifier bank shaped {cls.shape}, expected {protos.shape}"
            )
        acc_p, margin_p = _bank_quality(support, protos)
        acc_c, margin_c = _bank_quality(support, cls)
        if acc_c > acc_p or (acc_c == acc_p and margin_c > margin_p):
            chosen, flag = cls, "classifier"

    return BaseReferenceBank(
        references=chosen,
        class_sizes=sizes,
        median_class_size=median_size,
        source_flags=tuple(flag for _ in range(support.num_classes)),
    )


def threshold_candidates(positives, negatives) -> np.ndarray:
    """Candidate grid for the balanced-accuracy scan.

    One value below every response, the midpoints between consecutive
    distinct pooled responses, and one value above every response.
    """
    pos = np.asarray(positives, dtype=np.float64)
    neg = np.asarray(negatives, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise EmptyInput("both response sets must be non-empty")
    values = np.unique(np.concatenate([pos, neg]))
    mids = (values[:-1] + values[1:]) / 2.0
    return np.concatenate([[values[0] - 1.0], mids, [values[-1] + 1.0]])


def optimize_balanced_threshold(positives, negatives) -> tuple:
    """Smallest threshold maximizing balanced accuracy.

    Balanced accuracy of threshold t counts positives at or above t and
    negatives strictly below t: B(t) = (TPR(t) + TNR(t)) / 2. The scan is
    exact because B only changes at pooled response values.
    """
    pos = np.sort(np.asarray(positives, dtype=np.float64))
    neg = np.sort(np.asarray(negatives, dtype=np.float64))
    candidates = threshold_candidates(pos, neg)
    tpr = (pos.size - np.searchsorted(pos, candidates, side="left")) / pos.size
    tnr = np.searchsorted(neg, candidates, side="left") / neg.size
    balanced = 0.5 * (tpr + tnr)
    best = int(np.argmax(balanced))  # first max = smallest candidate
    return float(candidates[best]), float(balanced[best])


@dataclass(frozen=True)
class RoutingCalibration:
    tau_hi: float
    tau_lo: float
    margin_positive: np.ndarray
    margin_negative: np.ndarray
    base_affinity: np.ndarray
    balanced_accuracy: float
    candidate_count: int


def calibrate_routing(
    support: LabeledSupportSet, bank: BaseReferenceBank
) -> RoutingCalibration:
    """Calibrate the confident-base and base-rejection gates.

    Positive margins are the top1-top2 cosine separations over the full
    bank; negatives repeat the measurement with each sample's true class
    masked out, simulating the margins a stranger to that class would see.
    The rejection gate sits one sample standard deviation below the weakest
    true-class affinity, clipped from above by the confident gate.
    """
    if bank.num_classes < 3:
        raise TooFewClasses(
            f"routing calibration needs >= 3 base classes, got {bank.num_classes}"
        )
    if bank.d != support.d:
        raise DimMismatch("bank and support dimensions disagree")
    cos = support.embeddings @ bank.references.T
    top2 = np.partition(cos, -2, axis=1)[:, -2:]
    margin_pos = top2[:, 1] - top2[:, 0]

    masked = cos.copy()
    masked[np.arange(support.size), support.labels] = -np.inf
    top2m = np.partition(masked, -2, axis=1)[:, -2:]
    margin_neg = top2m[:, 1] - top2m[:, 0]

    tau_hi, balanced = optimize_balanced_threshold(margin_pos, margin_neg)
    affinity = cos.max(axis=1)
    spread = float(np.std(affinity, ddof=1))
    tau_lo = min(tau_hi, float(affinity.min()) - spread)
    return RoutingCalibration(
        tau_hi=tau_hi,
        tau_lo=tau_lo,
        margin_positive=margin_pos,
        margin_negative=margin_neg,
        base_affinity=affinity,
        balanced_accuracy=balanced,
        candidate_count=threshold_candidates(margin_pos, margin_neg).size,
    )


@dataclass(frozen=True)
class BirthCalibration:
    tau_birth_raw: float
    sigma_pos: float
    tau_birth_sup: float
    birth_positive: np.ndarray
    birth_negative: np.ndarray
    balanced_accuracy: float
    candidate_count: int


def calibrate_birth(
    support: LabeledSupportSet, bank: BaseReferenceBank, cfg: SpaceConfig
) -> BirthCalibration:
    """Calibrate the evidence level above which a sample is 'recognised'.

    The birth statistic of a sample is its best temperature-scaled cosine
    against the bank minus the log uniform density on the sphere. Negatives
    mask the true class, emulating samples whose own class is absent. The
    supervised threshold is then lowered by the spread of true-class
    cosines so borderline members of known classes stay above it.
    """
    if bank.num_classes < 2:
        raise TooFewClasses(
            f"birth calibration needs >= 2 base classes, got {bank.num_classes}"
        )
    if bank.d != support.d:
        raise DimMismatch("bank and support dimensions disagree")
    log_p0 = log_uniform_density(cfg.d)
    cos = support.embeddings @ bank.references.T
    lam_pos = cos.max(axis=1) / cfg.temperature_T - log_p0

    masked = cos.copy()
    masked[np.arange(support.size), support.labels] = -np.inf
    lam_neg = masked.max(axis=1) / cfg.temperature_T - log_p0

    tau_raw, balanced = optimize_balanced_threshold(lam_pos, lam_neg)
    true_cos = cos[np.arange(support.size), support.labels]
    sigma_pos = float(np.std(true_cos, ddof=1))
    tau_sup = tau_raw - cfg.spread_c * sigma_pos / cfg.temperature_T
    return BirthCalibration(
        tau_birth_raw=tau_raw,
        sigma_pos=sigma_pos,
        tau_birth_sup=tau_sup,
        birth_positive=lam_pos,
        birth_negative=lam_neg,
        balanced_accuracy=balanced,
        candidate_count=threshold_candidates(lam_pos, lam_neg).size,
    )


@dataclass(frozen=True)
class CreateCalibration:
    tau_create: float
    create_positive: np.ndarray
    create_negative: np.ndarray
    balanced_accuracy: float
    candidate_count: int
    passes: int
    seed: int


def _canonical_order(support: LabeledSupportSet) -> list:
    """Input-order-independent sample ordering: by label, then by value."""
    emb = support.embeddings
    labels = support.labels
    return sorted(range(support.size), key=lambda i: (int(labels[i]), emb[i].tobytes()))


def calibrate_create(
    support: LabeledSupportSet,
    cfg: SpaceConfig,
    passes: int = 3,
    seed: int = 0,
) -> CreateCalibration:
    """Calibrate attach-versus-create by replaying support as pseudo-novel.

    Each pass shuffles the whole support set and streams it against a
    fresh, empty episodic memory holding one prototype per already-seen
    class. Before a sample is absorbed into its true class's episodic
    prototype, its best attach score against the current memory is
    recorded: first encounters of a class are negatives (they should have
    triggered creation), later encounters are positives (they should
    attach). The very first sample of a pass faces an empty memory and
    records nothing.

    The shuffle consumes `seed` after sorting samples into a canonical
    order, so the result depends only on (seed, passes), not on the order
    in which the support set was assembled.
    """
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    log_p0 = log_uniform_density(cfg.d)
    if support.d != cfg.d:
        raise DimMismatch("support and config dimensions disagree")
    base_order = _canonical_order(support)
    rng = np.random.default_rng(seed)

    positives: list = []
    negatives: list = []
    for _ in range(passes):
        perm = rng.permutation(support.size)
        order = [base_order[j] for j in perm]
        counts: dict = {}
        resultants: dict = {}
        for i in order:
            u = support.embeddings[i]
            label = int(support.labels[i])
            if counts:
                best = -np.inf
                for cls, n in counts.items():
                    resultant = resultants[cls]
                    r_norm = float(np.linalg.norm(resultant))
                    kappa = vmf_concentration(r_norm, n, cfg.d)
                    if r_norm < ZERO_NORM_TOL:
                        aligned = 0.0
                    else:
                        aligned = kappa * float(resultant @ u) / r_norm
                    score = np.log(n) + aligned - log_p0
                    if score > best:
                        best = score
                if label in counts:
                    positives.append(float(best))
                else:
                    negatives.append(float(best))
            if label in counts:
                counts[label] += 1
                resultants[label] = resultants[label] + u
            else:
                counts[label] = 1
                resultants[label] = u.copy()

    pos = np.asarray(positives, dtype=np.float64)
    neg = np.asarray(negatives, dtype=np.float64)
    if pos.size and neg.size:
        tau, balanced = optimize_balanced_threshold(pos, neg)
        n_candidates = threshold_candidates(pos, neg).size
    elif neg.size:
        tau, balanced, n_candidates = float(neg.max()) + 1.0, 1.0, 0
    elif pos.size:
        tau, balanced, n_candidates = float(pos.min()) - 1.0, 1.0, 0
    else:
        tau, balanced, n_candidates = 0.0, 1.0, 0
    return CreateCalibration(
        tau_create=tau,
        create_positive=pos,
        create_negative=neg,
        balanced_accuracy=balanced,
        candidate_count=n_candidates,
        passes=passes,
        seed=seed,
    )


def calibrate_all(
    support: LabeledSupportSet,
    bank: BaseReferenceBank,
    cfg: SpaceConfig,
    passes: int = 3,
    seed: int = 0,
) -> tuple:
    """Run the three calibrations and assemble the engine-facing outputs."""
    routing = calibrate_routing(support, bank)
    birth = calibrate_birth(support, bank, cfg)
    create = calibrate_create(support, cfg, passes=passes, seed=seed)
    thresholds = ThresholdSet(
        tau_hi=routing.tau_hi,
        tau_lo=routing.tau_lo,
        tau_birth_raw=birth.tau_birth_raw,
        sigma_pos=birth.sigma_pos,
        tau_birth_sup=birth.tau_birth_sup,
        tau_create=create.tau_create,
    )
    report = CalibrationReport(
        margin_positive=[float(x) for x in routing.margin_positive],
        margin_negative=[float(x) for x in routing.margin_negative],
        base_affinity_positive=[float(x) for x in routing.base_affinity],
        birth_positive=[float(x) for x in birth.birth_positive],
        birth_negative=[float(x) for x in birth.birth_negative],
        create_positive=[float(x) for x in create.create_positive],
        create_negative=[float(x) for x in create.create_negative],
        routing_balanced_accuracy=routing.balanced_accuracy,
        birth_balanced_accuracy=birth.balanced_accuracy,
        create_balanced_accuracy=create.balanced_accuracy,
        routing_candidate_count=routing.candidate_count,
        birth_candidate_count=birth.candidate_count,
        create_candidate_count=create.candidate_count,
        replay_passes=create.passes,
        replay_seed=create.seed,
    )
    return thresholds, report
