"""Single-pass streaming decision engine over a dynamic prototype memory.

Every query embedding is routed, scored, and committed in one shot:

1. gate on base-bank cosine geometry (confident base / reject base / full),
2. test the birth statistic against the current (dynamically tightened)
   birth threshold to decide between recognition and discovery,
3. in the discovery regime, compare the best attach score against the
   calibrated creation threshold.

The memory update and the birth-threshold update run after every sample;
base reference directions never change, only their assignment counts do.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor

import numpy as np

from .calibration import BaseReferenceBank, ThresholdSet
from .errors import EmptyCandidates, NoNovelPrototypes, TooFewClasses, ZeroVector
from .geometry import (
    SpaceConfig,
    ZERO_NORM_TOL,
    log_uniform_density,
    vmf_concentration_rows,
)

ROUTE_BASE_ONLY = "BaseOnly"
ROUTE_NOVEL_ONLY = "NovelOnly"
ROUTE_FULL = "Full"
ROUTE_EMPTY = "EmptyCandidate"

DECISION_ASSIGN_BASE = "AssignBase"
DECISION_ASSIGN_NOVEL = "AssignNovel"
DECISION_CREATE = "Create"


@dataclass(frozen=True)
class NovelPrototype:
    """Snapshot view of one online-born cluster."""

    count: int
    resultant: np.ndarray
    direction: np.ndarray


class PrototypeMemory:
    """Fixed base references plus an ordered, growing novel bank.

    Base directions are frozen at construction (the backing array is made
    read-only); only their assignment counts evolve. Novel prototypes keep
    an exact resultant sum alongside the renormalized mean direction.
    """

    def __init__(self, bank: BaseReferenceBank):
        refs = np.array(bank.references, dtype=np.float64)
        refs.setflags(write=False)
        self.bank = bank
        self.base_references = refs
        self.base_counts = np.asarray(bank.class_sizes, dtype=np.int64).copy()
        self.novel_counts = np.zeros(0, dtype=np.int64)
        self.novel_resultants = np.zeros((0, refs.shape[1]), dtype=np.float64)
        self.novel_directions = np.zeros((0, refs.shape[1]), dtype=np.float64)

    @property
    def d(self) -> int:
        return self.base_references.shape[1]

    @property
    def num_base(self) -> int:
        return self.base_references.shape[0]

    @property
    def num_novel(self) -> int:
        return self.novel_counts.shape[0]

    @property
    def size(self) -> int:
        """Total prototype count K_t."""
        return self.num_base + self.num_novel

    def counts(self) -> np.ndarray:
        """Assignment counts for all K_t prototypes, base first."""
        return np.concatenate([self.base_counts, self.novel_counts])

    def cosines(self, u: np.ndarray, indices: np.ndarray) -> np.ndarray:
        """Cosine of u against the selected prototype directions."""
        out = np.empty(indices.shape[0], dtype=np.float64)
        base_mask = indices < self.num_base
        if base_mask.any():
            out[base_mask] = self.base_references[indices[base_mask]] @ u
        if (~base_mask).any():
            out[~base_mask] = self.novel_directions[indices[~base_mask] - self.num_base] @ u
        return out

    def novel_prototype(self, local_index: int) -> NovelPrototype:
        return NovelPrototype(
            count=int(self.novel_counts[local_index]),
            resultant=self.novel_resultants[local_index].copy(),
            direction=self.novel_directions[local_index].copy(),
        )

    def novel_prototypes(self) -> list:
        return [self.novel_prototype(i) for i in range(self.num_novel)]

    def assign_base(self, index: int) -> None:
        self.base_counts[index] += 1

    def attach_novel(self, local_index: int, u: np.ndarray) -> None:
        self.novel_counts[local_index] += 1
        self.novel_resultants[local_index] += u
        norm = float(np.linalg.norm(self.novel_resultants[local_index]))
        if norm < ZERO_NORM_TOL:
            raise ZeroVector(
                f"novel prototype {local_index} resultant collapsed to zero"
            )
        self.novel_directions[local_index] = self.novel_resultants[local_index] / norm

    def create_novel(self, u: np.ndarray) -> int:
        """Append a singleton prototype; returns its global index."""
        self.novel_counts = np.append(self.novel_counts, 1)
        self.novel_resultants = np.vstack([self.novel_resultants, u[None, :]])
        self.novel_directions = np.vstack([self.novel_directions, u[None, :]])
        return self.size - 1


def round_half_up(x: float) -> int:
    return int(floor(x + 0.5))


@dataclass
class StreamState:
    """Mutable per-stream state: memory, dynamic threshold, and step clock."""

    memory: PrototypeMemory
    thresholds: ThresholdSet
    cfg: SpaceConfig
    log_p0: float
    median_base_size: float
    maturity_cutoff: int
    tau_birth_current: float
    eta: float = 0.0
    step_index: int = 0

    @classmethod
    def initial(
        cls, bank: BaseReferenceBank, thresholds: ThresholdSet, cfg: SpaceConfig
    ) -> "StreamState":
        if bank.d != cfg.d:
            raise ValueError("bank dimension disagrees with the configured space")
        median = float(bank.median_class_size)
        return cls(
            memory=PrototypeMemory(bank),
            thresholds=thresholds,
            cfg=cfg,
            log_p0=log_uniform_density(cfg.d),
            median_base_size=median,
            maturity_cutoff=round_half_up(median ** cfg.maturity_beta),
            tau_birth_current=thresholds.tau_birth_sup,
        )


@dataclass(frozen=True)
class Route:
    tag: str
    candidates: np.ndarray
    g_cos: float
    g_mar: float


@dataclass(frozen=True)
class DecisionTrace:
    """Everything needed to audit or replay one streaming decision."""

    step_index: int
    route: str
    g_cos: float
    g_mar: float
    birth_statistic: float | None
    attach_index: int | None
    attach_score: float | None
    decision: str
    label: int
    tau_birth_used: float
    eta_used: float

    def to_json_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "route": self.route,
            "g_cos": self.g_cos,
            "g_mar": self.g_mar,
            "birth_statistic": self.birth_statistic,
            "attach_index": self.attach_index,
            "attach_score": self.attach_score,
            "decision": self.decision,
            "label": self.label,
            "tau_birth_used": self.tau_birth_used,
            "eta_used": self.eta_used,
        }


def score_memory(u: np.ndarray, state: StreamState, candidate_ids) -> np.ndarray:
    """Memory score of each candidate: cosine / T + log Dirichlet share.

    The smoothed share pi_k = (n_k + alpha) / (sum_j n_j + K_t * alpha)
    normalizes over all K_t prototypes even when scoring is restricted to
    a candidate subset, so scores stay comparable across routing modes.
    """
    indices = np.asarray(candidate_ids, dtype=np.int64)
    if indices.size == 0:
        raise EmptyCandidates("score_memory needs a non-empty candidate set")
    mem = state.memory
    counts = mem.counts()
    alpha = state.cfg.dirichlet_alpha
    log_pi = np.log(counts[indices] + alpha) - np.log(
        counts.sum() + mem.size * alpha
    )
    return mem.cosines(u, indices) / state.cfg.temperature_T + log_pi


def route_candidates(u: np.ndarray, state: StreamState) -> Route:
    """Gate the candidate set on base-bank cosine geometry.

    A wide top1-top2 base margin is treated as a confident base hit; a top
    base cosine below the rejection gate excludes the base bank entirely
    (which can leave nothing when no novel prototype exists yet); anything
    in between keeps the full memory in play.
    """
    mem = state.memory
    if mem.num_base < 2:
        raise TooFewClasses("routing needs at least 2 base references")
    base_cos = mem.base_references @ u
    top2 = np.partition(base_cos, -2)[-2:]
    g_cos = float(top2[1])
    g_mar = float(top2[1] - top2[0])
    if g_mar >= state.thresholds.tau_hi:
        return Route(ROUTE_BASE_ONLY, np.arange(mem.num_base), g_cos, g_mar)
    if g_cos < state.thresholds.tau_lo:
        if mem.num_novel == 0:
            return Route(ROUTE_EMPTY, np.zeros(0, dtype=np.int64), g_cos, g_mar)
        novel_ids = mem.num_base + np.arange(mem.num_novel)
        return Route(ROUTE_NOVEL_ONLY, novel_ids, g_cos, g_mar)
    return Route(ROUTE_FULL, np.arange(mem.size), g_cos, g_mar)


def birth_statistic(u: np.ndarray, state: StreamState, candidate_ids) -> float:
    """Best temperature-scaled candidate cosine relative to uniform density.

    Deliberately free of any size prior: birth asks only whether some
    existing direction explains the sample better than background.
    """
    indices = np.asarray(candidate_ids, dtype=np.int64)
    if indices.size == 0:
        raise EmptyCandidates("birth statistic needs a non-empty candidate set")
    cos = state.memory.cosines(u, indices)
    return float(cos.max() / state.cfg.temperature_T - state.log_p0)


def attach_score(u: np.ndarray, state: StreamState) -> tuple:
    """Best attach score over all novel prototypes.

    a_k = log n_k + kappa_k * (mu_k . u) - log p0 favours clusters that
    are large, tight, and aligned with the sample. Returns the global
    prototype index of the argmax (ties resolve to the smallest index)
    and the score value.
    """
    mem = state.memory
    if mem.num_novel == 0:
        raise NoNovelPrototypes("attach scoring needs at least one novel prototype")
    norms = np.linalg.norm(mem.novel_resultants, axis=1)
    kappa = vmf_concentration_rows(norms, mem.novel_counts, state.cfg.d)
    scores = (
        np.log(mem.novel_counts)
        + kappa * (mem.novel_directions @ u)
        - state.log_p0
    )
    local = int(np.argmax(scores))
    return mem.num_base + local, float(scores[local])


def blend_birth_threshold(
    lam_self: np.ndarray,
    mature_sizes: np.ndarray,
    median_base_size: float,
    tau_birth_sup: float,
) -> tuple:
    """Pure blend step of the dynamic birth-threshold update.

    bank level = median(lam_self) - unscaled MAD(lam_self); the blend
    weight eta = m / (m + median base size) uses the median mature size m.
    Returns (tau_birth, eta) with tau_birth capped at tau_birth_sup.
    """
    lam_self = np.asarray(lam_self, dtype=np.float64)
    center = float(np.median(lam_self))
    bank_level = center - float(np.median(np.abs(lam_self - center)))
    mature_median = float(np.median(np.asarray(mature_sizes)))
    eta = mature_median / (mature_median + median_base_size)
    tau = min(tau_birth_sup, (1.0 - eta) * tau_birth_sup + eta * bank_level)
    return tau, eta


def update_birth_threshold(state: StreamState) -> None:
    """Tighten the working birth threshold as novel clusters mature.

    Novel prototypes at least as large as the maturity cutoff form a bank
    whose robust lower evidence level (median self-consistency minus MAD)
    is blended into the supervised threshold. The blend weight grows with
    the median mature size relative to the median base class size, and the
    result never exceeds the supervised threshold. With fewer than two
    mature clusters the bank statistic is skipped entirely.
    """
    mem = state.memory
    tau_sup = state.thresholds.tau_birth_sup
    mature = mem.novel_counts >= state.maturity_cutoff
    if int(mature.sum()) < 2:
        state.eta = 0.0
        state.tau_birth_current = tau_sup
        return
    counts = mem.novel_counts[mature]
    norms = np.linalg.norm(mem.novel_resultants[mature], axis=1)
    lam_self = (
        ((counts - 1) / (counts + 1))
        * (norms / counts)
        / state.cfg.temperature_T
        - state.log_p0
    )
    tau, eta = blend_birth_threshold(
        lam_self, counts, state.median_base_size, tau_sup
    )
    state.eta = eta
    state.tau_birth_current = tau


def step(u: np.ndarray, state: StreamState) -> tuple:
    """Process one stream sample end to end.

    Returns (predicted prototype index, DecisionTrace). The prediction
    refers to the post-update memory: a created prototype gets the first
    fresh index. The dynamic birth-threshold update always runs on the
    updated memory before the function returns.
    """
    u = np.asarray(u, dtype=np.float64)
    mem = state.memory
    tau_used = state.tau_birth_current
    eta_used = state.eta
    route = route_candidates(u, state)

    birth: float | None = None
    attach_idx: int | None = None
    attach_val: float | None = None

    if route.tag == ROUTE_BASE_ONLY:
        scores = score_memory(u, state, route.candidates)
        label = int(route.candidates[int(np.argmax(scores))])
        decision = DECISION_ASSIGN_BASE
    elif route.tag == ROUTE_EMPTY:
        label = mem.size
        decision = DECISION_CREATE
    else:
        birth = birth_statistic(u, state, route.candidates)
        if birth >= tau_used:
            scores = score_memory(u, state, route.candidates)
            label = int(route.candidates[int(np.argmax(scores))])
            decision = (
                DECISION_ASSIGN_BASE if label < mem.num_base else DECISION_ASSIGN_NOVEL
            )
        elif mem.num_novel == 0:
            label = mem.size
            decision = DECISION_CREATE
        else:
            attach_idx, attach_val = attach_score(u, state)
            if attach_val >= state.thresholds.tau_create:
                label = attach_idx
                decision = DECISION_ASSIGN_NOVEL
            else:
                label = mem.size
                decision = DECISION_CREATE

    if decision == DECISION_ASSIGN_BASE:
        mem.assign_base(label)
    elif decision == DECISION_ASSIGN_NOVEL:
        mem.attach_novel(label - mem.num_base, u)
    else:
        created = mem.create_novel(u)
        assert created == label

    update_birth_threshold(state)
    trace = DecisionTrace(
        step_index=state.step_index,
        route=route.tag,
        g_cos=route.g_cos,
        g_mar=route.g_mar,
        birth_statistic=birth,
        attach_index=attach_idx,
        attach_score=attach_val,
        decision=decision,
        label=label,
        tau_birth_used=tau_used,
        eta_used=eta_used,
    )
    state.step_index += 1
    return label, trace
