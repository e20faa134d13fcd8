"""Probabilistic adaptive search over the reduced face space.

Each iteration draws a desired displacement from a Gaussian kernel mixture
centered on the accepted faces (in standardized coordinates), generates
candidates from the skew-normal model aimed at that displacement, and
grows the accepted set with the candidates the oracle judges similar. The
accepted set never shrinks and the whole run is a pure function of
(dataset, config, seed) under the simulated oracle.

Every random draw consumes a child stream derived from (seed, counter), so
a run driven through the session protocol reproduces the in-process run
draw for draw.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import eigenspace, gaussmodel, skewnormal
from .eigenspace import EigenModel
from .faceio import FaceDataset, FaceVector
from .gaussmodel import MVNModel


class EmptyAcceptedSetError(RuntimeError):
    """No accepted faces: the mixture has no centers to draw from."""


def simulated_loss(target, candidate, marginal_sd) -> float:
    """Normalized distance ||(c_t - c_x) / sd||_2 / sqrt(K) in raw coordinates."""
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    candidate = np.asarray(candidate, dtype=np.float64).reshape(-1)
    sd = np.asarray(marginal_sd, dtype=np.float64).reshape(-1)
    if target.size != candidate.size:
        raise ValueError(
            f"coordinate length mismatch: {target.size} vs {candidate.size}"
        )
    safe = np.where(sd > 0.0, sd, 1.0)
    diff = (target - candidate) / safe
    return float(np.linalg.norm(diff) / np.sqrt(target.size))


class SimulatedOracle:
    """Distance oracle in standardized coordinate space.

    loss(z) = ||z - target_z||_2 / sqrt(K); accepts below epsilon, declares
    the search finished below epsilon_star.
    """

    def __init__(self, target_z, epsilon: float, epsilon_star: float):
        self.target_z = np.asarray(target_z, dtype=np.float64).reshape(-1)
        self.epsilon = float(epsilon)
        self.epsilon_star = float(epsilon_star)

    def loss(self, z) -> float:
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        return float(
            np.linalg.norm(z - self.target_z) / np.sqrt(self.target_z.size)
        )


@dataclass
class SearchConfig:
    epsilon: float = math.nan  # local acceptance level (unused in human mode)
    epsilon_star: float = math.nan  # global acceptance level
    bandwidth: float = 0.3  # kernel bandwidth in standardized units
    zeta: float = skewnormal.DEFAULT_ZETA
    candidates_per_iter: int = 9
    initial_pool_size: int = 30
    max_iters: int = 50


@dataclass
class Candidate:
    id: str
    face: FaceVector
    coords: np.ndarray  # raw reduced coordinates
    z: np.ndarray  # standardized coordinates
    source: str | None = None  # dataset id for pool faces, None for generated


@dataclass
class AcceptedFace:
    id: str
    z: np.ndarray
    loss: float | None = None  # None under a human oracle


@dataclass
class TraceEntry:
    t: int
    accepted_count: int
    mean_loss: float  # over the candidates evaluated at this step
    min_loss: float
    best_loss: float  # best-so-far after this step


@dataclass
class SearchState:
    dataset: FaceDataset
    eig: EigenModel
    mvn: MVNModel
    config: SearchConfig
    seed: int
    oracle: SimulatedOracle | None = None
    t: int = 0
    draw_count: int = 0
    batches: int = 0  # batches issued so far; keeps candidate ids unique
    accepted: list[AcceptedFace] = field(default_factory=list)
    trace: list[TraceEntry] = field(default_factory=list)  # one entry per iteration
    initial: TraceEntry | None = None  # the t=0 pool entry
    best_id: str | None = None
    best_face: FaceVector | None = None
    best_z: np.ndarray | None = None
    best_loss: float = math.inf

    def accepted_ids(self) -> list[str]:
        return [a.id for a in self.accepted]

    def converged(self) -> bool:
        """True when some accepted face is below the global level."""
        eps_star = self.config.epsilon_star
        return any(
            a.loss is not None and a.loss < eps_star for a in self.accepted
        )


def _next_rng(state: SearchState) -> np.random.Generator:
    rng = np.random.default_rng([state.seed, state.draw_count])
    state.draw_count += 1
    return rng


def _update_best(state: SearchState, cand: Candidate, loss: float):
    if loss < state.best_loss:
        state.best_loss = loss
        state.best_id = cand.id
        state.best_face = cand.face
        state.best_z = cand.z


def draw_initial_pool(state: SearchState) -> list[Candidate]:
    """Sample initial_pool_size faces uniformly without replacement."""
    n0 = state.config.initial_pool_size
    n = len(state.dataset)
    if n0 > n:
        raise ValueError(f"initial pool size {n0} exceeds dataset size {n}")
    rng = _next_rng(state)
    idx = rng.choice(n, size=n0, replace=False)
    batch = state.batches
    state.batches += 1
    pool = []
    for j, i in enumerate(idx):
        face = state.dataset.faces[i]
        coords = eigenspace.project(state.eig, face)
        z = gaussmodel.standardize(state.mvn, coords)
        pool.append(
            Candidate(
                id=f"{batch}:{j}",
                face=face,
                coords=coords,
                z=z,
                source=state.dataset.ids[i],
            )
        )
    return pool


def draw_mu(state: SearchState) -> np.ndarray:
    """Draw a displacement from the kernel mixture over accepted faces.

    Picks a center uniformly, then adds isotropic Gaussian noise with the
    configured bandwidth (bandwidth 0 returns the center exactly).
    """
    if not state.accepted:
        raise EmptyAcceptedSetError("cannot draw a displacement: no accepted faces")
    rng = _next_rng(state)
    center = state.accepted[int(rng.integers(len(state.accepted)))]
    noise = rng.standard_normal(center.z.size)
    return center.z + state.config.bandwidth * noise


def propose_candidates(state: SearchState) -> list[Candidate]:
    """Generate the next candidate batch from the current accepted set."""
    mu_tilde = draw_mu(state)
    target = skewnormal.SkewTarget(mu_tilde, zeta=state.config.zeta)
    pairs = skewnormal.generate_faces(
        state.eig,
        state.mvn,
        target,
        state.config.candidates_per_iter,
        seed=_next_rng(state),
    )
    batch_index = state.batches
    state.batches += 1
    batch = []
    for j, (face, coords) in enumerate(pairs):
        z = gaussmodel.standardize(state.mvn, coords)
        batch.append(
            Candidate(id=f"{batch_index}:{j}", face=face, coords=coords, z=z)
        )
    return batch


def _record(state: SearchState, candidates, accepted_ids, losses, initial: bool):
    chosen = set(accepted_ids)
    unknown = chosen - {c.id for c in candidates}
    if unknown:
        raise ValueError(f"selection references unknown candidate ids: {sorted(unknown)}")
    for cand in candidates:
        loss = losses.get(cand.id) if losses else None
        if loss is not None:
            _update_best(state, cand, loss)
        if cand.id in chosen:
            state.accepted.append(AcceptedFace(id=cand.id, z=cand.z, loss=loss))
    known = [losses[c.id] for c in candidates if losses and c.id in losses]
    entry = TraceEntry(
        t=state.t if initial else state.t + 1,
        accepted_count=len(state.accepted),
        mean_loss=float(np.mean(known)) if known else math.nan,
        min_loss=float(np.min(known)) if known else math.nan,
        best_loss=state.best_loss if state.best_loss < math.inf else math.nan,
    )
    if initial:
        state.initial = entry
    else:
        state.t += 1
        state.trace.append(entry)


def apply_initial_selection(state, pool, accepted_ids, losses=None):
    """Form the accepted set from the initial pool; t stays 0."""
    _record(state, pool, accepted_ids, losses or {}, initial=True)


def apply_selection(state, candidates, accepted_ids, losses=None):
    """Append the accepted candidates and advance to the next iteration."""
    _record(state, candidates, accepted_ids, losses or {}, initial=False)


def init_session(
    dataset: FaceDataset,
    eig: EigenModel,
    mvn: MVNModel,
    oracle: SimulatedOracle,
    config: SearchConfig,
    seed: int,
) -> SearchState:
    """Start a simulated-oracle session: filter the initial pool into A(0).

    Raises EmptyAcceptedSetError when the oracle accepts nothing from the
    pool; enlarge the pool or relax epsilon in that case.
    """
    state = SearchState(
        dataset=dataset, eig=eig, mvn=mvn, config=config, seed=seed, oracle=oracle
    )
    pool = draw_initial_pool(state)
    losses = {c.id: oracle.loss(c.z) for c in pool}
    accepted = [c.id for c in pool if losses[c.id] < config.epsilon]
    apply_initial_selection(state, pool, accepted, losses)
    if not state.accepted:
        raise EmptyAcceptedSetError(
            f"oracle accepted none of the {len(pool)} pool faces at "
            f"epsilon={config.epsilon}; enlarge the pool or relax epsilon"
        )
    return state


def iterate(state: SearchState) -> list[Candidate]:
    """Run one iteration: propose, evaluate, accept, advance t by one."""
    if state.oracle is None:
        raise ValueError("iterate() needs a simulated oracle; use propose/apply")
    candidates = propose_candidates(state)
    losses = {c.id: state.oracle.loss(c.z) for c in candidates}
    accepted = [c.id for c in candidates if losses[c.id] < state.config.epsilon]
    apply_selection(state, candidates, accepted, losses)
    return candidates


@dataclass
class SearchResult:
    best_id: str
    best_face: FaceVector
    best_loss: float
    iterations: int
    converged: bool
    initial: TraceEntry
    trace: list[TraceEntry]


def run(state: SearchState) -> SearchResult:
    """Iterate until an accepted face beats epsilon_star or the budget ends."""
    while not state.converged() and state.t < state.config.max_iters:
        iterate(state)
    return SearchResult(
        best_id=state.best_id,
        best_face=state.best_face,
        best_loss=state.best_loss,
        iterations=state.t,
        converged=state.converged(),
        initial=state.initial,
        trace=list(state.trace),
    )


# ---------------------------------------------------------------------------
# Trace export


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def trace_to_csv(result_or_state) -> str:
    """Render the t=0 pool row plus one row per iteration as CSV."""
    buf = io.StringIO()
    buf.write("t,accepted,mean_loss,min_loss,best_loss\n")
    entries = []
    if result_or_state.initial is not None:
        entries.append(result_or_state.initial)
    entries.extend(result_or_state.trace)
    for e in entries:
        buf.write(
            f"{e.t},{e.accepted_count},{_fmt(e.mean_loss)},"
            f"{_fmt(e.min_loss)},{_fmt(e.best_loss)}\n"
        )
    return buf.getvalue()


def trace_to_json(result_or_state) -> str:
    entries = []
    if result_or_state.initial is not None:
        entries.append(result_or_state.initial)
    entries.extend(result_or_state.trace)
    def clean(x):
        return None if math.isnan(x) else x
    return json.dumps(
        [
            {
                "t": e.t,
                "accepted": e.accepted_count,
                "mean_loss": clean(e.mean_loss),
                "min_loss": clean(e.min_loss),
                "best_loss": clean(e.best_loss),
            }
            for e in entries
        ],
        indent=2,
    )
