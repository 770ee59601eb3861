"""
Adaptive algorithms in the extended oracle model and their simulation from
block Krylov data.

In the extended model the k-th query v_k returns every A^i v_j with (i, j)
in H_k = {(i, j) : i + j <= k + 1, i >= 0, 1 <= j <= k}. Any deterministic
adaptive algorithm can be replayed from the non-adaptive data
{A^i z_j : i + j <= K + 1} of Gaussian start vectors z_j: simulate() builds
rotations U_k so that the simulated transcript has the same distribution as
the real one on a Haar-rotated instance.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.stats

from .errors import NotOrthogonal, RankCollapse, UnknownStrategy
from .operators import CountingOracle, SpectrumSpec, SymmetricOperator, haar_orthogonal
from .rng import hashed_generator, stream

logger = logging.getLogger("MatvecLab-Lifting")

Pair = Tuple[int, int]
Responses = Mapping[Pair, np.ndarray]
QueryRule = Callable[[int, Responses, int, int], np.ndarray]

ORTHOGONALITY_TOLERANCE = 1e-8
SPAN_TOLERANCE = 1e-8


# =============================================================================
# Index sets
# =============================================================================

def _in_h(pair: Pair, k: int) -> bool:
    i, j = pair
    return i >= 0 and 1 <= j <= k and i + j <= k + 1


def pair_order(pair: Pair) -> Tuple[int, int]:
    """Arrival order: by i + j, then smaller j first."""
    i, j = pair
    return (i + j, j)


@dataclass(frozen = True)
class IndexSetH:
    """H_k as an explicit set of (power, query) pairs."""

    k: int
    pairs: FrozenSet[Pair]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"H_k needs k >= 1, got {self.k}.")
        expected = frozenset(
            (i, j) for j in range(1, self.k + 1) for i in range(0, self.k + 2 - j)
        )
        if frozenset(self.pairs) != expected:
            raise ValueError(f"Pairs do not form H_{self.k}.")
        object.__setattr__(self, "pairs", expected)

    def ordered(self) -> List[Pair]:
        return sorted(self.pairs, key = pair_order)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs


def index_set(k: int) -> IndexSetH:
    if k < 1:
        raise ValueError(f"H_k needs k >= 1, got {k}.")
    pairs = frozenset((i, j) for j in range(1, k + 1) for i in range(0, k + 2) if _in_h((i, j), k))
    return IndexSetH(k = k, pairs = pairs)


def new_pairs(k: int) -> List[Pair]:
    """H_k minus H_{k-1}: the query itself, then A^(k+1-j) v_j for j <= k."""
    pairs = [(0, k)]
    pairs.extend((k + 1 - j, j) for j in range(1, k + 1))
    return sorted(pairs, key = pair_order)


def _ordered_h(k: int) -> List[Pair]:
    return index_set(k).ordered() if k >= 1 else []


# =============================================================================
# Adaptive algorithms
# =============================================================================

def _span_basis(vectors: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Orthonormal basis of span(vectors), possibly empty (n x 0)."""
    if not vectors:
        return np.zeros((n, 0))
    stacked = np.column_stack(vectors)
    largest = float(np.max(np.linalg.norm(stacked, axis = 0)))
    if largest == 0.0:
        return np.zeros((n, 0))
    q, r, _ = scipy.linalg.qr(stacked, mode = "economic", pivoting = True)
    rank = int(np.count_nonzero(np.abs(np.diag(r)) > 1e-12 * largest))
    return q[:, :rank]


def _project_out(vector: np.ndarray, basis: np.ndarray) -> np.ndarray:
    residual = vector - basis @ (basis.T @ vector)
    return residual - basis @ (basis.T @ residual)


def orthogonal_query(raw: np.ndarray, responses: Responses) -> np.ndarray:
    """
    Unit query orthogonal to every prior response.

    The raw query is projected off the response span. When nothing survives,
    coordinate vectors are tried in order of decreasing |raw_i| (ties by
    index), so the choice stays a deterministic function of the inputs.
    """
    raw = np.asarray(raw, dtype = float)
    n = raw.shape[0]
    basis = _span_basis([responses[key] for key in sorted(responses, key = pair_order)], n)

    scale = float(np.linalg.norm(raw))
    if scale > 0.0:
        residual = _project_out(raw, basis)
        norm = float(np.linalg.norm(residual))
        if norm > SPAN_TOLERANCE * scale:
            return residual / norm

    for index in np.argsort(-np.abs(raw), kind = "stable"):
        residual = _project_out(np.eye(n)[index], basis)
        norm = float(np.linalg.norm(residual))
        if norm > 1e-6:
            return residual / norm
    raise RankCollapse("Responses span the whole space; no orthogonal query exists.")


@dataclass(frozen = True)
class AdaptiveAlgorithm:
    """K-query deterministic algorithm given by one rule per round."""

    name: str
    K: int
    rule: QueryRule = field(repr = False)
    seed: int = 0

    @property
    def query_fns(self) -> Tuple[Callable[[Responses, int], np.ndarray], ...]:
        return tuple(
            (lambda responses, n, k = k: self.query(k, responses, n)) for k in range(1, self.K + 1)
        )

    def query(self, k: int, responses: Responses, n: int) -> np.ndarray:
        """k-th unit query, orthogonal to the responses it was computed from."""
        return orthogonal_query(self.rule(k, responses, n, self.seed), responses)

    def for_trial(self, seed: int) -> "AdaptiveAlgorithm":
        """Same rule with its randomness fixed to `seed`."""
        return replace(self, seed = int(seed))


def _power_method_rule(k: int, responses: Responses, n: int, seed: int) -> np.ndarray:
    if k == 1:
        return np.eye(n)[0]
    return np.asarray(responses[(1, k - 1)], dtype = float)


def _fixed_directions_rule(k: int, responses: Responses, n: int, seed: int) -> np.ndarray:
    return np.eye(n)[(k - 1) % n]


def _greedy_rayleigh_rule(k: int, responses: Responses, n: int, seed: int) -> np.ndarray:
    """Signed square of the top Ritz vector of the known A-pairs."""
    if k == 1:
        return np.eye(n)[0]
    keys = [(i, j) for (i, j) in sorted(responses, key = pair_order) if (i + 1, j) in responses]
    sources = np.column_stack([responses[key] for key in keys])
    images = np.column_stack([responses[(i + 1, j)] for (i, j) in keys])
    q, r, pivots = scipy.linalg.qr(sources, mode = "economic", pivoting = True)
    diagonal = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diagonal > 1e-12 * max(float(diagonal.max()), 1e-300)))
    image = scipy.linalg.solve_triangular(r[:rank, :rank], images[:, pivots[:rank]].T, trans = "T").T
    _, vectors = scipy.linalg.eigh(image.T @ image)
    ritz = q[:, :rank] @ vectors[:, -1]
    return ritz * np.abs(ritz)


def _random_directions_rule(k: int, responses: Responses, n: int, seed: int) -> np.ndarray:
    return hashed_generator("random-directions", seed, k, n).standard_normal(n)


STRATEGIES: Dict[str, QueryRule] = {
    "power-method": _power_method_rule,
    "fixed-directions": _fixed_directions_rule,
    "greedy-rayleigh": _greedy_rayleigh_rule,
    "random-directions": _random_directions_rule,
}


def get_strategy(name: str, K: int, seed: int = 0) -> AdaptiveAlgorithm:
    """Build a registered strategy with K rounds."""
    if name not in STRATEGIES:
        logger.warning(f"Unknown strategy '{name}'")
        raise UnknownStrategy(f"Unknown strategy '{name}'. Registered: {', '.join(sorted(STRATEGIES))}.")
    if K < 1:
        raise ValueError(f"An adaptive algorithm needs K >= 1, got {K}.")
    return AdaptiveAlgorithm(name = name, K = K, rule = STRATEGIES[name], seed = seed)


def register_strategy(name: str, rule: QueryRule) -> None:
    STRATEGIES[name] = rule


# =============================================================================
# Running against the extended oracle
# =============================================================================

@dataclass
class Transcript:
    """Queries, all responses A^i v_j, and the order they arrived in."""

    queries: List[np.ndarray] = field(default_factory = list)
    responses: Dict[Pair, np.ndarray] = field(default_factory = dict)
    batches: List[List[Pair]] = field(default_factory = list)
    matvecs: int = 0


def run_adaptive(alg: AdaptiveAlgorithm, oracle: CountingOracle, extra_query: bool = False) -> Transcript:
    """
    Execute the extended-oracle protocol for alg.K rounds.

    Round k emits v_k from the responses of H_{k-1} and then receives every
    new A^i v_j of H_k, one product per new power. With extra_query the
    algorithm also emits v_{K+1} (no responses are charged for it).
    """
    rows, cols = oracle.shape
    if rows != cols or not oracle.is_symmetric:
        raise ValueError(f"Adaptive protocol needs a symmetric operator, got shape {oracle.shape}.")
    n = rows
    if alg.K ** 2 >= n:
        logger.warning(f"K^2 = {alg.K ** 2} is not below n = {n}")
        raise ValueError(f"Adaptive simulation needs K^2 < n, got K={alg.K}, n={n}.")

    start = oracle.count
    transcript = Transcript()
    for k in range(1, alg.K + 1):
        visible = {key: transcript.responses[key] for key in _ordered_h(k - 1)}
        query = alg.query(k, visible, n)
        transcript.queries.append(query)

        batch = []
        for key in new_pairs(k):
            i, j = key
            if i == 0:
                transcript.responses[key] = query
            else:
                transcript.responses[key] = oracle.matvec(transcript.responses[(i - 1, j)])
            batch.append(key)
        transcript.batches.append(batch)

    if extra_query:
        visible = {key: transcript.responses[key] for key in _ordered_h(alg.K)}
        final = alg.query(alg.K + 1, visible, n)
        transcript.queries.append(final)
        transcript.responses[(0, alg.K + 1)] = final
        transcript.batches.append([(0, alg.K + 1)])

    transcript.matvecs = oracle.count - start
    return transcript


# =============================================================================
# Rotations
# =============================================================================

def make_uk_rotation(fixed: Sequence[np.ndarray], y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """
    Orthogonal U with U^T x = x on span(fixed) and U^T y = z.

    Identity on span(fixed); on the complement, y and z are completed to
    orthonormal bases Y, Z by QR of the projected [y | G] and [z | G] with a
    shared Gaussian G, and U = F F^T + Y Z^T. G comes from a generator keyed
    by a hash of the arguments' shape (n and the rank of span(fixed)), not
    their values, so U is a deterministic function of its arguments that is
    also continuous in them, and y = z gives U = I. Rebuilding U_k from
    replayed inputs that differ by roundoff relies on the continuity.
    """
    y = np.asarray(y, dtype = float)
    z = np.asarray(z, dtype = float)
    n = y.shape[0]
    basis = _span_basis([np.asarray(vector, dtype = float) for vector in fixed], n)
    rank = basis.shape[1]

    for label, vector in (("y", y), ("z", z)):
        if abs(float(np.linalg.norm(vector)) - 1.0) > ORTHOGONALITY_TOLERANCE:
            raise NotOrthogonal(f"{label} must be a unit vector, got norm {np.linalg.norm(vector)}.")
        leak = float(np.linalg.norm(basis.T @ vector)) if rank else 0.0
        if leak > ORTHOGONALITY_TOLERANCE:
            logger.warning(f"{label} has component {leak:.3e} inside the fixed span")
            raise NotOrthogonal(f"{label} is not orthogonal to the fixed vectors (component {leak:.3e}).")
    if rank + 2 > n:
        raise NotOrthogonal(f"Fixed span of dimension {rank} leaves no room in R^{n} for y and z.")

    complement = n - rank
    gaussian = hashed_generator("uk-rotation", n, rank).standard_normal((n, complement - 1))
    y_basis = _completed_basis(y, gaussian, basis)
    z_basis = _completed_basis(z, gaussian, basis)
    return basis @ basis.T + y_basis @ z_basis.T


def _completed_basis(first: np.ndarray, gaussian: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of `basis` whose first column is `first`."""
    stacked = np.column_stack([first, gaussian])
    stacked = stacked - basis @ (basis.T @ stacked)
    stacked = stacked - basis @ (basis.T @ stacked)
    q, r = scipy.linalg.qr(stacked, mode = "economic")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    q[:, 0] = first
    return q


# =============================================================================
# Simulation from block Krylov data
# =============================================================================

@dataclass
class SimulatorState:
    """Per-trial simulator sequences."""

    krylov_data: Dict[Pair, np.ndarray]
    v_tilde: List[np.ndarray] = field(default_factory = list)
    v_sim: List[np.ndarray] = field(default_factory = list)
    u_tilde: List[np.ndarray] = field(default_factory = list)
    u_product: Optional[np.ndarray] = None
    products: List[np.ndarray] = field(default_factory = list)
    tilde_coefficients: List[Dict[Pair, float]] = field(default_factory = list)
    rotated_responses: Dict[Pair, np.ndarray] = field(default_factory = dict)


@dataclass
class SimulationResult:
    transcript: Transcript
    state: SimulatorState
    rotated_view: Optional[np.ndarray] = None


def krylov_data_for(matrix: np.ndarray, starts: np.ndarray, depth: int) -> Dict[Pair, np.ndarray]:
    """{A^i z_j : i + j <= depth} from dense A and start columns z_j."""
    data = {}
    for j in range(1, starts.shape[1] + 1):
        vector = np.array(starts[:, j - 1], dtype = float)
        for i in range(0, depth - j + 1):
            data[(i, j)] = vector
            vector = matrix @ vector
    return data


def _tilde_vector(data: Mapping[Pair, np.ndarray], k: int) -> Tuple[Dict[Pair, float], np.ndarray]:
    """Normalized part of z_k orthogonal to span{A^i z_j : (i, j) in H_{k-1}}."""
    z = np.asarray(data[(0, k)], dtype = float)
    coefficients: Dict[Pair, float] = {}
    residual = z
    if k >= 2:
        keys = _ordered_h(k - 1)
        columns = np.column_stack([data[key] for key in keys])
        solution, _, _, _ = scipy.linalg.lstsq(columns, z)
        residual = z - columns @ solution
        correction, _, _, _ = scipy.linalg.lstsq(columns, residual)
        residual = residual - columns @ correction
        solution = solution + correction
        coefficients = {key: -float(value) for key, value in zip(keys, solution)}

    norm = float(np.linalg.norm(residual))
    if norm <= 1e-12 * max(float(np.linalg.norm(z)), 1e-300):
        raise RankCollapse(f"z_{k} lies in the span of the earlier Krylov data.")
    coefficients[(0, k)] = 1.0
    return {key: value / norm for key, value in coefficients.items()}, residual / norm


def _tilde_power(data: Mapping[Pair, np.ndarray], coefficients: Mapping[Pair, float], power: int) -> np.ndarray:
    """A^power applied to a tilde vector through its Krylov coefficients."""
    total = None
    for (i, j) in sorted(coefficients, key = pair_order):
        term = coefficients[(i, j)] * data[(i + power, j)]
        total = term if total is None else total + term
    return total


def simulate_sequences(
    alg: AdaptiveAlgorithm,
    krylov_data: Mapping[Pair, np.ndarray],
    rounds: Optional[int] = None,
) -> SimulatorState:
    """
    v_tilde, v_sim and U_tilde for rounds 1..rounds.

    Round k reads only {A^i z_j : i + j <= k}, so the data needs i + j <= rounds.
    """
    rounds = alg.K if rounds is None else rounds
    n = np.asarray(krylov_data[(0, 1)]).shape[0]
    if rounds ** 2 >= n:
        raise ValueError(f"Simulation needs K^2 < n, got K={rounds}, n={n}.")

    state = SimulatorState(krylov_data = dict(krylov_data))
    product = np.eye(n)
    for k in range(1, rounds + 1):
        if k >= 2:
            for key in new_pairs(k - 1):
                i, j = key
                state.rotated_responses[key] = product.T @ _tilde_power(krylov_data, state.tilde_coefficients[j - 1], i)

        coefficients, tilde = _tilde_vector(krylov_data, k)
        state.tilde_coefficients.append(coefficients)
        state.v_tilde.append(tilde)

        visible = {key: state.rotated_responses[key] for key in _ordered_h(k - 1)}
        v_sim = alg.query(k, visible, n)
        state.v_sim.append(v_sim)

        fixed = [visible[key] for key in _ordered_h(k - 1)]
        rotation = make_uk_rotation(fixed, product.T @ tilde, v_sim)
        state.u_tilde.append(rotation)
        product = product @ rotation
        state.products.append(product)

    state.u_product = product
    return state


def simulate(
    alg: AdaptiveAlgorithm,
    krylov_data: Mapping[Pair, np.ndarray],
    matrix: Optional[np.ndarray] = None,
) -> SimulationResult:
    """
    Replay alg from block Krylov data (needs i + j <= K + 1).

    Returns the simulated transcript {U^T A^i v_tilde_j : H_K} and, when the
    dense matrix is supplied, the rotated view U^T A U with U = U_tilde_{1:K}.
    """
    state = simulate_sequences(alg, krylov_data)
    product = state.u_product
    for key in new_pairs(alg.K):
        i, j = key
        state.rotated_responses[key] = product.T @ _tilde_power(krylov_data, state.tilde_coefficients[j - 1], i)

    transcript = Transcript(queries = list(state.v_sim))
    for k in range(1, alg.K + 1):
        batch = new_pairs(k)
        for key in batch:
            transcript.responses[key] = state.rotated_responses[key]
        transcript.batches.append(batch)
    transcript.matvecs = sum(1 for (i, _) in krylov_data if i >= 1)

    rotated_view = None
    if matrix is not None:
        rotated_view = product.T @ np.asarray(matrix, dtype = float) @ product
    return SimulationResult(transcript = transcript, state = state, rotated_view = rotated_view)


# =============================================================================
# Checks
# =============================================================================

def simulator_invariants(alg: AdaptiveAlgorithm, matrix: np.ndarray, starts: np.ndarray) -> Dict[str, float]:
    """
    Per-run consistency of the simulator on a dense matrix.

    Returns:
        p1: 1.0 when every round recomputed from truncated data is bit-identical.
        p2: max |v_tilde_j - U_{1:k} v_sim_j| over j <= k <= K.
        p3: max |v_sim_k - alg fed U^T A^i U v_sim_j| over k >= 2.
        p4: max |U_k - rotation rebuilt from those inputs| over k >= 2.
        left_side: max |simulated response - U_{1:K}^T A^i v_tilde_j| over H_K.
        span: max residual of v_tilde_k outside span{A^i z_j : i + j <= k}.
        orthogonality: max |U_k^T U_k - I| over k.
    """
    K = alg.K
    matrix = np.asarray(matrix, dtype = float)
    n = matrix.shape[0]
    data = krylov_data_for(matrix, starts, K + 1)
    result = simulate(alg, data, matrix)
    state = result.state

    bit_identical = True
    for k in range(1, K + 1):
        truncated = {key: value for key, value in data.items() if key[0] + key[1] <= k}
        partial = simulate_sequences(alg, truncated, rounds = k)
        if not (np.array_equal(partial.v_tilde[k - 1], state.v_tilde[k - 1])
                and np.array_equal(partial.u_tilde[k - 1], state.u_tilde[k - 1])
                and np.array_equal(partial.v_sim[k - 1], state.v_sim[k - 1])):
            bit_identical = False

    p2 = 0.0
    for k in range(1, K + 1):
        for j in range(1, k + 1):
            p2 = max(p2, float(np.linalg.norm(state.v_tilde[j - 1] - state.products[k - 1] @ state.v_sim[j - 1])))

    p3 = 0.0
    p4 = 0.0
    for k in range(2, K + 1):
        previous = state.products[k - 2]
        rotated = previous.T @ matrix @ previous
        inputs = {}
        for (i, j) in _ordered_h(k - 1):
            inputs[(i, j)] = np.linalg.matrix_power(rotated, i) @ state.v_sim[j - 1]
        replayed = alg.query(k, inputs, n)
        p3 = max(p3, float(np.linalg.norm(replayed - state.v_sim[k - 1])))
        rebuilt = make_uk_rotation([inputs[key] for key in _ordered_h(k - 1)], previous.T @ state.v_tilde[k - 1], state.v_sim[k - 1])
        p4 = max(p4, float(np.max(np.abs(rebuilt - state.u_tilde[k - 1]))))

    left_side = 0.0
    for (i, j), response in result.transcript.responses.items():
        direct = state.u_product.T @ np.linalg.matrix_power(matrix, i) @ state.v_tilde[j - 1]
        left_side = max(left_side, float(np.linalg.norm(response - direct)))

    span = 0.0
    for k in range(1, K + 1):
        keys = [(i, j) for j in range(1, k + 1) for i in range(0, k + 1 - j)]
        basis = _span_basis([data[key] for key in keys], n)
        span = max(span, float(np.linalg.norm(_project_out(state.v_tilde[k - 1], basis))))

    orthogonality = max(float(np.max(np.abs(u.T @ u - np.eye(n)))) for u in state.u_tilde)
    return {
        "p1": 1.0 if bit_identical else 0.0,
        "p2": p2,
        "p3": p3,
        "p4": p4,
        "left_side": left_side,
        "span": span,
        "orthogonality": orthogonality,
    }


# =============================================================================
# Distributional equivalence
# =============================================================================

def statistic_panel(transcript: Transcript, K: int) -> Dict[str, float]:
    """
    Scalar statistics of one transcript, identical keys for real and simulated runs.

    Each query is orthogonal to every response known before it, so inner
    products such as <v_1, A v_2> vanish identically and are left out.
    """
    responses = transcript.responses
    panel = {}
    for k in range(1, K + 1):
        panel[f"quad_{k}"] = float(responses[(0, k)] @ responses[(1, k)])
    if (2, 1) in responses:
        panel["cross_1_2_1"] = float(responses[(0, 1)] @ responses[(2, 1)])
    if (1, 2) in responses:
        panel["image_cross_1_2"] = float(responses[(1, 1)] @ responses[(1, 2)])
    for (i, j) in _ordered_h(K):
        if i >= 1:
            panel[f"norm_{i}_{j}"] = float(np.linalg.norm(responses[(i, j)]))
    return panel


@dataclass
class EquivalenceReport:
    """Two-sample KS outcome per statistic."""

    strategy: str
    K: int
    trials: int
    alpha: float
    p_values: Dict[str, float] = field(default_factory = dict)

    @property
    def corrected_alpha(self) -> float:
        return self.alpha / max(len(self.p_values), 1)

    @property
    def min_p_value(self) -> float:
        return min(self.p_values.values()) if self.p_values else 1.0

    @property
    def passed(self) -> bool:
        return self.min_p_value >= self.corrected_alpha

    def as_dict(self) -> Dict[str, float]:
        return {
            "strategy": self.strategy,
            "K": self.K,
            "trials": self.trials,
            "alpha": self.alpha,
            "min_p_value": self.min_p_value,
            "passed": self.passed,
        }


def real_transcript(alg: AdaptiveAlgorithm, spectrum: SpectrumSpec, rng: np.random.Generator) -> Transcript:
    """Run alg on a fresh Haar-rotated instance U^T D U."""
    rotation = haar_orthogonal(spectrum.n, rng)
    matrix = rotation.T @ np.diag(spectrum.diagonal()) @ rotation
    oracle = CountingOracle(SymmetricOperator.dense(0.5 * (matrix + matrix.T)))
    return run_adaptive(alg, oracle)


def simulated_transcript(alg: AdaptiveAlgorithm, spectrum: SpectrumSpec, rng: np.random.Generator) -> Transcript:
    """Simulate alg from block Krylov data of a fresh Haar-rotated instance."""
    n = spectrum.n
    rotation = haar_orthogonal(n, rng)
    matrix = rotation.T @ np.diag(spectrum.diagonal()) @ rotation
    starts = rng.standard_normal((n, alg.K))
    data = krylov_data_for(matrix, starts, alg.K + 1)
    return simulate(alg, data).transcript


def distributional_equivalence_test(
    alg: AdaptiveAlgorithm,
    spectrum: SpectrumSpec,
    trials: int,
    seed: int,
    alpha: float = 0.001,
) -> EquivalenceReport:
    """
    Compare real and simulated transcripts with two-sample KS tests.

    The strategy seed is fixed per trial and shared by both sides; the two
    sides use independent instance and start-vector streams. Pass means
    every p-value clears alpha / (number of statistics).
    """
    if trials < 2:
        raise ValueError(f"Distributional test needs at least 2 trials, got {trials}.")
    if alg.K ** 2 >= spectrum.n:
        raise ValueError(f"Adaptive simulation needs K^2 < n, got K={alg.K}, n={spectrum.n}.")

    real_samples: Dict[str, List[float]] = {}
    sim_samples: Dict[str, List[float]] = {}
    for trial in range(trials):
        trial_alg = alg.for_trial(seed * 1000003 + trial)
        real = statistic_panel(real_transcript(trial_alg, spectrum, stream(seed, trial, "lift-real")), alg.K)
        sim = statistic_panel(simulated_transcript(trial_alg, spectrum, stream(seed, trial, "lift-sim")), alg.K)
        for name, value in real.items():
            real_samples.setdefault(name, []).append(value)
        for name, value in sim.items():
            sim_samples.setdefault(name, []).append(value)

    report = EquivalenceReport(strategy = alg.name, K = alg.K, trials = trials, alpha = alpha)
    for name in sorted(real_samples):
        result = scipy.stats.ks_2samp(real_samples[name], sim_samples[name])
        report.p_values[name] = float(result.pvalue)
    logger.info(
        f"KS panel for {alg.name} (K={alg.K}): min p = {report.min_p_value:.4g}, "
        f"corrected alpha = {report.corrected_alpha:.2g}, passed = {report.passed}"
    )
    return report


def span_correlation(vectors: Sequence[np.ndarray], u: np.ndarray) -> float:
    """|projection of u onto span(vectors)|."""
    basis = _span_basis(list(vectors), u.shape[0])
    return float(np.linalg.norm(basis.T @ u))


def adaptive_correlation(transcript: Transcript, u: np.ndarray) -> float:
    """Best |<v, u>| over unit v spanned by the transcript."""
    keys = sorted(transcript.responses, key = pair_order)
    return span_correlation([transcript.responses[key] for key in keys], u)


__all__ = [
    "AdaptiveAlgorithm",
    "EquivalenceReport",
    "IndexSetH",
    "STRATEGIES",
    "SimulationResult",
    "SimulatorState",
    "Transcript",
    "adaptive_correlation",
    "distributional_equivalence_test",
    "get_strategy",
    "index_set",
    "krylov_data_for",
    "make_uk_rotation",
    "new_pairs",
    "orthogonal_query",
    "run_adaptive",
    "simulate",
    "simulate_sequences",
    "simulator_invariants",
    "statistic_panel",
]
