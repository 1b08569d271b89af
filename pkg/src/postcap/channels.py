"""POST channel and memoryless reference channel models.

A POST channel is a finite-state channel whose previous output acts as the
current state.  It is described by a kernel Q(y|x,y') stored here as one
column-stochastic |Y|x|X| matrix per state y'.  A memoryless reference
channel W plays the role of the center the state-dependent matrices are
compared against (entrywise max-abs distance delta).

Channel spec files are JSON with fields ``input_size``, ``output_size``,
``kernels`` (array over y' of row-major y_size x x_size matrices) and an
optional ``reference_w``.  Entries may be numbers or exact rational strings
such as "2/3", converted to double precision at parse time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

STOCHASTIC_TOL = 1e-9


class ChannelSpecError(ValueError):
    """Malformed, non-stochastic, or dimensionally inconsistent channel data."""


class SingularKernelError(ValueError):
    """A state's transition matrix (or a column-restriction of it) is singular."""


def _check_column_stochastic(mat: np.ndarray, label: str, tol: float = STOCHASTIC_TOL) -> None:
    if np.any(mat < -tol) or np.any(mat > 1 + tol):
        y, x = np.unravel_index(int(np.argmax(np.abs(mat - 0.5))), mat.shape)
        raise ChannelSpecError(f"{label}: entry ({y},{x}) = {mat[y, x]!r} outside [0, 1]")
    sums = mat.sum(axis=0)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        x = int(bad[0])
        raise ChannelSpecError(
            f"{label}: column x={x} sums to {sums[x]!r} (deviation {sums[x] - 1.0:.3e} > {tol})"
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MemorylessChannel:
    """Reference channel; ``W[y, x] = W(y|x)``, columns are output laws."""

    W: np.ndarray

    def __post_init__(self):
        W = _freeze(np.atleast_2d(self.W))
        if W.shape[0] < 2 or W.shape[1] < 2:
            raise ChannelSpecError(f"alphabets must have size >= 2, got shape {W.shape}")
        _check_column_stochastic(W, "W")
        object.__setattr__(self, "W", W)

    @property
    def x_size(self) -> int:
        return self.W.shape[1]

    @property
    def y_size(self) -> int:
        return self.W.shape[0]

    def degenerate_post(self) -> "PostChannel":
        """POST channel whose every state matrix equals W (memoryless collapse)."""
        return PostChannel(np.broadcast_to(self.W, (self.y_size,) + self.W.shape))


@dataclass(frozen=True)
class PostChannel:
    """Kernel Q(y|x,y'); ``kernels[yp][y, x] = Q(y|x,yp)``, each state matrix column-stochastic."""

    kernels: np.ndarray

    def __post_init__(self):
        K = _freeze(self.kernels)
        if K.ndim != 3:
            raise ChannelSpecError(f"kernels must be a (|Y|, |Y|, |X|) array, got shape {K.shape}")
        n_state, y_size, x_size = K.shape
        if n_state != y_size:
            raise ChannelSpecError(f"kernel count {n_state} != output alphabet size {y_size}")
        if y_size < 2 or x_size < 2:
            raise ChannelSpecError(f"alphabets must have size >= 2, got shape {K.shape}")
        for yp in range(n_state):
            _check_column_stochastic(K[yp], f"kernel for state y'={yp}")
        object.__setattr__(self, "kernels", K)

    @property
    def x_size(self) -> int:
        return self.kernels.shape[2]

    @property
    def y_size(self) -> int:
        return self.kernels.shape[1]

    def kernel(self, yp: int) -> np.ndarray:
        """Channel transition matrix for state y' (|Y| x |X|)."""
        if not 0 <= yp < self.y_size:
            raise IndexError(f"state y'={yp} out of range [0, {self.y_size})")
        return self.kernels[yp]

    def state_matrix(self, x: int) -> np.ndarray:
        """State transition matrix for input x: entry (y, y') = Q(y|x,y')."""
        if not 0 <= x < self.x_size:
            raise IndexError(f"input x={x} out of range [0, {self.x_size})")
        return self.kernels[:, :, x].T.copy()

    def is_memoryless(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.kernels - self.kernels[0]) <= tol))


@dataclass(frozen=True)
class ProximityReport:
    """Entrywise max-abs distance of each state matrix from the reference W."""

    delta: float
    per_state: tuple


def proximity(ch: PostChannel, ref: MemorylessChannel) -> ProximityReport:
    """Max over states y' of the max-abs-entry distance between the state matrix and W."""
    if (ch.y_size, ch.x_size) != (ref.y_size, ref.x_size):
        raise ChannelSpecError(
            f"dimension mismatch: channel is {ch.y_size}x{ch.x_size}, W is {ref.y_size}x{ref.x_size}"
        )
    per_state = tuple(float(np.max(np.abs(ch.kernels[yp] - ref.W))) for yp in range(ch.y_size))
    return ProximityReport(delta=max(per_state), per_state=per_state)


# -- channel spec files -------------------------------------------------------


def _parse_entry(v) -> float:
    if isinstance(v, str):
        try:
            return float(Fraction(v))
        except (ValueError, ZeroDivisionError) as exc:
            raise ChannelSpecError(f"cannot parse entry {v!r} as a rational") from exc
    if isinstance(v, (int, float)):
        return float(v)
    raise ChannelSpecError(f"entry {v!r} is neither numeric nor a 'p/q' string")


def _parse_matrix(rows, y_size: int, x_size: int, label: str) -> np.ndarray:
    if len(rows) != y_size or any(len(r) != x_size for r in rows):
        raise ChannelSpecError(f"{label}: expected {y_size}x{x_size} row-major matrix")
    return np.array([[_parse_entry(v) for v in row] for row in rows], dtype=float)


def load_channel_spec(path) -> tuple[PostChannel, MemorylessChannel | None]:
    """Load a channel spec file; returns the POST channel and the optional reference W."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ChannelSpecError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ChannelSpecError(f"{path}: not valid JSON ({exc})") from exc
    for field in ("input_size", "output_size", "kernels"):
        if field not in doc:
            raise ChannelSpecError(f"{path}: missing field {field!r}")
    x_size, y_size = int(doc["input_size"]), int(doc["output_size"])
    kernels = doc["kernels"]
    if len(kernels) != y_size:
        raise ChannelSpecError(f"{path}: {len(kernels)} kernels given, output_size is {y_size}")
    stack = np.stack(
        [_parse_matrix(kernels[yp], y_size, x_size, f"kernel for state y'={yp}") for yp in range(y_size)]
    )
    ch = PostChannel(stack)
    ref = None
    if doc.get("reference_w") is not None:
        ref = MemorylessChannel(_parse_matrix(doc["reference_w"], y_size, x_size, "reference_w"))
    return ch, ref


def load_post_channel(path) -> PostChannel:
    """Load and validate a POST channel from a spec file."""
    return load_channel_spec(path)[0]


def save_channel_spec(path, ch: PostChannel, ref: MemorylessChannel | None = None) -> None:
    """Write a channel spec file; float entries use repr so reload is bit-exact."""
    doc = {
        "input_size": ch.x_size,
        "output_size": ch.y_size,
        "kernels": [[[float(v) for v in row] for row in ch.kernels[yp]] for yp in range(ch.y_size)],
    }
    if ref is not None:
        doc["reference_w"] = [[float(v) for v in row] for row in ref.W]
    Path(path).write_text(json.dumps(doc, indent=1))


# -- worked example channels --------------------------------------------------

_EX1_W0 = np.array([Fraction(2, 3), Fraction(1, 6), Fraction(1, 6)])
_EX1_W1 = np.array([Fraction(1, 5), Fraction(3, 5), Fraction(1, 5)])
_EX2_W0 = np.array([Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)])
_EX2_W1 = np.array([Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)])

# per-state coefficients (c0, c1): u_{y',0} = c0*(w0-w1), u_{y',1} = c1*(w0-w1)
_U_COEFFS = (
    (Fraction(-1, 2), Fraction(1, 3)),
    (Fraction(-2, 5), Fraction(1, 2)),
    (Fraction(-2, 3), Fraction(3, 5)),
)


def _example_arrays(example_id: int):
    if example_id == 1:
        w0, w1 = _EX1_W0, _EX1_W1
        W = np.stack([w0, w1], axis=1)
    elif example_id == 2:
        w0, w1 = _EX2_W0, _EX2_W1
        w2 = Fraction(2, 3) * w0 + Fraction(1, 3) * w1
        W = np.stack([w0, w1, w2], axis=1)
    else:
        raise ValueError(f"example_id must be 1 or 2, got {example_id!r}")
    d = w0 - w1
    U = []
    for c0, c1 in _U_COEFFS:
        cols = [c0 * d, c1 * d]
        if example_id == 2:
            cols.append(Fraction(2, 3) * cols[0] + Fraction(1, 3) * cols[1])
        U.append(np.stack(cols, axis=1))
    return W, U


def max_admissible_eps(example_id: int) -> float:
    """Largest eps keeping every perturbed kernel entry nonnegative."""
    W, U = _example_arrays(example_id)
    bound = Fraction(10**12)  # effectively unbounded until a negative direction appears
    for Uy in U:
        for (y, x), u in np.ndenumerate(Uy):
            if u < 0:
                bound = min(bound, W[y, x] / -u)
    return float(bound)


def build_example(example_id: int, eps: float) -> tuple[PostChannel, MemorylessChannel]:
    """Three-state perturbed channel family: state matrix for y' is W + eps * U_{y'}.

    Example 1 has |X|=2 < |Y|=3; Example 2 has |X|=|Y|=3 with a rank-deficient W
    (third column a fixed convex combination of the first two, preserved by the
    perturbation direction).  The perturbation directions have zero column sums,
    so every admissible eps yields exactly column-stochastic kernels.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    limit = max_admissible_eps(example_id)
    if eps > limit:
        raise ValueError(
            f"eps={eps} drives a kernel entry negative; max admissible eps is {limit:.6g}"
        )
    W, U = _example_arrays(example_id)
    Wf = np.array(W, dtype=float)
    kernels = np.stack([Wf + eps * np.array(Uy, dtype=float) for Uy in U])
    return PostChannel(kernels), MemorylessChannel(Wf)
