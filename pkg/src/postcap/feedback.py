"""Feedback-capacity convex program for POST channels.

Maximizes the conditional mutual information I(X;Y|Y') over joint
input-state distributions P_{XY'} subject to output stationarity
P_Y = P_{Y'}, where the joint law factors through the channel kernel as
P(x,y,y') = P_{XY'}(x,y') Q(y|x,y').  For a connected POST channel the value
of this program is the feedback capacity in nats.

The solver is projected gradient ascent with Dykstra alternating projections
onto (probability simplex) ∩ (stationarity affine subspace), Armijo
backtracking, and a linear-programming ascent certificate: the reported
``certificate_gap`` is max_s <grad, s - P> over the feasible polytope, an
upper bound on the remaining suboptimality by concavity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import PostChannel, SingularKernelError
from .linprog import simplex_solve

GRAD_CLIP = 1e-14  # entries are lifted to this floor before log-domain gradient work


class BoundaryError(ValueError):
    """A marginal needed by the gradient/Hessian vanishes at this point."""


@dataclass(frozen=True)
class JointInputState:
    """Decision variable of the program: P[x, y'] plus its stationarity residual."""

    P: np.ndarray
    stationarity_residual: np.ndarray

    def __post_init__(self):
        for name in ("P", "stationarity_residual"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def residual_inf(self) -> float:
        return float(np.max(np.abs(self.stationarity_residual)))

    def is_feasible(self, feas_tol: float = 1e-9) -> bool:
        return self.residual_inf <= feas_tol


def marginals(ch: PostChannel, P: np.ndarray):
    """(P_Y, P_Y', P_YY') induced by P through the kernel."""
    J = np.einsum("syx,xs->ys", ch.kernels, P)  # J[y, y'] = P_{YY'}
    return J.sum(axis=1), P.sum(axis=0), J


def make_state(ch: PostChannel, P: np.ndarray) -> JointInputState:
    P = np.asarray(P, dtype=float)
    p_y, p_yp, _ = marginals(ch, P)
    return JointInputState(P, p_y - p_yp)


def _xlogx(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    mask = v > 0
    out[mask] = v[mask] * np.log(v[mask])
    return out


def _cond_ent_terms(ch: PostChannel) -> np.ndarray:
    """E[x, y'] = sum_y Q log Q, the (negated) per-pair noise entropy; linear in P."""
    return _xlogx(ch.kernels).sum(axis=1).T  # kernels[s, y, x] -> (x, s)


def objective(ch: PostChannel, P) -> float:
    """I(X;Y|Y') in nats at P (stationarity not required); 0 log 0 = 0 throughout."""
    if isinstance(P, JointInputState):
        P = P.P
    _, p_yp, J = marginals(ch, P)
    return float(-_xlogx(J).sum() + _xlogx(p_yp).sum() + (P * _cond_ent_terms(ch)).sum())


def gradient(ch: PostChannel, P) -> np.ndarray:
    """Entrywise partials of I(X;Y|Y') w.r.t. P[x, y'].

    Equals the per-state divergence D(Q(.|x,y') || P_{Y|Y'}(.|y')).  Raises
    BoundaryError when a state marginal is zero or the conditional output law
    misses mass the kernel needs (the one-sided-limit cases).
    """
    if isinstance(P, JointInputState):
        P = P.P
    _, p_yp, J = marginals(ch, P)
    if np.any(p_yp <= 0):
        raise BoundaryError(f"P_Y'({int(np.argmin(p_yp))}) = 0; gradient undefined on this face")
    needed = ch.kernels.max(axis=2).T  # (y, s): mass the kernel can place on y from state s
    if np.any((J <= 0) & (needed > 0)):
        y, s = np.argwhere((J <= 0) & (needed > 0))[0]
        raise BoundaryError(f"P_YY'({y},{s}) = 0 but Q can reach it; gradient is one-sided")
    logJ = np.where(J > 0, np.log(np.maximum(J, 1e-300)), 0.0)
    lin = _cond_ent_terms(ch)
    cross = np.einsum("syx,ys->xs", ch.kernels, logJ)
    return lin - cross + np.log(p_yp)[None, :]


def hessian_blocks(ch: PostChannel, P) -> list:
    """Per-state |X| x |X| Hessian blocks of I(X;Y|Y'); the linear noise term drops out.

    Block y': (1/P_Y'(y')) (11^T - Q_{y'}^T D_{y'} Q_{y'}) with
    D_{y'} = diag(1 / P_{Y|Y'}(y|y')).  Requires strictly positive state and
    conditional-output marginals.
    """
    if isinstance(P, JointInputState):
        P = P.P
    _, p_yp, J = marginals(ch, P)
    blocks = []
    ones = np.ones((ch.x_size, ch.x_size))
    for s in range(ch.y_size):
        if p_yp[s] <= 0:
            raise BoundaryError(f"P_Y'({s}) = 0; Hessian block undefined")
        cond = J[:, s] / p_yp[s]
        if np.any(cond <= 0):
            raise BoundaryError(f"P_Y|Y'(.|{s}) has a zero entry; singular conditional at state {s}")
        Q = ch.kernels[s]
        blocks.append((ones - Q.T @ np.diag(1.0 / cond) @ Q) / p_yp[s])
    return blocks


# -- feasible set geometry -----------------------------------------------------


def stationarity_matrix(ch: PostChannel) -> np.ndarray:
    """A with (A p)(y) = P_Y(y) - P_Y'(y) for p = P.ravel() (row-major over (x, y'))."""
    n = ch.x_size * ch.y_size
    A = ch.kernels.transpose(1, 2, 0).reshape(ch.y_size, n).copy()  # [y, (x, y')] = Q(y|x,y')
    delta = np.tile(np.eye(ch.y_size), (ch.x_size, 1)).T.reshape(ch.y_size, n)
    return A - delta


class _Geometry:
    """Cached affine data for projecting onto {sum = 1, stationarity = 0}."""

    def __init__(self, ch: PostChannel):
        self.shape = (ch.x_size, ch.y_size)
        n = ch.x_size * ch.y_size
        self.A = stationarity_matrix(ch)
        self.M = np.vstack([np.ones((1, n)), self.A])
        self.b = np.zeros(self.M.shape[0])
        self.b[0] = 1.0
        self.K = np.linalg.pinv(self.M)
        _, sv, vt = np.linalg.svd(self.M)
        rank = int(np.sum(sv > 1e-12 * sv[0]))
        self.nullspace = vt[rank:].T  # orthonormal basis of {sum = 0, stationarity map = 0}

    def proj_affine(self, v: np.ndarray) -> np.ndarray:
        return v - self.K @ (self.M @ v - self.b)

    def dykstra(self, v: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
        """Projection onto simplex ∩ stationarity subspace (affine + orthant splitting)."""
        x = v.copy()
        p = np.zeros_like(v)
        q = np.zeros_like(v)
        for _ in range(max_iter):
            y = self.proj_affine(x + p)
            p = x + p - y
            x_new = np.maximum(y + q, 0.0)
            q = y + q - x_new
            if np.max(np.abs(x_new - x)) <= tol and np.max(np.abs(self.M @ x_new - self.b)) <= 10 * tol:
                return x_new
            x = x_new
        raise RuntimeError("Dykstra projection did not converge; channel is degenerate")


def project_feasible(ch: PostChannel, V: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
    """Euclidean projection of an (x, y') array onto the feasible set of the program."""
    geo = _Geometry(ch)
    return geo.dykstra(np.asarray(V, dtype=float).ravel(), tol, max_iter).reshape(geo.shape)


def feasible_init(ch: PostChannel) -> JointInputState:
    """Uniform conditional inputs with the induced stationary state law.

    The induced state kernel is K(y|y') = mean_x Q(y|x,y'); its stationary
    distribution exists for connected channels.  A reducible induced chain is
    reported via the stationarity residual of the returned point.
    """
    K = ch.kernels.mean(axis=2).T  # K[y, y']
    pi = _stationary(K)
    P = np.full((ch.x_size, ch.y_size), 1.0 / ch.x_size) * pi[None, :]
    return make_state(ch, P)


def _stationary(K: np.ndarray) -> np.ndarray:
    y = K.shape[0]
    M = np.vstack([K - np.eye(y), np.ones((1, y))])
    rhs = np.zeros(y + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def random_feasible(ch: PostChannel, rng: np.random.Generator, interior: float = 0.0) -> JointInputState:
    """Random feasible point: Dirichlet conditional inputs + induced stationary state law.

    ``interior`` mixes toward the uniform-conditional feasible point to keep
    entries away from the boundary (the feasible set is convex).
    """
    cond = rng.dirichlet(np.ones(ch.x_size), size=ch.y_size).T  # [x, y']
    K = np.einsum("syx,xs->ys", ch.kernels, cond)
    pi = _stationary(K)
    P = cond * pi[None, :]
    if interior > 0.0:
        P = (1.0 - interior) * P + interior * feasible_init(ch).P
    return make_state(ch, P)


# -- solver --------------------------------------------------------------------


@dataclass(frozen=True)
class FeedbackResult:
    c_f_nats: float
    maximizer: JointInputState
    output_kernel: np.ndarray   # column y' = P*_{Y|Y'}(.|y')
    input_kernel: np.ndarray    # column y' = P*_{X|Y'}(.|y')
    stationary: np.ndarray      # P*_{Y'}
    iterations: int
    certificate_gap: float
    converged: bool


def _ascent_gap(geo: _Geometry, g: np.ndarray, p: np.ndarray) -> float:
    """Best feasible linearized improvement max_s <g, s - p>; bounds the suboptimality."""
    res = simplex_solve(geo.M, geo.b, -g)
    if res.status != "optimal":
        return float("inf")
    return float(-res.value - g @ p)


def solve_fcap(
    ch: PostChannel,
    tol: float = 1e-9,
    max_iter: int = 200_000,
    *,
    x0: np.ndarray | None = None,
    check_every: int = 25,
    newton_refine: bool = False,
) -> FeedbackResult:
    """Solve the stationarity-constrained conditional-MI maximization.

    Projected gradient ascent with Barzilai-Borwein step seeding and Armijo
    backtracking.  Steps move along an orthonormal basis of the stationarity
    nullspace, so they stay on the affine constraint exactly; the Dykstra
    projection engages only when a trial point leaves the nonnegative
    orthant.  Stops when the LP ascent certificate drops to ``tol`` (then
    ``c_f_nats >= optimum - tol``); otherwise returns the best iterate with
    ``converged=False``.  ``newton_refine`` adds an equality-constrained
    Newton polish using the analytic Hessian blocks (off by default).
    """
    geo = _Geometry(ch)
    if x0 is None:
        p = feasible_init(ch).P.ravel()
    else:
        p = geo.dykstra(np.asarray(x0, dtype=float).ravel())
    N = geo.nullspace

    def grad_at(vec):
        P = np.maximum(vec.reshape(geo.shape), GRAD_CLIP)
        return gradient(ch, P).ravel()

    def f_at(vec):
        return objective(ch, vec.reshape(geo.shape))

    f = f_at(p)
    step = 1.0
    gap = float("inf")
    gz_prev = None
    dz_prev = None
    stalls = 0
    it = 0
    for it in range(1, int(max_iter) + 1):
        g = grad_at(p)
        gz = N.T @ g
        if gz_prev is not None and dz_prev is not None:
            denom = float(dz_prev @ (gz - gz_prev))
            if abs(denom) > 1e-300:
                step = abs(float(dz_prev @ dz_prev) / denom)
            step = min(max(step, 1e-12), 1e8)
        accepted = False
        s_try = step
        for _ in range(80):
            cand = p + s_try * (N @ gz)
            if cand.min() < 0.0:
                try:
                    # tight projection: looser tolerances leak noise into the line search
                    cand = geo.dykstra(cand, tol=1e-15)
                except RuntimeError:
                    s_try *= 0.5  # awkward geometry at this radius; shorter steps stay closer
                    continue
            d = cand - p
            f_new = f_at(cand)
            # noise floor keeps the line search honest once f differences sink into roundoff
            if f_new >= f + 1e-4 * (g @ d) - 1e-15 * (1.0 + abs(f)):
                accepted = True
                break
            s_try *= 0.5
        if not accepted:
            gap = _ascent_gap(geo, g, p)
            break
        gz_prev = gz
        dz_prev = N.T @ d
        move = float(np.max(np.abs(d)))
        p, f = cand, f_new
        if it % 128 == 0:
            p = geo.proj_affine(p)  # shed accumulated roundoff drift
            p = geo.dykstra(p) if p.min() < 0 else p
            f = f_at(p)
        if it % check_every == 0 or move <= 1e-15:
            gap = _ascent_gap(geo, grad_at(p), p)
            if gap <= tol:
                break
            # iterates pinned to machine precision with the gap floor above tol:
            # more iterations cannot help, so stop and report honestly
            stalls = stalls + 1 if move <= 1e-15 else 0
            if stalls >= 3:
                break
    else:
        gap = _ascent_gap(geo, grad_at(p), p)

    if newton_refine:
        p, f = _newton_polish(ch, geo, p, f)
        gap = min(gap, _ascent_gap(geo, grad_at(p), p))

    P = p.reshape(geo.shape)
    state = make_state(ch, P)
    p_yp = np.maximum(P.sum(axis=0), 1e-300)
    _, _, J = marginals(ch, P)
    return FeedbackResult(
        c_f_nats=f,
        maximizer=state,
        output_kernel=J / p_yp[None, :],
        input_kernel=P / p_yp[None, :],
        stationary=P.sum(axis=0),
        iterations=it,
        certificate_gap=max(gap, 0.0),
        converged=bool(gap <= tol),
    )


def _newton_polish(ch: PostChannel, geo: _Geometry, p: np.ndarray, f: float, rounds: int = 5):
    """Equality-constrained Newton steps on the current (interior) face."""
    n = p.size
    for _ in range(rounds):
        P = np.maximum(p.reshape(geo.shape), GRAD_CLIP)
        try:
            blocks = hessian_blocks(ch, P)
        except BoundaryError:
            return p, f
        g = gradient(ch, P).ravel()
        H = np.zeros((n, n))
        for s, B in enumerate(blocks):
            idx = np.arange(ch.x_size) * ch.y_size + s
            H[np.ix_(idx, idx)] = B
        m = geo.M.shape[0]
        kkt = np.zeros((n + m, n + m))
        kkt[:n, :n] = H - 1e-12 * np.eye(n)  # regularize the scaling null direction
        kkt[:n, n:] = geo.M.T
        kkt[n:, :n] = geo.M
        rhs = np.concatenate([-g, np.zeros(m)])
        try:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        except np.linalg.LinAlgError:
            return p, f
        d = sol[:n]
        for scale in (1.0, 0.5, 0.25, 0.1):
            cand = geo.dykstra(p + scale * d)
            f_new = objective(ch, cand.reshape(geo.shape))
            if f_new >= f - 1e-14 * (1.0 + abs(f)):
                p, f = cand, f_new
                break
        else:
            return p, f
    return p, f


def uniqueness_probe(ch: PostChannel, result: FeedbackResult, restarts: int, seed: int = 0,
                     tol: float = 1e-9) -> dict:
    """Dispersion of re-solves from random feasible starts: max pairwise total variation.

    Non-convergent restarts are excluded and counted.  A single restart gives
    dispersion 0 by definition.
    """
    rng = np.random.default_rng(seed)
    points = []
    failures = 0
    for _ in range(int(restarts)):
        start = random_feasible(ch, rng, interior=0.05)
        res = solve_fcap(ch, tol=tol, x0=start.P)
        if res.converged:
            points.append(res.maximizer.P)
        else:
            failures += 1
    max_tv = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            max_tv = max(max_tv, 0.5 * float(np.abs(points[i] - points[j]).sum()))
    return {"max_tv": max_tv, "converged_restarts": len(points), "failures": failures}


def support_restriction(ch: PostChannel, S) -> PostChannel:
    """Restrict the input alphabet to S (|S| = |Y|) for the equal-alphabet pipeline.

    Every restricted state matrix must be nonsingular; a singular one is
    reported by state.
    """
    S = sorted(int(x) for x in S)
    if len(S) != ch.y_size:
        raise ValueError(f"|S|={len(S)} must equal |Y|={ch.y_size}")
    if any(x < 0 or x >= ch.x_size for x in S):
        raise ValueError(f"S={S} not a subset of the input alphabet")
    for yp in range(ch.y_size):
        sub = ch.kernels[yp][:, S]
        if np.linalg.svd(sub, compute_uv=False)[-1] <= 1e-12:
            raise SingularKernelError(f"restricted state matrix for y'={yp} is singular")
    return PostChannel(ch.kernels[:, :, S])
