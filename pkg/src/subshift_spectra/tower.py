"""Parameter schedules, energy-exclusion sets, and acceleration checks.

The tower machinery turns a return-word decomposition into a per-level
parameter schedule (growth exponents chi_n, thresholds kappa_n, drift
budgets zeta_n, ...), removes the energies where consecutive return-word
frames become nearly tangent across the marker block (the exclusion sets),
and verifies on the remaining energies that products of return-word
matrices grow like the schedule promises while their singular frames drift
within budget.

Large dilations are handled in log space throughout: lam_bar_n can exceed
the float range after one acceleration step, so every formula involving it
is evaluated via log lam_bar_n = chi_n * inf l_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .intervals import IntervalSet
from .sl2 import _dist_mod_pi, cocycle_stack, svd_angles_stack
from .words import Potential, ReturnStructure, SubshiftSpec, Word, return_structure

PI = math.pi


class ScheduleError(ValueError):
    """A schedule precondition or recursion failed; the message names it."""


# ---------------------------------------------------------------------------
# Configured constants


@dataclass(frozen=True)
class Constants:
    """Absolute constants of the estimates, exposed as configuration.

    None of these are pinned by theory at desk scale; defaults are chosen so
    the full pipeline runs at couplings of a few hundred.  ``C`` defaults to
    a grid-refined bound on the marker-block norms and derivatives (see
    ``critical_matrix_bound``).
    """

    H: float = 3.0  # half-width of the energy window around each potential value
    cone_gap: float = 3.0  # minimal |E - v| for the invariant-cone certificate
    cone_eps: float = 0.5  # cone half-slope
    P: int = 3  # exponent of C in the per-step growth cost
    C: float | None = None  # marker-block norm bound; None -> grid-refined
    C_prime: float = 0.1  # floor on chi_n relative to chi_0
    C2: float = 1.0  # cap constant for usable window arities
    c_slack: float = 100.0  # slack for all "up to a universal constant" claims
    K_max: int = 64  # runtime cap on marker-run lengths
    triple_component_cap: int = 1024  # max components per exclusion triple


def critical_matrix_bound(
    pot: Potential,
    alpha0: str,
    max_run: int,
    h: float,
    grid: int = 257,
) -> float:
    """Upper bound C on ||C^E_k|| and ||d/dE C^E_k|| for k <= max_run, E in I.

    C^E is the marker letter's transfer matrix; powers and their energy
    derivatives are evaluated on a grid over [E0 - H, E0 + H] and the
    maximum spectral norm is returned (capped by the analytic bound
    max_run * (2 + H)^max_run).
    """
    e0 = pot.value(alpha0)
    energies = np.linspace(e0 - h, e0 + h, grid)
    c = np.zeros((grid, 2, 2))
    c[:, 0, 0] = energies - e0
    c[:, 0, 1] = -1.0
    c[:, 1, 0] = 1.0
    dc = np.zeros((grid, 2, 2))
    dc[:, 0, 0] = 1.0

    def spec_norm(m: np.ndarray) -> float:
        return float(np.linalg.norm(m, ord=2, axis=(1, 2)).max())

    worst = 0.0
    power = np.broadcast_to(np.eye(2), (grid, 2, 2)).copy()
    dpower = np.zeros((grid, 2, 2))
    for _ in range(max_run):
        dpower = dpower @ c + power @ dc
        power = power @ c
        worst = max(worst, spec_norm(power), spec_norm(dpower))
    analytic = max_run * (2.0 + h) ** max_run
    return min(max(worst, 1.0), analytic)


# ---------------------------------------------------------------------------
# Parameter schedule


@dataclass(frozen=True)
class LevelParams:
    n: int
    N: int  # grouping arity from this level to the next
    eta: float
    chi: float
    log_lam_bar: float
    M: float
    inf_l: int
    sup_l: int

    @property
    def kappa(self) -> float:
        return math.exp(self.log_kappa)

    @property
    def log_kappa(self) -> float:
        return -self.eta * self.log_lam_bar

    @property
    def lam_bar(self) -> float:
        try:
            return math.exp(self.log_lam_bar)
        except OverflowError:
            return math.inf


@dataclass(frozen=True)
class ScheduleCheck:
    name: str
    ok: bool
    required: bool  # construction identity (True) vs large-coupling item (False)
    detail: str


@dataclass
class ParamSchedule:
    """Exponent bookkeeping for the accelerated return-word cocycles."""

    gamma: float
    gamma_prime: float
    c: float
    xi: float
    lam: float
    consts: Constants
    c_value: float  # resolved marker-block bound C
    levels: list[LevelParams] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)  # failed large-coupling items

    def level(self, n: int) -> LevelParams:
        if not 0 <= n < len(self.levels):
            raise ScheduleError(f"schedule has levels 0..{len(self.levels) - 1}, not {n}")
        return self.levels[n]

    def zeta(self, n: int) -> float:
        try:
            return math.exp(self.log_zeta(n))
        except OverflowError:
            return math.inf

    def log_zeta(self, n: int) -> float:
        """log of zeta_n = C^P lam_bar_n^(2 eta_n - 2) N_n."""
        lv = self.level(n)
        return (
            self.consts.P * math.log(self.c_value)
            + (2.0 * lv.eta - 2.0) * lv.log_lam_bar
            + math.log(lv.N)
        )

    # -- invariants --------------------------------------------------------

    def check_invariants(self) -> list[ScheduleCheck]:
        """Machine-check every schedule identity and large-coupling item.

        Required checks are construction identities; the rest hold only once
        the coupling clears unspecified thresholds and are reported as
        warnings, naming the failed inequality.
        """
        out: list[ScheduleCheck] = []
        g, gp, c = self.gamma, self.gamma_prime, self.c

        def add(name: str, ok: bool, required: bool, detail: str = "") -> None:
            out.append(ScheduleCheck(name, bool(ok), required, detail))

        add("0 < gamma < gamma_prime < 1/4", 0 < g < gp < 0.25, True, f"gamma={g}, gamma'={gp}")
        add("gamma_prime < c < 2 - 3*gamma_prime", gp < c < 2 - 3 * gp, True, f"c={c}")
        add(
            "xi = -(1/10) log gamma_prime",
            abs(self.xi + 0.1 * math.log(gp)) <= 1e-15,
            True,
            f"xi={self.xi}",
        )
        n0 = self.levels[0].N
        add(
            "sum_n log((N_n+1)/N_n) < xi",
            2.0 / n0 < self.xi,
            True,
            f"bound 2/N_0={2.0 / n0:.6g} vs xi={self.xi:.6g}",
        )
        lv0 = self.levels[0]
        for lv in self.levels:
            add(
                f"N_{lv.n} >= 2/(1 - exp(-xi))",
                lv.N >= 2.0 / (1.0 - math.exp(-self.xi)),
                True,
                f"N={lv.N}",
            )
            add(
                f"gamma/2^{lv.n} < eta_{lv.n} <= eta_0 < gamma_prime",
                g / 2**lv.n < lv.eta <= lv0.eta < gp,
                True,
                f"eta={lv.eta}",
            )
            add(
                f"sup l_{lv.n} <= M_{lv.n} inf l_{lv.n}",
                lv.sup_l <= lv.M * lv.inf_l * (1 + 1e-12),
                True,
                f"sup={lv.sup_l}, M*inf={lv.M * lv.inf_l:.6g}",
            )
        for prev, nxt in zip(self.levels, self.levels[1:]):
            add(f"N_{nxt.n} <= 2 N_{prev.n}", nxt.N <= 2 * prev.N, True)
            add(
                f"lam_bar_{nxt.n} = exp(chi_{nxt.n} inf l_{nxt.n})",
                abs(nxt.log_lam_bar - nxt.chi * nxt.inf_l) <= 1e-9 * max(1.0, abs(nxt.log_lam_bar)),
                True,
            )
            add(
                f"M_{nxt.n} = ((N_{prev.n}+1)/N_{prev.n}) M_{prev.n}",
                abs(nxt.M - (prev.N + 1) / prev.N * prev.M) <= 1e-12 * max(1.0, prev.M),
                True,
            )
        # large-coupling items, warned not asserted
        chi0 = self.levels[0].chi
        for lv in self.levels:
            add(
                f"zeta_{lv.n} < lam_bar_{lv.n}^-c",
                self.log_zeta(lv.n) < -c * lv.log_lam_bar,
                False,
                f"log zeta={self.log_zeta(lv.n):.6g} vs {-c * lv.log_lam_bar:.6g}",
            )
            add(
                f"chi_{lv.n} > C' chi_0",
                lv.chi > self.consts.C_prime * chi0,
                False,
                f"chi={lv.chi:.6g}",
            )
            add(
                f"lam_bar_{lv.n}^-gamma' < kappa_{lv.n} < lam_bar_0^-gamma",
                -gp * lv.log_lam_bar < lv.log_kappa < -g * lv0.log_lam_bar,
                False,
                f"log kappa={lv.log_kappa:.6g}",
            )
            add(
                f"M_{lv.n} <= C'' M_0",
                lv.M <= math.exp(self.xi) * lv0.M * (1 + 1e-12),
                False,
                f"M={lv.M:.6g}, C''={math.exp(self.xi):.6g}",
            )
            add(
                f"N_{lv.n}+1 <= C2^-1 kappa_{lv.n}^3 lam_bar_{lv.n}^2",
                math.log(lv.N + 1) + math.log(self.consts.C2)
                <= 3 * lv.log_kappa + 2 * lv.log_lam_bar,
                False,
            )
        for prev, nxt in zip(self.levels, self.levels[1:]):
            add(
                f"kappa_{nxt.n} < kappa_{prev.n}",
                nxt.log_kappa < prev.log_kappa,
                False,
                "observed tangency thresholds shrink level by level",
            )
        return out

    def failed_checks(self) -> list[ScheduleCheck]:
        return [c for c in self.check_invariants() if not c.ok]


def init_schedule(
    gamma: float,
    gamma_prime: float,
    c: float,
    lam: float,
    inf_l0: int,
    sup_l0: int,
    consts: Constants,
    c_value: float,
) -> ParamSchedule:
    """Level-0 schedule from the coupling and observed level-0 return lengths.

    lam_bar_0 = lam/2 and chi_0 = log lam_bar_0 (valid once every non-marker
    letter is at least lam - H away in energy), M_0 = sup l_0 / inf l_0,
    xi = -(1/10) log gamma', eta_n = ((gamma+gamma')/2) 2^-n, and
    N_0 = max(ceil(2/(1-e^-xi)), ceil(4/xi)) with N_{n+1} = 2 N_n, which
    satisfies every arity constraint with closed-form margin.
    """
    if not 0 < gamma:
        raise ScheduleError("parameter chain violated: need 0 < gamma")
    if not gamma < gamma_prime:
        raise ScheduleError("parameter chain violated: need gamma < gamma_prime")
    if not gamma_prime < 0.25:
        raise ScheduleError("parameter chain violated: need gamma_prime < 1/4")
    if not gamma_prime < c:
        raise ScheduleError("parameter chain violated: need gamma_prime < c")
    if not c < 2.0 - 3.0 * gamma_prime:
        raise ScheduleError("parameter chain violated: need c < 2 - 3*gamma_prime")
    if not lam > 2.0 * consts.cone_gap:
        raise ScheduleError(
            f"coupling lam={lam} too small: need lam > 2*cone_gap = {2 * consts.cone_gap}"
        )
    if inf_l0 < 1 or sup_l0 < inf_l0:
        raise ScheduleError(f"bad level-0 length stats: inf={inf_l0}, sup={sup_l0}")

    xi = -0.1 * math.log(gamma_prime)
    n0 = max(math.ceil(2.0 / (1.0 - math.exp(-xi))), math.ceil(4.0 / xi))
    lam_bar0 = 0.5 * lam
    chi0 = math.log(lam_bar0)
    level0 = LevelParams(
        n=0,
        N=n0,
        eta=0.5 * (gamma + gamma_prime),
        chi=chi0,
        log_lam_bar=chi0,
        M=sup_l0 / inf_l0,
        inf_l=inf_l0,
        sup_l=sup_l0,
    )
    return ParamSchedule(gamma, gamma_prime, c, xi, lam, consts, c_value, [level0])


def advance_schedule(
    sched: ParamSchedule,
    inf_l_next: int,
    sup_l_next: int,
    observed_r: tuple[int, int] | None = None,
) -> ParamSchedule:
    """Append the next level's parameters from the observed return lengths.

    chi_{n+1} = chi_n + (log kappa_n - P log C) / inf l_n, the exact infimum
    of the per-window growth exponent (attained by a single shortest block,
    since the numerator is negative); then lam_bar, kappa, M, zeta follow
    their defining recursions.  Raises ``ScheduleError`` when chi_{n+1} <= 0,
    i.e. the coupling is too small for this schedule.
    """
    cur = sched.levels[-1]
    step = (cur.log_kappa - sched.consts.P * math.log(sched.c_value)) / cur.inf_l
    chi_next = cur.chi + step
    if chi_next <= 0.0:
        raise ScheduleError(
            f"coupling too small for this schedule: chi_{cur.n + 1} = {chi_next:.6g} <= 0"
        )
    if inf_l_next < 1 or sup_l_next < inf_l_next:
        raise ScheduleError(f"bad level-{cur.n + 1} length stats")
    if observed_r is not None and not (
        cur.N <= observed_r[0] and observed_r[1] <= cur.N + 1
    ):
        raise ScheduleError(
            f"observed window arities {observed_r} not in {{N_n, N_n+1}} = "
            f"{{{cur.N}, {cur.N + 1}}}"
        )
    nxt = LevelParams(
        n=cur.n + 1,
        N=2 * cur.N,
        eta=0.5 * cur.eta,
        chi=chi_next,
        log_lam_bar=chi_next * inf_l_next,
        M=(cur.N + 1) / cur.N * cur.M,
        inf_l=inf_l_next,
        sup_l=sup_l_next,
    )
    sched.levels.append(nxt)
    for chk in sched.check_invariants():
        if not chk.required and not chk.ok and chk.name not in sched.warnings:
            sched.warnings.append(chk.name)
    return sched


# ---------------------------------------------------------------------------
# Exclusion sets


@dataclass(frozen=True)
class TripleExclusion:
    alpha: Word  # core word whose expanding frame enters from the right
    beta: Word  # core word whose contracting frame receives on the left
    j: int  # marker-run length of the block in between
    intervals: IntervalSet
    c1_hat: float  # empirical min |d(angle)/dE| over the grid
    c5_hat: float  # empirical Lipschitz constant of the angle map in (u, s)

    @property
    def measure(self) -> float:
        return self.intervals.measure


@dataclass
class ExclusionReport:
    level: int
    kappa: float
    interval: tuple[float, float]
    grid: int
    refine_tol: float
    triples: list[TripleExclusion]
    j_set: IntervalSet
    c1_hat: float
    c5_hat: float  # max frame-perturbation sensitivity over triples
    warnings: list[str]

    @property
    def measure(self) -> float:
        return self.j_set.measure


def _refine_boundaries(
    member: Callable[[np.ndarray], np.ndarray],
    false_pts: np.ndarray,
    true_pts: np.ndarray,
    tol: float,
) -> np.ndarray:
    """Vector bisection; returns the refined points on the non-member side."""
    f = false_pts.astype(float).copy()
    t = true_pts.astype(float).copy()
    if f.size == 0:
        return f
    gap = float(np.max(np.abs(f - t)))
    rounds = max(0, math.ceil(math.log2(max(gap / tol, 1.0))))
    for _ in range(rounds):
        mid = 0.5 * (f + t)
        inside = member(mid)
        t = np.where(inside, mid, t)
        f = np.where(inside, f, mid)
    return f


def _membership_intervals(
    member: Callable[[np.ndarray], np.ndarray],
    grid_pts: np.ndarray,
    grid_member: np.ndarray,
    tol: float,
) -> list[tuple[float, float]]:
    """Sublevel components from grid membership plus bisection-refined edges.

    Recorded endpoints sit on the outside of each component (conservative by
    at most ``tol`` per side); components entirely between grid points are
    missed, which is the documented grid resolution limit.
    """
    n = grid_pts.size
    runs: list[tuple[int, int]] = []
    i = 0
    while i < n:
        if grid_member[i]:
            j = i
            while j + 1 < n and grid_member[j + 1]:
                j += 1
            runs.append((i, j))
            i = j + 1
        else:
            i += 1
    if not runs:
        return []

    lefts = [r for r in runs if r[0] > 0]
    rights = [r for r in runs if r[1] < n - 1]
    left_refined = _refine_boundaries(
        member,
        np.array([grid_pts[i0 - 1] for i0, _ in lefts]),
        np.array([grid_pts[i0] for i0, _ in lefts]),
        tol,
    )
    right_refined = _refine_boundaries(
        member,
        np.array([grid_pts[i1 + 1] for _, i1 in rights]),
        np.array([grid_pts[i1] for _, i1 in rights]),
        tol,
    )
    left_map = {r: v for r, v in zip(lefts, left_refined)}
    right_map = {r: v for r, v in zip(rights, right_refined)}
    out = []
    for run in runs:
        lo = left_map.get(run, grid_pts[0])
        hi = right_map.get(run, grid_pts[-1])
        out.append((float(lo), float(hi)))
    return out


def exclusion_sets(
    structure: ReturnStructure,
    level: int,
    pot: Potential,
    kappa: float,
    interval: tuple[float, float],
    grid: int,
    refine_tol: float,
    consts: Constants = Constants(),
) -> ExclusionReport:
    """Energies where two return-word frames are kappa-tangent across the marker.

    For each pair (alpha, beta) of level cores and each observed marker-run
    length j, the excluded set is {E : g(E) <= kappa} with

        g(E) = angle( R_(pi/2 - s(A^E(beta))) C^E_j R_(u(A^E(alpha))) e1, e2 ),

    found by uniform sampling plus bisection refinement of each component
    edge.  Energies where either core's cocycle is rotation-like are folded
    into the exclusion (tangency is then undefined but hyperbolicity fails,
    which is exactly what exclusion must cover).
    """
    if grid < 8:
        raise ValueError("grid must have at least 8 points")
    if not 0.0 <= kappa <= PI / 2:
        raise ValueError("kappa must lie in [0, pi/2]")
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("empty energy interval")

    lv = structure.level(level)
    cores = lv.cores
    runs = lv.runs
    e0 = pot.value(structure.alpha0)
    warnings: list[str] = []

    def core_frames(core: Word, energies: np.ndarray):
        mats = cocycle_stack(core, energies, pot)
        return svd_angles_stack(mats)

    def marker_power(j: int, energies: np.ndarray) -> np.ndarray:
        c = np.zeros((energies.size, 2, 2))
        c[:, 0, 0] = energies - e0
        c[:, 0, 1] = -1.0
        c[:, 1, 0] = 1.0
        out = c
        for _ in range(j - 1):
            out = c @ out
        return out

    def gap_angle(
        u_a: np.ndarray, s_b: np.ndarray, cpow: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """(g, phi): distance of the composed frame vector to e2, and its
        raw projective angle (for derivative estimates)."""
        vx, vy = np.cos(u_a), np.sin(u_a)
        wx = cpow[:, 0, 0] * vx + cpow[:, 0, 1] * vy
        wy = cpow[:, 1, 0] * vx + cpow[:, 1, 1] * vy
        rot = PI / 2 - s_b
        zx = np.cos(rot) * wx - np.sin(rot) * wy
        zy = np.sin(rot) * wx + np.cos(rot) * wy
        phi = np.arctan2(zy, zx) % PI
        return _dist_mod_pi(phi, PI / 2), phi

    grid_pts = np.linspace(lo, hi, grid)
    cache = {core: core_frames(core, grid_pts) for core in cores}
    cpow_cache = {j: marker_power(j, grid_pts) for j in runs}

    triples: list[TripleExclusion] = []
    all_pairs: list[tuple[float, float]] = []
    c1_level = math.inf
    c5_level = 0.0
    de = grid_pts[1] - grid_pts[0]
    frame_delta = 1e-4  # probe size for the empirical frame-angle sensitivity

    for alpha in cores:
        for beta in cores:
            u_a, _, _, hyp_a = cache[alpha]
            _, s_b, _, hyp_b = cache[beta]
            both = hyp_a & hyp_b
            for j in runs:
                g, phi = gap_angle(u_a, s_b, cpow_cache[j])
                grid_member = np.where(both, g <= kappa, True)

                # empirical Lipschitz constant of the composed angle under
                # frame perturbations (the unnamed closeness constant):
                # perturb u and s separately and take the worst rate
                _, phi_u = gap_angle(u_a + frame_delta, s_b, cpow_cache[j])
                _, phi_s = gap_angle(u_a, s_b + frame_delta, cpow_cache[j])
                sens = np.maximum(
                    _dist_mod_pi(phi_u, phi), _dist_mod_pi(phi_s, phi)
                ) / frame_delta
                c5 = float(np.max(sens[both], initial=0.0))
                c5_level = max(c5_level, c5)

                def member(e: np.ndarray) -> np.ndarray:
                    ua, _, _, ha = core_frames(alpha, e)
                    _, sb, _, hb = core_frames(beta, e)
                    gg, _ = gap_angle(ua, sb, marker_power(j, e))
                    return np.where(ha & hb, gg <= kappa, True)

                pairs = _membership_intervals(member, grid_pts, grid_member, refine_tol)
                if len(pairs) > consts.triple_component_cap:
                    raise RuntimeError(
                        f"triple ({alpha!r}, {beta!r}, {j}) produced {len(pairs)} "
                        f"components, above cap {consts.triple_component_cap}"
                    )
                steps = _dist_mod_pi(phi[1:], phi[:-1])
                valid = both[1:] & both[:-1]
                c1 = float(np.min(steps[valid]) / de) if valid.any() else math.inf
                c1_level = min(c1_level, c1)
                triples.append(
                    TripleExclusion(
                        alpha, beta, j, IntervalSet.from_pairs(pairs), c1, c5
                    )
                )
                all_pairs.extend(pairs)

    j_set = IntervalSet.from_pairs(all_pairs).clip(lo, hi)
    return ExclusionReport(
        level, kappa, (lo, hi), grid, refine_tol, triples, j_set, c1_level, c5_level,
        warnings,
    )


# ---------------------------------------------------------------------------
# Acceleration verification


@dataclass
class AccelerationReport:
    """Aggregate outcome of window checks over an energy grid.

    A "window" is a product of r consecutive level blocks
    B(last) C ... C B(first); checks per window and energy:

    * hyperbolicity of the product,
    * |u(window) - u(last block)| and |s(window) - s(first block)| <= zeta,
    * log growth >= chi_next * (total window length),
    * log growth >= -P r log C + sum of block log growths + r log kappa.

    The per-block inequality log lam(B) >= chi_n * l is reported as a rate
    only: with short cores it overstates the actual one-block growth.
    """

    level: int
    r_max: int
    energies: list[float]
    n_windows: int
    n_checks: int
    hyper_violations: int
    drift_failures: int
    growth_chi_failures: int
    growth_product_failures: int
    block_floor_failures: int
    worst_drift: float
    worst_growth_margin: float  # min of (log lam - bound), over both bounds
    block_chi_rate: float  # fraction of blocks with log lam >= chi_n * l
    zeta: float
    chi_next: float

    @property
    def all_passed(self) -> bool:
        return (
            self.hyper_violations == 0
            and self.drift_failures == 0
            and self.growth_chi_failures == 0
            and self.growth_product_failures == 0
            and self.block_floor_failures == 0
        )


def verify_windows(
    block_mats: Sequence[np.ndarray],
    marker_mats: Sequence[np.ndarray],
    lengths: Sequence[int],
    *,
    level: int,
    energies: np.ndarray,
    zeta: float,
    chi_n: float,
    chi_next: float,
    log_kappa: float,
    log_lam_bar: float,
    p_const: int,
    log_c: float,
    r_max: int,
) -> AccelerationReport:
    """Core window verification over per-entry matrix stacks.

    ``block_mats[k]`` is the (m, 2, 2) stack of the k-th core cocycle over
    the energy grid and ``marker_mats[k]`` the matching marker-run power that
    precedes it; windows are all contiguous runs of 1..r_max entries.
    """
    n_entries = len(block_mats)
    m = energies.size
    us, ss, lls = [], [], []
    block_floor_failures = 0
    block_chi_hits = 0
    for k in range(n_entries):
        u, s, ll, hyp = svd_angles_stack(block_mats[k])
        us.append(u)
        ss.append(s)
        lls.append(ll)
        block_floor_failures += int(np.sum(~hyp | (ll < log_lam_bar - 1e-12)))
        block_chi_hits += int(np.sum(ll >= chi_n * lengths[k]))

    n_windows = 0
    n_checks = 0
    hyper_violations = 0
    drift_failures = 0
    growth_chi_failures = 0
    growth_product_failures = 0
    worst_drift = 0.0
    worst_margin = math.inf

    for p0 in range(n_entries):
        acc = block_mats[p0]
        sum_len = 0
        sum_ll = np.zeros(m)
        for r in range(1, min(r_max, n_entries - p0) + 1):
            k = p0 + r - 1
            if r > 1:
                acc = block_mats[k] @ (marker_mats[k] @ acc)
            sum_len += lengths[k]
            sum_ll = sum_ll + lls[k]
            n_windows += 1
            n_checks += m

            u_w, s_w, ll_w, hyp_w = svd_angles_stack(acc)
            hyper_violations += int(np.sum(~hyp_w))
            u_drift = _dist_mod_pi(u_w, us[k])
            s_drift = _dist_mod_pi(s_w, ss[p0])
            drift = np.where(hyp_w, np.maximum(u_drift, s_drift), np.inf)
            drift_failures += int(np.sum(drift > zeta))
            worst_drift = max(worst_drift, float(np.max(np.where(hyp_w, drift, 0.0), initial=0.0)))

            bound_chi = chi_next * sum_len
            bound_prod = -p_const * r * log_c + sum_ll + r * log_kappa
            growth_chi_failures += int(np.sum(ll_w < bound_chi))
            growth_product_failures += int(np.sum(ll_w < bound_prod))
            worst_margin = min(
                worst_margin,
                float(np.min(ll_w - bound_chi)),
                float(np.min(ll_w - bound_prod)),
            )

    return AccelerationReport(
        level=level,
        r_max=r_max,
        energies=[float(e) for e in energies],
        n_windows=n_windows,
        n_checks=n_checks,
        hyper_violations=hyper_violations,
        drift_failures=drift_failures,
        growth_chi_failures=growth_chi_failures,
        growth_product_failures=growth_product_failures,
        block_floor_failures=block_floor_failures,
        worst_drift=worst_drift,
        worst_growth_margin=worst_margin,
        block_chi_rate=block_chi_hits / max(1, n_entries * m),
        zeta=zeta,
        chi_next=chi_next,
    )


def acceleration_verify(
    structure: ReturnStructure,
    sched: ParamSchedule,
    pot: Potential,
    energies: np.ndarray,
    level: int,
    r_max: int,
) -> AccelerationReport:
    """Check the accelerated-cocycle growth and frame-drift claims at ``level``.

    The energy grid must avoid the cumulative exclusion sets up to ``level``;
    violations show up as hyperbolicity flags rather than exceptions, which
    signals an under-refined exclusion set.
    """
    if level + 1 >= len(sched.levels):
        raise ScheduleError(f"schedule must be advanced past level {level}")
    lv = sched.level(level)
    energies = np.asarray(energies, dtype=float)
    entries = structure.level(level).entries
    e0 = pot.value(structure.alpha0)

    def marker_power(j: int) -> np.ndarray:
        c = np.zeros((energies.size, 2, 2))
        c[:, 0, 0] = energies - e0
        c[:, 0, 1] = -1.0
        c[:, 1, 0] = 1.0
        out = c
        for _ in range(j - 1):
            out = c @ out
        return out

    cpow = {j: marker_power(j) for j in structure.level(level).runs}
    block_mats = [cocycle_stack(e.core, energies, pot) for e in entries]
    marker_mats = [cpow[e.run] for e in entries]
    lengths = [e.length for e in entries]

    return verify_windows(
        block_mats,
        marker_mats,
        lengths,
        level=level,
        energies=energies,
        zeta=sched.zeta(level),
        chi_n=lv.chi,
        chi_next=sched.level(level + 1).chi,
        log_kappa=lv.log_kappa,
        log_lam_bar=lv.log_lam_bar,
        p_const=sched.consts.P,
        log_c=math.log(sched.c_value),
        r_max=r_max,
    )


# ---------------------------------------------------------------------------
# Covering and measure check


@dataclass(frozen=True)
class CoveringReport:
    approx_measure: float  # measure of approximant within the window
    residue: float  # measure of approximant not covered by the dilated exclusion
    residue_fraction: float
    covered: bool
    dilation: float
    jbar_measure: float
    c3_hat: float  # Leb(Jbar) * lam^gamma

    @property
    def summary(self) -> str:
        status = "covered" if self.covered else f"residue {self.residue:.3e}"
        return f"approx {self.approx_measure:.6e} vs exclusion: {status}; C3={self.c3_hat:.4g}"


def covering_and_measure_check(
    approx: IntervalSet,
    jbar: IntervalSet,
    interval: tuple[float, float],
    dilation: float,
    lam: float,
    gamma: float,
) -> CoveringReport:
    """Is the approximant spectrum inside the dilated exclusion set, and how
    large is the exclusion relative to lam^-gamma?"""
    window = IntervalSet.single(*interval)
    approx_in = approx.intersect(window)
    covered_set = jbar.dilate(dilation) if jbar else jbar
    residue_set = approx_in.difference(covered_set)
    residue = residue_set.measure
    meas = approx_in.measure
    return CoveringReport(
        approx_measure=meas,
        residue=residue,
        residue_fraction=residue / meas if meas > 0 else 0.0,
        covered=residue == 0.0,
        dilation=dilation,
        jbar_measure=jbar.measure,
        c3_hat=jbar.measure * lam**gamma,
    )


def grid_outside(
    interval: tuple[float, float],
    excluded: IntervalSet,
    count: int,
    margin: float = 0.0,
) -> np.ndarray:
    """Deterministic energy grid inside ``interval`` avoiding ``excluded``.

    Points are distributed across the complement components proportionally
    to their lengths, placed strictly in component interiors.
    """
    window = IntervalSet.single(*interval)
    free = window.difference(excluded.dilate(margin) if excluded else excluded)
    comps = [(lo, hi) for lo, hi in free if hi > lo]
    if not comps:
        raise ValueError("no room outside the excluded set")
    total = sum(hi - lo for lo, hi in comps)
    counts = [max(1, round(count * (hi - lo) / total)) for lo, hi in comps]
    while sum(counts) > count:
        counts[counts.index(max(counts))] -= 1
    while sum(counts) < count:
        counts[counts.index(max(counts))] += 1
    pts: list[float] = []
    for (lo, hi), k in zip(comps, counts):
        if k <= 0:
            continue
        width = hi - lo
        pts.extend(lo + width * (i + 0.5) / k for i in range(k))
    return np.array(sorted(pts))


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class TowerResult:
    """Everything the tower and verification commands report for one coupling."""

    pot: Potential
    alpha0: str
    interval: tuple[float, float]
    structure: ReturnStructure
    schedule: ParamSchedule
    exclusions: list[ExclusionReport]
    jbar: IntervalSet
    approx: IntervalSet
    accel: AccelerationReport
    covering: CoveringReport


def tower_pipeline(
    spec: SubshiftSpec,
    pot: Potential,
    alpha0: str,
    *,
    gamma: float,
    gamma_prime: float,
    c: float,
    consts: Constants = Constants(),
    levels: int = 1,
    sample_len: int = 650,
    grid: int = 2049,
    refine_tol: float = 1e-7,
    approx_len: int = 13,
    approx_sample_len: int = 1024,
    accel_energies: int = 64,
    accel_r_max: int = 5,
) -> TowerResult:
    """Run the full desk-scale pipeline at one coupling.

    Builds the return tower, initializes and advances the schedule, computes
    the per-level exclusion sets and their union, verifies the accelerated
    cocycles on energies outside the level-0 exclusion, and checks that the
    periodic-approximant spectrum is covered by the dilated exclusion union.
    """
    lam = pot.sparseness
    e0 = pot.value(alpha0)
    interval = (e0 - consts.H, e0 + consts.H)

    base = return_structure(spec, alpha0, 0, [], sample_len, consts.K_max)
    lv0 = base.level(0)
    max_run = max(e.run for e in lv0.entries)
    c_value = consts.C if consts.C is not None else critical_matrix_bound(
        pot, alpha0, max_run, consts.H
    )
    sched = init_schedule(
        gamma, gamma_prime, c, lam, lv0.inf_l, lv0.sup_l, consts, c_value
    )

    arities = [sched.level(0).N * 2**i for i in range(levels)]
    structure = return_structure(spec, alpha0, levels, arities, sample_len, consts.K_max)
    for n in range(1, levels + 1):
        lvn = structure.level(n)
        advance_schedule(sched, lvn.inf_l, lvn.sup_l, (lvn.group_arity, lvn.group_arity))

    exclusions = [
        exclusion_sets(
            structure, n, pot, sched.level(n).kappa, interval, grid, refine_tol, consts
        )
        for n in range(levels + 1)
    ]
    jbar = IntervalSet.empty()
    for rep in exclusions:
        jbar = jbar.union(rep.j_set)

    energies = grid_outside(interval, exclusions[0].j_set, accel_energies, margin=refine_tol)
    accel = acceleration_verify(structure, sched, pot, energies, 0, accel_r_max)

    from .bands import spectrum_approximant  # local import to avoid a cycle

    approx = spectrum_approximant(spec, pot, approx_len, approx_sample_len)
    covering = covering_and_measure_check(
        approx, jbar, interval, 10.0 * refine_tol, lam, gamma
    )
    return TowerResult(
        pot, alpha0, interval, structure, sched, exclusions, jbar, approx, accel, covering
    )
