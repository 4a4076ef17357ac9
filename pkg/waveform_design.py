#!/usr/bin/env python3
"""
Coordinate-descent design of unimodular MIMO sequence sets that notch
occupied bands (SILR, g_s) while keeping cross-correlations low (ICCL, g_c):

    g(X) = theta * g_s(X) + (1 - theta) * g_c(X)

Every entry x_{t,d} is updated in turn with all others held fixed. On the unit
circle the objective of one entry reduces to

    g(v) = theta * (a0 v + a1 + a2 v*) / (b0 v + b1 + b2 v*) + (1 - theta) * (c0 v + c1 + c2 v*)

so each update is a one-dimensional problem in the phase of v. Continuous
phases take the best critical point of g(phi) (closed form when theta = 0),
optionally over-relaxed once the steps are small; L-point phases evaluate
all L candidates with L-point DFTs of the coefficient triples.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from correlation import iccl, xcorr
from radar_utils import DegenerateMaskError, ParameterError, write_csv
from sequence_set import PhaseAlphabet, SequenceSet, TWO_PI, unit_circle_table
from spectral_mask import BinGram, SpectralMask, bin_gram, silr

logger = logging.getLogger(__name__)

TIE_TOL = 1e-13
# over-relaxation applies only to phase steps below this size (radians)
RELAX_WINDOW = 0.1


@dataclass(frozen=True)
class CdConfig:
    theta: float
    alphabet: PhaseAlphabet
    zeta: float = 1e-5
    max_sweeps: int = 1000
    grid_points: int = 1024
    relaxation: float = 1.9

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ParameterError(f"theta must lie in [0, 1], got {self.theta}")
        if not self.zeta > 0:
            raise ParameterError(f"zeta must be positive, got {self.zeta}")
        if int(self.max_sweeps) != self.max_sweeps or self.max_sweeps < 1:
            raise ParameterError(f"max_sweeps must be a positive integer, got {self.max_sweeps}")
        if int(self.grid_points) != self.grid_points or self.grid_points < 8:
            raise ParameterError(f"grid_points must be an integer >= 8, got {self.grid_points}")
        if not 1.0 <= self.relaxation < 2.0:
            raise ParameterError(f"relaxation must lie in [1, 2), got {self.relaxation}")


def _trig(c0: complex, c1: complex, c2: complex, v):
    """Real part of c0 v + c1 + c2 v* (v scalar or array)."""
    return (c0 * v + c1 + c2 * np.conj(v)).real



@dataclass(frozen=True)
class EntryCoefficients:
    a0: complex = 0j
    a1: complex = 0j
    a2: complex = 0j
    b0: complex = 0j
    b1: complex = 0j
    b2: complex = 0j
    c0: complex = 0j
    c1: complex = 0j
    c2: complex = 0j

    def parts(self, phi):
        """(numerator, denominator, cross term) at phase(s) phi."""
        v = np.exp(1j * np.asarray(phi, dtype=float))
        return (_trig(self.a0, self.a1, self.a2, v),
                _trig(self.b0, self.b1, self.b2, v),
                _trig(self.c0, self.c1, self.c2, v))

    def evaluate(self, phi, theta: float):
        num, den, cross = self.parts(phi)
        if theta == 0:
            return cross
        if theta == 1:
            return num / den
        return theta * num / den + (1.0 - theta) * cross


@dataclass
class DesignResult:
    final: SequenceSet
    objective_trace: List[float]
    gs_trace: List[float]
    gc_trace: List[float]
    delta_trace: List[float]
    sweeps: int
    converged: bool
    components: Tuple[float, float]
    initial: Tuple[float, float, float]
    worst_update_increase: float
    config: CdConfig
    mask: SpectralMask = field(repr=False)


# --------------------------------------------------------------------------- #
# Objective and per-entry coefficients (full recomputation)
# --------------------------------------------------------------------------- #
def objective(seq: SequenceSet, mask: SpectralMask, theta: float) -> Tuple[float, float, float]:
    """(g, g_s, g_c). g_s is nan when theta = 0 and the mask has no desired bins."""
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")
    _, g_c = iccl(seq)
    if theta > 0:
        g_s = silr(seq, mask)
    else:
        g_s = silr(seq, mask) if not mask.degenerate else float("nan")
    if theta == 0:
        return g_c, g_s, g_c
    if theta == 1:
        return g_s, g_s, g_c
    return theta * g_s + (1.0 - theta) * g_c, g_s, g_c


def _check_entry(seq: SequenceSet, t: int, d: int) -> None:
    if not 0 <= t < seq.M:
        raise ParameterError(f"transmitter index {t} outside 0..{seq.M - 1}")
    if not 0 <= d < seq.N:
        raise ParameterError(f"sample index {d} outside 0..{seq.N - 1}")


def _quadratic_coefficients(X: np.ndarray, gram: np.ndarray, t: int, d: int) -> Tuple[complex, complex, complex]:
    x = X[t]
    total = float(np.einsum("mi,ij,mj->", X.conj(), gram, X).real)
    c0 = complex(np.conj(gram[d] @ x) - np.conj(x[d]) * gram[d, d])
    c1 = total - 2.0 * (c0 * x[d]).real
    return c0, complex(c1), c0.conjugate()


def silr_coefficients(seq: SequenceSet, t: int, d: int, gram_u: BinGram,
                      gram_v: BinGram) -> Tuple[complex, complex, complex, complex, complex, complex]:
    """(a0, a1, a2, b0, b1, b2): g_a and g_b as functions of x_{t,d}."""
    _check_entry(seq, t, d)
    if gram_u.N != seq.N or gram_v.N != seq.N:
        raise ParameterError(f"Gram matrices are {gram_u.N}/{gram_v.N} wide, sequences have N={seq.N}")
    X = seq.entries
    return _quadratic_coefficients(X, gram_u.matrix, t, d) + _quadratic_coefficients(X, gram_v.matrix, t, d)


def iccl_coefficients(seq: SequenceSet, t: int, d: int) -> Tuple[complex, complex, complex]:
    """
    (c0, c1, c2): scaled ICCL as a function of x_{t,d}.

    r_{t,m}(l) = alpha_l x_{t,d} + gamma_l with alpha_l = conj(x_{m,d+l}) where
    0 <= d+l < N; gamma_t (pairs without t) and the |alpha|^2, |gamma|^2 terms
    land in c1.
    """
    _check_entry(seq, t, d)
    M, N = seq.M, seq.N
    if M < 2:
        return 0j, 0j, 0j
    X = seq.entries
    scale = 1.0 / (2.0 * M * N) ** 2
    lag_index = np.arange(N) - d + N - 1
    acc = 0j
    for m in range(M):
        if m == t:
            continue
        r = xcorr(X[t], X[m]).values
        alpha = np.conj(X[m])
        gamma = r[lag_index] - alpha * X[t, d]
        acc += np.sum(alpha * np.conj(gamma))
    raw, _ = iccl(seq)
    c0 = complex(2.0 * scale * acc)
    c1 = raw * scale - 2.0 * (c0 * X[t, d]).real
    return c0, complex(c1), c0.conjugate()


def entry_coefficients(seq: SequenceSet, t: int, d: int, gram_u: BinGram, gram_v: BinGram) -> EntryCoefficients:
    return EntryCoefficients(*silr_coefficients(seq, t, d, gram_u, gram_v), *iccl_coefficients(seq, t, d))


# --------------------------------------------------------------------------- #
# Single-entry solvers
# --------------------------------------------------------------------------- #
_SPIN = np.array([-1j, 0.0, 1j])


def _hermitian(k0: complex, k1: complex, k2: complex) -> Tuple[complex, float]:
    """(h0, h1) with Re(k0 v + k1 + k2 v*) = h1 + 2 Re(h0 v) on the unit circle."""
    return 0.5 * (complex(k0) + complex(k2).conjugate()), complex(k1).real


def _laurent(k0: complex, k1: complex, k2: complex) -> np.ndarray:
    """Coefficients of v^-1, v^0, v^1 of the real trig polynomial Re(k0 v + k1 + k2 v*)."""
    h0, h1 = _hermitian(k0, k1, k2)
    return np.array([h0.conjugate(), h1, h0])


def critical_phases(coeffs: EntryCoefficients, theta: float) -> np.ndarray:
    """
    Phases where dg/dphi vanishes, for 0 < theta <= 1.

    With num, den and cross written as Laurent polynomials in v, the condition
    theta (num' den - num den') + (1 - theta) cross' den^2 = 0 is a Laurent
    polynomial of degree 3; times v^3 it is an ordinary polynomial of degree
    6 whose unit-circle roots are the critical points. Roots off the circle
    are returned too (as their angles); callers evaluate every candidate.
    """
    f = _laurent(coeffs.a0, coeffs.a1, coeffs.a2)
    g = _laurent(coeffs.b0, coeffs.b1, coeffs.b2)
    h = _laurent(coeffs.c0, coeffs.c1, coeffs.c2)
    poly = np.zeros(7, dtype=complex)
    poly[1:6] += theta * (np.convolve(_SPIN * f, g) - np.convolve(f, _SPIN * g))
    if theta < 1:
        poly += (1.0 - theta) * np.convolve(_SPIN * h, np.convolve(g, g))
    size = np.abs(poly)
    if not size.max() > 0:
        return np.empty(0)
    # negligible end coefficients only move roots to 0 or infinity
    keep = np.flatnonzero(size > 1e-12 * size.max())
    poly = poly[keep[0]:keep[-1] + 1]
    if len(poly) < 2:
        return np.empty(0)
    return np.angle(np.roots(poly[::-1])) % TWO_PI


def solve_phase_continuous(coeffs: EntryCoefficients, theta: float, current_phase: float,
                           grid_points: int = 1024) -> float:
    """
    Global minimizer of g(phi) over the circle. For theta = 0 the cross term
    c1 + 2|c0| cos(phi + arg c0) is minimized at phi = pi - arg c0; otherwise
    the candidates are the critical points plus a uniform grid of
    grid_points phases that backs up badly conditioned roots. Never returns a
    phase worse than current_phase.
    """
    if theta > 0:
        b0, b1 = _hermitian(coeffs.b0, coeffs.b1, coeffs.b2)
        if b1 - 2.0 * abs(b0) <= 0:
            raise DegenerateMaskError("SILR denominator is not positive for some phase; "
                                      "the mask leaves too few desired bins")
    if theta == 0:
        c0, _ = _hermitian(coeffs.c0, coeffs.c1, coeffs.c2)
        if c0 == 0:
            return current_phase
        candidates = np.array([(math.pi - cmath.phase(c0)) % TWO_PI])
    else:
        candidates = np.concatenate([critical_phases(coeffs, theta),
                                     TWO_PI * np.arange(grid_points) / grid_points])
    values = coeffs.evaluate(np.append(candidates, current_phase), theta)
    current_value = float(values[-1])
    best = int(np.argmin(values[:-1]))
    if values[best] >= current_value - TIE_TOL * max(1.0, abs(current_value)):
        return current_phase
    phase = float(candidates[best])
    return 0.0 if phase >= TWO_PI else phase


def discrete_objective(coeffs: EntryCoefficients, theta: float, L: int) -> np.ndarray:
    """
    g at the L phases 2*pi*l/L via L-point DFTs of the coefficient triples.
    F_L{a}[l] = e^{-j2pi l/L} (a0 v + a1 + a2 v*), so the ratio needs no
    prefactor and the cross term takes h_l = e^{+j2pi l/L}. For L = 2 the
    triples fold to pairs (v* = v).
    """
    if int(L) != L or L < 2:
        raise ParameterError(f"L must be an integer >= 2, got {L}")
    h = unit_circle_table(L)
    if L == 2:
        a = [coeffs.a0 + coeffs.a2, coeffs.a1]
        b = [coeffs.b0 + coeffs.b2, coeffs.b1]
        c = [coeffs.c0 + coeffs.c2, coeffs.c1]
    else:
        a = [coeffs.a0, coeffs.a1, coeffs.a2]
        b = [coeffs.b0, coeffs.b1, coeffs.b2]
        c = [coeffs.c0, coeffs.c1, coeffs.c2]
    values = np.zeros(L)
    if theta > 0:
        A = np.fft.fft(np.asarray(a, dtype=complex), L)
        B = np.fft.fft(np.asarray(b, dtype=complex), L)
        if np.any((h * B).real <= 0):
            raise DegenerateMaskError("SILR denominator is not positive at some alphabet phase")
        values += theta * (A / B).real
    if theta < 1:
        values += (1.0 - theta) * (h * np.fft.fft(np.asarray(c, dtype=complex), L)).real
    return values


def solve_phase_discrete(coeffs: EntryCoefficients, theta: float, L: int) -> Tuple[int, float]:
    """argmin over Omega_L; ties go to the smallest index."""
    values = discrete_objective(coeffs, theta, L)
    lowest = values.min()
    # equal values can differ in the last bits after the DFT
    index = int(np.flatnonzero(values <= lowest + TIE_TOL * max(1.0, abs(lowest)))[0])
    return index, TWO_PI * index / L


# --------------------------------------------------------------------------- #
# Incremental coefficient bookkeeping for a design run
# --------------------------------------------------------------------------- #
class _CoefficientTracker:
    """
    Keeps F_U x_m, F_V x_m, the quadratic totals and the correlations r_{t,m}
    of the active row current while entries change, so one coefficient
    evaluation costs O(MN) instead of a full recomputation.
    """

    def __init__(self, X: np.ndarray, gram_u: BinGram, gram_v: BinGram, theta: float):
        self.X = X
        self.M, self.N = X.shape
        self.Gu = gram_u.matrix
        self.Gv = gram_v.matrix
        self.use_s = theta > 0
        self.use_c = theta < 1 and self.M > 1
        self.scale = 1.0 / (2.0 * self.M * self.N) ** 2
        self.row = -1

    def start_sweep(self) -> None:
        if self.use_s:
            self.GuX = self.X @ self.Gu.T
            self.GvX = self.X @ self.Gv.T
        if self.use_c:
            # refreshed once per sweep; rows in between carry it through update()
            self.total_c, _ = iccl(SequenceSet.from_entries(self.X.copy()))

    def start_row(self, t: int) -> None:
        self.row = t
        X = self.X
        if self.use_s:
            self.total_u = float(np.vdot(X, self.GuX).real)
            self.total_v = float(np.vdot(X, self.GvX).real)
        if self.use_c:
            others = [m for m in range(self.M) if m != t]
            # rows other than t stay fixed while row t is swept
            self.others_conj = np.conj(X[others])
            self.others_energy = float(np.sum(np.abs(X[others]) ** 2))
            self.R = np.stack([xcorr(X[t], X[m]).values for m in others])

    def _lags(self, d: int) -> slice:
        # r_{t,m}(l) at l = n - d for n = 0..N-1, stored at offset l + N - 1
        return slice(self.N - 1 - d, 2 * self.N - 1 - d)

    def coefficients(self, t: int, d: int) -> EntryCoefficients:
        xd = complex(self.X[t, d])
        a = b = c = (0j, 0j, 0j)
        if self.use_s:
            a = self._quadratic(self.GuX, self.Gu, self.total_u, t, d, xd)
            b = self._quadratic(self.GvX, self.Gv, self.total_v, t, d, xd)
        if self.use_c:
            # sum of alpha conj(r - alpha x_d) with alpha = conj(x_m(n)) and |alpha| = 1
            paired = np.vdot(self.R[:, self._lags(d)], self.others_conj)
            c0 = 2.0 * self.scale * (complex(paired) - self.others_energy * xd.conjugate())
            c1 = self.total_c * self.scale - 2.0 * (c0 * xd).real
            c = (c0, complex(c1), c0.conjugate())
        return EntryCoefficients(*a, *b, *c)

    @staticmethod
    def _quadratic(GX, G, total, t, d, xd):
        c0 = complex(GX[t, d]).conjugate() - xd.conjugate() * G[d, d]
        c1 = total - 2.0 * (c0 * xd).real
        return c0, complex(c1), c0.conjugate()

    def update(self, t: int, d: int, new: complex, coeffs: EntryCoefficients) -> None:
        delta = new - self.X[t, d]
        if delta == 0:
            return
        if self.use_s:
            self.GuX[t] += self.Gu[:, d] * delta
            self.GvX[t] += self.Gv[:, d] * delta
            self.total_u = float(_trig(coeffs.a0, coeffs.a1, coeffs.a2, new))
            self.total_v = float(_trig(coeffs.b0, coeffs.b1, coeffs.b2, new))
        if self.use_c:
            self.R[:, self._lags(d)] += delta * self.others_conj
            self.total_c = float(_trig(coeffs.c0, coeffs.c1, coeffs.c2, new)) / self.scale
        self.X[t, d] = new


# --------------------------------------------------------------------------- #
# Design loop
# --------------------------------------------------------------------------- #
def _snapshot(X: np.ndarray, indices: Optional[np.ndarray], alphabet: PhaseAlphabet) -> SequenceSet:
    if indices is not None:
        return SequenceSet.from_indices(indices.copy(), alphabet.size)
    return SequenceSet.from_entries(X.copy())


def _over_relax(coeffs: EntryCoefficients, theta: float, old_phase: float, phase: float,
                relaxation: float) -> float:
    """Step past the minimizer by the relaxation factor when the step is small and g does not rise."""
    step = math.remainder(phase - old_phase, TWO_PI)
    if abs(step) >= RELAX_WINDOW:
        return phase
    bold = (old_phase + relaxation * step) % TWO_PI
    if coeffs.evaluate(bold, theta) <= coeffs.evaluate(old_phase, theta):
        return bold
    return phase


def cd_design(init: SequenceSet, mask: SpectralMask, config: CdConfig, *,
              row_order: Optional[Sequence[int]] = None,
              on_sweep: Optional[Callable[[int, float, float], None]] = None) -> DesignResult:
    """
    Run full sweeps over every (t, d) until ||X_i - X_{i-1}||_F <= zeta or
    max_sweeps is reached. row_order permutes the transmitter loop (default
    0..M-1); on_sweep(sweep, g, delta) observes progress.
    Continuous runs with config.relaxation > 1 over-relax small phase steps;
    relaxation = 1 is plain coordinate descent.
    """
    if init.alphabet != config.alphabet:
        raise ParameterError(f"initial set is {init.alphabet.label()} but the run is configured for "
                             f"{config.alphabet.label()}")
    if config.alphabet.is_discrete and init.indices is None:
        raise ParameterError("discrete design needs an initial set of phase indices; quantize it first")
    if mask.n_bins != init.N:
        raise ParameterError(f"mask has {mask.n_bins} bins but sequences have length {init.N}")
    theta = config.theta
    if theta > 0 and mask.degenerate:
        raise DegenerateMaskError("mask leaves no desired bins; SILR cannot be optimized")
    order = list(range(init.M)) if row_order is None else list(row_order)
    if sorted(order) != list(range(init.M)):
        raise ParameterError(f"row_order must be a permutation of 0..{init.M - 1}")

    discrete = config.alphabet.is_discrete
    L = config.alphabet.size
    table = unit_circle_table(L) if discrete else None
    indices = np.array(init.indices, copy=True) if discrete else None
    X = np.array(init.entries, dtype=complex, copy=True)
    tracker = _CoefficientTracker(X, bin_gram(mask, "U"), bin_gram(mask, "V"), theta)

    initial = objective(init, mask, theta)
    objective_trace: List[float] = []
    gs_trace: List[float] = []
    gc_trace: List[float] = []
    delta_trace: List[float] = []
    worst = float("-inf")
    converged = False
    sweeps = 0
    components = initial[1:]
    current = init

    logger.info("CD design: M=%d N=%d theta=%s alphabet=%s, initial g=%.6g",
                init.M, init.N, theta, config.alphabet.label(), initial[0])
    for sweep in range(1, config.max_sweeps + 1):
        previous = X.copy()
        tracker.start_sweep()
        for t in order:
            tracker.start_row(t)
            for d in range(init.N):
                coeffs = tracker.coefficients(t, d)
                if discrete:
                    values = discrete_objective(coeffs, theta, L)
                    old = int(indices[t, d])
                    best = int(np.argmin(values))
                    if values[old] <= values[best] + TIE_TOL * max(1.0, abs(values[best])):
                        best = old
                    increase = float(values[best] - values[old])
                    indices[t, d] = best
                    new = table[best]
                else:
                    old_phase = float(np.angle(X[t, d])) % TWO_PI
                    phase = solve_phase_continuous(coeffs, theta, old_phase, config.grid_points)
                    if phase != old_phase and config.relaxation > 1.0:
                        phase = _over_relax(coeffs, theta, old_phase, phase, config.relaxation)
                    if phase == old_phase:
                        new, increase = X[t, d], 0.0
                    else:
                        new = cmath.exp(1j * phase)
                        increase = float(coeffs.evaluate(phase, theta) - coeffs.evaluate(old_phase, theta))
                worst = max(worst, increase)
                tracker.update(t, d, new, coeffs)

        current = _snapshot(X, indices, config.alphabet)
        g, g_s, g_c = objective(current, mask, theta)
        delta = float(np.linalg.norm(X - previous))
        objective_trace.append(g)
        gs_trace.append(g_s)
        gc_trace.append(g_c)
        delta_trace.append(delta)
        components = (g_s, g_c)
        sweeps = sweep
        logger.debug("sweep %d: g=%.12g g_s=%.6g g_c=%.6g delta=%.3g", sweep, g, g_s, g_c, delta)
        if on_sweep is not None:
            on_sweep(sweep, g, delta)
        if delta <= config.zeta:
            converged = True
            break

    if converged:
        logger.info("Converged after %d sweeps: g=%.6g", sweeps, objective_trace[-1])
    else:
        logger.warning("Stopped at max_sweeps=%d without reaching zeta=%g (last delta %.3g)",
                       config.max_sweeps, config.zeta, delta_trace[-1])
    return DesignResult(
        final=current,
        objective_trace=objective_trace,
        gs_trace=gs_trace,
        gc_trace=gc_trace,
        delta_trace=delta_trace,
        sweeps=sweeps,
        converged=converged,
        components=components,
        initial=initial,
        worst_update_increase=worst,
        config=config,
        mask=mask,
    )


def write_trace_csv(result: DesignResult, path: str) -> str:
    """sweep,g,g_s,g_c,delta_fro; sweep 0 is the initial set."""
    g0, gs0, gc0 = result.initial
    rows = [[0, g0, gs0, gc0, None]]
    for i in range(result.sweeps):
        rows.append([i + 1, result.objective_trace[i], result.gs_trace[i],
                     result.gc_trace[i], result.delta_trace[i]])
    return write_csv(path, ["sweep", "g", "g_s", "g_c", "delta_fro"], rows)
