"""Inhomogeneous-broadening ensemble studies.

Each run draws emitter frequencies from a normal distribution (all other
parameters shared), sweeps the spectrum on an adaptive grid, locates the
antibunching dips of g2(0; w), refines them on the continuous function and
classifies them:

* ``subradiant``    -- a narrow dip pinned to a sampled emitter frequency;
* ``polaritonic``   -- the dip adjacent to a bright polariton resonance;
* ``interference``  -- the dip next to the Fano node on its plateau side
  whose g2 rises smoothly back to one (the collective-cancellation dip);
* ``fano_bunching_peak`` -- a bunching maximum riding on the Fano node,
  reported alongside the dips.

The class boundaries are heuristic (the underlying physics blends
continuously); the thresholds used are echoed in the result metadata.
Sampling uses a counter-based generator keyed by (seed, run_index), so runs
are reproducible individually and under any execution order.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .params import TWO_PI, Emitter, SystemParams
from .scattering import Spectrum, compute_spectrum, g2_zero, solve_system

#: A subradiant dip must sit within this many gamma of an emitter frequency.
SUBRADIANT_DIST_GAMMA = 3.0
#: ... and have a quarter-rise core width at most this many gamma.
SUBRADIANT_WIDTH_GAMMA = 3.0
#: A polaritonic dip must lie within this many polariton half-linewidths
#: (but at least 0.15 kappa) of the polariton frequency.
POLARITON_WINDOW_HALFWIDTHS = 4.0
POLARITON_WINDOW_MIN = 0.15
#: Plateau detection for the interference rule: the outward path from the
#: dip must reach 1 +- PLATEAU_TOL without an intervening dip deeper than
#: PLATEAU_BACKSLIDE or a bunching wall above 1 + PLATEAU_TOL.
PLATEAU_TOL = 0.1
PLATEAU_BACKSLIDE = 0.05
#: The collective (identical-emitter-like) interference dip sits right next
#: to the Fano node; candidates farther than this are not it.
NODE_ADJACENT_WINDOW = 0.15
#: Bunching maxima within this many gamma of the Fano node are reported.
BUNCHING_DIST_GAMMA = 10.0
#: Minima shallower than this are grid-scale ripple, not blockade dips.
MIN_DIP_DEPTH = 0.005

DIP_CLASSES = ("polaritonic", "subradiant", "interference", "fano_bunching_peak")


@dataclass(frozen=True)
class MCConfig:
    """Ensemble configuration, all frequencies in kappa units.

    ``sigma_inhom`` is the standard deviation of the per-run emitter
    frequency draws around ``mean_omega_e``. The sweep grid is a coarse
    scan of [omega_min, omega_max] at ``coarse_step`` plus a fine re-sweep
    (step ``fine_step``) within ``fine_halfwidth`` of every sampled emitter
    frequency: subradiant dips are ~gamma wide and a uniform kappa-scale
    grid would miss them.
    """

    runs: int
    n: int
    mean_omega_e: float
    sigma_inhom: float
    omega_c: float = 0.0
    kappa_b: float = 0.5
    kappa_c: float = 0.5
    g: float = 0.2
    gamma: float = 0.012
    seed: int = 0
    omega_min: float = -2.0
    omega_max: float = 2.0
    coarse_step: float = 1.0 / 200.0
    fine_halfwidth: float | None = None   # default 5 * gamma
    fine_step: float | None = None        # default gamma / 10
    refine_tol: float = 1e-9
    threads: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("need at least one run")
        if self.sigma_inhom < 0:
            raise ValueError("sigma_inhom must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.omega_max <= self.omega_min:
            raise ValueError("omega grid range is empty")

    @classmethod
    def in_ghz_2pi(cls, runs, n, mean_omega_e, sigma_inhom, omega_c,
                   kappa_b, kappa_c, g, gamma, seed=0, **kwargs):
        """Build from plain-GHz quantities; everything scales by 2*pi/kappa."""
        kappa = TWO_PI * (kappa_b + kappa_c)
        s = TWO_PI / kappa
        for key in ("omega_min", "omega_max", "coarse_step", "fine_halfwidth",
                    "fine_step"):
            if kwargs.get(key) is not None:
                kwargs[key] = kwargs[key] * s
        return cls(runs=runs, n=n, mean_omega_e=mean_omega_e * s,
                   sigma_inhom=sigma_inhom * s, omega_c=omega_c * s,
                   kappa_b=kappa_b * s, kappa_c=kappa_c * s, g=g * s,
                   gamma=gamma * s, seed=seed, **kwargs)

    def config_hash(self) -> str:
        # threads is an execution knob, not part of the ensemble identity
        doc = {k: v for k, v in asdict(self).items() if k != "threads"}
        blob = json.dumps(doc, sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def system_params(self, emitter_freqs) -> SystemParams:
        return SystemParams(
            omega_c=self.omega_c, kappa_b=self.kappa_b, kappa_c=self.kappa_c,
            emitters=tuple(Emitter(float(om), self.gamma, self.g)
                           for om in emitter_freqs))


@dataclass(frozen=True)
class DipReport:
    """One classified feature of a g2(0; w) lineshape."""

    omega_b: float
    g2_at_dip: float
    dip_class: str
    width: float

    def __post_init__(self):
        if self.dip_class not in DIP_CLASSES:
            raise ValueError(f"unknown dip class {self.dip_class!r}")
        if self.dip_class != "fano_bunching_peak" and not self.g2_at_dip < 1:
            raise ValueError("dip classes require g2 < 1")


@dataclass(frozen=True)
class RunResult:
    run_index: int
    emitter_freqs: np.ndarray = field(repr=False)
    dips: tuple[DipReport, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class MCResult:
    config: MCConfig
    runs: tuple[RunResult, ...] = field(repr=False)
    histograms: dict = field(repr=False)
    provenance: dict = field(repr=False)

    def dips_by_class(self, dip_class: str) -> list[DipReport]:
        return [d for r in self.runs for d in r.dips if d.dip_class == dip_class]

    def to_json(self) -> str:
        doc = {
            "config": asdict(self.config),
            "provenance": self.provenance,
            "runs": [
                {
                    "run_index": r.run_index,
                    "emitter_freqs": [float(x) for x in r.emitter_freqs],
                    "error": r.error,
                    "dips": [
                        {"omega_b": d.omega_b, "g2_at_dip": d.g2_at_dip,
                         "class": d.dip_class, "width": d.width}
                        for d in r.dips
                    ],
                }
                for r in self.runs
            ],
            "histograms": self.histograms,
        }
        return json.dumps(doc, indent=1)

    def histograms_csv(self) -> str:
        lines = ["class,quantity,bin_left,bin_right,count"]
        for dip_class, hists in self.histograms.items():
            for quantity, h in hists.items():
                edges = h["bin_edges"]
                for k, c in enumerate(h["counts"]):
                    lines.append(f"{dip_class},{quantity},{edges[k]!r},"
                                 f"{edges[k + 1]!r},{c}")
        return "\n".join(lines) + "\n"


def sample_ensemble(config: MCConfig, run_index: int) -> np.ndarray:
    """Draw the emitter frequencies of one run, deterministically.

    A Philox counter-based generator keyed by (seed, run_index) makes every
    run's draw independent of execution order and parallelism.
    """
    if not 0 <= run_index:
        raise ValueError("run_index must be nonnegative")
    bitgen = np.random.Philox(key=np.array([config.seed, run_index],
                                           dtype=np.uint64))
    rng = np.random.Generator(bitgen)
    return rng.normal(config.mean_omega_e, config.sigma_inhom, config.n)


def run_grid(config: MCConfig, emitter_freqs) -> np.ndarray:
    """Coarse sweep grid plus fine windows around each emitter frequency."""
    halfwidth = (config.fine_halfwidth if config.fine_halfwidth is not None
                 else 5.0 * config.gamma)
    step = (config.fine_step if config.fine_step is not None
            else config.gamma / 10.0)
    pieces = [np.arange(config.omega_min, config.omega_max, config.coarse_step)]
    if step > 0 and halfwidth > 0:
        for om in emitter_freqs:
            pieces.append(np.arange(om - halfwidth, om + halfwidth + step / 2,
                                    step))
    grid = np.unique(np.concatenate(pieces))
    return grid[(grid >= config.omega_min) & (grid <= config.omega_max)]


@dataclass(frozen=True)
class ClassifyContext:
    """Per-run spectral landmarks used by the dip classifier.

    ``detuned_regime`` is True when the ensemble-average emitter detuning
    exceeds both the collective coupling and kappa/4: only then does the
    collective Fano background exist that turns the narrow cavity-side
    companion dips of individual emitter lines into interference dips; in
    a straddling (resonant) ensemble the same narrow features are plain
    subradiant dips.
    """

    emitter_freqs: np.ndarray = field(repr=False)
    gamma: float = 0.012
    polariton_freqs: np.ndarray = field(repr=False, default=None)
    polariton_halfwidths: np.ndarray = field(repr=False, default=None)
    fano_node: float = 0.0
    omega_cavity: float = 0.0
    detuned_regime: bool = False

    @classmethod
    def from_params(cls, params: SystemParams, spectrum: Spectrum,
                    ensemble_mean: float | None = None) -> "ClassifyContext":
        sol = solve_system(params)
        weights = np.abs(sol.s) ** 2
        top2 = np.sort(np.argsort(weights)[-2:])
        lam = sol.es1.lambdas[top2]
        node = float(spectrum.omega_grid[int(np.argmin(spectrum.t))])
        freqs = params.omega_e()
        if ensemble_mean is None:
            ensemble_mean = float(freqs.mean()) if freqs.size else 0.0
        mean_det = abs(ensemble_mean - params.omega_c)
        g_coll = float(np.sqrt((params.g_e() ** 2).sum()))
        return cls(emitter_freqs=freqs,
                   gamma=float(max(params.gamma_e().max(initial=0.0), 1e-12)),
                   polariton_freqs=lam.real.copy(),
                   polariton_halfwidths=np.abs(lam.imag),
                   fano_node=node, omega_cavity=params.omega_c,
                   detuned_regime=bool(
                       mean_det > max(g_coll, 0.25 * params.kappa)))


def _golden_refine(fun, lo, hi, tol):
    """Golden-section minimization of a unimodal scalar function."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def _quarter_rise_width(grid, g2, k):
    """Width of the dip core at a quarter of the way back up to one."""
    level = g2[k] + 0.25 * (1.0 - g2[k])
    left = k
    while left > 0 and g2[left] < level:
        left -= 1
    right = k
    last = len(grid) - 1
    while right < last and g2[right] < level:
        right += 1
    return float(grid[right] - grid[left])


def _plateau_outward(g2, start, direction):
    """Does g2 rise smoothly to the unity plateau walking outward from a dip?"""
    top = g2[start]
    k = start + direction
    while 0 <= k < len(g2):
        v = g2[k]
        if v >= 1.0 - PLATEAU_TOL:
            return v <= 1.0 + PLATEAU_TOL
        if v > top:
            top = v
        elif top - v > PLATEAU_BACKSLIDE:
            return False
        k += direction
    return False


def detect_dips(spectrum: Spectrum, g2_func=None, refine_tol: float = 1e-9,
                context: ClassifyContext | None = None) -> list[DipReport]:
    """Locate, refine and classify the antibunching dips of a spectrum.

    Args:
        spectrum: Swept T and g2 (grid dense enough that dip cores span
            at least ~3 grid steps; the caller owns grid adequacy).
        g2_func: Continuous ``w -> g2(0; w)`` used for golden-section
            refinement of each dip; None skips refinement.
        refine_tol: Frequency tolerance of the refinement.
        context: Landmarks for classification; without it every dip is
            reported with the catch-all ``polaritonic`` label and bunching
            peaks are skipped.

    Returns:
        Reports sorted by frequency (possibly empty: no dip is not an error).
    """
    grid = spectrum.omega_grid
    g2 = spectrum.g2zero
    n = len(grid)
    reports = []
    interference_candidates = []
    subradiant_idx, polaritonic_idx = set(), set()
    minima = [k for k in range(1, n - 1)
              if g2[k] < g2[k - 1] and g2[k] <= g2[k + 1]
              and g2[k] < 1.0 - MIN_DIP_DEPTH]

    refined = {}
    for k in minima:
        wb, val = float(grid[k]), float(g2[k])
        if g2_func is not None:
            wr, vr = _golden_refine(g2_func, grid[k - 1], grid[k + 1],
                                    refine_tol)
            if vr < val:
                wb, val = float(wr), float(vr)
        refined[k] = (wb, val, _quarter_rise_width(grid, g2, k))

    interference_idx = set()
    if context is not None:
        # Narrow dips pinned to an emitter line. In a detuned ensemble the
        # companion dips on the cavity side of their lines are interference
        # dips (collective cancellation against the Fano background); the
        # most prominent of them is reported as THE interference dip of the
        # lineshape. Any other pinned narrow dip is subradiant.
        pinned_cavity_side = []
        for k in minima:
            wb, val, width = refined[k]
            if not context.emitter_freqs.size:
                continue
            j = int(np.argmin(np.abs(context.emitter_freqs - wb)))
            near = abs(context.emitter_freqs[j] - wb)
            if (near <= SUBRADIANT_DIST_GAMMA * context.gamma
                    and width <= SUBRADIANT_WIDTH_GAMMA * context.gamma):
                line = context.emitter_freqs[j]
                cavity_side = ((wb - line) * (context.omega_cavity - line) > 0)
                if context.detuned_regime and cavity_side \
                        and _plateau_outward(
                            g2, k, -1 if context.omega_cavity < line else 1):
                    pinned_cavity_side.append(k)
                else:
                    subradiant_idx.add(k)
        if pinned_cavity_side:
            pick = min(pinned_cavity_side, key=lambda k: refined[k][1])
            interference_idx.add(pick)
            subradiant_idx.update(k for k in pinned_cavity_side if k != pick)
        # Polaritonic: nearest remaining dip to each bright polariton.
        for wp, hw in zip(context.polariton_freqs,
                          context.polariton_halfwidths):
            window = max(POLARITON_WINDOW_HALFWIDTHS * hw,
                         POLARITON_WINDOW_MIN)
            cands = [k for k in minima
                     if k not in subradiant_idx and k not in interference_idx
                     and abs(refined[k][0] - wp) <= window]
            if cands:
                polaritonic_idx.add(
                    min(cands, key=lambda k: abs(refined[k][0] - wp)))
        # Fallback for the identical-emitter-like geometry: the collective
        # interference dip rides immediately on the cavity-facing side of
        # the global Fano node with a smooth outward plateau.
        if not interference_idx and context.detuned_regime:
            direction = -1 if context.omega_cavity <= context.fano_node else 1
            for k in minima:
                if k in subradiant_idx or k in polaritonic_idx:
                    continue
                wb = refined[k][0]
                on_side = (wb <= context.fano_node if direction == -1
                           else wb >= context.fano_node)
                if (on_side
                        and abs(wb - context.fano_node) <= NODE_ADJACENT_WINDOW
                        and _plateau_outward(g2, k, direction)):
                    interference_candidates.append(k)
            if interference_candidates:
                interference_idx.add(
                    min(interference_candidates,
                        key=lambda k: abs(refined[k][0] - context.fano_node)))

    for k in minima:
        wb, val, width = refined[k]
        if context is None:
            cls = "polaritonic"
        elif k in subradiant_idx:
            cls = "subradiant"
        elif k in interference_idx:
            cls = "interference"
        else:
            cls = "polaritonic"
        reports.append(DipReport(omega_b=wb, g2_at_dip=val, dip_class=cls,
                                 width=width))

    if context is not None:
        window = BUNCHING_DIST_GAMMA * context.gamma
        for k in range(1, n - 1):
            if (g2[k] > g2[k - 1] and g2[k] >= g2[k + 1] and g2[k] > 1.0
                    and abs(grid[k] - context.fano_node) <= window):
                reports.append(DipReport(
                    omega_b=float(grid[k]), g2_at_dip=float(g2[k]),
                    dip_class="fano_bunching_peak",
                    width=_quarter_rise_width(grid, 2.0 - g2, k)))
    reports.sort(key=lambda d: d.omega_b)
    return reports


def run_single(config: MCConfig, run_index: int) -> RunResult:
    """Sample, sweep, detect and classify one ensemble member."""
    freqs = sample_ensemble(config, run_index)
    params = config.system_params(freqs)
    try:
        grid = run_grid(config, freqs)
        spectrum = compute_spectrum(params, grid)
        context = ClassifyContext.from_params(
            params, spectrum, ensemble_mean=config.mean_omega_e)
        dips = detect_dips(spectrum, lambda w: g2_zero(params, w)[0],
                           config.refine_tol, context)
    except Exception as exc:  # recorded, not fatal: ensemble goes on
        return RunResult(run_index=run_index, emitter_freqs=freqs,
                         error=f"{type(exc).__name__}: {exc}")
    return RunResult(run_index=run_index, emitter_freqs=freqs,
                     dips=tuple(dips))


def run_mc(config: MCConfig) -> MCResult:
    """Run the whole ensemble and aggregate dip statistics.

    Results are deterministic for a given config: sampling is counter
    based and the reduction is ordered by run index, so thread-parallel
    execution returns bit-identical output.
    """
    indices = range(config.runs)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda k: run_single(config, k), indices))
    else:
        results = [run_single(config, k) for k in indices]
    results.sort(key=lambda r: r.run_index)

    histograms = {}
    bins_w = np.linspace(config.omega_min, config.omega_max, 81)
    bins_g2 = np.linspace(0.0, 1.0, 41)
    for dip_class in DIP_CLASSES:
        dips = [d for r in results for d in r.dips if d.dip_class == dip_class]
        omega = np.array([d.omega_b for d in dips])
        vals = np.array([d.g2_at_dip for d in dips])
        histograms[dip_class] = {
            "omega_b": {
                "bin_edges": [float(x) for x in bins_w],
                "counts": [int(c) for c in np.histogram(omega, bins_w)[0]],
            },
            "g2_at_dip": {
                "bin_edges": [float(x) for x in bins_g2],
                "counts": [int(c) for c in np.histogram(
                    np.clip(vals, 0.0, 1.0), bins_g2)[0]],
            },
        }
    provenance = {
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "failed_runs": sum(1 for r in results if r.error is not None),
        "classifier_thresholds": {
            "subradiant_dist_gamma": SUBRADIANT_DIST_GAMMA,
            "subradiant_width_gamma": SUBRADIANT_WIDTH_GAMMA,
            "polariton_window_halfwidths": POLARITON_WINDOW_HALFWIDTHS,
            "polariton_window_min": POLARITON_WINDOW_MIN,
            "plateau_tol": PLATEAU_TOL,
            "plateau_backslide": PLATEAU_BACKSLIDE,
        },
    }
    return MCResult(config=config, runs=tuple(results),
                    histograms=histograms, provenance=provenance)
