"""Closed-form transition-probability predictions.

Two first-order treatments give the increment of the TLS occupation after
one electron passes:

* momentum model: perturbation of the entangled amplitudes in momentum
  space; the second-order (from-ground) term is independent of the packet
  size, the first-order (superposition) term carries exp(-Gamma^2/2).
* probabilistic (Born) model: time-domain perturbation of the TLS coupled
  equations; both orders carry the size decay, which is its regime of
  validity (near-point-particle, Gamma < 1).

Both give the identical first-order law

    dP1 = (2/(hbar v0)) |Mt(p_rec)| |c1 c2| exp(-Gamma^2/2) sin(zeta),

with zeta = omega_21 t0 - arg(c1* c2); its maximum over zeta for an equal
superposition equals sqrt of the from-ground second-order term.

Amplitude normalization is 1/(hbar v0) per transition amplitude everywhere
("bare"); the alternative with an extra 1/(2 pi) per amplitude, which
appears in some derivations of the modulated and multi-electron formulas,
is available via prefactor="two_pi" for auditing.  The grid solvers decide
between the two: they reproduce the bare convention.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from feberi.core import HBAR_EV_FS, DomainError, ElectronKinematics, TlsState, bloch_phase
from feberi.coulomb import DipoleCoupling, m_tilde
from feberi.qew import ModulationSpectrum, gamma_parameter


class RegimeWarning(UserWarning):
    """A closed form is being used outside its validity regime."""


PREFACTOR_CONVENTIONS = ("bare", "two_pi")


def _amp_scale(convention: str) -> float:
    if convention not in PREFACTOR_CONVENTIONS:
        raise DomainError(f"unknown prefactor convention {convention!r}")
    return 1.0 if convention == "bare" else 1.0 / (2.0 * math.pi)


@dataclass(frozen=True)
class TransitionIncrement:
    """First- and second-order occupation increments of the upper level."""

    dp1: float
    dp2: float
    model: str
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.dp2 < 0.0:
            raise DomainError("second-order increment cannot be negative")

    @property
    def total(self) -> float:
        return self.dp1 + self.dp2


def recoil_momentum(energy_gap: float, v0: float) -> float:
    """Signed recoil p_rec = -E_gap/v0; negative for an upward transition."""
    if v0 <= 0.0:
        raise DomainError("v0 must be > 0")
    return -energy_gap / v0


def overlap_integral(p_rec: float, sigma_p0: float, t0: float,
                     omega_ij: float) -> complex:
    """Displaced-Gaussian overlap I = exp(-(p_rec/2 sigma_p0)^2/2) e^{-i omega t0}."""
    if sigma_p0 <= 0.0:
        raise DomainError("sigma_p0 must be > 0")
    g = p_rec / (2.0 * sigma_p0)
    return math.exp(-0.5 * g * g) * cmath.exp(-1j * omega_ij * t0)


def p2_from_ground(coupling: DipoleCoupling, kin: ElectronKinematics | None = None,
                   prefactor: str = "bare") -> float:
    """Excitation probability from the ground state, |Mt(p_rec)|^2/(hbar v0)^2.

    Independent of the wavepacket size.  Warns beyond 0.1 where first-order
    perturbation theory is no longer trustworthy.
    """
    kin = kin or coupling.kin
    amp = abs(m_tilde(coupling.recoil_momentum, coupling)) / (HBAR_EV_FS * kin.v0)
    amp *= _amp_scale(prefactor)
    p2 = amp * amp
    if p2 > 0.1:
        warnings.warn(f"p2 = {p2:.3g} > 0.1: perturbative validity exceeded",
                      RegimeWarning)
    return min(p2, 1.0)


def dp1_superposition(coupling: DipoleCoupling, kin: ElectronKinematics,
                      state: TlsState, t0: float, sigma_et: float,
                      model: str = "momentum", prefactor: str = "bare") -> float:
    """First-order increment (2/hbar v0)|Mt||c1 c2| e^{-Gamma^2/2} sin(zeta).

    The momentum and Born models predict the identical form; ``model`` is
    recorded for bookkeeping only.  Returns 0 for a non-superposition state
    (no dipole phase to beat against).
    """
    if model not in ("momentum", "born"):
        raise DomainError(f"unknown model {model!r}")
    if abs(state.c1) == 0.0 or abs(state.c2) == 0.0:
        warnings.warn("state has no dipole phase; first-order increment is 0",
                      RegimeWarning)
        return 0.0
    tls = coupling.tls
    gam = gamma_parameter(tls.omega_21, sigma_et)
    zeta = bloch_phase(state, t0, tls.omega_21)
    amp = abs(m_tilde(coupling.recoil_momentum, coupling)) / (HBAR_EV_FS * kin.v0)
    amp *= _amp_scale(prefactor)
    return 2.0 * amp * abs(state.c1) * abs(state.c2) * math.exp(-0.5 * gam * gam) \
        * math.sin(zeta)


def dp2_born(coupling: DipoleCoupling, kin: ElectronKinematics,
             sigma_et: float, prefactor: str = "bare") -> float:
    """Second-order increment of the probabilistic model, with e^{-Gamma^2} decay.

    Valid in the near-point-particle regime Gamma < 1; beyond it the
    size-independent momentum-model value (p2_from_ground) governs instead,
    and a RegimeWarning is emitted.
    """
    if sigma_et < 0.0:
        raise DomainError("sigma_et must be >= 0")
    gam = gamma_parameter(coupling.tls.omega_21, sigma_et)
    if gam > 1.0:
        warnings.warn(f"Gamma = {gam:.3g} > 1: outside the short-packet regime; "
                      "the size-independent from-ground value governs here",
                      RegimeWarning)
    return p2_from_ground(coupling, kin, prefactor=prefactor) * math.exp(-gam * gam)


def nearest_harmonic(omega_21: float, omega_b: float) -> tuple[int, tuple[str, ...]]:
    """Integer n minimizing |omega_21 - n omega_b|; half-integer ties go low."""
    x = omega_21 / omega_b
    lo = math.floor(x)
    flags: tuple[str, ...] = ()
    if x - lo == 0.5:
        n = lo
        flags = ("harmonic_tie",)
    else:
        n = round(x)
    return max(n, 0), flags


def modulated_increments(coupling: DipoleCoupling, kin: ElectronKinematics,
                         spectrum: ModulationSpectrum, sigma_et: float,
                         omega_21: float, state: TlsState, t_mod: float,
                         t_0k: float, prefactor: str = "bare") -> TransitionIncrement:
    """Resonant increments of a density-modulated packet.

    Only the bunching harmonic n nearest omega_21/omega_b contributes
    appreciably when the envelope is long; the increments carry the
    resonance factors exp(-(omega_21 - n omega_b)^2 sigma_et^2 / 2) (first
    order) and its square (second order), and the first order additionally
    beats against the arrival and modulation phases.
    """
    if sigma_et <= 2.0 * math.pi / spectrum.omega_b:
        raise DomainError("envelope must be longer than one modulation period")
    n, flags = nearest_harmonic(omega_21, spectrum.omega_b)
    detuning = omega_21 - n * spectrum.omega_b
    if abs(detuning) * sigma_et > 6.0:
        flags = flags + ("off_resonance",)
    res1 = math.exp(-0.5 * (detuning * sigma_et) ** 2)
    f_n = spectrum.coefficient(n)
    mt = m_tilde(coupling.recoil_momentum, coupling)
    amp = _amp_scale(prefactor) / (HBAR_EV_FS * kin.v0)
    # second order: |amplitude|^2
    dp2 = (amp * abs(mt) * abs(state.c1) * abs(f_n) * res1) ** 2
    # first order: 2 Re[c2* dc2], dc2 = amp/i * c1 Mt f_n* e^{i detuning t_0k} e^{i n w_b t_mod} res1
    dc2 = (amp / 1j) * state.c1 * mt * np.conj(f_n) \
        * cmath.exp(1j * (detuning * t_0k + n * spectrum.omega_b * t_mod)) * res1
    dp1 = float(2.0 * np.real(np.conj(state.c2) * dc2))
    return TransitionIncrement(dp1=dp1, dp2=float(dp2), model="born", flags=flags)


MULTI_QEW_VARIANTS = ("point_train", "modulated_correlated")


def multi_qew_p2(n_electrons: int, coupling: DipoleCoupling,
                 kin: ElectronKinematics, sigma_et: float, variant: str,
                 f_n: complex | None = None, prefactor: str = "bare") -> float:
    """N^2-scaled upper-level probability of a phase-correlated train.

    "point_train": periodic near-point packets at a subharmonic of the
    transition; carries the single-packet envelope factor e^{-Gamma^2}.
    "modulated_correlated": packets bunched by a common laser; the bunching
    harmonic |f_n|^2 replaces the envelope factor (no e^{-Gamma^2}).

    The quadratic law is the small-signal limit of the Rabi oscillation;
    beyond P2 = 0.5 it is meaningless and a RegimeWarning is emitted.
    """
    if n_electrons < 1:
        raise DomainError("need at least one electron")
    if variant not in MULTI_QEW_VARIANTS:
        raise DomainError(f"unknown variant {variant!r}")
    gam = gamma_parameter(coupling.tls.omega_21, sigma_et)
    amp = _amp_scale(prefactor) * abs(m_tilde(coupling.recoil_momentum, coupling)) \
        / (HBAR_EV_FS * kin.v0)
    if variant == "point_train":
        single = amp * amp * math.exp(-gam * gam)
    else:
        if f_n is None:
            raise DomainError("modulated_correlated variant requires f_n")
        single = amp * amp * abs(f_n) ** 2
    p2 = n_electrons**2 * single
    if p2 > 0.5:
        warnings.warn(f"p2 = {p2:.3g} > 0.5: Rabi regime, quadratic "
                      "approximation invalid", RegimeWarning)
    return min(p2, 1.0)
