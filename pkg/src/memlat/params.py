"""Laboratory parameters and the closed-form model rates derived from them.

All frequencies and rates are angular (rad/s) throughout the package.  The
headline numbers for the reference setup are fixed by internal cross-checks
(thermal decoherence rate, coupling identity), which only come out right with
angular units; the CLI prints both rad/s and divided-by-2pi values.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DetuningSmall,
    NonPositiveInput,
    ReflectivityZero,
    TrapFrequencyImaginary,
)

# Exact SI defining constants (2019 redefinition).
C_LIGHT = 299792458.0        # m/s
HBAR = 1.054571817e-34       # J s
KB = 1.380649e-23            # J/K

# Rb-87 D2 line, shipped as the default atomic species.
RB87_MASS = 1.44316e-25              # kg
RB87_WAVELENGTH = 780.241e-9         # m
RB87_LINEWIDTH = 2 * np.pi * 6.07e6  # rad/s


@dataclass
class PhysicalParams:
    """Laboratory inputs in SI units.

    detuning carries a sign (laser minus atomic frequency); every derived
    magnitude uses |detuning|, the sign only feeds the small-detuning warning.
    cool_rate is the engineered Raman-cooling rate applied to the atoms.
    """

    laser_wavelength: float      # m
    laser_power: float           # W
    beam_waist: float            # m, 1/e^2 intensity radius
    detuning: float              # rad/s
    atom_mass: float             # kg
    atom_linewidth: float        # rad/s
    atom_number: float
    membrane_freq: float         # rad/s
    membrane_mass: float         # kg, effective
    membrane_Q: float
    reflectivity: float          # power reflectivity in [0, 1]
    temperature: float           # K
    cool_rate: float = 0.0       # rad/s
    trap_freq_override: float | None = None  # rad/s

    def validate(self):
        positive = (
            ("laser_wavelength", self.laser_wavelength),
            ("laser_power", self.laser_power),
            ("beam_waist", self.beam_waist),
            ("atom_mass", self.atom_mass),
            ("atom_linewidth", self.atom_linewidth),
            ("atom_number", self.atom_number),
            ("membrane_freq", self.membrane_freq),
            ("membrane_mass", self.membrane_mass),
            ("membrane_Q", self.membrane_Q),
            ("temperature", self.temperature),
        )
        for name, value in positive:
            if not value > 0:
                raise NonPositiveInput(f"{name} must be > 0, got {value}")
        if self.detuning == 0:
            raise NonPositiveInput("detuning magnitude must be > 0")
        if not 0 <= self.reflectivity <= 1:
            raise NonPositiveInput(
                f"reflectivity must lie in [0, 1], got {self.reflectivity}")
        if self.cool_rate < 0:
            raise NonPositiveInput(f"cool_rate must be >= 0, got {self.cool_rate}")
        if self.trap_freq_override is not None and not self.trap_freq_override > 0:
            raise NonPositiveInput("trap_freq_override must be > 0 when given")
        if abs(self.detuning) < 10 * self.atom_linewidth:
            warnings.warn(
                "detuning within 10 linewidths of resonance; dispersive "
                "two-level expressions lose accuracy", DetuningSmall)


@dataclass
class ModelParams:
    """Master-equation rates plus the intermediates they came from.

    The four travelling-field couplings and alpha_sq are filled in by
    derive_qsse_couplings; derive_model leaves them as None.
    """

    omega_m: float               # rad/s
    omega_at: float              # rad/s
    g: float                     # rad/s
    reflectivity: float
    transmittivity: float
    gamma_cool: float            # rad/s
    gamma_m: float               # rad/s
    gamma_diff_at: float         # rad/s
    gamma_diff_m: float          # rad/s
    nbar: float
    V0: float                    # J
    ell_at: float                # m
    ell_m: float                 # m
    alpha_sq: float | None = None
    g_mR: float | None = None    # rad/s
    g_mL: float | None = None    # rad/s
    g_atR: float | None = None   # rad/s
    g_atL: float | None = None   # rad/s


def derive_model(phys):
    """Convert PhysicalParams into ModelParams via the closed-form rates.

    The lattice depth is the standard two-level dipole potential applied to
    the interference term of the partially reflected standing wave,
    I(z) = I0 (1 + r + 2 sqrt(r) cos 2 k_l z), whose modulation depth is
    4 sqrt(r) I0.

    Raises
    ------
    NonPositiveInput
        Any input magnitude outside its domain.
    TrapFrequencyImaginary
        Lattice depth V0 <= 0, e.g. at zero reflectivity with no
        trap_freq_override; there is then no longitudinal trap.
    """
    phys.validate()
    delta = abs(phys.detuning)
    k_l = 2 * np.pi / phys.laser_wavelength
    omega_l = 2 * np.pi * C_LIGHT / phys.laser_wavelength
    I0 = 2 * phys.laser_power / (np.pi * phys.beam_waist**2)
    omega_a = omega_l - delta
    V0 = (3 * np.pi * C_LIGHT**2 * phys.atom_linewidth
          / (2 * omega_a**3 * delta)) * 4 * np.sqrt(phys.reflectivity) * I0
    if phys.trap_freq_override is not None:
        omega_at = phys.trap_freq_override
    else:
        if V0 <= 0:
            raise TrapFrequencyImaginary(
                f"lattice depth V0 = {V0:.3e} J is not positive; "
                "no longitudinal trap")
        omega_at = np.sqrt(2 * V0 * k_l**2 / phys.atom_mass)
    ell_at = np.sqrt(HBAR / (phys.atom_mass * omega_at))
    ell_m = np.sqrt(HBAR / (phys.membrane_mass * phys.membrane_freq))
    g = omega_at * np.sqrt(phys.atom_number * phys.atom_mass / phys.membrane_mass)
    gamma_m = phys.membrane_freq / phys.membrane_Q
    nbar = KB * phys.temperature / (HBAR * phys.membrane_freq)
    gamma_diff_at = (k_l * ell_at)**2 * phys.atom_linewidth * V0 / (HBAR * delta)
    gamma_diff_m = (4 * phys.reflectivity * phys.laser_power
                    / (phys.membrane_mass * C_LIGHT**2)) * (omega_l / phys.membrane_freq)
    return ModelParams(
        omega_m=phys.membrane_freq,
        omega_at=omega_at,
        g=g,
        reflectivity=phys.reflectivity,
        transmittivity=1.0 - phys.reflectivity,
        gamma_cool=phys.cool_rate,
        gamma_m=gamma_m,
        gamma_diff_at=gamma_diff_at,
        gamma_diff_m=gamma_diff_m,
        nbar=nbar,
        V0=V0,
        ell_at=ell_at,
        ell_m=ell_m,
    )


def derive_qsse_couplings(phys, model):
    """Travelling-field couplings of the right/left movers to each mode.

    Fills the alpha_sq, g_mR, g_mL, g_atR, g_atL fields of `model` and
    returns them as a tuple (g_mR, g_mL, g_atR, g_atL, alpha_sq).

    The membrane left coupling is computed from the explicit r*t product
    form, which is finite (zero) at r = 0; the atomic left coupling scales
    as r^(-1/4) near r = 0 and has no finite limit, so r = 0 raises.

    Raises
    ------
    ReflectivityZero
        reflectivity is exactly zero.
    """
    k_l = 2 * np.pi / phys.laser_wavelength
    omega_l = 2 * np.pi * C_LIGHT / phys.laser_wavelength
    alpha_sq = 2 * np.pi * phys.laser_power / (HBAR * omega_l)
    r = phys.reflectivity
    t = 1.0 - r
    if r == 0:
        raise ReflectivityZero(
            "atomic left coupling diverges as r^(-1/4) for r -> 0 "
            "(the membrane left coupling would be 0 by the r*t product form)")
    km2 = alpha_sq * (k_l * model.ell_m)**2
    g_mR = 2 * km2 * r**2 / np.pi
    g_mL = 2 * km2 * r * t / np.pi
    alpha = np.sqrt(alpha_sq)
    g_atR = 2 * np.pi * phys.atom_number * (
        model.omega_at / (4 * alpha * k_l * model.ell_at))**2
    g_atL = (t / r) * g_atR
    model.alpha_sq = alpha_sq
    model.g_mR = g_mR
    model.g_mL = g_mL
    model.g_atR = g_atR
    model.g_atL = g_atL
    return g_mR, g_mL, g_atR, g_atL, alpha_sq


def preset_case_study():
    """Reference setup: Rb-87 ensemble against a SiN membrane at 2 K."""
    return PhysicalParams(
        laser_wavelength=RB87_WAVELENGTH,
        laser_power=7e-3,            # W
        beam_waist=230e-6,           # m
        detuning=2 * np.pi * 1e9,    # rad/s, blue of the D2 line
        atom_mass=RB87_MASS,
        atom_linewidth=RB87_LINEWIDTH,
        atom_number=3e8,
        membrane_freq=2 * np.pi * 0.86e6,  # rad/s
        membrane_mass=8e-13,         # kg
        membrane_Q=1e7,
        reflectivity=0.31,
        temperature=2.0,             # K
        cool_rate=2e4,               # rad/s
    )


def resonant(phys):
    """Copy of `phys` with the trap frequency pinned to the membrane's."""
    return replace(phys, trap_freq_override=phys.membrane_freq)


# ---------------------------------------------------------------------------
# Config-file plumbing.  Values are raw SI numbers; a string "VALUE UNIT" is
# tolerated when UNIT matches the field's SI unit exactly (no conversions).

PHYSICAL_UNITS = {
    "laser_wavelength": "m",
    "laser_power": "W",
    "beam_waist": "m",
    "detuning": "rad/s",
    "atom_mass": "kg",
    "atom_linewidth": "rad/s",
    "atom_number": "1",
    "membrane_freq": "rad/s",
    "membrane_mass": "kg",
    "membrane_Q": "1",
    "reflectivity": "1",
    "temperature": "K",
    "cool_rate": "rad/s",
    "trap_freq_override": "rad/s",
}

MODEL_UNITS = {
    "omega_m": "rad/s",
    "omega_at": "rad/s",
    "g": "rad/s",
    "reflectivity": "1",
    "gamma_cool": "rad/s",
    "gamma_m": "rad/s",
    "gamma_diff_at": "rad/s",
    "gamma_diff_m": "rad/s",
    "nbar": "1",
}


def _coerce(field, value, units):
    if isinstance(value, str):
        parts = value.split()
        if len(parts) != 2 or parts[1] != units[field]:
            raise NonPositiveInput(
                f"field {field}: expected a number or 'VALUE {units[field]}', "
                f"got {value!r}")
        value = parts[0]
    try:
        return float(value)
    except (TypeError, ValueError):
        raise NonPositiveInput(f"field {field}: not a number: {value!r}")


def physical_from_dict(d):
    """Build PhysicalParams from a parsed JSON object."""
    unknown = set(d) - set(PHYSICAL_UNITS)
    if unknown:
        raise NonPositiveInput(f"unknown physical fields: {sorted(unknown)}")
    kwargs = {k: _coerce(k, v, PHYSICAL_UNITS) for k, v in d.items()}
    try:
        return PhysicalParams(**kwargs)
    except TypeError as exc:
        raise NonPositiveInput(f"incomplete physical config: {exc}")


def model_from_dict(d):
    """Build ModelParams from a parsed JSON object of bare rates.

    Intermediates (V0, oscillator lengths, travelling-field couplings) are
    not part of the schema; they stay unset.
    """
    unknown = set(d) - set(MODEL_UNITS)
    if unknown:
        raise NonPositiveInput(f"unknown model fields: {sorted(unknown)}")
    kwargs = {k: _coerce(k, v, MODEL_UNITS) for k, v in d.items()}
    missing = set(MODEL_UNITS) - set(kwargs)
    if missing:
        raise NonPositiveInput(f"missing model fields: {sorted(missing)}")
    r = kwargs.pop("reflectivity")
    if not 0 <= r <= 1:
        raise NonPositiveInput(f"reflectivity must lie in [0, 1], got {r}")
    return ModelParams(
        reflectivity=r, transmittivity=1.0 - r,
        V0=float("nan"), ell_at=float("nan"), ell_m=float("nan"), **kwargs)


def is_physical_config(d):
    """Heuristic dispatch between the two config schemas."""
    return "laser_wavelength" in d or "laser_power" in d


def model_to_dict(model):
    """JSON-ready rendering of ModelParams, rad/s alongside /2pi values."""
    out = {}
    angular = {"omega_m", "omega_at", "g", "gamma_cool", "gamma_m",
               "gamma_diff_at", "gamma_diff_m", "g_mR", "g_mL", "g_atR", "g_atL"}
    for name in ("omega_m", "omega_at", "g", "reflectivity", "transmittivity",
                 "gamma_cool", "gamma_m", "gamma_diff_at", "gamma_diff_m",
                 "nbar", "V0", "ell_at", "ell_m", "alpha_sq",
                 "g_mR", "g_mL", "g_atR", "g_atL"):
        value = getattr(model, name)
        if value is None:
            continue
        out[name] = value
        if name in angular:
            out[name + "_over_2pi"] = value / (2 * np.pi)
    return out
