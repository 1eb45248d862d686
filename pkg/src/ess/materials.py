"""Refractive-index and group-index engine for the crystals used in the source.

Built-in models:

* ``calcite``  -- DeVore (1951) fit, room temperature, used for the beam
  displacers.
* ``abbo``     -- alpha-BBO vendor fit, room temperature, alternative
  displacer material.
* ``ppln_mgo`` -- 5%-MgO-doped congruent lithium niobate, Gayer et al. (2008)
  temperature-dependent fit, used for the quasi-phase-matched crystal.

All wavelengths at the API boundary are in nm, temperatures in deg C.
Sellmeier formulas evaluate internally in um.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum


class OpticalAxis(Enum):
    ORDINARY = "o"
    EXTRAORDINARY = "e"


class MaterialRangeError(ValueError):
    """Wavelength or temperature outside a model's validity range."""


class UnknownMaterialError(KeyError):
    """Material name not found in the built-in table or a user file."""


@dataclass(frozen=True)
class SellmeierModel:
    """Dispersion model for one uniaxial material.

    ``form`` selects the dispersion formula:

    * ``"constant"``: n = c["n"] (dispersionless, mainly for tests)
    * ``"pole1"``:    n^2 = A + B/(lam^2 - C) - D*lam^2            (lam in um)
    * ``"gayer"``:    n^2 = g1 + g2/(lam^2-g3^2) + g4/(lam^2-a5^2) - a6*lam^2
                      with gi = ai + bi*f(T), f = (T-24.5)(T+570.82)

    ``coefficients`` maps axis key ("o"/"e") to the named coefficients of the
    chosen form.
    """

    material_name: str
    form: str
    coefficients: dict
    valid_range_nm: tuple[float, float]
    temperature_dependent: bool = False
    temperature_range_c: tuple[float, float] = (-50.0, 250.0)
    source_citation: str = ""

    def __post_init__(self):
        if self.form not in ("constant", "pole1", "gayer"):
            raise ValueError(f"unknown dispersion form {self.form!r}")
        lo, hi = self.valid_range_nm
        if not lo < hi:
            raise ValueError("valid_range_nm must be an increasing interval")
        for axis in ("o", "e"):
            if axis not in self.coefficients:
                raise ValueError(f"missing coefficients for axis {axis!r}")


def _check_range(model: SellmeierModel, wavelength_nm: float, temperature_c: float):
    lo, hi = model.valid_range_nm
    if wavelength_nm < lo:
        raise MaterialRangeError(
            f"wavelength {wavelength_nm:g} nm below valid range "
            f"[{lo:g}, {hi:g}] nm for {model.material_name}")
    if wavelength_nm > hi:
        raise MaterialRangeError(
            f"wavelength {wavelength_nm:g} nm above valid range "
            f"[{lo:g}, {hi:g}] nm for {model.material_name}")
    if model.temperature_dependent:
        tlo, thi = model.temperature_range_c
        if not tlo <= temperature_c <= thi:
            raise MaterialRangeError(
                f"temperature {temperature_c:g} C outside valid range "
                f"[{tlo:g}, {thi:g}] C for {model.material_name}")


def _n_squared(model: SellmeierModel, lam_um: float, temperature_c: float, axis_key: str) -> float:
    c = model.coefficients[axis_key]
    l2 = lam_um * lam_um
    if model.form == "constant":
        n = c["n"]
        return n * n
    if model.form == "pole1":
        return c["A"] + c["B"] / (l2 - c["C"]) - c["D"] * l2
    # gayer
    f = (temperature_c - 24.5) * (temperature_c + 570.82)
    g1 = c["a1"] + c["b1"] * f
    g2 = c["a2"] + c["b2"] * f
    g3 = c["a3"] + c["b3"] * f
    g4 = c["a4"] + c["b4"] * f
    return g1 + g2 / (l2 - g3 * g3) + g4 / (l2 - c["a5"] ** 2) - c["a6"] * l2


def refractive_index(model: SellmeierModel, wavelength_nm: float,
                     temperature_c: float = 20.0,
                     axis: OpticalAxis = OpticalAxis.ORDINARY) -> float:
    """Phase refractive index n(lambda, T) on the given axis."""
    _check_range(model, wavelength_nm, temperature_c)
    n2 = _n_squared(model, wavelength_nm / 1000.0, temperature_c, axis.value)
    if n2 <= 1.0:
        raise MaterialRangeError(
            f"{model.material_name}: n^2 = {n2:g} <= 1 at {wavelength_nm:g} nm; "
            "outside the physical validity of the fit")
    return math.sqrt(n2)


def group_index(model: SellmeierModel, wavelength_nm: float,
                temperature_c: float = 20.0,
                axis: OpticalAxis = OpticalAxis.ORDINARY,
                rel_step: float = 1e-4) -> float:
    """Group index n_g = n - lambda * dn/dlambda.

    The derivative is a central finite difference with step lambda*rel_step,
    so the wavelength must sit inside the valid range with that margin.
    """
    h = wavelength_nm * rel_step
    lo, hi = model.valid_range_nm
    if wavelength_nm - h < lo or wavelength_nm + h > hi:
        raise MaterialRangeError(
            f"wavelength {wavelength_nm:g} nm too close to the valid range "
            f"edge of {model.material_name} for the difference stencil")
    n = refractive_index(model, wavelength_nm, temperature_c, axis)
    n_plus = refractive_index(model, wavelength_nm + h, temperature_c, axis)
    n_minus = refractive_index(model, wavelength_nm - h, temperature_c, axis)
    dn_dlam = (n_plus - n_minus) / (2.0 * h)
    return n - wavelength_nm * dn_dlam


_BUILTINS = {
    "calcite": SellmeierModel(
        material_name="calcite",
        form="pole1",
        coefficients={
            "o": {"A": 2.69705, "B": 0.0192064, "C": 0.01820, "D": 0.0151624},
            "e": {"A": 2.18438, "B": 0.0087309, "C": 0.01018, "D": 0.0024411},
        },
        valid_range_nm=(210.0, 2200.0),
        temperature_dependent=False,
        source_citation="J. R. DeVore, J. Opt. Soc. Am. 41, 416 (1951), room temperature",
    ),
    "abbo": SellmeierModel(
        material_name="abbo",
        form="pole1",
        coefficients={
            "o": {"A": 2.7471, "B": 0.01878, "C": 0.01822, "D": 0.01354},
            "e": {"A": 2.3174, "B": 0.01224, "C": 0.01667, "D": 0.01516},
        },
        valid_range_nm=(190.0, 3500.0),
        temperature_dependent=False,
        source_citation="alpha-BBO vendor catalog fit (Newlight Photonics), room temperature",
    ),
    "ppln_mgo": SellmeierModel(
        material_name="ppln_mgo",
        form="gayer",
        coefficients={
            "e": {"a1": 5.756, "a2": 0.0983, "a3": 0.2020, "a4": 189.32,
                  "a5": 12.52, "a6": 1.32e-2,
                  "b1": 2.860e-6, "b2": 4.700e-8, "b3": 6.113e-8, "b4": 1.516e-4},
            "o": {"a1": 5.653, "a2": 0.1185, "a3": 0.2091, "a4": 89.61,
                  "a5": 10.85, "a6": 1.97e-2,
                  "b1": 7.941e-7, "b2": 3.134e-8, "b3": -4.641e-9, "b4": -2.188e-6},
        },
        valid_range_nm=(500.0, 4000.0),
        temperature_dependent=True,
        temperature_range_c=(20.0, 200.0),
        source_citation=("O. Gayer et al., Appl. Phys. B 91, 343 (2008), "
                         "5% MgO-doped congruent LiNbO3 (e axis; o-axis fit "
                         "from the same reference, narrower validity)"),
    ),
}


def builtin_materials() -> dict:
    """Name -> SellmeierModel for the built-in table."""
    return dict(_BUILTINS)


def _model_from_dict(d: dict) -> SellmeierModel:
    known = {"material_name", "form", "coefficients", "valid_range_nm",
             "temperature_dependent", "temperature_range_c", "source_citation"}
    extra = set(d) - known
    if extra:
        raise ValueError(f"unknown material fields: {sorted(extra)}")
    kwargs = dict(d)
    kwargs["valid_range_nm"] = tuple(kwargs["valid_range_nm"])
    if "temperature_range_c" in kwargs:
        kwargs["temperature_range_c"] = tuple(kwargs["temperature_range_c"])
    return SellmeierModel(**kwargs)


def load_material_file(path) -> dict:
    """Load user-supplied Sellmeier models (one object or a list) from JSON."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    models = {}
    for entry in data:
        model = _model_from_dict(entry)
        models[model.material_name] = model
    return models


def get_material(name: str, material_file=None) -> SellmeierModel:
    """Look up a material by name, with optional user-file overrides."""
    table = builtin_materials()
    if material_file is not None:
        table.update(load_material_file(material_file))
    try:
        return table[name]
    except KeyError:
        raise UnknownMaterialError(
            f"unknown material {name!r}; known: {sorted(table)}") from None
