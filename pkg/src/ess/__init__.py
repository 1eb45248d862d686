"""Design and analysis toolkit for a beam-displacer Sagnac source of
non-degenerate polarization-entangled photon pairs."""

from .materials import (OpticalAxis, SellmeierModel, builtin_materials,
                        get_material, group_index, refractive_index)
from .phasematch import (CrystalSpec, SpdcTriplet, conjugate_wavelength,
                         make_triplet, qpm_mismatch, tuning_curve)
from .interferometer import (BeamDisplacerSpec, OverlapReport, SetupGeometry,
                             coherence_factor, pair_mismatch, spatial_overlap,
                             temporal_overlap, transit_delay_difference,
                             walkoff_separation)
from .state import (BASIS_LABELS, ImperfectionParams, PumpPolarization,
                    TwoPhotonState, ideal_state, source_state, werner_state)
from .measurement import (MeasurementSetting, chsh, coincidence_probability,
                          correlation_curve, fit_sinusoid, setting_to_projector,
                          visibility_from_counts)
from .tomography import (MleResult, TomographyData, TomographySet, concurrence,
                         fidelity, mle_reconstruct, purity, simulate_tomography,
                         standard_settings)
from .countsim import (CountRecord, DetectorParams, SourceParams, TimeTagStream,
                       accidentals, count_coincidences, deadtime_throughput,
                       generate_timetags, heralding, pgr, power_sweep)

__version__ = "0.1.0"
