"""Cross-phase modulation of a weak signal in warm rubidium vapour.

Forward: closed-form ladder susceptibility with Doppler averaging, optical
Bloch equations for time-resolved response, and synthesis of the two
detector voltages behind a delay-line interferometer.  Inverse: calibration,
segmentation and phase/transmission recovery from such traces.
"""

from .atoms import (LadderAtom, VapourCell, VelocityGrid, number_density,
                    rubidium87, vapour_pressure, velocity_grid)
from .errors import (ArgumentError, CalibrationError, ConfigError, DomainError,
                     IntegrationFailure, LadderphaseError,
                     MissingReferenceError, PhaseUnobservableError,
                     SegmentationError, SolverError, TraceFormatError,
                     UnphysicalSumError)
from .steadystate import (FieldConfig, OpticalResponse, Spectrum,
                          fields_control_off, find_roi, rabi_from_power,
                          response, spectrum_scan, susceptibility_at_velocity,
                          susceptibility_doppler)
from .obe import (DensityMatrix, ModulationSeries, PulseShape, Trajectory,
                  coherence_to_chi, evolve, ground_state, hamiltonian,
                  liouvillian_rhs, pulse_response, steady_chi,
                  steady_state)
from .interferometer import (ControlWindow, DetectorTrace, DetuningRamp,
                             InterferometerModel, forward_cw, forward_pulsed,
                             synth_trace_cw)
from .traceio import (read_trace, read_trace_bin, read_trace_csv,
                      write_trace_bin, write_trace_csv)
from .analysis import (AnalysisResult, Calibration, ModulationEstimate,
                       PulsedResult, PulseEstimate, Segmentation, analyze_cw,
                       analyze_cw_pulse, analyze_pulsed, calibrate,
                       find_fringe_extrema, interferometer_phase, invert,
                       locate_absorption_reference, segment_cw)
from .scan import (ControlBeam, ExperimentPlan, PulsedSettings, SweepRow,
                   SweepSettings, VirtualRun, PulsedVirtualRun, WindowTruth,
                   cell_amplitude_fn, run_virtual_cw, run_virtual_pulsed,
                   sweep)
from .config import LoadedConfig, SpectrumSettings, load_config

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "LadderAtom", "VapourCell", "VelocityGrid", "number_density",
    "rubidium87", "vapour_pressure", "velocity_grid",
    "LadderphaseError", "ArgumentError", "CalibrationError", "ConfigError",
    "DomainError", "IntegrationFailure", "MissingReferenceError",
    "PhaseUnobservableError", "SegmentationError", "SolverError",
    "TraceFormatError", "UnphysicalSumError",
    "FieldConfig", "OpticalResponse", "Spectrum", "fields_control_off",
    "find_roi", "rabi_from_power", "response", "spectrum_scan",
    "susceptibility_at_velocity", "susceptibility_doppler",
    "DensityMatrix", "ModulationSeries", "PulseShape", "Trajectory",
    "coherence_to_chi", "evolve", "ground_state", "hamiltonian",
    "liouvillian_rhs", "pulse_response", "steady_chi", "steady_state",
    "ControlWindow", "DetectorTrace", "DetuningRamp", "InterferometerModel",
    "forward_cw", "forward_pulsed", "synth_trace_cw",
    "read_trace", "read_trace_bin", "read_trace_csv", "write_trace_bin",
    "write_trace_csv",
    "AnalysisResult", "Calibration", "ModulationEstimate", "PulsedResult",
    "PulseEstimate", "Segmentation", "analyze_cw", "analyze_cw_pulse",
    "analyze_pulsed", "calibrate", "find_fringe_extrema",
    "interferometer_phase", "invert", "locate_absorption_reference",
    "segment_cw",
    "ControlBeam", "ExperimentPlan", "PulsedSettings", "PulsedVirtualRun",
    "SweepRow", "SweepSettings", "VirtualRun", "WindowTruth",
    "cell_amplitude_fn", "run_virtual_cw", "run_virtual_pulsed", "sweep",
    "LoadedConfig", "SpectrumSettings", "load_config",
]
