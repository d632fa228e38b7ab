"""Link-level DFT-s-OFDM simulator for comparing PTRS allocation schemes under phase noise."""
from .allocation import (BlockRaisedCosine, BlockSinc, IndexMap, NrDistributed, UniformInterleaved,
                         aliasing_check, build_index_map, rc_spectral_weights)
from .metrics import TrialReport, evm_db, papr_ccdf, papr_db, rms_phase_error
from .modem import (apply_channel, correct_phase, interpolate_sinc, interpolate_spline, qam_demap,
                    qam_map, rx_block, rx_nr, tx_block, tx_nr)
from .phase_noise import (MultiPoleZero, NoPhaseNoise, PhaseTrajectory, PowerLaw, estimate_psd,
                          eval_psd, synthesize)
from .signal import ComplexSignal, FrameConfig, add_cp, dft_spread, fft, ifft, remove_cp

__version__ = "0.1.0"

__all__ = [
    "BlockRaisedCosine", "BlockSinc", "IndexMap", "NrDistributed", "UniformInterleaved",
    "aliasing_check", "build_index_map", "rc_spectral_weights", "TrialReport", "evm_db",
    "papr_ccdf", "papr_db", "rms_phase_error", "apply_channel", "correct_phase",
    "interpolate_sinc", "interpolate_spline", "qam_demap", "qam_map", "rx_block", "rx_nr",
    "tx_block", "tx_nr", "MultiPoleZero", "NoPhaseNoise", "PhaseTrajectory", "PowerLaw",
    "estimate_psd", "eval_psd", "synthesize", "ComplexSignal", "FrameConfig", "add_cp",
    "dft_spread", "fft", "ifft", "remove_cp",
]
