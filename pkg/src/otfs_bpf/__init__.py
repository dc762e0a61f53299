"""Link-level simulator and analytic interference calculator for rectangular
pulse-shaped reduced-CP OTFS with a band-limited receiver."""

from .grid import Constellation, FrameParams, SeedSpec, demap, map_bits, random_bits
from .modem import TimeFrame, add_cp, dzt, idzt, isfft, remove_cp, sfft
from .waveform import (AnalogWaveform, FilterSpec, apply_filter, design_lpf,
                       identity_filter, psd_estimate, sample_at_grid, to_analog)
from .interference import (DDMaps, InterferenceTables, compute_dd_maps,
                           deviation_coeff, fold_interference, iddi_power,
                           interference_integral, measure_interference_mc,
                           orthogonality_sum)
from .channel import (ChannelSpec, NoiseSpec, add_awgn, apply_channel,
                      apply_channel_discrete, gen_eva_jakes)
from .detector import EffectiveChannel, build_effective_channel, mp_detect
from .harness import (BerPoint, ExperimentConfig, run_ber_point, sweep,
                      wilson_interval, write_ber_csv)

__version__ = "0.1.0"
