"""
mimojam: link-level simulation of jamming against a two-way MIMO link.

The forward link carries spatially multiplexed data with least-squares
channel estimation and zero-forcing detection; the backward link returns a
beamformed ACK. Jammers can hit the data block (barrage), the pilot, or the
ACK, and a Q-learning jammer can pick among them.
"""
from .channel import LinkConfig, ChannelRealization, draw_channels, estimate_expected_lambda_max
from .jamming import JammingAction, Scheme, allocate_energy, effective_jamming
from .phy import FramePlan, MCS_TABLE, build_pilot, modulate, demodulate
from .linkmetrics import expected_sinr, per_model, per_lower_bound, simulate_frame, estimate_ber

__version__ = "0.1.0"
