"""Frame-level analysis, modeling and synthesis of cloud VR video traffic."""

from .dists import BurrParams, LogLogisticParams, fit_burr, fit_loglogistic
from .frames import AnalyzerConfig, identify_frames
from .generator import BurstMode, TrafficModel, generate_frames, generate_trace
from .linksim import LinkConfig, capacity_sweep, simulate_link
from .metrics import MetricsReport, analyze_trace, summarize
from .trace import PacketRecord, PacketTrace, parse_trace, read_trace_file

__version__ = "0.1.0"
