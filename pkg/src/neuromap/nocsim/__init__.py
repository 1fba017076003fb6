from .engine import Flit, SimConfig, SimResult, simulate
from .metrics import (comm_energy, connections, isi_distortion, latency_stats, mean_isi_distortion,
                      mean_spike_disorder, segment_hop_totals, spike_disorder)
from .routing import (STRATEGIES, Routing, audit_route, forbidden_turns, format_route_table, is_minimal,
                      load_route_table, mesh_route, parse_route_table, parse_routing, shortest_path_table,
                      validate_table)
from .traffic import TrafficModel, gen_traffic, load_traffic_table, parse_traffic, permute
