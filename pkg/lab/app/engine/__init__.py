"""Engine package - samplers, map builder and the three explorations"""
from .streams import RngStream, split_stream
from .step_sampler import sample_step, sample_steps, sample_free_internal_count, sample_W
from .half_plane_map import HalfPlaneMap, PolygonHole, fill_hole, bfs_hull, find_root_cutedges, export_edge_list
from .hull_explorer import explore, resistance_lower_bound, stationary_gamma
from .percolation import root_cluster_walk, interface_walk, estimate_pc, estimate_pu, interface_density
from .walker import run_srw, return_probability
from .replicas import run_replicas

__all__ = [
    'RngStream',
    'split_stream',
    'sample_step',
    'sample_steps',
    'sample_free_internal_count',
    'sample_W',
    'HalfPlaneMap',
    'PolygonHole',
    'fill_hole',
    'bfs_hull',
    'find_root_cutedges',
    'export_edge_list',
    'explore',
    'resistance_lower_bound',
    'stationary_gamma',
    'root_cluster_walk',
    'interface_walk',
    'estimate_pc',
    'estimate_pu',
    'interface_density',
    'run_srw',
    'return_probability',
    'run_replicas'
]
