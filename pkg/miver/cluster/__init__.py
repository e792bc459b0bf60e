"""
多节点多起点搜索：改进消息、传输层、节点与协调节点
"""

from .config import ClusterConfig
from .coordinator import ClusterSolution, Coordinator, run_in_process, run_tcp_node
from .messages import ImprovementMessage, MessageKind, decode_bits, encode_bits
from .node import ClusterNode, NodeResult, NodeState, reconstruct_probability
from .tcp import TcpTransport, parse_address, parse_peers
from .transport import QueueHub, QueueTransport, Transport

__all__ = [
    'ClusterConfig',
    'ClusterSolution',
    'Coordinator',
    'run_in_process',
    'run_tcp_node',
    'ImprovementMessage',
    'MessageKind',
    'decode_bits',
    'encode_bits',
    'ClusterNode',
    'NodeResult',
    'NodeState',
    'reconstruct_probability',
    'TcpTransport',
    'parse_address',
    'parse_peers',
    'QueueHub',
    'QueueTransport',
    'Transport',
]
