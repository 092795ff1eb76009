# CODE START
from collections import defaultdict
from typing import Set, Dict, List, Tuple
def get_adjacency_list(edges: List[Tuple[str, str]]) -> Dict[str, Set[str]]:
    adjacency = defaultdict(set)
    for each_edge in edges:
        u, v = each_edge
        adjacency[u].add(v)
        adjacency[v].add(u)
    return adjacency
def get_node_degree(target_node: str, adjacency_list: Dict[str, Set[str]]) -> int:
    return len(adjacency_list[target_node])
edges = «edge_list»
adjacency_list = get_adjacency_list(edges)
target_node = «target_node»
ans = get_node_degree(target_node, adjacency_list)
# CODE END
