# CODE START
from typing import List, Tuple
def count_edges(edges: List[Tuple[str, str]]) -> int:
    unique_edges = set()
    for u, v in edges:
        edge = tuple(sorted((u, v)))
        unique_edges.add(edge)
    return len(unique_edges)
edges = «edge_list»
ans = count_edges(edges)
# CODE END
