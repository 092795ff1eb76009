# CODE START
source = «source_node»
target = «target_node»
edges = «edge_list»
def edge_existence(edges, source, target):
    edges_set = set()
    for u, v in edges:
        edges_set.add((u,v))
        edges_set.add((v,u))
    if (source, target) in edges_set: return True
    else: return False
ans = edge_existence(edges,source,target)
# CODE END
