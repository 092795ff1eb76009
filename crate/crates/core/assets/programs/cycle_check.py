# CODE START
def has_cycle(graph):
    visited = set()
    for node in graph:
        if node not in visited:
            if dfs(graph, node, visited, None):
                return True
    return False
def dfs(graph, node, visited, parent):
    visited.add(node)
    for neighbor in graph[node]:
        if neighbor not in visited:
            if dfs(graph, neighbor, visited, node):
                return True
        elif neighbor != parent:
            return True
    return False
nodes = «node_list»
edges = «edge_list»
graph = {node: [] for node in nodes}
for edge in edges:
     graph[edge[0]].append(edge[1])
if has_cycle(graph):
    ans = "Has cycle."
else:
    ans = "No cycle."
# CODE END
